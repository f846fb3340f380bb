#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mmjsq/model.hpp"

namespace mmjsq {

struct SimConfig {
  std::uint64_t num_arrivals = 10'000'000;
  double burn_in_fraction = 0.1;
  std::size_t pmf_cap = 100;
  std::vector<double> laplace_s_values{1.0};
  std::uint64_t seed = 1;
};

/// Throws InvalidConfig when a field is out of range.
void validate(const SimConfig& config);

/// Engine behind every run. Run r of a replication is seeded with
/// `seed + r` through the engine's standard single-integer seeding.
inline constexpr const char* kRngName = "std::mt19937_64";

struct SystemState {
  std::size_t mod_state = 0;
  std::vector<std::int64_t> q;
  double clock = 0.0;
};

struct LaplaceValues {
  std::vector<double> per_server;  // E[exp(-s eps q_j)]
  double average = 0.0;            // E[exp(-s eps q_Sigma / n)]
};

/// Time-weighted statistics of one run, measured after burn-in.
struct RunStats {
  std::vector<double> mean_q;
  double mean_q_sigma_over_n = 0.0;
  /// n rows of pmf_cap + 2 entries; the last entry is P(q_j > pmf_cap).
  std::vector<std::vector<double>> pmf;
  std::vector<double> ssc_gap;                 // E|q_j - q_Sigma / n|
  std::map<double, double> ssc_norm_tail;      // threshold -> P(||q_perp|| > threshold)
  std::map<double, LaplaceValues> laplace_emp;
  double empty_drift = 0.0;                    // E[sum_j mu_ij 1{q_j = 0}]
  std::vector<double> state_occupancy;         // time fraction per modulating state
  double epsilon_used = 0.0;
  double total_sim_time = 0.0;                 // whole run, burn-in included
  double measured_time = 0.0;
  std::uint64_t arrivals = 0;
  std::uint64_t departures = 0;
  std::uint64_t modulation_jumps = 0;
  std::uint64_t seed = 0;
};

/// Hard cap on any queue; exceeding it raises OverflowGuard.
inline constexpr std::int64_t kQueueGuard = std::int64_t{1} << 31;

/// Thresholds 1, 2, 4, ... up to pmf_cap.
std::vector<double> norm_tail_thresholds(std::size_t pmf_cap);

RunStats simulate(const MmJsqModel& model, const SimConfig& config);

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;   // NaN with fewer than two runs
  double half_width = 0.0;  // 1.96 * std_error

  bool contains(double value) const;
};

Estimate estimate(const std::vector<double>& samples);

struct AggregateStats {
  std::size_t num_runs = 0;
  std::vector<Estimate> mean_q;
  Estimate mean_q_sigma_over_n;
  std::vector<std::vector<Estimate>> pmf;
  std::vector<Estimate> ssc_gap;
  std::map<double, Estimate> ssc_norm_tail;
  std::map<double, std::pair<std::vector<Estimate>, Estimate>> laplace_emp;
  Estimate empty_drift;
  double epsilon_used = 0.0;
};

AggregateStats aggregate(const std::vector<RunStats>& runs);

struct Replication {
  std::vector<RunStats> runs;
  AggregateStats aggregate;
};

/// Worker count from MMJSQ_THREADS, else the hardware concurrency.
std::size_t default_parallelism();

/// Runs `num_runs` independent simulations (run r uses seed + r) on up to
/// `threads` workers; results are ordered by run index.
Replication replicate(const MmJsqModel& model, const SimConfig& config, std::size_t num_runs,
                      std::size_t threads = 0);

}  // namespace mmjsq
