#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mmjsq/model.hpp"
#include "mmjsq/oracle.hpp"
#include "mmjsq/sim.hpp"

namespace mmjsq {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Simulated M/M/1 at load 1/2 against the geometric law: every PMF bin
/// x <= max_x within `z` replication standard errors.
CheckResult check_mm1_simulation(std::uint64_t arrivals, std::size_t runs, std::size_t max_x, std::uint64_t seed,
                                 double z = 3.0);

/// Exact truncated M/M/1 at load 1/2 against the geometric law within `tol`.
CheckResult check_mm1_oracle(std::size_t cap = 200, std::size_t max_x = 50, double tol = 1e-10);

/// |E[sum_j mu_ij 1{q_j = 0}] - mu_Sigma eps| within `z` replication standard errors.
CheckResult check_empty_drift(const std::string& label, const MmJsqModel& model, const SimConfig& config,
                              std::size_t runs, double z = 3.0);

/// k* unchanged (within `tol`) when V_h is shifted by each constant.
CheckResult check_kstar_invariance(const std::string& label, const MmJsqModel& model, double tol = 1e-9);

struct CoverageTally {
  std::size_t checks = 0;
  std::size_t covered = 0;
  std::vector<std::string> misses;
};

/// Compares replicated simulator estimates with the exact truncated
/// solution: means, SSC gaps, empty drift, PMF bins 0..9 and the Laplace
/// transforms at s = 1. Each check passes when the 95% CI holds the exact value.
CoverageTally compare_oracle_simulation(const std::string& label, const MmJsqModel& model, std::size_t cap,
                                        const SimConfig& config, std::size_t runs);

/// Solves the truncated chain, growing the cap by half until the truncation
/// mass drops below `max_mass`.
ExactStationary exact_stationary_auto(const MmJsqModel& model, double max_mass, std::size_t initial_cap);

struct CovarianceDecay {
  std::vector<double> epsilons;
  /// residuals[f][k]: probe f in {h, ell, indicator of state 0} at epsilons[k]
  std::vector<std::vector<double>> residuals;
  std::vector<double> truncation_mass;
  double min_ratio = 0.0;  // smallest r(eps_k) / r(eps_{k+1}) over probes and steps
};

CovarianceDecay covariance_decay(const MmJsqModel& base, const std::vector<double>& epsilons, double s,
                                 double max_mass);

/// Small models used for exact cross-checks (n <= 2, m <= 3), at moderate load.
struct NamedModel {
  std::string name;
  MmJsqModel model;
  std::size_t cap;
};
std::vector<NamedModel> small_test_models();

enum class VerifySuite { Quick, Full };

struct VerifyOptions {
  VerifySuite suite = VerifySuite::Quick;
  std::vector<std::filesystem::path> model_files;
  std::uint64_t seed = 20240601;
};

/// Loads every model file first (a ParseError aborts before any check), then
/// runs the invariant checks, logging one line per check to `log`.
std::vector<CheckResult> run_verify(const VerifyOptions& options, std::ostream& log);

}  // namespace mmjsq
