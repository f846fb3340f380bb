#pragma once

#include <cstddef>
#include <vector>

#include "mmjsq/model.hpp"
#include "mmjsq/sim.hpp"

namespace mmjsq {

enum class SweepKind { Load, Alpha };

struct SweepSpec {
  MmJsqModel base_model;
  SweepKind kind = SweepKind::Load;
  /// Loads in (0, 1) for a load sweep; modulation rates > 0 for an alpha
  /// sweep. Must be nonempty and strictly increasing.
  std::vector<double> grid;
  SimConfig sim;
  std::size_t num_runs = 10;
  std::size_t threads = 0;  // 0 = default_parallelism()
};

struct SweepRow {
  double grid_value = 0.0;
  double rho = 0.0;
  double epsilon = 0.0;
  double k_star = 0.0;
  double limit_mean_per_server = 0.0;
  double predicted_mean_q = 0.0;  // limit_mean_per_server / epsilon
  SscReport ssc;
  AggregateStats sim;
  std::vector<Estimate> scaled_mean_q;  // epsilon * E[q_j]
};

struct SweepResult {
  SweepKind kind = SweepKind::Load;
  std::vector<SweepRow> rows;
};

/// Model at one grid point: the base model scaled to the load, or (alpha
/// sweep) the base model with its chain rescaled so the largest modulation
/// rate equals the grid value. The load of an alpha sweep is the base model's.
MmJsqModel sweep_point_model(const MmJsqModel& base, SweepKind kind, double value);

SweepResult run_sweep(const SweepSpec& spec);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares of y on x (at least two points).
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Least-squares slope of log pmf(x) over x in [x_lo, x_hi]; bins with zero
/// mass are skipped.
LinearFit pmf_log_slope(const std::vector<double>& pmf, std::size_t x_lo, std::size_t x_hi);

enum class ConvergenceBackend { Oracle, Simulation };

struct ConvergenceOptions {
  ConvergenceBackend backend = ConvergenceBackend::Oracle;
  /// Oracle cap = ceil(cap_factor * limit mean per server / eps).
  double cap_factor = 25.0;
  SimConfig sim;
  std::size_t num_runs = 10;
  /// Grid points with larger eps are treated as pre-asymptotic and dropped.
  double max_epsilon = 0.3;
  double min_r_squared = 0.8;
};

struct ConvergenceFit {
  double s = 0.0;
  double limit = 0.0;  // limit_laplace(s)
  std::vector<double> epsilons;
  std::vector<std::vector<double>> errors;  // [eps index][server]
  std::vector<LinearFit> per_server;
  LinearFit worst;  // fit of the largest per-server error
  bool noisy = false;
  double predicted_exponent = 0.5;
};

/// Fits the order of |E[exp(-s eps q_j)] - limit_laplace(s)| in eps.
ConvergenceFit convergence_order(const MmJsqModel& base_model, double s, const std::vector<double>& eps_grid,
                                 const ConvergenceOptions& options = {});

}  // namespace mmjsq
