#include "mmjsq/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mmjsq/error.hpp"
#include "mmjsq/oracle.hpp"

namespace mmjsq {

MmJsqModel sweep_point_model(const MmJsqModel& base, SweepKind kind, double value) {
  if (kind == SweepKind::Load) return scale_to_load(base, value);
  const double ref = base.chain().max_rate();
  if (!(ref > 0.0))
    throw Error(ErrorCode::InvalidArgument, "alpha sweep needs a chain with at least one transition");
  return base.with_chain(base.chain().scaled(value / ref));
}

SweepResult run_sweep(const SweepSpec& spec) {
  if (spec.grid.empty()) throw Error(ErrorCode::InvalidArgument, "sweep grid is empty");
  for (std::size_t g = 1; g < spec.grid.size(); ++g) {
    if (!(spec.grid[g] > spec.grid[g - 1]))
      throw Error(ErrorCode::InvalidArgument, "sweep grid must be strictly increasing");
  }
  for (double v : spec.grid) {
    if (spec.kind == SweepKind::Load && !(v > 0.0 && v < 1.0))
      throw Error(ErrorCode::InvalidArgument, "load grid values must lie in (0, 1)");
    if (spec.kind == SweepKind::Alpha && !(v > 0.0))
      throw Error(ErrorCode::InvalidArgument, "alpha grid values must be positive");
  }

  SweepResult result;
  result.kind = spec.kind;
  for (double v : spec.grid) {
    const MmJsqModel model = sweep_point_model(spec.base_model, spec.kind, v);
    const DerivedRates d = derived_rates(model);
    const HtPrediction pred = heavy_traffic_prediction(model);

    SweepRow row;
    row.grid_value = v;
    row.rho = d.rho;
    row.epsilon = d.epsilon;
    row.k_star = pred.k_star;
    row.limit_mean_per_server = pred.limit_mean_per_server;
    row.predicted_mean_q = pred.limit_mean_per_server / d.epsilon;
    row.ssc = check_ssc(model);
    row.sim = replicate(model, spec.sim, spec.num_runs, spec.threads).aggregate;
    for (const Estimate& e : row.sim.mean_q)
      row.scaled_mean_q.push_back({e.mean * d.epsilon, e.std_error * d.epsilon, e.half_width * d.epsilon});
    result.rows.push_back(std::move(row));
  }
  return result;
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw Error(ErrorCode::InvalidArgument, "line fit needs at least two paired points");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
    syy += (y[k] - my) * (y[k] - my);
  }
  if (sxx == 0.0) throw Error(ErrorCode::InvalidArgument, "line fit needs distinct x values");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

LinearFit pmf_log_slope(const std::vector<double>& pmf, std::size_t x_lo, std::size_t x_hi) {
  std::vector<double> xs, ys;
  for (std::size_t x = x_lo; x <= x_hi && x < pmf.size(); ++x) {
    if (pmf[x] > 0.0) {
      xs.push_back(static_cast<double>(x));
      ys.push_back(std::log(pmf[x]));
    }
  }
  return fit_line(xs, ys);
}

ConvergenceFit convergence_order(const MmJsqModel& base_model, double s, const std::vector<double>& eps_grid,
                                 const ConvergenceOptions& options) {
  if (!(s > 0.0)) throw Error(ErrorCode::NonpositiveS, "s must be positive");
  if (eps_grid.size() < 3) throw Error(ErrorCode::InvalidArgument, "need at least three epsilon values");
  for (double e : eps_grid) {
    if (!(e > 0.0 && e < 0.5)) throw Error(ErrorCode::InvalidArgument, "epsilon values must lie in (0, 0.5)");
  }

  ConvergenceFit fit;
  fit.s = s;
  const HtPrediction pred = heavy_traffic_prediction(base_model);
  fit.limit = limit_laplace(pred, s);
  for (double e : eps_grid)
    if (e <= options.max_epsilon) fit.epsilons.push_back(e);
  std::sort(fit.epsilons.begin(), fit.epsilons.end());
  if (fit.epsilons.size() < 3)
    throw Error(ErrorCode::InvalidArgument, "fewer than three epsilon values remain below the cutoff");

  const std::size_t n = base_model.num_servers();
  for (double e : fit.epsilons) {
    const MmJsqModel model = scale_to_load(base_model, 1.0 - e);
    std::vector<double> emp(n);
    if (options.backend == ConvergenceBackend::Oracle) {
      const auto cap = static_cast<std::size_t>(std::ceil(options.cap_factor * pred.limit_mean_per_server / e));
      const ExactStationary ex = exact_stationary(model, cap);
      StatRequest req;
      req.pmf_cap = 1;
      req.laplace_s = {s};
      emp = exact_statistics(req, ex, model).laplace.at(s).per_server;
    } else {
      SimConfig cfg = options.sim;
      cfg.laplace_s_values = {s};
      const AggregateStats agg = replicate(model, cfg, options.num_runs).aggregate;
      for (std::size_t j = 0; j < n; ++j) emp[j] = agg.laplace_emp.at(s).first[j].mean;
    }
    std::vector<double> err(n);
    for (std::size_t j = 0; j < n; ++j) err[j] = std::abs(emp[j] - fit.limit);
    fit.errors.push_back(std::move(err));
  }

  std::vector<double> log_eps;
  for (double e : fit.epsilons) log_eps.push_back(std::log(e));
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> ly;
    for (const auto& row : fit.errors) ly.push_back(std::log(row[j]));
    fit.per_server.push_back(fit_line(log_eps, ly));
  }
  std::vector<double> lw;
  for (const auto& row : fit.errors) lw.push_back(std::log(*std::max_element(row.begin(), row.end())));
  fit.worst = fit_line(log_eps, lw);
  fit.noisy = fit.worst.r_squared < options.min_r_squared;
  for (const auto& f : fit.per_server) fit.noisy = fit.noisy || f.r_squared < options.min_r_squared;
  return fit;
}

}  // namespace mmjsq
