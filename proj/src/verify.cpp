#include "mmjsq/verify.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "mmjsq/error.hpp"
#include "mmjsq/model_file.hpp"
#include "mmjsq/report.hpp"

namespace mmjsq {

namespace {

MmJsqModel single_state(double lambda, const std::vector<double>& mu) {
  Eigen::MatrixXd m(1, static_cast<Eigen::Index>(mu.size()));
  for (std::size_t j = 0; j < mu.size(); ++j) m(0, static_cast<Eigen::Index>(j)) = mu[j];
  return MmJsqModel(validate_generator(Eigen::MatrixXd::Zero(1, 1)), Eigen::VectorXd::Constant(1, lambda), m);
}

}  // namespace

CheckResult check_mm1_simulation(std::uint64_t arrivals, std::size_t runs, std::size_t max_x, std::uint64_t seed,
                                 double z) {
  const MmJsqModel model = single_state(0.5, {1.0});
  SimConfig cfg;
  cfg.num_arrivals = arrivals;
  cfg.pmf_cap = std::max<std::size_t>(max_x, 1);
  cfg.seed = seed;
  const AggregateStats agg = replicate(model, cfg, runs).aggregate;

  CheckResult r{"mm1-geometric-simulation", true, ""};
  double worst = 0.0;
  std::size_t worst_x = 0;
  for (std::size_t x = 0; x <= max_x; ++x) {
    const Estimate& e = agg.pmf[0][x];
    const double dev = std::abs(e.mean - mm1_geometric(0.5, 1.0, x)) / e.std_error;
    if (!(dev <= z)) r.passed = false;
    if (!(dev <= worst)) {
      worst = dev;
      worst_x = x;
    }
  }
  std::ostringstream os;
  os << "largest deviation " << format_double(worst) << " SE at x=" << worst_x << " (limit " << z << ")";
  r.detail = os.str();
  return r;
}

CheckResult check_mm1_oracle(std::size_t cap, std::size_t max_x, double tol) {
  const MmJsqModel model = single_state(0.5, {1.0});
  const ExactStationary ex = exact_stationary(model, cap);
  double worst = 0.0;
  for (std::size_t x = 0; x <= max_x; ++x) worst = std::max(worst, std::abs(ex.dist[x] - mm1_geometric(0.5, 1.0, x)));
  CheckResult r{"mm1-geometric-oracle", worst <= tol, ""};
  r.detail = "max |exact - geometric| = " + format_double(worst);
  return r;
}

CheckResult check_empty_drift(const std::string& label, const MmJsqModel& model, const SimConfig& config,
                              std::size_t runs, double z) {
  const DerivedRates d = derived_rates(model);
  const AggregateStats agg = replicate(model, config, runs).aggregate;
  const double target = d.mu_sigma * d.epsilon;
  const double dev = std::abs(agg.empty_drift.mean - target);
  CheckResult r{"empty-drift " + label, dev <= z * agg.empty_drift.std_error, ""};
  r.detail = "empirical " + format_double(agg.empty_drift.mean) + " vs " + format_double(target) + " (" +
             format_double(dev / agg.empty_drift.std_error) + " SE)";
  return r;
}

CheckResult check_kstar_invariance(const std::string& label, const MmJsqModel& model, double tol) {
  const HtPrediction p = heavy_traffic_prediction(model);
  double worst = 0.0;
  for (double c : {-1e3, 1.0, 1e3}) worst = std::max(worst, std::abs(k_star_from(p.pi, p.h, p.V_h.V, c) - p.k_star));
  CheckResult r{"kstar-invariance " + label, worst < tol, ""};
  r.detail = "k* = " + format_double(p.k_star) + ", max shift change " + format_double(worst);
  return r;
}

CoverageTally compare_oracle_simulation(const std::string& label, const MmJsqModel& model, std::size_t cap,
                                        const SimConfig& config, std::size_t runs) {
  constexpr std::size_t kPmfBins = 10;
  const ExactStationary ex = exact_stationary(model, cap);
  StatRequest req;
  req.pmf_cap = std::max<std::size_t>(config.pmf_cap, kPmfBins);
  req.laplace_s = {1.0};
  const ExactStatistics exact = exact_statistics(req, ex, model);

  SimConfig cfg = config;
  cfg.laplace_s_values = {1.0};
  const AggregateStats agg = replicate(model, cfg, runs).aggregate;

  CoverageTally t;
  auto check = [&](const std::string& what, const Estimate& e, double truth) {
    ++t.checks;
    if (e.contains(truth))
      ++t.covered;
    else
      t.misses.push_back(label + " " + what + ": sim " + format_double(e.mean) + " +- " +
                         format_double(e.half_width) + " vs exact " + format_double(truth));
  };
  const std::size_t n = model.num_servers();
  for (std::size_t j = 0; j < n; ++j) {
    const std::string js = std::to_string(j);
    check("mean_q_" + js, agg.mean_q[j], exact.mean_q[j]);
    check("ssc_gap_" + js, agg.ssc_gap[j], exact.ssc_gap[j]);
    check("laplace_" + js, agg.laplace_emp.at(1.0).first[j], exact.laplace.at(1.0).per_server[j]);
    for (std::size_t x = 0; x < kPmfBins; ++x)
      check("pmf_" + js + "(" + std::to_string(x) + ")", agg.pmf[j][x], exact.pmf[j][x]);
  }
  check("mean_q_sigma_over_n", agg.mean_q_sigma_over_n, exact.mean_q_sigma_over_n);
  check("laplace_avg", agg.laplace_emp.at(1.0).second, exact.laplace.at(1.0).average);
  check("empty_drift", agg.empty_drift, exact.empty_drift);
  return t;
}

ExactStationary exact_stationary_auto(const MmJsqModel& model, double max_mass, std::size_t initial_cap) {
  std::size_t cap = std::max<std::size_t>(initial_cap, 2);
  for (;;) {
    ExactStationary ex = exact_stationary(model, cap);
    if (ex.truncation_mass < max_mass) return ex;
    cap += cap / 2;
    if (truncated_state_count(model.num_states(), model.num_servers(), cap) > kMaxOracleStates)
      throw Error(ErrorCode::TooLarge, "cannot reach the requested truncation mass within the state guard");
  }
}

CovarianceDecay covariance_decay(const MmJsqModel& base, const std::vector<double>& epsilons, double s,
                                 double max_mass) {
  CovarianceDecay out;
  out.epsilons = epsilons;
  out.residuals.assign(3, {});
  const HtPrediction pred = heavy_traffic_prediction(base);
  for (double e : epsilons) {
    const MmJsqModel model = scale_to_load(base, 1.0 - e);
    const auto cap0 = static_cast<std::size_t>(std::ceil(12.0 * pred.limit_mean_per_server / e));
    const ExactStationary ex = exact_stationary_auto(model, max_mass, cap0);
    out.truncation_mass.push_back(ex.truncation_mass);

    Eigen::VectorXd probe = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.num_states()));
    probe(0) = 1.0;
    const Eigen::VectorXd fs[3] = {h_function(model), ell_function(model), probe};
    for (std::size_t k = 0; k < 3; ++k) out.residuals[k].push_back(covariance_identity(ex, model, fs[k], s).residual);
  }
  out.min_ratio = std::numeric_limits<double>::infinity();
  for (const auto& r : out.residuals)
    for (std::size_t k = 0; k + 1 < r.size(); ++k) out.min_ratio = std::min(out.min_ratio, r[k] / r[k + 1]);
  return out;
}

std::vector<NamedModel> small_test_models() {
  std::vector<NamedModel> out;
  {
    Eigen::MatrixXd q(2, 2);
    q << 0, 1, 2, 0;
    Eigen::MatrixXd mu(2, 2);
    mu << 1.0, 0.5, 1.5, 2.0;
    Eigen::VectorXd lam(2);
    lam << 1.0, 2.0;
    out.push_back({"two-state-two-server", scale_to_load(MmJsqModel(validate_generator(q), lam, mu), 0.7), 60});
  }
  {
    Eigen::MatrixXd q(3, 3);
    q << 0, 0.5, 0, 0, 0, 0.5, 0.5, 0, 0;
    Eigen::MatrixXd mu(3, 2);
    mu << 0.5, 0.5, 1, 2.5, 5, 3;
    Eigen::VectorXd lam(3);
    lam << 3, 6, 9;
    out.push_back({"three-state-two-server", scale_to_load(MmJsqModel(validate_generator(q), lam, mu), 0.6), 80});
  }
  return out;
}

std::vector<CheckResult> run_verify(const VerifyOptions& options, std::ostream& log) {
  struct Loaded {
    std::string name;
    MmJsqModel base;
  };
  std::vector<Loaded> models;
  for (const auto& path : options.model_files) {
    const ModelFile f = load_model_file(path);
    models.push_back({path.stem().string(), build_base_model(f)});
  }

  const bool full = options.suite == VerifySuite::Full;
  std::vector<CheckResult> results;
  auto record = [&](CheckResult r) {
    log << (r.passed ? "[PASS] " : "[FAIL] ") << r.name << ": " << r.detail << std::endl;
    results.push_back(std::move(r));
  };

  record(check_mm1_oracle());
  record(check_mm1_simulation(full ? 10'000'000 : 1'000'000, full ? 20 : 10, full ? 20 : 10, options.seed));

  SimConfig drift_cfg;
  drift_cfg.num_arrivals = full ? 1'000'000 : 200'000;
  drift_cfg.seed = options.seed + 1000;
  for (const auto& m : models) {
    record(check_kstar_invariance(m.name, m.base));
    for (double rho : {0.8, 0.95})
      record(check_empty_drift(m.name + " rho=" + format_double(rho), scale_to_load(m.base, rho), drift_cfg, 10));
  }

  SimConfig cmp_cfg;
  cmp_cfg.num_arrivals = 200'000;
  cmp_cfg.seed = options.seed + 2000;
  CoverageTally total;
  for (const auto& nm : small_test_models()) {
    const CoverageTally t = compare_oracle_simulation(nm.name, nm.model, nm.cap, cmp_cfg, 100);
    total.checks += t.checks;
    total.covered += t.covered;
    total.misses.insert(total.misses.end(), t.misses.begin(), t.misses.end());
  }
  {
    const double frac = static_cast<double>(total.covered) / static_cast<double>(total.checks);
    CheckResult r{"oracle-vs-simulation", frac >= 0.9, ""};
    r.detail = std::to_string(total.covered) + "/" + std::to_string(total.checks) + " CIs contain the exact value";
    for (const auto& miss : total.misses) r.detail += "; " + miss;
    record(r);
  }

  {
    const auto base = small_test_models().front().model;
    const CovarianceDecay dec = covariance_decay(base, {0.2, 0.1, 0.05}, 1.0, 1e-8);
    CheckResult r{"covariance-identity-decay", dec.min_ratio >= 1.5, ""};
    r.detail = "smallest residual ratio per halving of eps: " + format_double(dec.min_ratio);
    record(r);
  }

  if (full) {
    SimConfig ht_cfg;
    ht_cfg.num_arrivals = 10'000'000;
    ht_cfg.seed = options.seed + 3000;
    for (const auto& m : models) {
      const HtPrediction p = heavy_traffic_prediction(m.base);
      if (!p.ssc_at_limit.satisfied) continue;
      const MmJsqModel model = scale_to_load(m.base, 0.98);
      const AggregateStats agg = replicate(model, ht_cfg, 10).aggregate;
      const double target = p.limit_mean_per_server / 0.02;
      double worst = 0.0;
      for (const auto& e : agg.mean_q) worst = std::max(worst, std::abs(e.mean - target) / target);
      CheckResult r{"heavy-traffic-mean " + m.name, worst <= 0.05, ""};
      r.detail = "predicted E[q_j] " + format_double(target) + ", worst relative error " + format_double(worst);
      record(r);
    }
  }
  return results;
}

}  // namespace mmjsq
