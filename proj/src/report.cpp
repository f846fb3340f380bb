#include "mmjsq/report.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

namespace mmjsq {

using nlohmann::json;

namespace {

json vec(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json mat(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(vec(m.row(r).transpose()));
  return a;
}

json estimates(const std::vector<Estimate>& es) {
  json a = json::array();
  for (const auto& e : es) a.push_back(to_json(e));
  return a;
}

std::string key_of(double x) { return format_double(x); }

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

json to_json(const SscReport& r) {
  json j;
  j["margins"] = vec(r.margins);
  j["satisfied"] = r.satisfied;
  j["failing_states"] = r.failing_states;
  j["delta"] = vec(r.delta);
  j["lambda_prime"] = mat(r.lambda_prime);
  j["lambda_prime_min"] = r.lambda_prime_min;
  if (r.constants) {
    const SscConstants& c = *r.constants;
    j["constants"] = {{"gamma", c.gamma},          {"B", c.B},
                      {"nu_max", c.nu_max},        {"G_bar", c.G_bar},
                      {"theta_conservative", c.theta_cap}, {"theta_used", c.theta_used},
                      {"c_exp", c.c_exp}};
  } else {
    j["constants"] = nullptr;
  }
  return j;
}

json to_json(const HtPrediction& p) {
  json j;
  j["h"] = vec(p.h);
  j["V_h"] = vec(p.V_h.V);
  j["V_h_residual"] = p.V_h.residual;
  j["k"] = vec(p.k);
  j["ell"] = vec(p.ell);
  j["k_star"] = p.k_star;
  j["k_at_load"] = p.k_at_load;
  j["mu_sigma"] = p.mu_sigma;
  j["limit_mean_per_server"] = p.limit_mean_per_server;
  j["limit_rate"] = p.limit_rate;
  j["ssc_satisfied_at_limit"] = p.ssc_at_limit.satisfied;
  return j;
}

json to_json(const Estimate& e) {
  return {{"mean", e.mean}, {"std_error", e.std_error}, {"half_width", e.half_width}};
}

json to_json(const AggregateStats& a) {
  json j;
  j["num_runs"] = a.num_runs;
  j["epsilon_used"] = a.epsilon_used;
  j["mean_q"] = estimates(a.mean_q);
  j["mean_q_sigma_over_n"] = to_json(a.mean_q_sigma_over_n);
  j["ssc_gap"] = estimates(a.ssc_gap);
  j["empty_drift"] = to_json(a.empty_drift);
  json pmf = json::array();
  for (const auto& row : a.pmf) pmf.push_back(estimates(row));
  j["pmf"] = pmf;
  json tail = json::object();
  for (const auto& [t, e] : a.ssc_norm_tail) tail[key_of(t)] = to_json(e);
  j["ssc_norm_tail"] = tail;
  json lap = json::object();
  for (const auto& [s, v] : a.laplace_emp)
    lap[key_of(s)] = {{"per_server", estimates(v.first)}, {"average", to_json(v.second)}};
  j["laplace_emp"] = lap;
  return j;
}

json to_json(const RunStats& r) {
  json j;
  j["seed"] = r.seed;
  j["rng"] = kRngName;
  j["arrivals"] = r.arrivals;
  j["departures"] = r.departures;
  j["modulation_jumps"] = r.modulation_jumps;
  j["total_sim_time"] = r.total_sim_time;
  j["measured_time"] = r.measured_time;
  j["epsilon_used"] = r.epsilon_used;
  j["mean_q"] = r.mean_q;
  j["mean_q_sigma_over_n"] = r.mean_q_sigma_over_n;
  j["ssc_gap"] = r.ssc_gap;
  j["empty_drift"] = r.empty_drift;
  j["state_occupancy"] = r.state_occupancy;
  j["pmf"] = r.pmf;
  json tail = json::object();
  for (const auto& [t, p] : r.ssc_norm_tail) tail[key_of(t)] = p;
  j["ssc_norm_tail"] = tail;
  json lap = json::object();
  for (const auto& [s, v] : r.laplace_emp) lap[key_of(s)] = {{"per_server", v.per_server}, {"average", v.average}};
  j["laplace_emp"] = lap;
  return j;
}

json analysis_report(const ModelFile& file, const MmJsqModel& model, const std::vector<double>& s_values) {
  const DerivedRates d = derived_rates(model);
  const DerivedRates base = derived_rates(build_base_model(file));
  const SscReport ssc = check_ssc(model);
  const HtPrediction pred = heavy_traffic_prediction(model);

  json j;
  j["model"] = to_json(file);
  j["state_indexing"] = "0-based; state i here is state i+1 in 1-based numbering";
  j["pi"] = vec(model.stationary().pi);
  j["rho_of_lambda_base"] = base.rho;
  j["derived_rates"] = {{"lambda_bar", d.lambda_bar},
                        {"mu_per_server", vec(d.mu_per_server)},
                        {"mu_sigma", d.mu_sigma},
                        {"mu_state_sigma", vec(d.mu_state_sigma)},
                        {"mu_state_min", vec(d.mu_state_min)},
                        {"rho", d.rho},
                        {"epsilon", d.epsilon},
                        {"lambda_star", vec(d.lambda_star)},
                        {"lambda_ideal", vec(d.lambda_ideal)},
                        {"lambda", vec(model.lambda())}};
  j["ssc"] = to_json(ssc);
  j["ssc"]["load_threshold"] = ssc_load_threshold(model);
  j["ssc"]["constants_note"] = "theta uses the bound G_bar in place of G_max and is conservative";
  j["ssc_satisfied"] = ssc.satisfied;
  j["prediction"] = to_json(pred);

  json warnings = json::array();
  if (!pred.ssc_at_limit.satisfied)
    warnings.push_back("SSC load condition fails at rho = 1; the limit law is not guaranteed");
  j["warnings"] = warnings;

  json lap = json::array();
  for (double s : s_values) lap.push_back({{"s", s}, {"value", limit_laplace(pred, s)}});
  j["limit_laplace"] = lap;

  if (file.reference_k_star) {
    const double ref = *file.reference_k_star;
    const double rel = std::abs(pred.k_star - ref) / std::max(std::abs(ref), 1e-300);
    j["reference"] = {{"k_star", ref},
                      {"computed_k_star", pred.k_star},
                      {"relative_difference", rel},
                      {"agrees", rel <= 1e-9}};
  }
  return j;
}

void write_runs_csv(std::ostream& out, const std::vector<RunStats>& runs) {
  if (runs.empty()) return;
  const std::size_t n = runs.front().mean_q.size();
  out << "run,seed,arrivals,departures,measured_time";
  for (std::size_t j = 0; j < n; ++j) out << ",mean_q_" << j;
  for (std::size_t j = 0; j < n; ++j) out << ",ssc_gap_" << j;
  out << ",mean_q_sigma_over_n,empty_drift\n";
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const RunStats& s = runs[r];
    out << r << ',' << s.seed << ',' << s.arrivals << ',' << s.departures << ',' << format_double(s.measured_time);
    for (double v : s.mean_q) out << ',' << format_double(v);
    for (double v : s.ssc_gap) out << ',' << format_double(v);
    out << ',' << format_double(s.mean_q_sigma_over_n) << ',' << format_double(s.empty_drift) << '\n';
  }
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
  if (result.rows.empty()) return;
  const std::size_t n = result.rows.front().sim.mean_q.size();
  out << "grid_value,rho,epsilon,k_star,limit_mean_per_server,predicted_mean_q,ssc_satisfied";
  for (std::size_t j = 0; j < n; ++j)
    out << ",mean_q_" << j << ",mean_q_" << j << "_hw,scaled_mean_q_" << j << ",scaled_mean_q_" << j
        << "_hw,ssc_gap_" << j << ",ssc_gap_" << j << "_hw";
  out << ",mean_q_sigma_over_n,mean_q_sigma_over_n_hw,empty_drift,empty_drift_hw\n";
  for (const SweepRow& row : result.rows) {
    out << format_double(row.grid_value) << ',' << format_double(row.rho) << ',' << format_double(row.epsilon)
        << ',' << format_double(row.k_star) << ',' << format_double(row.limit_mean_per_server) << ','
        << format_double(row.predicted_mean_q) << ',' << (row.ssc.satisfied ? 1 : 0);
    for (std::size_t j = 0; j < n; ++j) {
      out << ',' << format_double(row.sim.mean_q[j].mean) << ',' << format_double(row.sim.mean_q[j].half_width)
          << ',' << format_double(row.scaled_mean_q[j].mean) << ','
          << format_double(row.scaled_mean_q[j].half_width) << ',' << format_double(row.sim.ssc_gap[j].mean)
          << ',' << format_double(row.sim.ssc_gap[j].half_width);
    }
    out << ',' << format_double(row.sim.mean_q_sigma_over_n.mean) << ','
        << format_double(row.sim.mean_q_sigma_over_n.half_width) << ',' << format_double(row.sim.empty_drift.mean)
        << ',' << format_double(row.sim.empty_drift.half_width) << '\n';
  }
}

void write_sweep_pmf_csv(std::ostream& out, const SweepResult& result) {
  out << "grid_value,server,x,pmf,pmf_hw\n";
  for (const SweepRow& row : result.rows) {
    for (std::size_t j = 0; j < row.sim.pmf.size(); ++j) {
      const auto& p = row.sim.pmf[j];
      for (std::size_t x = 0; x + 1 < p.size(); ++x) {
        out << format_double(row.grid_value) << ',' << j << ',' << x << ',' << format_double(p[x].mean) << ','
            << format_double(p[x].half_width) << '\n';
      }
    }
  }
}

json sweep_summary(const SweepResult& result) {
  json j;
  j["kind"] = result.kind == SweepKind::Load ? "load" : "alpha";
  json rows = json::array();
  for (const SweepRow& row : result.rows) {
    json r;
    r["grid_value"] = row.grid_value;
    r["rho"] = row.rho;
    r["epsilon"] = row.epsilon;
    r["k_star"] = row.k_star;
    r["limit_mean_per_server"] = row.limit_mean_per_server;
    r["predicted_mean_q"] = row.predicted_mean_q;
    r["ssc"] = to_json(row.ssc);
    r["scaled_mean_q"] = estimates(row.scaled_mean_q);
    r["sim"] = to_json(row.sim);
    rows.push_back(std::move(r));
  }
  j["rows"] = rows;
  return j;
}

}  // namespace mmjsq
