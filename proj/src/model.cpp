#include "mmjsq/model.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "mmjsq/error.hpp"

namespace mmjsq {

MmJsqModel::MmJsqModel(ModulatingChain chain, Eigen::VectorXd lambda, Eigen::MatrixXd mu)
    : chain_(std::move(chain)),
      pi_(stationary_distribution(chain_)),
      lambda_(std::move(lambda)),
      mu_(std::move(mu)) {
  const auto m = static_cast<Eigen::Index>(chain_.size());
  if (lambda_.size() != m)
    throw Error(ErrorCode::InvalidShape, "lambda has " + std::to_string(lambda_.size()) +
                                             " entries, chain has " + std::to_string(m) + " states");
  if (mu_.rows() != m || mu_.cols() < 1)
    throw Error(ErrorCode::InvalidShape, "mu must be m x n with n >= 1");
  if (!lambda_.allFinite() || !mu_.allFinite())
    throw Error(ErrorCode::InvalidModel, "rates must be finite");
  if ((lambda_.array() < 0.0).any() || (mu_.array() < 0.0).any())
    throw Error(ErrorCode::NegativeRate, "arrival and service rates must be nonnegative");
  const Eigen::VectorXd mu_j = mu_.transpose() * pi_.pi;
  for (Eigen::Index j = 0; j < mu_j.size(); ++j) {
    if (!(mu_j(j) > 0.0))
      throw Error(ErrorCode::InvalidModel, "server " + std::to_string(j) + " has zero mean service rate");
  }
}

MmJsqModel MmJsqModel::with_lambda(Eigen::VectorXd lambda) const {
  return MmJsqModel(chain_, std::move(lambda), mu_);
}

MmJsqModel MmJsqModel::with_chain(ModulatingChain chain) const {
  return MmJsqModel(std::move(chain), lambda_, mu_);
}

DerivedRates derived_rates(const MmJsqModel& model) {
  const Eigen::VectorXd& pi = model.stationary().pi;
  DerivedRates d;
  d.lambda_bar = pi.dot(model.lambda());
  d.mu_per_server = model.mu().transpose() * pi;
  d.mu_sigma = d.mu_per_server.sum();
  d.mu_state_sigma = model.mu().rowwise().sum();
  d.mu_state_min = model.mu().rowwise().minCoeff();
  d.rho = d.lambda_bar / d.mu_sigma;
  d.epsilon = 1.0 - d.rho;
  d.lambda_star = d.mu_per_server;
  d.lambda_ideal = d.lambda_star * d.rho;
  return d;
}

MmJsqModel scale_to_load(const MmJsqModel& model, double rho_target) {
  if (!(rho_target > 0.0) || !std::isfinite(rho_target))
    throw Error(ErrorCode::InvalidArgument, "target load must be positive");
  const DerivedRates d = derived_rates(model);
  if (!(d.lambda_bar > 0.0)) throw Error(ErrorCode::ZeroArrivalVector, "arrival vector is zero");
  // Divide before multiplying so the target load is reproduced to the last bit
  // whenever rho_target * mu_sigma is exact.
  Eigen::VectorXd lambda = model.lambda() / d.lambda_bar * (rho_target * d.mu_sigma);
  return model.with_lambda(std::move(lambda));
}

SscReport check_ssc(const MmJsqModel& model) {
  const DerivedRates d = derived_rates(model);
  const auto m = static_cast<Eigen::Index>(model.num_states());
  const auto n = static_cast<Eigen::Index>(model.num_servers());
  const double nd = static_cast<double>(n);

  SscReport r;
  r.margins = model.lambda() - (d.mu_state_sigma - nd * d.mu_state_min);
  r.delta.resize(m);
  r.lambda_prime.resize(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double mu_i = d.mu_state_sigma(i);
    r.delta(i) = mu_i > 0.0 ? (1.0 - model.lambda()(i) / mu_i) / nd : 0.0;
    for (Eigen::Index j = 0; j < n; ++j) r.lambda_prime(i, j) = model.mu()(i, j) - r.delta(i) * mu_i;
    if (mu_i == 0.0) r.lambda_prime.row(i).setConstant(model.lambda()(i) / nd);
    if (!(r.margins(i) > 0.0)) r.failing_states.push_back(static_cast<std::size_t>(i));
  }
  r.lambda_prime_min = r.lambda_prime.minCoeff();
  r.satisfied = r.failing_states.empty();
  if (!r.satisfied) return r;

  SscConstants c;
  c.gamma = 0.5 * r.lambda_prime_min;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double lp_min = r.lambda_prime.row(i).minCoeff();
    worst = std::max(worst, (model.lambda()(i) + d.mu_state_sigma(i)) / lp_min);
  }
  c.B = (1.0 - 1.0 / nd) * worst;
  c.nu_max = 1.0 + 1.0 / std::sqrt(nd);
  c.G_bar = model.lambda_max() + nd * model.mu_max() + model.chain().max_exit_rate();
  c.theta_cap = c.gamma / (4.0 * c.nu_max * (c.G_bar * c.nu_max + c.gamma));
  c.theta_used = 0.5 * c.theta_cap;
  c.c_exp = std::exp(2.0 * c.B * c.theta_used) +
            c.gamma / (c.gamma - 4.0 * c.theta_used * c.nu_max * (c.G_bar * c.nu_max + c.gamma));
  r.constants = c;
  return r;
}

double ssc_load_threshold(const MmJsqModel& model) {
  const DerivedRates d = derived_rates(model);
  if (!(d.lambda_bar > 0.0)) throw Error(ErrorCode::ZeroArrivalVector, "arrival vector is zero");
  const double nd = static_cast<double>(model.num_servers());
  double threshold = 0.0;
  for (Eigen::Index i = 0; i < model.lambda().size(); ++i) {
    const double need = d.mu_state_sigma(i) - nd * d.mu_state_min(i);
    const double base = model.lambda()(i);
    if (base == 0.0) {
      // lambda_i stays 0 under scaling; strictness fails even when need == 0
      return std::numeric_limits<double>::infinity();
    }
    // lambda_i(rho) = base * rho * mu_sigma / lambda_bar
    threshold = std::max(threshold, need * d.lambda_bar / (base * d.mu_sigma));
  }
  return threshold;
}

Eigen::VectorXd h_function(const MmJsqModel& model) {
  return model.mu().rowwise().sum() - model.lambda();
}

Eigen::VectorXd ell_function(const MmJsqModel& model) { return model.mu().rowwise().sum(); }

double k_star_from(const Eigen::VectorXd& pi, const Eigen::VectorXd& h, const Eigen::VectorXd& V,
                   double shift) {
  return pi.dot((h.array() * (V.array() + shift)).matrix());
}

HtPrediction heavy_traffic_prediction(const MmJsqModel& model) {
  const MmJsqModel limit = scale_to_load(model, 1.0);
  const DerivedRates d = derived_rates(limit);

  HtPrediction p;
  p.n = model.num_servers();
  p.mu_sigma = d.mu_sigma;
  p.pi = limit.stationary().pi;
  p.h = h_function(limit);
  p.V_h = solve_poisson(limit.chain(), limit.stationary(), p.h);
  p.k = (p.h.array() * p.V_h.V.array()).matrix();
  p.ell = ell_function(limit);
  p.k_star = p.pi.dot(p.k);
  p.limit_mean_per_server = (1.0 + p.k_star / p.mu_sigma) / static_cast<double>(p.n);
  p.limit_rate = 1.0 / p.limit_mean_per_server;

  const Eigen::VectorXd h_load = h_function(model);
  const PoissonSolution v_load = solve_poisson(model.chain(), model.stationary(), h_load);
  p.k_at_load = k_star_from(model.stationary().pi, h_load, v_load.V);

  p.ssc_at_limit = check_ssc(limit);
  return p;
}

double limit_laplace(const HtPrediction& prediction, double s) {
  if (!(s > 0.0)) throw Error(ErrorCode::NonpositiveS, "Laplace argument must be positive");
  return 1.0 / (1.0 + s * prediction.limit_mean_per_server);
}

}  // namespace mmjsq
