#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <vector>

#include "mmjsq/chain.hpp"

namespace mmjsq {

/// JSQ system with n servers whose arrival rate lambda_i and per-server
/// service rates mu_ij follow the state i of a modulating chain.
class MmJsqModel {
 public:
  /// Throws InvalidShape / NegativeRate / InvalidModel on bad input.
  MmJsqModel(ModulatingChain chain, Eigen::VectorXd lambda, Eigen::MatrixXd mu);

  const ModulatingChain& chain() const { return chain_; }
  const StationaryDistribution& stationary() const { return pi_; }
  const Eigen::VectorXd& lambda() const { return lambda_; }
  /// m x n: row = modulating state, column = server.
  const Eigen::MatrixXd& mu() const { return mu_; }

  std::size_t num_states() const { return chain_.size(); }
  std::size_t num_servers() const { return static_cast<std::size_t>(mu_.cols()); }

  double lambda_max() const { return lambda_.maxCoeff(); }
  double mu_max() const { return mu_.maxCoeff(); }

  MmJsqModel with_lambda(Eigen::VectorXd lambda) const;
  MmJsqModel with_chain(ModulatingChain chain) const;

 private:
  ModulatingChain chain_;
  StationaryDistribution pi_;
  Eigen::VectorXd lambda_;
  Eigen::MatrixXd mu_;
};

struct DerivedRates {
  double lambda_bar = 0.0;
  Eigen::VectorXd mu_per_server;   // mu_j
  double mu_sigma = 0.0;
  Eigen::VectorXd mu_state_sigma;  // mu_{i,Sigma}
  Eigen::VectorXd mu_state_min;    // mu_{i,min}
  double rho = 0.0;
  double epsilon = 0.0;
  Eigen::VectorXd lambda_star;     // limiting per-server arrival rates (= mu_j)
  Eigen::VectorXd lambda_ideal;    // lambda_star * rho
};

DerivedRates derived_rates(const MmJsqModel& model);

/// Multiplies the arrival vector by one scalar so the mean load is exactly
/// `rho_target`. Service rates and the chain are untouched.
MmJsqModel scale_to_load(const MmJsqModel& model, double rho_target);

/// Drift constants for ||q_perp|| (tail bound, moment and exponential-moment
/// constants). Present only when the load condition holds.
struct SscConstants {
  double gamma = 0.0;
  double B = 0.0;
  double nu_max = 0.0;
  double G_bar = 0.0;       // upper bound used in place of G_max
  double theta_cap = 0.0;   // conservative Theta
  double theta_used = 0.0;  // Theta / 2
  double c_exp = 0.0;       // at theta_used
};

struct SscReport {
  Eigen::VectorXd margins;       // lambda_i - (mu_iSigma - n mu_imin)
  bool satisfied = false;
  std::vector<std::size_t> failing_states;
  Eigen::VectorXd delta;         // (1 - lambda_i / mu_iSigma) / n
  Eigen::MatrixXd lambda_prime;  // mu_ij - delta_i mu_iSigma
  double lambda_prime_min = 0.0;
  std::optional<SscConstants> constants;
};

SscReport check_ssc(const MmJsqModel& model);

/// Smallest load above which scale_to_load(model, rho) satisfies the SSC
/// load condition (the condition is strict, so the threshold itself fails).
/// Infinite when some state has zero arrival rate and a positive requirement.
double ssc_load_threshold(const MmJsqModel& model);

struct HtPrediction {
  std::size_t n = 0;
  double mu_sigma = 0.0;
  Eigen::VectorXd pi;
  Eigen::VectorXd h;    // mu_iSigma - lambda_i at rho = 1
  PoissonSolution V_h;
  Eigen::VectorXd k;    // h(i) V_h(i)
  Eigen::VectorXd ell;  // mu_iSigma
  double k_star = 0.0;
  double limit_mean_per_server = 0.0;
  double limit_rate = 0.0;
  /// E[k(i)] with h and V_h evaluated at the model's own load.
  double k_at_load = 0.0;
  /// Load condition evaluated at rho = 1; the prediction is still produced
  /// when it fails.
  SscReport ssc_at_limit;
};

Eigen::VectorXd h_function(const MmJsqModel& model);
Eigen::VectorXd ell_function(const MmJsqModel& model);

/// sum_i pi_i h(i) (V(i) + shift).
double k_star_from(const Eigen::VectorXd& pi, const Eigen::VectorXd& h, const Eigen::VectorXd& V,
                   double shift = 0.0);

HtPrediction heavy_traffic_prediction(const MmJsqModel& model);

/// Limiting Laplace transform of eps * q_j at s > 0.
double limit_laplace(const HtPrediction& prediction, double s);

}  // namespace mmjsq
