#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <cstddef>
#include <cstdint>
#include <map>
#include <vector>

#include "mmjsq/model.hpp"
#include "mmjsq/sim.hpp"

namespace mmjsq {

/// Largest state count exact_stationary() accepts.
inline constexpr std::size_t kMaxOracleStates = 5'000'000;

/// The (modulating state, queue vector) chain with every queue bounded by
/// `cap`. An arrival finding all queues at `cap` is dropped.
class TruncatedChain {
 public:
  TruncatedChain(const MmJsqModel& model, std::size_t cap);

  std::size_t cap() const { return cap_; }
  std::size_t num_servers() const { return n_; }
  std::size_t num_mod_states() const { return m_; }
  std::size_t size() const { return m_ * per_mod_; }
  std::size_t states_per_mod() const { return per_mod_; }

  std::size_t index(std::size_t mod_state, const std::vector<std::size_t>& q) const;
  /// Inverse of index(); writes the queue vector into `q`.
  std::size_t decode(std::size_t idx, std::vector<std::size_t>& q) const;

  /// Row-major generator: entry (x, y) is the rate from x to y.
  const Eigen::SparseMatrix<double, Eigen::RowMajor>& generator() const { return generator_; }

 private:
  std::size_t cap_;
  std::size_t n_;
  std::size_t m_;
  std::size_t per_mod_;
  Eigen::SparseMatrix<double, Eigen::RowMajor> generator_;
};

/// Number of states a truncation at `cap` would need; saturates on overflow.
std::size_t truncated_state_count(std::size_t m, std::size_t n, std::size_t cap);

struct ExactStationary {
  std::size_t cap = 0;
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<double> dist;
  double truncation_mass = 0.0;  // P(some q_j = cap)
  double balance_residual = 0.0; // max |(pi G)_y|
};

ExactStationary exact_stationary(const MmJsqModel& model, std::size_t cap);

/// Same quantities as RunStats, computed from the exact distribution.
struct ExactStatistics {
  std::vector<double> mean_q;
  double mean_q_sigma_over_n = 0.0;
  std::vector<std::vector<double>> pmf;  // n rows of pmf_cap + 2, last = overflow
  std::vector<double> ssc_gap;
  double empty_drift = 0.0;
  std::map<double, LaplaceValues> laplace;  // s -> E[exp(-s eps q_j)], E[exp(-s eps q_Sigma / n)]
  std::map<double, double> laplace_total;   // s -> E[exp(-s eps q_Sigma)]
  std::vector<double> mod_marginal;
};

struct StatRequest {
  std::size_t pmf_cap = 20;
  std::vector<double> laplace_s{1.0};
};

ExactStatistics exact_statistics(const StatRequest& request, const ExactStationary& exact,
                                 const MmJsqModel& model);

/// Both sides of Cov(exp(-s eps q_Sigma), f(i)) =
///   (exp(-s eps) - 1) E[exp(-s eps q_Sigma) V_f(i) (lambda_i - mu_iSigma)].
struct CovarianceIdentity {
  double covariance = 0.0;
  double rhs = 0.0;
  double residual = 0.0;  // |covariance - rhs|
};

CovarianceIdentity covariance_identity(const ExactStationary& exact, const MmJsqModel& model,
                                       const Eigen::VectorXd& f, double s);

/// Stationary M/M/1 queue-length probability with arrival rate a and service rate b.
double mm1_geometric(double a, double b, std::uint64_t x);

}  // namespace mmjsq
