#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

namespace mmjsq {

/// Finite, irreducible continuous-time Markov chain given by its generator.
///
/// Construct through validate_generator(); the diagonal of the stored
/// generator always equals the negated off-diagonal row sum.
class ModulatingChain {
 public:
  std::size_t size() const { return static_cast<std::size_t>(generator_.rows()); }

  const Eigen::MatrixXd& generator() const { return generator_; }

  /// Off-diagonal rate from `from` to `to` (0 on the diagonal).
  double rate(std::size_t from, std::size_t to) const {
    return from == to ? 0.0 : generator_(from, to);
  }

  /// Total rate of leaving `state`.
  double exit_rate(std::size_t state) const { return -generator_(state, state); }

  double max_exit_rate() const;

  /// Largest off-diagonal entry; the reference rate for uniform rescaling.
  double max_rate() const;

  /// Same chain with every rate multiplied by `factor` (> 0).
  ModulatingChain scaled(double factor) const;

  /// Row `i` holds the cumulative distribution of the next state after a
  /// jump out of `i`. Empty for a single-state chain.
  const std::vector<std::vector<double>>& jump_cdf() const { return jump_cdf_; }

 private:
  friend ModulatingChain validate_generator(const Eigen::MatrixXd& raw);
  explicit ModulatingChain(Eigen::MatrixXd generator);

  Eigen::MatrixXd generator_;
  std::vector<std::vector<double>> jump_cdf_;
};

struct StationaryDistribution {
  Eigen::VectorXd pi;
};

/// Solution of Q V = -(f - fbar 1) normalized to pi . V = 0.
struct PoissonSolution {
  Eigen::VectorXd V;
  double f_bar = 0.0;
  double residual = 0.0;
};

/// Checks shape, sign and irreducibility, and rebuilds the diagonal from the
/// off-diagonal rows. Input diagonal entries are ignored.
ModulatingChain validate_generator(const Eigen::MatrixXd& raw);

StationaryDistribution stationary_distribution(const ModulatingChain& chain);

PoissonSolution solve_poisson(const ModulatingChain& chain,
                              const StationaryDistribution& pi,
                              const Eigen::VectorXd& f);

/// Max-norm defect of Q V + (f - fbar 1).
double poisson_residual(const ModulatingChain& chain, const Eigen::VectorXd& V,
                        const Eigen::VectorXd& f, double f_bar);

}  // namespace mmjsq
