#include "mmjsq/chain.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mmjsq/error.hpp"

namespace mmjsq {

namespace {

std::vector<bool> reachable_from_zero(const Eigen::MatrixXd& g, bool transpose) {
  const auto m = static_cast<std::size_t>(g.rows());
  std::vector<bool> seen(m, false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    for (std::size_t v = 0; v < m; ++v) {
      if (v == u || seen[v]) continue;
      const double r = transpose ? g(v, u) : g(u, v);
      if (r > 0.0) {
        seen[v] = true;
        stack.push_back(v);
      }
    }
  }
  return seen;
}

}  // namespace

ModulatingChain::ModulatingChain(Eigen::MatrixXd generator) : generator_(std::move(generator)) {
  const std::size_t m = size();
  if (m < 2) return;
  jump_cdf_.assign(m, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    const double total = exit_rate(i);
    double acc = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      acc += rate(i, k);
      jump_cdf_[i][k] = acc / total;
    }
    // Guard the last positive entry against rounding so a uniform draw
    // in [0, 1) always lands on a reachable state.
    for (std::size_t k = m; k-- > 0;) {
      if (rate(i, k) > 0.0) {
        for (std::size_t t = k; t < m; ++t) jump_cdf_[i][t] = 1.0;
        break;
      }
    }
  }
}

double ModulatingChain::max_exit_rate() const {
  double best = 0.0;
  for (std::size_t i = 0; i < size(); ++i) best = std::max(best, exit_rate(i));
  return best;
}

double ModulatingChain::max_rate() const {
  double best = 0.0;
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t k = 0; k < size(); ++k) best = std::max(best, rate(i, k));
  return best;
}

ModulatingChain ModulatingChain::scaled(double factor) const {
  if (!(factor > 0.0) || !std::isfinite(factor))
    throw Error(ErrorCode::InvalidArgument, "rate scale factor must be positive and finite");
  return validate_generator(generator_ * factor);
}

ModulatingChain validate_generator(const Eigen::MatrixXd& raw) {
  if (raw.rows() == 0 || raw.cols() == 0) throw Error(ErrorCode::EmptyChain, "generator has no states");
  if (raw.rows() != raw.cols())
    throw Error(ErrorCode::InvalidShape, "generator must be square, got " + std::to_string(raw.rows()) +
                                             "x" + std::to_string(raw.cols()));
  const auto m = raw.rows();
  Eigen::MatrixXd g = raw;
  for (Eigen::Index i = 0; i < m; ++i) {
    double row = 0.0;
    for (Eigen::Index k = 0; k < m; ++k) {
      if (k == i) continue;
      const double r = g(i, k);
      if (!std::isfinite(r))
        throw Error(ErrorCode::InvalidShape, "non-finite rate at (" + std::to_string(i) + "," +
                                                 std::to_string(k) + ")");
      if (r < 0.0)
        throw Error(ErrorCode::NegativeRate, "rate at (" + std::to_string(i) + "," + std::to_string(k) +
                                                 ") is negative");
      row += r;
    }
    g(i, i) = -row;
  }
  if (m > 1) {
    const auto fwd = reachable_from_zero(g, false);
    const auto bwd = reachable_from_zero(g, true);
    for (Eigen::Index i = 0; i < m; ++i) {
      if (!fwd[static_cast<std::size_t>(i)] || !bwd[static_cast<std::size_t>(i)])
        throw Error(ErrorCode::NotIrreducible,
                    "state " + std::to_string(i) + " is not strongly connected to state 0");
    }
  }
  return ModulatingChain(std::move(g));
}

StationaryDistribution stationary_distribution(const ModulatingChain& chain) {
  const auto m = static_cast<Eigen::Index>(chain.size());
  // Balance equations Q^T pi = 0 stacked with the normalization row.
  Eigen::MatrixXd a(m + 1, m);
  a.topRows(m) = chain.generator().transpose();
  a.row(m).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(m + 1);
  b(m) = 1.0;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < m) throw Error(ErrorCode::SingularSystem, "stationary system is rank deficient");
  Eigen::VectorXd pi = qr.solve(b);
  pi /= pi.sum();

  for (Eigen::Index i = 0; i < m; ++i) {
    if (!(pi(i) > 0.0))
      throw Error(ErrorCode::SingularSystem, "stationary probability of state " + std::to_string(i) +
                                                 " is not positive");
  }
  const double defect = (pi.transpose() * chain.generator()).cwiseAbs().maxCoeff();
  if (defect > 1e-10 * std::max(1.0, chain.max_exit_rate()))
    throw Error(ErrorCode::SingularSystem, "stationary defect " + std::to_string(defect));
  return {std::move(pi)};
}

double poisson_residual(const ModulatingChain& chain, const Eigen::VectorXd& V,
                        const Eigen::VectorXd& f, double f_bar) {
  const Eigen::VectorXd r = chain.generator() * V + (f.array() - f_bar).matrix();
  return r.cwiseAbs().maxCoeff();
}

PoissonSolution solve_poisson(const ModulatingChain& chain, const StationaryDistribution& pi,
                              const Eigen::VectorXd& f) {
  const auto m = static_cast<Eigen::Index>(chain.size());
  if (f.size() != m || pi.pi.size() != m)
    throw Error(ErrorCode::InvalidShape, "state function length does not match the chain");

  const double f_bar = pi.pi.dot(f);
  const Eigen::VectorXd centered = (f.array() - f_bar).matrix();

  // Q has a one-dimensional null space (constants); pi . V = 0 pins it down.
  Eigen::MatrixXd a(m + 1, m);
  a.topRows(m) = chain.generator();
  a.row(m) = pi.pi.transpose();
  Eigen::VectorXd b(m + 1);
  b.head(m) = -centered;
  b(m) = 0.0;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < m) throw Error(ErrorCode::SingularSystem, "Poisson system is rank deficient");
  Eigen::VectorXd V = qr.solve(b);
  // One projection step removes the O(eps) drift of pi . V left by QR.
  V.array() -= pi.pi.dot(V);

  PoissonSolution out;
  out.residual = poisson_residual(chain, V, f, f_bar);
  out.f_bar = f_bar;
  out.V = std::move(V);
  const double scale = std::max({1.0, f.cwiseAbs().maxCoeff(), chain.max_exit_rate()});
  if (out.residual > 1e-9 * scale)
    throw Error(ErrorCode::SingularSystem, "Poisson residual " + std::to_string(out.residual));
  return out;
}

}  // namespace mmjsq
