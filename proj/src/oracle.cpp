#include "mmjsq/oracle.hpp"

#include <Eigen/OrderingMethods>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mmjsq/error.hpp"

namespace mmjsq {

std::size_t truncated_state_count(std::size_t m, std::size_t n, std::size_t cap) {
  constexpr std::size_t kSat = std::numeric_limits<std::size_t>::max();
  std::size_t count = m;
  for (std::size_t j = 0; j < n; ++j) {
    if (count > kSat / (cap + 1)) return kSat;
    count *= cap + 1;
  }
  return count;
}

TruncatedChain::TruncatedChain(const MmJsqModel& model, std::size_t cap)
    : cap_(cap), n_(model.num_servers()), m_(model.num_states()) {
  if (cap < 1) throw Error(ErrorCode::InvalidArgument, "cap must be positive");
  const std::size_t total = truncated_state_count(m_, n_, cap);
  if (total > kMaxOracleStates)
    throw Error(ErrorCode::TooLarge, "truncated chain would need more than " +
                                         std::to_string(kMaxOracleStates) + " states");
  per_mod_ = total / m_;

  const Eigen::MatrixXd& mu = model.mu();
  const Eigen::VectorXd& lambda = model.lambda();
  const ModulatingChain& chain = model.chain();

  std::vector<std::size_t> stride(n_, 1);
  for (std::size_t j = 1; j < n_; ++j) stride[j] = stride[j - 1] * (cap_ + 1);

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(total * (2 * n_ + m_ + 1));
  std::vector<std::size_t> q(n_);
  std::vector<std::size_t> argmin;
  for (std::size_t x = 0; x < total; ++x) {
    const std::size_t i = decode(x, q);
    double out = 0.0;

    const std::size_t qmin = *std::min_element(q.begin(), q.end());
    if (qmin < cap_ && lambda(static_cast<Eigen::Index>(i)) > 0.0) {
      argmin.clear();
      for (std::size_t j = 0; j < n_; ++j)
        if (q[j] == qmin) argmin.push_back(j);
      const double share = lambda(static_cast<Eigen::Index>(i)) / static_cast<double>(argmin.size());
      for (std::size_t j : argmin) {
        trip.emplace_back(static_cast<int>(x), static_cast<int>(x + stride[j]), share);
        out += share;
      }
    }
    for (std::size_t j = 0; j < n_; ++j) {
      const double r = mu(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (q[j] > 0 && r > 0.0) {
        trip.emplace_back(static_cast<int>(x), static_cast<int>(x - stride[j]), r);
        out += r;
      }
    }
    for (std::size_t k = 0; k < m_; ++k) {
      const double r = chain.rate(i, k);
      if (r > 0.0) {
        trip.emplace_back(static_cast<int>(x), static_cast<int>(x + (k - i) * per_mod_), r);
        out += r;
      }
    }
    trip.emplace_back(static_cast<int>(x), static_cast<int>(x), -out);
  }
  generator_.resize(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(total));
  generator_.setFromTriplets(trip.begin(), trip.end());
}

std::size_t TruncatedChain::index(std::size_t mod_state, const std::vector<std::size_t>& q) const {
  std::size_t code = 0;
  for (std::size_t j = n_; j-- > 0;) code = code * (cap_ + 1) + q[j];
  return mod_state * per_mod_ + code;
}

std::size_t TruncatedChain::decode(std::size_t idx, std::vector<std::size_t>& q) const {
  q.resize(n_);
  std::size_t code = idx % per_mod_;
  for (std::size_t j = 0; j < n_; ++j) {
    q[j] = code % (cap_ + 1);
    code /= cap_ + 1;
  }
  return idx / per_mod_;
}

ExactStationary exact_stationary(const MmJsqModel& model, std::size_t cap) {
  const TruncatedChain tc(model, cap);
  const auto N = static_cast<Eigen::Index>(tc.size());
  const auto& G = tc.generator();

  ExactStationary out;
  out.cap = cap;
  out.n = tc.num_servers();
  out.m = tc.num_mod_states();
  out.dist.assign(tc.size(), 0.0);

  if (N == 1) {
    out.dist[0] = 1.0;
  } else {
    // Fix the probability of the empty state in modulating state 0 to 1 and
    // solve the remaining balance equations G^T pi = 0, then normalize.
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(G.nonZeros()));
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N - 1);
    for (Eigen::Index x = 0; x < N; ++x) {
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(G, x); it; ++it) {
        const Eigen::Index y = it.col();
        if (y == 0) continue;
        if (x == 0)
          rhs(y - 1) -= it.value();
        else
          trip.emplace_back(static_cast<int>(y - 1), static_cast<int>(x - 1), it.value());
      }
    }
    Eigen::SparseMatrix<double> a(N - 1, N - 1);
    a.setFromTriplets(trip.begin(), trip.end());
    a.makeCompressed();

    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success)
      throw Error(ErrorCode::SingularSystem, "sparse factorization failed: " + lu.lastErrorMessage());
    const Eigen::VectorXd x = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !x.allFinite())
      throw Error(ErrorCode::SingularSystem, "sparse solve failed");

    out.dist[0] = 1.0;
    for (Eigen::Index k = 0; k < N - 1; ++k) out.dist[static_cast<std::size_t>(k + 1)] = x(k);
    double total = 0.0;
    for (double& p : out.dist) {
      // roundoff can leave values a few ulps below zero in far tails
      if (p < 0.0) {
        if (p < -1e-12) throw Error(ErrorCode::SingularSystem, "negative stationary probability");
        p = 0.0;
      }
      total += p;
    }
    for (double& p : out.dist) p /= total;
  }

  Eigen::Map<const Eigen::VectorXd> pi(out.dist.data(), N);
  const Eigen::VectorXd balance = G.transpose() * pi;
  out.balance_residual = balance.cwiseAbs().maxCoeff();

  std::vector<std::size_t> q;
  for (std::size_t x = 0; x < tc.size(); ++x) {
    tc.decode(x, q);
    if (std::find(q.begin(), q.end(), cap) != q.end()) out.truncation_mass += out.dist[x];
  }
  return out;
}

namespace {

template <typename Visit>
void for_each_state(const ExactStationary& exact, Visit visit) {
  const std::size_t per_mod = exact.dist.size() / exact.m;
  std::vector<std::size_t> q(exact.n);
  for (std::size_t x = 0; x < exact.dist.size(); ++x) {
    std::size_t code = x % per_mod;
    for (std::size_t j = 0; j < exact.n; ++j) {
      q[j] = code % (exact.cap + 1);
      code /= exact.cap + 1;
    }
    visit(x / per_mod, q, exact.dist[x]);
  }
}

}  // namespace

ExactStatistics exact_statistics(const StatRequest& request, const ExactStationary& exact,
                                 const MmJsqModel& model) {
  const std::size_t n = exact.n;
  const DerivedRates rates = derived_rates(model);
  const double eps = rates.epsilon;
  const double inv_n = 1.0 / static_cast<double>(n);

  ExactStatistics s;
  s.mean_q.assign(n, 0.0);
  s.ssc_gap.assign(n, 0.0);
  s.pmf.assign(n, std::vector<double>(request.pmf_cap + 2, 0.0));
  s.mod_marginal.assign(exact.m, 0.0);
  for (double sv : request.laplace_s) {
    s.laplace[sv].per_server.assign(n, 0.0);
    s.laplace_total[sv] = 0.0;
  }

  for_each_state(exact, [&](std::size_t i, const std::vector<std::size_t>& q, double p) {
    if (p == 0.0) return;
    std::size_t q_sigma = 0;
    for (std::size_t v : q) q_sigma += v;
    const double avg = static_cast<double>(q_sigma) * inv_n;
    s.mod_marginal[i] += p;
    for (std::size_t j = 0; j < n; ++j) {
      const double qj = static_cast<double>(q[j]);
      s.mean_q[j] += qj * p;
      s.ssc_gap[j] += std::abs(qj - avg) * p;
      s.pmf[j][std::min(q[j], request.pmf_cap + 1)] += p;
      if (q[j] == 0) s.empty_drift += model.mu()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * p;
    }
    s.mean_q_sigma_over_n += avg * p;
    for (double sv : request.laplace_s) {
      auto& lv = s.laplace[sv];
      for (std::size_t j = 0; j < n; ++j) lv.per_server[j] += std::exp(-sv * eps * static_cast<double>(q[j])) * p;
      lv.average += std::exp(-sv * eps * avg) * p;
      s.laplace_total[sv] += std::exp(-sv * eps * static_cast<double>(q_sigma)) * p;
    }
  });
  return s;
}

CovarianceIdentity covariance_identity(const ExactStationary& exact, const MmJsqModel& model,
                                       const Eigen::VectorXd& f, double s) {
  if (!(s > 0.0)) throw Error(ErrorCode::NonpositiveS, "s must be positive");
  const double eps = derived_rates(model).epsilon;
  const PoissonSolution V = solve_poisson(model.chain(), model.stationary(), f);
  const Eigen::VectorXd drift = model.lambda() - model.mu().rowwise().sum();

  double e_phi = 0.0;
  double e_phi_f = 0.0;
  double e_f = 0.0;
  double e_phi_v = 0.0;
  for_each_state(exact, [&](std::size_t i, const std::vector<std::size_t>& q, double p) {
    std::size_t q_sigma = 0;
    for (std::size_t v : q) q_sigma += v;
    const auto ii = static_cast<Eigen::Index>(i);
    const double phi = std::exp(-s * eps * static_cast<double>(q_sigma));
    e_phi += phi * p;
    e_phi_f += phi * f(ii) * p;
    e_f += f(ii) * p;
    e_phi_v += phi * V.V(ii) * drift(ii) * p;
  });

  CovarianceIdentity out;
  out.covariance = e_phi_f - e_phi * e_f;
  out.rhs = std::expm1(-s * eps) * e_phi_v;
  out.residual = std::abs(out.covariance - out.rhs);
  return out;
}

double mm1_geometric(double a, double b, std::uint64_t x) {
  if (!(a > 0.0) || !(a < b)) throw Error(ErrorCode::UnstableInput, "need 0 < a < b");
  const double r = a / b;
  return (1.0 - r) * std::pow(r, static_cast<double>(x));
}

}  // namespace mmjsq
