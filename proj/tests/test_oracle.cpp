#include <cmath>

#include "doctest.h"
#include "mmjsq/oracle.hpp"
#include "mmjsq/verify.hpp"
#include "test_util.hpp"

using namespace mmjsq;

TEST_SUITE("oracle") {
  TEST_CASE("geometric law values") {
    CHECK(mm1_geometric(0.5, 1.0, 0) == 0.5);
    CHECK(mm1_geometric(0.5, 1.0, 3) == 0.0625);
    double total = 0.0;
    for (std::uint64_t x = 0; x < 200; ++x) total += mm1_geometric(0.3, 1.0, x);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(testing::code_of([] { mm1_geometric(1.0, 1.0, 0); }) == ErrorCode::UnstableInput);
    CHECK(testing::code_of([] { mm1_geometric(0.0, 1.0, 0); }) == ErrorCode::UnstableInput);
  }

  TEST_CASE("index and decode are inverse") {
    const auto model = scale_to_load(testing::balanced(1.0), 0.5);
    const TruncatedChain tc(model, 4);
    CHECK(tc.size() == 3 * 125);
    std::vector<std::size_t> q;
    for (std::size_t x = 0; x < tc.size(); ++x) {
      const std::size_t i = tc.decode(x, q);
      CHECK(tc.index(i, q) == x);
    }
  }

  TEST_CASE("generator rows sum to zero") {
    const auto model = scale_to_load(testing::two_by_two(), 0.8);
    const TruncatedChain tc(model, 10);
    const auto& G = tc.generator();
    for (int r = 0; r < G.outerSize(); ++r) {
      double sum = 0.0;
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(G, r); it; ++it) sum += it.value();
      CHECK(std::abs(sum) <= 1e-12);
    }
  }

  TEST_CASE("state guard") {
    const auto model = scale_to_load(testing::balanced(1.0), 0.5);
    CHECK(testing::code_of([&] { TruncatedChain(model, 200); }) == ErrorCode::TooLarge);
    CHECK(truncated_state_count(3, 3, 200) == 3 * 201 * 201 * 201);
    CHECK(truncated_state_count(2, 64, 1000) == std::numeric_limits<std::size_t>::max());
  }

  TEST_CASE("M/M/1 matches the geometric law") {
    const ExactStationary ex = exact_stationary(testing::mm1(0.5, 1.0), 200);
    for (std::uint64_t x = 0; x <= 50; ++x) CHECK(std::abs(ex.dist[x] - mm1_geometric(0.5, 1.0, x)) <= 1e-10);
    CHECK(ex.truncation_mass < 1e-50);
    CHECK(ex.balance_residual < 1e-12);
  }

  TEST_CASE("modulation with identical rates in every state is invisible") {
    const Eigen::MatrixXd q = (Eigen::MatrixXd(2, 2) << 0, 0.7, 1.9, 0).finished();
    const MmJsqModel model(validate_generator(q), Eigen::Vector2d(0.6, 0.6),
                           (Eigen::MatrixXd(2, 1) << 1.0, 1.0).finished());
    const ExactStationary ex = exact_stationary(model, 150);
    const ExactStatistics s = exact_statistics(StatRequest{}, ex, model);
    for (std::size_t x = 0; x <= 20; ++x) CHECK(std::abs(s.pmf[0][x] - mm1_geometric(0.6, 1.0, x)) <= 1e-10);
    CHECK(s.mod_marginal[0] == doctest::Approx(1.9 / 2.6).epsilon(1e-10));
  }

  TEST_CASE("truncation mass decreases as the cap grows") {
    const auto model = scale_to_load(testing::two_by_two(), 0.85);
    double prev = 1.0;
    for (std::size_t cap : {10, 20, 40, 80}) {
      const ExactStationary ex = exact_stationary(model, cap);
      CHECK(ex.truncation_mass < prev);
      prev = ex.truncation_mass;
      double total = 0.0;
      for (double p : ex.dist) total += p;
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(prev < 1e-6);
  }

  TEST_CASE("exact statistics are consistent") {
    const auto model = scale_to_load(testing::two_by_two(), 0.7);
    const ExactStationary ex = exact_stationary(model, 60);
    StatRequest req;
    req.laplace_s = {0.5, 1.0};
    const ExactStatistics s = exact_statistics(req, ex, model);
    const DerivedRates d = derived_rates(model);
    for (std::size_t i = 0; i < 2; ++i)
      CHECK(s.mod_marginal[i] == doctest::Approx(model.stationary().pi(static_cast<Eigen::Index>(i))).epsilon(1e-10));
    // rate balance: departures = arrivals
    CHECK(std::abs(s.empty_drift - d.mu_sigma * d.epsilon) <= 1e-9);
    CHECK(s.mean_q_sigma_over_n == doctest::Approx((s.mean_q[0] + s.mean_q[1]) / 2).epsilon(1e-12));
    CHECK(s.laplace.at(0.5).average > s.laplace.at(1.0).average);
    for (const auto& row : s.pmf) {
      double total = 0.0;
      for (double p : row) total += p;
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  TEST_CASE("covariance identity residual shrinks faster than eps") {
    const auto base = testing::two_by_two();
    const CovarianceDecay dec = covariance_decay(base, {0.2, 0.1, 0.05}, 1.0, 1e-8);
    for (double m : dec.truncation_mass) CHECK(m < 1e-8);
    for (const auto& r : dec.residuals) {
      REQUIRE(r.size() == 3);
      CHECK(r[0] > r[1]);
      CHECK(r[1] > r[2]);
    }
    CHECK(dec.min_ratio >= 1.5);
  }

  TEST_CASE("covariance identity rejects nonpositive s") {
    const auto model = scale_to_load(testing::two_by_two(), 0.7);
    const ExactStationary ex = exact_stationary(model, 20);
    CHECK(testing::code_of([&] { covariance_identity(ex, model, h_function(model), 0.0); }) ==
          ErrorCode::NonpositiveS);
  }
}
