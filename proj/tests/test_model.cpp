#include <cmath>
#include <limits>

#include "doctest.h"
#include "mmjsq/model.hpp"
#include "test_util.hpp"

using namespace mmjsq;

namespace {

void check_rel(double got, double want, double tol = 1e-10) {
  CHECK(std::abs(got - want) <= tol * std::abs(want));
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("derived rates of the balanced three-server model") {
    const DerivedRates d = derived_rates(testing::balanced(0.1));
    check_rel(d.mu_per_server(0), 13.0 / 6);
    check_rel(d.mu_per_server(1), 2.0);
    check_rel(d.mu_per_server(2), 11.0 / 6);
    check_rel(d.mu_sigma, 6.0);
    check_rel(d.lambda_bar, 6.0);
    check_rel(d.rho, 1.0, 1e-14);
    check_rel(d.mu_state_sigma(0), 2.0);
    check_rel(d.mu_state_sigma(2), 10.5);
    CHECK(d.mu_state_min(0) == 0.5);
    CHECK(d.mu_state_min(2) == 2.5);
    check_rel(d.lambda_star.sum(), d.mu_sigma);
  }

  TEST_CASE("model validation errors") {
    const auto chain = validate_generator(testing::cyclic3(1.0));
    CHECK(testing::code_of([&] { MmJsqModel(chain, Eigen::Vector2d(1, 1), testing::balanced_mu()); }) ==
          ErrorCode::InvalidShape);
    CHECK(testing::code_of([&] { MmJsqModel(chain, Eigen::Vector3d(1, -1, 1), testing::balanced_mu()); }) ==
          ErrorCode::NegativeRate);
    Eigen::MatrixXd dead = testing::balanced_mu();
    dead.col(1).setZero();
    CHECK(testing::code_of([&] { MmJsqModel(chain, testing::base_lambda(), dead); }) == ErrorCode::InvalidModel);
    Eigen::MatrixXd nan_mu = testing::balanced_mu();
    nan_mu(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK(testing::code_of([&] { MmJsqModel(chain, testing::base_lambda(), nan_mu); }) == ErrorCode::InvalidModel);
  }

  TEST_CASE("scale_to_load hits the target exactly and is idempotent") {
    const auto base = testing::balanced(0.1);
    for (double rho : {0.5, 0.8, 0.9, 0.95, 0.98, 0.999}) {
      const auto m = scale_to_load(base, rho);
      CHECK(std::abs(derived_rates(m).rho - rho) <= 4 * std::numeric_limits<double>::epsilon());
      const auto again = scale_to_load(m, rho);
      CHECK((again.lambda() - m.lambda()).cwiseAbs().maxCoeff() <= 1e-14);
      // shape of the arrival vector is preserved
      check_rel(m.lambda()(1) / m.lambda()(0), 2.0, 1e-14);
    }
    const auto zero = base.with_lambda(Eigen::Vector3d::Zero());
    CHECK(testing::code_of([&] { scale_to_load(zero, 0.9); }) == ErrorCode::ZeroArrivalVector);
    CHECK(testing::code_of([&] { heavy_traffic_prediction(zero); }) == ErrorCode::ZeroArrivalVector);
  }

  TEST_CASE("slow cyclic modulation: frozen heavy-traffic values") {
    const auto model = testing::balanced(0.1, 0.95);
    const HtPrediction p = heavy_traffic_prediction(model);
    check_rel(p.mu_sigma, 6.0);
    check_rel(p.h(0), -1.0);
    check_rel(p.h(1), -0.5);
    check_rel(p.h(2), 1.5);
    check_rel(p.V_h.V(0), -25.0 / 3);
    check_rel(p.V_h.V(1), 5.0 / 3);
    check_rel(p.V_h.V(2), 20.0 / 3);
    check_rel(p.k_star, 35.0 / 6);
    check_rel(p.limit_mean_per_server, 71.0 / 108);
    check_rel(p.limit_rate, 108.0 / 71);
    check_rel(limit_laplace(p, 1.0), 108.0 / 179);
    CHECK(p.ssc_at_limit.satisfied);
    CHECK(testing::code_of([&] { limit_laplace(p, 0.0); }) == ErrorCode::NonpositiveS);
    CHECK(testing::code_of([&] { limit_laplace(p, -1.0); }) == ErrorCode::NonpositiveS);
  }

  TEST_CASE("k* scales as 1/alpha for the unit-rate cycle") {
    for (double a : {10.0, 1.0, 0.1, 0.01}) {
      const HtPrediction p = heavy_traffic_prediction(testing::balanced(a, 0.9));
      check_rel(p.k_star, 7.0 / (12.0 * a));
      check_rel(p.limit_mean_per_server, (1.0 + 7.0 / (72.0 * a)) / 3.0);
    }
  }

  TEST_CASE("unbalanced model: k* and SSC failure in state 0") {
    for (double a : {1.0, 0.1}) {
      const HtPrediction p = heavy_traffic_prediction(testing::unbalanced(a));
      check_rel(p.mu_sigma, 17.0 / 3);
      check_rel(p.k_star, 301.0 / (27.0 * a));
      CHECK_FALSE(p.ssc_at_limit.satisfied);
      REQUIRE(p.ssc_at_limit.failing_states.size() == 1);
      CHECK(p.ssc_at_limit.failing_states[0] == 0);
    }
    const SscReport r = check_ssc(testing::unbalanced(1.0));
    check_rel(r.margins(0), 3.0 - 8.0);
    check_rel(r.margins(1), 6.0 - 0.5);
    check_rel(r.margins(2), 9.0 - 1.0);
    CHECK_FALSE(r.constants.has_value());
  }

  TEST_CASE("single server regression with two modulating states") {
    const Eigen::MatrixXd q = (Eigen::MatrixXd(2, 2) << 0, 1, 1, 0).finished();
    const MmJsqModel model(validate_generator(q), Eigen::Vector2d(1, 3),
                           (Eigen::MatrixXd(2, 1) << 3, 1).finished());
    const HtPrediction p = heavy_traffic_prediction(model);
    check_rel(p.mu_sigma, 2.0);
    check_rel(p.h(0), 2.0);
    check_rel(p.h(1), -2.0);
    check_rel(p.V_h.V(0), 1.0);
    check_rel(p.V_h.V(1), -1.0);
    check_rel(p.k_star, 2.0);
    check_rel(p.limit_mean_per_server, 2.0);
  }

  TEST_CASE("two-state two-server model") {
    const HtPrediction p = heavy_traffic_prediction(testing::two_by_two());
    check_rel(p.mu_sigma, 13.0 / 6);
    check_rel(p.h(0), -1.0 / 8);
    check_rel(p.h(1), 1.0 / 4);
    check_rel(p.V_h.V(0), -1.0 / 24);
    check_rel(p.V_h.V(1), 1.0 / 12);
    check_rel(p.k_star, 1.0 / 96);
  }

  TEST_CASE("plain M/M/1 has k* = 0 and limit mean 1") {
    const HtPrediction p = heavy_traffic_prediction(testing::mm1(0.5, 1.0));
    CHECK(p.k_star == 0.0);
    check_rel(p.limit_mean_per_server, 1.0);
    check_rel(limit_laplace(p, 2.0), 1.0 / 3);
  }

  TEST_CASE("prediction does not depend on the input load") {
    const double ref = heavy_traffic_prediction(testing::balanced(0.3, 1.0)).k_star;
    for (double r : {0.2, 0.7, 1.3}) check_rel(heavy_traffic_prediction(testing::balanced(0.3, r)).k_star, ref, 1e-12);
  }

  TEST_CASE("k* is invariant to shifting V_h") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
      const int m = 1 + trial % 6;
      const auto chain = validate_generator(testing::random_generator(rng, m));
      const Eigen::VectorXd lambda = testing::random_vector(rng, m, 0.1, 4.0);
      Eigen::MatrixXd mu(m, 2);
      mu.col(0) = testing::random_vector(rng, m, 0.1, 3.0);
      mu.col(1) = testing::random_vector(rng, m, 0.1, 3.0);
      const HtPrediction p = heavy_traffic_prediction(MmJsqModel(chain, lambda, mu));
      CHECK(std::abs(p.pi.dot(p.h)) <= 1e-12 * p.mu_sigma);
      for (double c : {-1e3, 1.0, 1e3}) CHECK(std::abs(k_star_from(p.pi, p.h, p.V_h.V, c) - p.k_star) <= 1e-9);
    }
  }

  TEST_CASE("SSC load threshold of the balanced model is 5/12 and strict") {
    const auto base = testing::balanced(0.1);
    const double thr = ssc_load_threshold(base);
    check_rel(thr, 5.0 / 12, 1e-14);
    CHECK(check_ssc(scale_to_load(base, 0.42)).satisfied);
    CHECK_FALSE(check_ssc(scale_to_load(base, 0.41)).satisfied);
    const SscReport at = check_ssc(base.with_lambda(Eigen::Vector3d(1.25, 2.5, 3.75)));
    CHECK_FALSE(at.satisfied);
    CHECK(at.failing_states == std::vector<std::size_t>{1});

    auto zero_state = base.with_lambda(Eigen::Vector3d(0, 6, 9));
    CHECK(std::isinf(ssc_load_threshold(zero_state)));
  }

  TEST_CASE("SSC constants are positive and consistent") {
    const SscReport r = check_ssc(testing::balanced(0.1, 0.95));
    REQUIRE(r.satisfied);
    REQUIRE(r.constants.has_value());
    const SscConstants& c = *r.constants;
    CHECK(r.lambda_prime_min > 0.0);
    check_rel(c.gamma, 0.5 * r.lambda_prime_min, 1e-15);
    CHECK(c.B > 0.0);
    check_rel(c.nu_max, 1.0 + 1.0 / std::sqrt(3.0), 1e-15);
    check_rel(c.G_bar, 9.0 * 0.95 + 3.0 * 5.0 + 0.1, 1e-14);
    CHECK(c.theta_cap > 0.0);
    check_rel(c.theta_used, 0.5 * c.theta_cap, 1e-15);
    check_rel(c.c_exp, std::exp(2.0 * c.B * c.theta_used) + 2.0, 1e-12);
    for (Eigen::Index i = 0; i < 3; ++i) {
      // sum_j lambda'_ij = mu_iSigma (1 - n delta_i) = lambda_i
      check_rel(r.lambda_prime.row(i).sum(), 0.95 * testing::base_lambda()(i), 1e-12);
    }
  }
}
