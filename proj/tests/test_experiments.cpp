#include <cmath>

#include "doctest.h"
#include "mmjsq/experiments.hpp"
#include "test_util.hpp"

using namespace mmjsq;

TEST_SUITE("experiments") {
  TEST_CASE("line fit recovers an exact line") {
    const LinearFit f = fit_line({1, 2, 3, 4}, {1, 3, 5, 7});
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(-1.0));
    CHECK(f.r_squared == doctest::Approx(1.0));
    CHECK(testing::code_of([] { fit_line({1}, {1}); }) == ErrorCode::InvalidArgument);
    CHECK(testing::code_of([] { fit_line({2, 2}, {1, 3}); }) == ErrorCode::InvalidArgument);
  }

  TEST_CASE("log slope of a geometric PMF") {
    std::vector<double> pmf;
    for (int x = 0; x < 80; ++x) pmf.push_back(0.1 * std::pow(0.9, x));
    pmf[30] = 0.0;
    const LinearFit f = pmf_log_slope(pmf, 5, 60);
    CHECK(f.slope == doctest::Approx(std::log(0.9)).epsilon(1e-12));
  }

  TEST_CASE("sweep point models") {
    const auto base = testing::balanced(0.1, 0.95);
    const MmJsqModel at_load = sweep_point_model(base, SweepKind::Load, 0.8);
    CHECK(derived_rates(at_load).rho == doctest::Approx(0.8).epsilon(1e-15));
    const MmJsqModel at_alpha = sweep_point_model(base, SweepKind::Alpha, 2.5);
    CHECK(at_alpha.chain().max_rate() == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(derived_rates(at_alpha).rho == doctest::Approx(0.95).epsilon(1e-14));
  }

  TEST_CASE("sweep grid validation") {
    SweepSpec spec{testing::balanced(1.0, 0.9)};
    spec.sim.num_arrivals = 10'000;
    spec.num_runs = 2;
    CHECK(testing::code_of([&] { run_sweep(spec); }) == ErrorCode::InvalidArgument);
    spec.grid = {0.9, 0.8};
    CHECK(testing::code_of([&] { run_sweep(spec); }) == ErrorCode::InvalidArgument);
    spec.grid = {0.5, 1.0};
    CHECK(testing::code_of([&] { run_sweep(spec); }) == ErrorCode::InvalidArgument);
    spec.kind = SweepKind::Alpha;
    spec.grid = {0.0, 1.0};
    CHECK(testing::code_of([&] { run_sweep(spec); }) == ErrorCode::InvalidArgument);
  }

  TEST_CASE("small load sweep fills every row") {
    SweepSpec spec{testing::balanced(1.0)};
    spec.grid = {0.5, 0.7};
    spec.sim.num_arrivals = 20'000;
    spec.sim.pmf_cap = 20;
    spec.num_runs = 3;
    const SweepResult res = run_sweep(spec);
    REQUIRE(res.rows.size() == 2);
    for (const auto& row : res.rows) {
      CHECK(row.rho == doctest::Approx(row.grid_value));
      CHECK(row.epsilon == doctest::Approx(1.0 - row.grid_value));
      CHECK(row.k_star == doctest::Approx(7.0 / 12).epsilon(1e-10));
      CHECK(row.predicted_mean_q == doctest::Approx(row.limit_mean_per_server / row.epsilon));
      REQUIRE(row.scaled_mean_q.size() == 3);
      CHECK(row.scaled_mean_q[0].mean == doctest::Approx(row.epsilon * row.sim.mean_q[0].mean));
      CHECK(row.sim.num_runs == 3);
    }
  }

  TEST_CASE("convergence order preconditions") {
    const auto base = testing::mm1(0.5, 1.0);
    CHECK(testing::code_of([&] { convergence_order(base, 1.0, {0.1, 0.2}); }) == ErrorCode::InvalidArgument);
    CHECK(testing::code_of([&] { convergence_order(base, 1.0, {0.1, 0.2, 0.6}); }) == ErrorCode::InvalidArgument);
    CHECK(testing::code_of([&] { convergence_order(base, 0.0, {0.1, 0.2, 0.3}); }) == ErrorCode::NonpositiveS);
    CHECK(testing::code_of([&] { convergence_order(base, 1.0, {0.05, 0.1, 0.4}); }) == ErrorCode::InvalidArgument);
  }

  TEST_CASE("exact-backend convergence order") {
    const std::vector<double> grid{0.2, 0.1, 0.05};
    const ConvergenceFit mm1 = convergence_order(testing::mm1(0.5, 1.0), 1.0, grid);
    CHECK(mm1.limit == doctest::Approx(0.5));
    CHECK(mm1.worst.slope >= 0.35);
    CHECK_FALSE(mm1.noisy);

    const ConvergenceFit two = convergence_order(testing::two_by_two(), 1.0, grid);
    CHECK(two.worst.slope >= 0.35);
    for (const auto& row : two.errors)
      for (double e : row) CHECK(e < 0.1);
  }
}
