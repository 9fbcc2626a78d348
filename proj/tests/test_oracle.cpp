#include <cmath>
#include <doctest.h>

#include "qoemarket/asp_solver.hpp"
#include "qoemarket/oracle.hpp"
#include "test_util.hpp"

using namespace qoemarket;

TEST_CASE("numeric hessian of a known quadratic") {
  const oracle::ScalarField fn = [](const std::vector<double>& x) {
    return -x[0] * x[0] - x[1] * x[1];
  };
  const auto h = oracle::numeric_hessian(fn, {0.3, -0.7}, 1e-4);
  CHECK(h[0][0] == doctest::Approx(-2.0).epsilon(1e-6));
  CHECK(h[1][1] == doctest::Approx(-2.0).epsilon(1e-6));
  CHECK(h[0][1] == doctest::Approx(0.0).scale(1.0).epsilon(1e-6));
  CHECK(h[0][1] == h[1][0]);
  CHECK(oracle::max_eigenvalue_sym(h) == doctest::Approx(-2.0).epsilon(1e-5));
}

TEST_CASE("max eigenvalue of a hand-diagonalizable matrix") {
  // Eigenvalues of [[2, 1], [1, 2]] are 1 and 3.
  CHECK(oracle::max_eigenvalue_sym({{2, 1}, {1, 2}}) ==
        doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("grid best response brackets the closed-form interior optimum") {
  Scenario s = testutil::simple_scenario(1, 1);
  RewardMatrix r(1, 1, 0.4);
  const double a = compute_load(s.asps[0], s.demands(0, 0));
  const double c = comm_load(s.demands(0, 0), s.channels(0, 0));
  const auto [f_star, b_star] =
      interior_optimum(0.4, a, c, s.asps[0].c_f, s.asps[0].c_b);
  REQUIRE(f_star < s.asps[0].f_max);
  REQUIRE(b_star < s.asps[0].b_max);

  oracle::GridSpec spec;
  spec.points_per_axis = 400;
  spec.refine_passes = 2;
  const auto grid = oracle::grid_best_response(s, 0, r, spec);
  // Within a couple of refined grid cells of the true optimum.
  const double f_cell = 4.0 * (s.asps[0].f_max / 399.0) / 399.0;
  const double b_cell = 4.0 * (s.asps[0].b_max / 399.0) / 399.0;
  CHECK(std::abs(grid.f[0] - f_star) <= 2.0 * f_cell);
  CHECK(std::abs(grid.b[0] - b_star) <= 2.0 * b_cell);

  // The lattice value can only fall below the true maximum.
  Allocation at_star{Grid<double>(1, 1, f_star), Grid<double>(1, 1, b_star)};
  CHECK(grid.utility <= asp_utility(s, 0, r, at_star) + 1e-12);
  CHECK(grid.utility ==
        doctest::Approx(asp_utility(s, 0, r, at_star)).epsilon(1e-4));
}

TEST_CASE("degenerate two-point grid returns the better corner") {
  Scenario s = testutil::simple_scenario(1, 1);
  RewardMatrix r(1, 1, 0.4);
  oracle::GridSpec spec;
  spec.points_per_axis = 2;
  spec.refine_passes = 0;
  const auto grid = oracle::grid_best_response(s, 0, r, spec);
  const double f_lo = s.asps[0].f_max / 2, f_hi = s.asps[0].f_max;
  const double b_lo = s.asps[0].b_max / 2, b_hi = s.asps[0].b_max;
  double best = -1e300, best_f = 0, best_b = 0;
  for (double f : {f_lo, f_hi})
    for (double b : {b_lo, b_hi}) {
      Allocation alloc{Grid<double>(1, 1, f), Grid<double>(1, 1, b)};
      const double u = asp_utility(s, 0, r, alloc);
      if (u > best) {
        best = u;
        best_f = f;
        best_b = b;
      }
    }
  CHECK(grid.f[0] == best_f);
  CHECK(grid.b[0] == best_b);
  CHECK(grid.utility == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("grid best response refuses more than three MUs") {
  Scenario s = testutil::simple_scenario(1, 4);
  CHECK_THROWS_AS(oracle::grid_best_response(s, 0, s.midpoint_rewards(), {}),
                  std::invalid_argument);
}

TEST_CASE("grid NE search finds a singleton on a one-by-one market") {
  Scenario s = testutil::simple_scenario(1, 1, 21);
  oracle::NeSearchSpec spec;
  spec.reward_points = 41;
  // Inject the analytic follower so the search runs at full resolution.
  const auto responder = [&s](int n, const std::vector<double>& column) {
    RewardMatrix r(s.num_asps(), s.num_mus());
    for (int m = 0; m < s.num_mus(); ++m) r(n, m) = column[m];
    return qoe_at(best_response(s, n, r), s, n);
  };
  const auto ne = oracle::grid_ne_search(s, spec, responder);
  REQUIRE(ne.size() >= 1);
  CHECK(ne.size() <= 2);  // one peak, possibly straddling a cell edge
  const double step = (s.mus[0].r_max - s.mus[0].r_min) / 40.0;
  for (const RewardMatrix& r : ne)
    CHECK(std::abs(r(0, 0) - ne.front()(0, 0)) <=
          step * static_cast<double>(ne.size() - 1) + 1e-12);
}

TEST_CASE("grid NE search with the default grid-oracle follower") {
  Scenario s = testutil::simple_scenario(1, 1, 33);
  oracle::NeSearchSpec spec;
  spec.reward_points = 9;
  spec.inner.points_per_axis = 60;
  spec.inner.refine_passes = 1;
  const auto ne = oracle::grid_ne_search(s, spec);
  CHECK(ne.size() >= 1);
}

TEST_CASE("nearly degenerate reward bounds make every grid point an NE") {
  Scenario s = testutil::simple_scenario(1, 1);
  s.mus[0].r_min = 0.25;
  s.mus[0].r_max = 0.25 + 1e-13;
  oracle::NeSearchSpec spec;
  spec.reward_points = 2;
  const auto responder = [&s](int n, const std::vector<double>& column) {
    RewardMatrix r(s.num_asps(), s.num_mus());
    for (int m = 0; m < s.num_mus(); ++m) r(n, m) = column[m];
    return qoe_at(best_response(s, n, r), s, n);
  };
  const auto ne = oracle::grid_ne_search(s, spec, responder);
  CHECK(ne.size() == 2);
  for (const RewardMatrix& r : ne)
    CHECK(r(0, 0) == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("grid searches are deterministic") {
  Scenario s = testutil::simple_scenario(1, 2, 5);
  RewardMatrix r = s.midpoint_rewards();
  oracle::GridSpec spec;
  spec.points_per_axis = 24;
  spec.refine_passes = 2;
  const auto a = oracle::grid_best_response(s, 0, r, spec);
  const auto b = oracle::grid_best_response(s, 0, r, spec);
  CHECK(a.f == b.f);
  CHECK(a.b == b.b);
  CHECK(a.utility == b.utility);
}
