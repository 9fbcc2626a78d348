#include <cmath>
#include <doctest.h>

#include "qoemarket/model.hpp"
#include "test_util.hpp"

using namespace qoemarket;

namespace {

// Literal summation, the oracle for the closed form.
double token_cost_brute(int x_in, int x_out) {
  double sum = 0;
  for (int i = 0; i < x_out; ++i) sum += x_in + i;
  return sum;
}

}  // namespace

TEST_CASE("token_cost_sum matches the literal sum") {
  CHECK(token_cost_sum(100, 300) == 74850.0);
  CHECK(token_cost_sum(100, 300) == token_cost_brute(100, 300));
  CHECK(token_cost_sum(17, 1) == 17);
  CHECK(token_cost_sum(12345, 0) == 0);
  for (uint64_t i = 0; i < 400; ++i) {
    const int x_in = static_cast<int>(testutil::u_in(11, i, 1, 0, 2000));
    const int x_out = static_cast<int>(testutil::u_in(11, i, 2, 0, 2000));
    CAPTURE(x_in);
    CAPTURE(x_out);
    CHECK(token_cost_sum(x_in, x_out) == token_cost_brute(x_in, x_out));
  }
}

TEST_CASE("gap bound formula and geometric ratio") {
  GapBoundParams p{0.2, 0.1, 1.0, 2};
  const double beta = 2.0 * 0.1 / 0.9;
  CHECK(gap_bound(p) == doctest::Approx(beta * 0.0625).epsilon(1e-14));
  p.k_examples = 0;
  CHECK(gap_bound(p) == doctest::Approx(beta).epsilon(1e-14));

  for (uint64_t i = 0; i < 50; ++i) {
    GapBoundParams q;
    q.eta = testutil::u_in(3, i, 1, 0.01, 0.49);
    q.zeta0 = testutil::u_in(3, i, 2, 0.01, 0.9);
    q.upsilon = testutil::u_in(3, i, 3, 1.0, 1.8);
    q.k_examples = 1 + static_cast<int>(testutil::u_in(3, i, 4, 0, 6));
    GapBoundParams next = q;
    next.k_examples += 1;
    CHECK(gap_bound(next) / gap_bound(q) ==
          doctest::Approx(gap_bound_ratio(q)).epsilon(1e-12));
    CHECK(gap_bound(q) > 0.0);
  }
}

TEST_CASE("gap bound is decreasing in K exactly when the ratio is below one") {
  GapBoundParams shrinking{0.2, 0.1, 1.0, 1};
  GapBoundParams growing{0.4, 0.1, 2.0, 1};  // upsilon*eta/(1-eta) = 4/3
  for (int k = 1; k < 8; ++k) {
    shrinking.k_examples = k;
    growing.k_examples = k;
    GapBoundParams s_next = shrinking, g_next = growing;
    s_next.k_examples = k + 1;
    g_next.k_examples = k + 1;
    CHECK(gap_bound(s_next) < gap_bound(shrinking));
    CHECK(gap_bound(g_next) > gap_bound(growing));
  }
}

TEST_CASE("gap bound rejects out-of-domain parameters") {
  CHECK_THROWS_AS(gap_bound({0.5, 0.1, 1.0, 2}), std::invalid_argument);
  CHECK_THROWS_AS(gap_bound({0.2, 1.0, 1.0, 2}), std::invalid_argument);
  CHECK_THROWS_AS(gap_bound({0.2, 0.1, 0.9, 2}), std::invalid_argument);
}

TEST_CASE("accuracy lookup reproduces the canonical pairs as fixed points") {
  AccuracyLookup lookup{};  // shipped defaults
  for (const auto& [theta, k] : AccuracyLookup::canonical_pairs()) {
    CHECK(lookup.k_for_theta(theta) == k);
    CHECK(lookup.theta_for_k(k) == doctest::Approx(theta).epsilon(1e-12));
  }
  // Intermediate targets round up to the next example count.
  CHECK(lookup.k_for_theta(5e-4) == 3);
  CHECK(lookup.k_for_theta(2e-3) == 2);
}

TEST_CASE("qoe matches a hand evaluation") {
  AspParams asp;
  asp.kappa = 1.0;
  asp.xi = 1.0;
  Demand d{std::exp(-1.0), 10, 1};
  Channel ch{1.0};
  CHECK(qoe(asp, d, ch, 100.0, 3520.0) == doctest::Approx(0.8).epsilon(1e-12));

  // Both cost terms vanish as resources grow.
  CHECK(qoe(asp, d, ch, 1e18, 1e18) == doctest::Approx(1.0).epsilon(1e-9));

  // theta_hat = 1 zeroes the compute term regardless of f.
  Demand free_acc{1.0, 10, 1};
  const double q1 = qoe(asp, free_acc, ch, 1.0, 3520.0);
  const double q2 = qoe(asp, free_acc, ch, 1e9, 3520.0);
  CHECK(q1 == doctest::Approx(q2).epsilon(1e-14));

  CHECK_THROWS_AS(qoe(asp, d, ch, 0.0, 10.0), std::invalid_argument);
  CHECK_THROWS_AS(qoe(asp, d, ch, 10.0, -1.0), std::invalid_argument);
}

TEST_CASE("qoe monotonicity in resources and demands") {
  const Scenario s = testutil::simple_scenario(1, 1);
  const AspParams& asp = s.asps[0];
  const Channel ch = s.channels(0, 0);
  Demand d = s.demands(0, 0);
  const double f = 2e11, b = 3e6;
  CHECK(qoe(asp, d, ch, f * 1.1, b) > qoe(asp, d, ch, f, b));
  CHECK(qoe(asp, d, ch, f, b * 1.1) > qoe(asp, d, ch, f, b));

  Demand looser = d;
  looser.theta_hat = d.theta_hat * 10.0;
  CHECK(qoe(asp, looser, ch, f, b) > qoe(asp, d, ch, f, b));

  Demand longer = d;
  longer.x_out = d.x_out + 100;
  CHECK(qoe(asp, longer, ch, f, b) < qoe(asp, d, ch, f, b));
}

TEST_CASE("asp utility: zero reward leaves only the resource cost") {
  Scenario s = testutil::simple_scenario(1, 1);
  RewardMatrix r(1, 1, 0.0);
  Allocation alloc{Grid<double>(1, 1, 2e11), Grid<double>(1, 1, 3e6)};
  const double expected =
      -s.asps[0].c_f * 2e11 - s.asps[0].c_b * 3e6;
  CHECK(asp_utility(s, 0, r, alloc) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("asp utility at the interior stationary point") {
  Scenario s = testutil::simple_scenario(1, 1);
  const double reward = 0.2;
  const double a = compute_load(s.asps[0], s.demands(0, 0));
  const double c = comm_load(s.demands(0, 0), s.channels(0, 0));
  const double f_star = std::sqrt(reward * a / s.asps[0].c_f);
  const double b_star = std::sqrt(reward * c / s.asps[0].c_b);
  RewardMatrix r(1, 1, reward);
  Allocation alloc{Grid<double>(1, 1, f_star), Grid<double>(1, 1, b_star)};
  const double expected = reward * s.asps[0].kappa -
                          2.0 * std::sqrt(reward * a * s.asps[0].c_f) -
                          2.0 * std::sqrt(reward * c * s.asps[0].c_b);
  CHECK(asp_utility(s, 0, r, alloc) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("mu utility hand evaluations and domain error") {
  Scenario s = testutil::simple_scenario(1, 1);
  s.mus[0].mu = 10.0;
  const double a = compute_load(s.asps[0], s.demands(0, 0));
  const double c = comm_load(s.demands(0, 0), s.channels(0, 0));

  // Allocation pinned to the QoE = 0 surface gives zero utility.
  {
    Allocation alloc{Grid<double>(1, 1, 2.0 * a / s.asps[0].kappa),
                     Grid<double>(1, 1, 2.0 * c / s.asps[0].kappa)};
    RewardMatrix r(1, 1, 0.5);
    CHECK(mu_utility(s, 0, r, alloc) == doctest::Approx(0.0).epsilon(1e-12));
  }

  // QoE = e - 1 with zero rewards: utility is exactly mu.
  {
    Scenario se = s;
    se.asps[0].kappa = std::exp(1.0);
    Allocation alloc{Grid<double>(1, 1, 2.0 * a),
                     Grid<double>(1, 1, 2.0 * c)};
    RewardMatrix zero(1, 1, 0.0);
    CHECK(mu_utility(se, 0, zero, alloc) ==
          doctest::Approx(10.0).epsilon(1e-12));
  }

  // A deeply negative QoE sum must be rejected, not silently evaluated.
  {
    Allocation alloc{Grid<double>(1, 1, a / (10.0 * s.asps[0].kappa)),
                     Grid<double>(1, 1, c / (10.0 * s.asps[0].kappa))};
    RewardMatrix r(1, 1, 0.5);
    CHECK_THROWS_AS(mu_utility(s, 0, r, alloc), std::domain_error);
  }
}

TEST_CASE("model quantities stay finite on valid inputs") {
  for (uint64_t i = 0; i < 200; ++i) {
    AspParams asp;
    asp.kappa = testutil::u_in(9, i, 1, 0.3, 1.5);
    asp.xi = testutil::u_in(9, i, 2, 1e3, 1e6);
    Demand d;
    d.theta_hat = testutil::u_in(9, i, 3, 1e-11, 1e-3);
    d.x_in = static_cast<int>(testutil::u_in(9, i, 4, 1, 2000));
    d.x_out = static_cast<int>(testutil::u_in(9, i, 5, 1, 2000));
    Channel ch = Channel::from_snr_db(testutil::u_in(9, i, 6, 10, 30));
    const double f = testutil::u_in(9, i, 7, 1e9, 1e13);
    const double b = testutil::u_in(9, i, 8, 1e5, 5e8);
    CHECK(std::isfinite(qoe(asp, d, ch, f, b)));
    CHECK(std::isfinite(compute_load(asp, d)));
    CHECK(std::isfinite(comm_load(d, ch)));
  }
}

TEST_CASE("scenario and type invariants are enforced") {
  Scenario s = testutil::simple_scenario(2, 3);
  CHECK_NOTHROW(s.validate());
  s.mus[1].r_min = 0.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);

  Scenario bad_grid = testutil::simple_scenario(2, 3);
  bad_grid.demands = Grid<Demand>(3, 2);
  CHECK_THROWS_AS(bad_grid.validate(), std::invalid_argument);

  Demand d{0.5, 100, 100};
  CHECK_NOTHROW(d.validate());
  d.theta_hat = 1.0;
  CHECK_THROWS_AS(d.validate(), std::invalid_argument);
  CHECK_THROWS_AS(Channel::from_gain(-1.0, 1.0, 1.0), std::invalid_argument);

  RewardMatrix r = testutil::simple_scenario(2, 3).midpoint_rewards();
  CHECK_NOTHROW(testutil::simple_scenario(2, 3).check_rewards(r));
  r(0, 0) = 2.0;  // above r_max
  CHECK_THROWS_AS(testutil::simple_scenario(2, 3).check_rewards(r),
                  std::invalid_argument);
}
