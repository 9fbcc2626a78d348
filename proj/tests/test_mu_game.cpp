#include <cmath>
#include <doctest.h>

#include "qoemarket/mu_game.hpp"
#include "qoemarket/oracle.hpp"
#include "test_util.hpp"

using namespace qoemarket;

namespace {

// MU 1's utility as a function of its single reward, through the follower's
// best response. The 1-D oracle landscape for the smallest games.
double scalar_utility(const Scenario& s, double reward) {
  RewardMatrix r(1, 1, reward);
  const BestResponseResult br = best_response(s, 0, r);
  Allocation alloc{Grid<double>(1, 1, br.f[0]), Grid<double>(1, 1, br.b[0])};
  return mu_utility(s, 0, r, alloc);
}

// Golden-section maximization, independent of the game loop.
double golden_max(const Scenario& s, double lo, double hi, double tol) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = scalar_utility(s, x1), f2 = scalar_utility(s, x2);
  while (b - a > tol) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = scalar_utility(s, x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = scalar_utility(s, x1);
    }
  }
  return 0.5 * (a + b);
}

GameConfig quiet_config() {
  GameConfig cfg;
  cfg.schedule = StepSchedule::diminishing(0.1);
  cfg.epsilon = 1e-9;
  cfg.max_rounds = 400;
  return cfg;
}

}  // namespace

TEST_CASE("step schedules") {
  const StepSchedule dim = StepSchedule::diminishing(0.2);
  CHECK(dim.step(1) == 0.2);
  CHECK(dim.step(4) == 0.05);
  const StepSchedule fixed = StepSchedule::constant_levels(0.0, 1.0, 50);
  CHECK(fixed.step(1) == doctest::Approx(0.02));
  CHECK(fixed.step(99) == doctest::Approx(0.02));
  CHECK_THROWS_AS(StepSchedule::diminishing(0.0).validate(),
                  std::invalid_argument);
}

TEST_CASE("one-by-one game lands on the golden-section optimum") {
  const Scenario s = testutil::simple_scenario(1, 1);
  GameConfig cfg = quiet_config();
  const EquilibriumReport rep = run_game(s, cfg);
  REQUIRE(rep.rounds_used >= 1);

  const double r_star = golden_max(s, s.mus[0].r_min, s.mus[0].r_max, 1e-10);
  const double final_step = cfg.schedule.step(rep.rounds_used);
  CHECK(std::abs(rep.rewards_star(0, 0) - r_star) <= 2.0 * final_step + 1e-6);
  CHECK(scalar_utility(s, rep.rewards_star(0, 0)) <=
        scalar_utility(s, r_star) + 1e-12);
}

TEST_CASE("report invariants: convergence gap and follower consistency") {
  const Scenario s = testutil::simple_scenario(2, 2);
  GameConfig cfg = quiet_config();
  cfg.epsilon = 1e-6;
  const EquilibriumReport rep = run_game(s, cfg);
  if (rep.converged) {
    REQUIRE(!rep.utility_gap_trajectory.empty());
    CHECK(rep.utility_gap_trajectory.back() <= cfg.epsilon);
  }
  const Allocation check = best_response_all(s, rep.rewards_star, cfg.solver);
  for (int n = 0; n < 2; ++n)
    for (int m = 0; m < 2; ++m) {
      CHECK(rep.alloc_star.f(n, m) == check.f(n, m));
      CHECK(rep.alloc_star.b(n, m) == check.b(n, m));
    }
}

TEST_CASE("starting at the equilibrium terminates in one quiet round") {
  const Scenario s = testutil::simple_scenario(1, 1);
  GameConfig cfg = quiet_config();
  const EquilibriumReport first = run_game(s, cfg);

  GameConfig again = cfg;
  again.schedule = StepSchedule::constant(cfg.schedule.step(first.rounds_used));
  again.initial_rewards = first.rewards_star;
  again.epsilon = 1e-9;
  const EquilibriumReport rep = run_game(s, again);
  CHECK(rep.rounds_used == 1);
  CHECK(rep.converged);
  CHECK(rep.utility_gap_trajectory.back() <= 1e-9);
  CHECK(rep.rewards_star(0, 0) == first.rewards_star(0, 0));
}

TEST_CASE("every reward stays inside its bounds even with huge steps") {
  const Scenario s = testutil::simple_scenario(2, 2);
  GameConfig cfg;
  cfg.schedule = StepSchedule::constant(5.0);  // far beyond the reward range
  cfg.epsilon = 1e-12;
  cfg.max_rounds = 20;
  const EquilibriumReport rep = run_game(s, cfg);
  for (int n = 0; n < 2; ++n)
    for (int m = 0; m < 2; ++m) {
      CHECK(rep.rewards_star(n, m) >= s.mus[m].r_min);
      CHECK(rep.rewards_star(n, m) <= s.mus[m].r_max);
    }
}

TEST_CASE("single-MU utility trajectory is non-decreasing") {
  const Scenario s = testutil::simple_scenario(2, 1);
  GameConfig cfg = quiet_config();
  cfg.max_rounds = 120;
  const EquilibriumReport rep = run_game(s, cfg);
  for (size_t t = 1; t < rep.mu_utility_trajectory.size(); ++t)
    CHECK(rep.mu_utility_trajectory[t][0] >=
          rep.mu_utility_trajectory[t - 1][0] - 1e-12);
}

TEST_CASE("two random initializations approach the same limit") {
  const Scenario s = testutil::simple_scenario(1, 2, 41);
  GameConfig cfg = quiet_config();
  // A diminishing schedule only covers u * ln(T) of ground; leave headroom
  // for starts on opposite ends of the reward range.
  cfg.schedule = StepSchedule::diminishing(0.15);
  cfg.max_rounds = 3000;
  cfg.randomize_initial = true;
  cfg.init_seed = 1;
  const EquilibriumReport a = run_game(s, cfg);
  cfg.init_seed = 2;
  const EquilibriumReport b = run_game(s, cfg);
  for (int m = 0; m < 2; ++m)
    CHECK(std::abs(a.rewards_star(0, m) - b.rewards_star(0, m)) <=
          2.0 * cfg.schedule.u);
}

TEST_CASE("runs are reproducible bit for bit") {
  const Scenario s = testutil::simple_scenario(2, 2, 9);
  GameConfig cfg = quiet_config();
  cfg.max_rounds = 60;
  cfg.randomize_initial = true;
  cfg.init_seed = 77;
  const EquilibriumReport a = run_game(s, cfg);
  const EquilibriumReport b = run_game(s, cfg);
  CHECK(a.rewards_star == b.rewards_star);
  CHECK(a.utility_gap_trajectory == b.utility_gap_trajectory);
  CHECK(a.mu_utilities == b.mu_utilities);
}

TEST_CASE("sign-rule game matches the three-way game on a monotone landscape") {
  Scenario s = testutil::simple_scenario(1, 1);
  s.mus[0].r_max = 0.05;  // peak lies beyond the cap: utility monotone in R
  GameConfig cfg = quiet_config();
  cfg.max_rounds = 50;
  const EquilibriumReport a = run_game(s, cfg);
  const EquilibriumReport b = finite_diff_update(s, cfg);
  CHECK(a.rewards_star(0, 0) == b.rewards_star(0, 0));
  CHECK(a.mu_utility_trajectory == b.mu_utility_trajectory);
  CHECK(a.rewards_star(0, 0) == doctest::Approx(0.05));  // walked to the cap
}

TEST_CASE("finite-difference sign matches a fine-step gradient oracle") {
  const Scenario s = testutil::simple_scenario(1, 1, 57);
  const double delta = 0.01;
  int checked = 0;
  for (uint64_t i = 0; i < 100; ++i) {
    const double r = testutil::u_in(71, i, 1, 0.02, 0.98);
    const double coarse =
        (scalar_utility(s, r + delta) - scalar_utility(s, r - delta)) /
        (2.0 * delta);
    const double fine =
        (scalar_utility(s, r + 1e-6) - scalar_utility(s, r - 1e-6)) / 2e-6;
    if (std::abs(fine) <= 10.0 * delta * delta) continue;  // near-stationary
    ++checked;
    CAPTURE(r);
    CHECK(coarse * fine > 0.0);
  }
  CHECK(checked >= 80);
}

TEST_CASE("a dead band wider than any gain freezes the sign rule") {
  const Scenario s = testutil::simple_scenario(1, 2);
  GameConfig cfg = quiet_config();
  cfg.dead_band = 1e9;
  cfg.max_rounds = 5;
  const EquilibriumReport rep = finite_diff_update(s, cfg);
  const RewardMatrix start = s.midpoint_rewards();
  CHECK(rep.rewards_star == start);
  CHECK(rep.converged);  // nothing moves, so the gap is zero immediately
}

TEST_CASE("certification accepts the converged point and rejects a push") {
  const Scenario s = testutil::simple_scenario(1, 1);
  GameConfig cfg = quiet_config();
  cfg.max_rounds = 2000;
  cfg.epsilon = 1e-8;
  const EquilibriumReport rep = run_game(s, cfg);
  const double probe = (s.mus[0].r_max - s.mus[0].r_min) / 20.0;

  const CertificationResult good =
      certify_epsilon_ne(s, rep.rewards_star, probe, 1e-3);
  CHECK(good.certified);

  RewardMatrix pushed = rep.rewards_star;
  pushed(0, 0) = std::min(pushed(0, 0) * 1.5, s.mus[0].r_max);
  const CertificationResult bad = certify_epsilon_ne(s, pushed, probe, 1e-3);
  CHECK_FALSE(bad.certified);
  CHECK(bad.worst_improvement > 1e-3);
  CHECK(bad.worst_mu == 0);
}

TEST_CASE("single-MU certification equals grid argmax membership") {
  const Scenario s = testutil::simple_scenario(1, 1);
  const double lo = s.mus[0].r_min, hi = s.mus[0].r_max;
  const int points = 21;
  const double delta = (hi - lo) / (points - 1);
  double best_r = lo, best_u = -1e300;
  for (int k = 0; k < points; ++k) {
    const double u = scalar_utility(s, lo + k * delta);
    if (u > best_u) {
      best_u = u;
      best_r = lo + k * delta;
    }
  }
  RewardMatrix at_argmax(1, 1, best_r);
  CHECK(certify_epsilon_ne(s, at_argmax, delta, 1e-12, points).certified);
  RewardMatrix off(1, 1, std::clamp(best_r + 3 * delta, lo, hi));
  CHECK_FALSE(certify_epsilon_ne(s, off, delta, 1e-12, points).certified);
}

TEST_CASE("constant-step runs settle inside the theoretical neighborhood") {
  const Scenario s = testutil::simple_scenario(2, 3, 4);
  const double delta_hat = 0.005;
  GameConfig cfg;
  cfg.schedule = StepSchedule::constant(delta_hat);
  cfg.epsilon = 1e-300;  // never stop early; observe the floor
  cfg.max_rounds = 400;
  const EquilibriumReport rep = run_game(s, cfg);
  const double envelope = delta_hat * s.num_mus() * s.num_asps() / 2.0;
  CHECK(rep.utility_gap_trajectory.back() <= envelope + 1e-6);
}

TEST_CASE("game reports converge with certification attached when asked") {
  const Scenario s = testutil::simple_scenario(2, 2, 13);
  GameConfig cfg = quiet_config();
  cfg.epsilon = 1e-7;
  cfg.max_rounds = 3000;
  cfg.certify_after = true;
  cfg.certify_probe_delta = 0.05;
  const EquilibriumReport rep = run_game(s, cfg);
  REQUIRE(rep.certification.has_value());
  CHECK(rep.certification->worst_improvement >= 0.0);
}
