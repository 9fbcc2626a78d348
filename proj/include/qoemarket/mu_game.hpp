#pragma once

#include <optional>
#include <vector>

#include "qoemarket/asp_solver.hpp"
#include "qoemarket/model.hpp"

namespace qoemarket {

/// Perturbation step size per round: either diminishing u/t or a fixed
/// delta_hat (a fixed delta of (r_max - r_min)/L quantizes the reward axis
/// into L levels).
struct StepSchedule {
  enum class Kind { diminishing, constant };
  Kind kind = Kind::diminishing;
  double u = 0.0;
  double delta_hat = 0.0;

  static StepSchedule diminishing(double u);
  static StepSchedule constant(double delta_hat);
  static StepSchedule constant_levels(double r_min, double r_max, int levels);

  double step(int round) const;  // rounds are 1-based
  void validate() const;
};

struct GameConfig {
  StepSchedule schedule = StepSchedule::diminishing(0.1);
  double epsilon = 1e-6;  // stop when the round's total |utility change| <= epsilon
  int max_rounds = 1000;
  std::optional<RewardMatrix> initial_rewards;  // default: midpoint of bounds
  bool randomize_initial = false;               // seeded uniform in bounds
  uint64_t init_seed = 0;
  double dead_band = 1e-12;  // "approximately equal" margin; ties keep R
  BestResponseConfig solver;
  bool certify_after = false;  // run the NE certification on the result
  double certify_probe_delta = 0.0;  // 0: (r_max - r_min)/20 per MU
  int certify_grid = 20;

  void validate() const;
};

struct CertificationResult {
  bool certified = false;
  double worst_improvement = 0.0;
  int worst_mu = -1, worst_asp = -1;
  double worst_reward = 0.0;  // deviation that realizes the improvement
};

struct EquilibriumReport {
  RewardMatrix rewards_star;
  Allocation alloc_star;
  std::vector<double> mu_utilities, asp_utilities;
  int rounds_used = 0;
  bool converged = false;
  std::vector<double> utility_gap_trajectory;  // per round: sum_m |dU_m|
  std::vector<std::vector<double>> mu_utility_trajectory;  // per round, per MU
  std::vector<RewardMatrix> reward_trajectory;             // per round
  std::optional<CertificationResult> certification;
};

/// Runs the reward game to convergence: each round every ASP best-responds,
/// then every MU compares its utility at R, R+delta_t and R-delta_t per ASP
/// (with the ASP re-responding to each trial, all other rewards frozen at the
/// round start) and moves to the best of the three, clamped to its bounds.
/// Stops when the total utility change across consecutive rounds falls below
/// epsilon or the round budget is exhausted.
EquilibriumReport run_game(const Scenario& s, const GameConfig& cfg);

/// Same loop, but each coordinate moves by delta_t * sign of the two-sided
/// finite difference (U(R+delta) - U(R-delta)) / (2 delta); coordinates inside
/// the dead band hold still.
EquilibriumReport finite_diff_update(const Scenario& s, const GameConfig& cfg);

/// Checks the epsilon-Nash property by unilateral per-coordinate deviations:
/// every MU, every ASP, grid_points deviations of size probe_delta each way
/// (clamped to bounds), each with a full ASP re-response. Certified iff no
/// deviation improves the deviating MU by more than epsilon.
CertificationResult certify_epsilon_ne(const Scenario& s,
                                       const RewardMatrix& rewards,
                                       double probe_delta, double epsilon,
                                       int grid_points = 20,
                                       const BestResponseConfig& solver = {});

}  // namespace qoemarket
