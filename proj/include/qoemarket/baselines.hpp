#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qoemarket/model.hpp"
#include "qoemarket/mu_game.hpp"

namespace qoemarket {

/// Comparison schemes: the proposed reward game plus the four benchmarks.
struct SchemeId {
  enum class Kind { proposed, ratio, token, only_f, only_b };
  // How a ratio scheme splits r_total across ASPs.
  enum class RatioSplit { equal, load_proportional };

  Kind kind = Kind::proposed;
  double r_total = 0.0;  // ratio: fixed total reward per MU
  double rho = 0.0;      // token: currency per token; 0 = calibrate per scenario
  RatioSplit ratio_split = RatioSplit::equal;

  static SchemeId proposed();
  static SchemeId ratio(double r_total,
                        RatioSplit split = RatioSplit::equal);
  static SchemeId token(double rho = 0.0);
  static SchemeId only_f();
  static SchemeId only_b();

  std::string name() const;
  void validate() const;
};

struct MarketMetrics {
  std::vector<double> f_usage_ratio, b_usage_ratio;  // per ASP, in [0, 1]
  double avg_mu_cost = 0.0;   // (1/M) sum_m sum_n R * QoE
  double avg_asp_cost = 0.0;  // (1/N) sum_n sum_m (c_f f + c_b b)
  double avg_mu_utility = 0.0, avg_asp_utility = 0.0;

  double mean_f_usage() const;
  double mean_b_usage() const;
};

struct SchemeResult {
  RewardMatrix rewards;
  Allocation alloc;
  MarketMetrics metrics;
  std::optional<EquilibriumReport> report;  // set for game-driven schemes
};

/// rho making the scenario-average token reward equal the average midpoint
/// reward, so cross-scheme comparisons sit on one scale.
double calibrate_token_rho(const Scenario& s);

MarketMetrics compute_metrics(const Scenario& s, const RewardMatrix& rewards,
                              const Allocation& alloc);

SchemeResult run_scheme(const Scenario& s, const SchemeId& scheme,
                        const GameConfig& cfg);

}  // namespace qoemarket
