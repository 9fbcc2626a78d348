#include "qoemarket/mu_game.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "qoemarket/rng.hpp"

namespace qoemarket {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

// Best-response QoE per MU for one ASP, memoized on the reward column.
class ResponseCache {
 public:
  ResponseCache(const Scenario& s, const BestResponseConfig& solver)
      : s_(s), solver_(solver), cache_(s.num_asps()) {}

  const std::vector<double>& qoe_for(int n, const std::vector<double>& column) {
    auto [it, fresh] = cache_[n].try_emplace(column);
    if (fresh) {
      RewardMatrix r(s_.num_asps(), s_.num_mus());
      for (int m = 0; m < s_.num_mus(); ++m) r(n, m) = column[m];
      BestResponseResult br = best_response(s_, n, r, solver_);
      it->second = qoe_at(br, s_, n);
    }
    return it->second;
  }

  void clear() {
    for (auto& c : cache_) c.clear();
  }

 private:
  const Scenario& s_;
  const BestResponseConfig& solver_;
  std::vector<std::map<std::vector<double>, std::vector<double>>> cache_;
};

std::vector<double> column_of(const RewardMatrix& r, int n) {
  std::vector<double> col(r.cols());
  for (int m = 0; m < r.cols(); ++m) col[m] = r(n, m);
  return col;
}

RewardMatrix initial_rewards(const Scenario& s, const GameConfig& cfg) {
  if (cfg.initial_rewards) {
    s.check_rewards(*cfg.initial_rewards);
    return *cfg.initial_rewards;
  }
  if (cfg.randomize_initial) {
    RewardMatrix r(s.num_asps(), s.num_mus());
    for (int n = 0; n < s.num_asps(); ++n)
      for (int m = 0; m < s.num_mus(); ++m)
        r(n, m) = uniform_in(cfg.init_seed, n, m, 0x7e77, s.mus[m].r_min,
                             s.mus[m].r_max);
    return r;
  }
  return s.midpoint_rewards();
}

struct RoundState {
  std::vector<std::vector<double>> base_q;  // per ASP, per MU
  std::vector<double> mu_util;              // per MU at the base point
};

RoundState evaluate_base(const Scenario& s, const RewardMatrix& rewards,
                         ResponseCache& cache) {
  RoundState st;
  st.base_q.resize(s.num_asps());
  for (int n = 0; n < s.num_asps(); ++n)
    st.base_q[n] = cache.qoe_for(n, column_of(rewards, n));
  st.mu_util.resize(s.num_mus());
  for (int m = 0; m < s.num_mus(); ++m) {
    double q_sum = 0, cost = 0;
    for (int n = 0; n < s.num_asps(); ++n) {
      q_sum += st.base_q[n][m];
      cost += rewards(n, m) * st.base_q[n][m];
    }
    st.mu_util[m] = s.mus[m].mu * std::log(1.0 + q_sum) - cost;
  }
  return st;
}

// MU m's view of the market while it adjusts its own coordinates: other MUs'
// rewards stay frozen at the round start, but its own earlier moves (and the
// ASP responses they triggered) are already applied.
struct MuView {
  std::vector<double> q;  // per ASP: QoE of this MU at the current response
  std::vector<double> r;  // per ASP: this MU's current reward

  double utility(double mu) const {
    double q_sum = 0, cost = 0;
    for (size_t n = 0; n < q.size(); ++n) {
      q_sum += q[n];
      cost += r[n] * q[n];
    }
    return mu * std::log(1.0 + q_sum) - cost;
  }
};

MuView view_of(const Scenario& s, const RewardMatrix& rewards,
               const RoundState& st, int m) {
  MuView v;
  v.q.resize(s.num_asps());
  v.r.resize(s.num_asps());
  for (int n = 0; n < s.num_asps(); ++n) {
    v.q[n] = st.base_q[n][m];
    v.r[n] = rewards(n, m);
  }
  return v;
}

// MU m's utility when its reward to ASP n moves to r_trial on top of the
// current view; ASP n re-responds, everything else is frozen.
double deviation_utility(const Scenario& s, const RewardMatrix& rewards,
                         const MuView& view, ResponseCache& cache, int m,
                         int n, double r_trial, const std::vector<double>** q_out) {
  std::vector<double> column = column_of(rewards, n);
  column[m] = r_trial;
  const std::vector<double>& q_trial = cache.qoe_for(n, column);
  if (q_out) *q_out = &q_trial;
  double q_sum = 0, cost = 0;
  for (int k = 0; k < s.num_asps(); ++k) {
    const double q = (k == n) ? q_trial[m] : view.q[k];
    const double r = (k == n) ? r_trial : view.r[k];
    q_sum += q;
    cost += r * q;
  }
  return s.mus[m].mu * std::log(1.0 + q_sum) - cost;
}

enum class MoveRule { three_way, sign_fd };

EquilibriumReport play(const Scenario& s, const GameConfig& cfg,
                       MoveRule rule) {
  cfg.validate();
  s.validate();
  RewardMatrix rewards = initial_rewards(s, cfg);
  ResponseCache cache(s, cfg.solver);

  EquilibriumReport rep;
  RoundState prev = evaluate_base(s, rewards, cache);

  int round = 0;
  for (round = 1; round <= cfg.max_rounds; ++round) {
    const double delta = cfg.schedule.step(round);
    RewardMatrix next = rewards;
    for (int m = 0; m < s.num_mus(); ++m) {
      const MuParams& mu = s.mus[m];
      MuView view = view_of(s, rewards, prev, m);
      for (int n = 0; n < s.num_asps(); ++n) {
        const double base_r = rewards(n, m);
        const double up_r = std::min(base_r + delta, mu.r_max);
        const double down_r = std::max(mu.r_min, base_r - delta);
        const double u_base = view.utility(mu.mu);
        const std::vector<double>* q_up = nullptr;
        const std::vector<double>* q_down = nullptr;
        const double u_up =
            up_r == base_r
                ? u_base
                : deviation_utility(s, rewards, view, cache, m, n, up_r, &q_up);
        const double u_down = down_r == base_r
                                  ? u_base
                                  : deviation_utility(s, rewards, view, cache,
                                                      m, n, down_r, &q_down);
        double moved_r = base_r;
        const std::vector<double>* moved_q = nullptr;
        if (rule == MoveRule::three_way) {
          const double up_gain = u_up - u_base, down_gain = u_down - u_base;
          if (up_gain <= cfg.dead_band && down_gain <= cfg.dead_band)
            continue;  // approximately equal: keep the reward
          moved_r = up_gain >= down_gain ? up_r : down_r;
          moved_q = up_gain >= down_gain ? q_up : q_down;
        } else {
          const double g_hat = (u_up - u_down) / (2.0 * delta);
          if (std::abs(g_hat) <= cfg.dead_band) continue;
          moved_r = g_hat > 0.0 ? up_r : down_r;
          moved_q = g_hat > 0.0 ? q_up : q_down;
        }
        if (moved_r == base_r || moved_q == nullptr) continue;
        next(n, m) = moved_r;
        view.r[n] = moved_r;
        view.q[n] = (*moved_q)[m];
      }
    }
    rewards = next;

    RoundState cur = evaluate_base(s, rewards, cache);
    double gap = 0;
    for (int m = 0; m < s.num_mus(); ++m)
      gap += std::abs(cur.mu_util[m] - prev.mu_util[m]);
    rep.utility_gap_trajectory.push_back(gap);
    rep.mu_utility_trajectory.push_back(cur.mu_util);
    rep.reward_trajectory.push_back(rewards);
    prev = std::move(cur);
    cache.clear();  // trial columns are step-size specific; keep memory flat
    if (gap <= cfg.epsilon) {
      rep.converged = true;
      break;
    }
  }
  rep.rounds_used = std::min(round, cfg.max_rounds);

  rep.rewards_star = rewards;
  rep.alloc_star = Allocation{Grid<double>(s.num_asps(), s.num_mus()),
                              Grid<double>(s.num_asps(), s.num_mus())};
  rep.asp_utilities.resize(s.num_asps());
  for (int n = 0; n < s.num_asps(); ++n) {
    BestResponseResult br = best_response(s, n, rewards, cfg.solver);
    rep.asp_utilities[n] = br.utility;
    for (int m = 0; m < s.num_mus(); ++m) {
      rep.alloc_star.f(n, m) = br.f[m];
      rep.alloc_star.b(n, m) = br.b[m];
    }
  }
  rep.mu_utilities = prev.mu_util;

  if (cfg.certify_after) {
    double probe = cfg.certify_probe_delta;
    if (probe <= 0.0) {
      probe = 0.0;
      for (const MuParams& mu : s.mus)
        probe = std::max(probe, (mu.r_max - mu.r_min) / 20.0);
    }
    rep.certification = certify_epsilon_ne(s, rewards, probe, cfg.epsilon,
                                           cfg.certify_grid, cfg.solver);
  }
  return rep;
}

}  // namespace

StepSchedule StepSchedule::diminishing(double u) {
  StepSchedule sch;
  sch.kind = Kind::diminishing;
  sch.u = u;
  return sch;
}

StepSchedule StepSchedule::constant(double delta_hat) {
  StepSchedule sch;
  sch.kind = Kind::constant;
  sch.delta_hat = delta_hat;
  return sch;
}

StepSchedule StepSchedule::constant_levels(double r_min, double r_max,
                                           int levels) {
  require(levels >= 1, "StepSchedule: quantization levels must be >= 1");
  return constant((r_max - r_min) / levels);
}

double StepSchedule::step(int round) const {
  return kind == Kind::diminishing ? u / round : delta_hat;
}

void StepSchedule::validate() const {
  if (kind == Kind::diminishing)
    require(u > 0, "StepSchedule: diminishing step needs u > 0");
  else
    require(delta_hat > 0, "StepSchedule: constant step needs delta_hat > 0");
}

void GameConfig::validate() const {
  schedule.validate();
  require(epsilon > 0, "GameConfig: epsilon must be positive");
  require(max_rounds >= 1, "GameConfig: max_rounds must be >= 1");
  require(dead_band >= 0, "GameConfig: dead_band must be >= 0");
  require(certify_grid >= 1, "GameConfig: certify_grid must be >= 1");
  solver.validate();
}

EquilibriumReport run_game(const Scenario& s, const GameConfig& cfg) {
  return play(s, cfg, MoveRule::three_way);
}

EquilibriumReport finite_diff_update(const Scenario& s, const GameConfig& cfg) {
  return play(s, cfg, MoveRule::sign_fd);
}

CertificationResult certify_epsilon_ne(const Scenario& s,
                                       const RewardMatrix& rewards,
                                       double probe_delta, double epsilon,
                                       int grid_points,
                                       const BestResponseConfig& solver) {
  require(probe_delta > 0, "certify_epsilon_ne: probe_delta must be positive");
  require(epsilon >= 0, "certify_epsilon_ne: epsilon must be >= 0");
  require(grid_points >= 1, "certify_epsilon_ne: grid_points must be >= 1");
  s.validate();
  s.check_rewards(rewards);

  ResponseCache cache(s, solver);
  RoundState base = evaluate_base(s, rewards, cache);

  CertificationResult out;
  out.worst_improvement = 0.0;
  for (int m = 0; m < s.num_mus(); ++m) {
    const MuView view = view_of(s, rewards, base, m);
    for (int n = 0; n < s.num_asps(); ++n) {
      double last_up = rewards(n, m), last_down = rewards(n, m);
      for (int k = 1; k <= grid_points; ++k) {
        for (int sign : {+1, -1}) {
          const double r = std::clamp(rewards(n, m) + sign * k * probe_delta,
                                      s.mus[m].r_min, s.mus[m].r_max);
          double& last = sign > 0 ? last_up : last_down;
          if (r == last) continue;  // clamped onto an already-probed point
          last = r;
          const double gain =
              deviation_utility(s, rewards, view, cache, m, n, r, nullptr) -
              base.mu_util[m];
          if (gain > out.worst_improvement) {
            out.worst_improvement = gain;
            out.worst_mu = m;
            out.worst_asp = n;
            out.worst_reward = r;
          }
        }
      }
    }
  }
  out.certified = out.worst_improvement <= epsilon;
  return out;
}

}  // namespace qoemarket
