#include "qoemarket/baselines.hpp"

#include <cmath>
#include <numeric>

#include "qoemarket/asp_solver.hpp"

namespace qoemarket {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

RewardMatrix ratio_rewards(const Scenario& s, const SchemeId& scheme) {
  const int nc = s.num_asps(), mc = s.num_mus();
  RewardMatrix r(nc, mc);
  for (int m = 0; m < mc; ++m) {
    if (scheme.ratio_split == SchemeId::RatioSplit::equal) {
      for (int n = 0; n < nc; ++n) r(n, m) = scheme.r_total / nc;
    } else {
      double total_load = 0;
      for (int n = 0; n < nc; ++n)
        total_load += compute_load(s.asps[n], s.demands(n, m));
      for (int n = 0; n < nc; ++n)
        r(n, m) = scheme.r_total * compute_load(s.asps[n], s.demands(n, m)) /
                  total_load;
    }
  }
  return r;
}

RewardMatrix token_rewards(const Scenario& s, double rho) {
  RewardMatrix r(s.num_asps(), s.num_mus());
  for (int n = 0; n < s.num_asps(); ++n)
    for (int m = 0; m < s.num_mus(); ++m)
      r(n, m) = rho * (s.demands(n, m).x_in + s.demands(n, m).x_out);
  return r;
}

SchemeResult fixed_reward_scheme(const Scenario& s, const SchemeId& scheme,
                                 const RewardMatrix& rewards,
                                 const BestResponseConfig& solver) {
  SchemeResult out;
  out.rewards = rewards;
  try {
    out.alloc = best_response_all(s, rewards, solver);
  } catch (const InfeasibleError& e) {
    throw InfeasibleError(scheme.name() + ": " + e.what(), e.violating_mus);
  }
  out.metrics = compute_metrics(s, rewards, out.alloc);
  return out;
}

SchemeResult game_scheme(const Scenario& s, const SchemeId& scheme,
                         GameConfig cfg) {
  if (scheme.kind == SchemeId::Kind::only_f)
    cfg.solver.mode = BestResponseConfig::Mode::fix_b_equal;
  else if (scheme.kind == SchemeId::Kind::only_b)
    cfg.solver.mode = BestResponseConfig::Mode::fix_f_equal;
  SchemeResult out;
  try {
    EquilibriumReport rep = run_game(s, cfg);
    out.rewards = rep.rewards_star;
    out.alloc = rep.alloc_star;
    out.report = std::move(rep);
  } catch (const InfeasibleError& e) {
    throw InfeasibleError(scheme.name() + ": " + e.what(), e.violating_mus);
  }
  out.metrics = compute_metrics(s, out.rewards, out.alloc);
  return out;
}

}  // namespace

SchemeId SchemeId::proposed() { return SchemeId{}; }

SchemeId SchemeId::ratio(double r_total, RatioSplit split) {
  SchemeId id;
  id.kind = Kind::ratio;
  id.r_total = r_total;
  id.ratio_split = split;
  return id;
}

SchemeId SchemeId::token(double rho) {
  SchemeId id;
  id.kind = Kind::token;
  id.rho = rho;
  return id;
}

SchemeId SchemeId::only_f() {
  SchemeId id;
  id.kind = Kind::only_f;
  return id;
}

SchemeId SchemeId::only_b() {
  SchemeId id;
  id.kind = Kind::only_b;
  return id;
}

std::string SchemeId::name() const {
  switch (kind) {
    case Kind::proposed:
      return "Proposed";
    case Kind::ratio: {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "Ratio(%g)", r_total);
      return buf;
    }
    case Kind::token:
      return "Token";
    case Kind::only_f:
      return "OnlyF";
    case Kind::only_b:
      return "OnlyB";
  }
  return "?";
}

void SchemeId::validate() const {
  if (kind == Kind::ratio)
    require(r_total > 0, "SchemeId: ratio scheme needs r_total > 0");
  if (kind == Kind::token)
    require(rho >= 0, "SchemeId: token scheme needs rho >= 0");
}

double MarketMetrics::mean_f_usage() const {
  return f_usage_ratio.empty()
             ? 0.0
             : std::accumulate(f_usage_ratio.begin(), f_usage_ratio.end(),
                               0.0) /
                   f_usage_ratio.size();
}

double MarketMetrics::mean_b_usage() const {
  return b_usage_ratio.empty()
             ? 0.0
             : std::accumulate(b_usage_ratio.begin(), b_usage_ratio.end(),
                               0.0) /
                   b_usage_ratio.size();
}

double calibrate_token_rho(const Scenario& s) {
  double mid_sum = 0, token_sum = 0;
  for (int n = 0; n < s.num_asps(); ++n)
    for (int m = 0; m < s.num_mus(); ++m) {
      mid_sum += 0.5 * (s.mus[m].r_min + s.mus[m].r_max);
      token_sum += s.demands(n, m).x_in + s.demands(n, m).x_out;
    }
  return mid_sum / token_sum;
}

MarketMetrics compute_metrics(const Scenario& s, const RewardMatrix& rewards,
                              const Allocation& alloc) {
  s.validate();
  const int nc = s.num_asps(), mc = s.num_mus();
  MarketMetrics mm;
  mm.f_usage_ratio.resize(nc);
  mm.b_usage_ratio.resize(nc);
  for (int n = 0; n < nc; ++n) {
    double f_sum = 0, b_sum = 0;
    for (int m = 0; m < mc; ++m) {
      f_sum += alloc.f(n, m);
      b_sum += alloc.b(n, m);
    }
    mm.f_usage_ratio[n] = f_sum / s.asps[n].f_max;
    mm.b_usage_ratio[n] = b_sum / s.asps[n].b_max;
    mm.avg_asp_cost += s.asps[n].c_f * f_sum + s.asps[n].c_b * b_sum;
    mm.avg_asp_utility += asp_utility(s, n, rewards, alloc);
  }
  for (int m = 0; m < mc; ++m) {
    for (int n = 0; n < nc; ++n)
      mm.avg_mu_cost += rewards(n, m) *
                        qoe(s.asps[n], s.demands(n, m), s.channels(n, m),
                            alloc.f(n, m), alloc.b(n, m));
    mm.avg_mu_utility += mu_utility(s, m, rewards, alloc);
  }
  mm.avg_mu_cost /= mc;
  mm.avg_mu_utility /= mc;
  mm.avg_asp_cost /= nc;
  mm.avg_asp_utility /= nc;
  return mm;
}

SchemeResult run_scheme(const Scenario& s, const SchemeId& scheme,
                        const GameConfig& cfg) {
  scheme.validate();
  s.validate();
  switch (scheme.kind) {
    case SchemeId::Kind::proposed:
    case SchemeId::Kind::only_f:
    case SchemeId::Kind::only_b:
      return game_scheme(s, scheme, cfg);
    case SchemeId::Kind::ratio:
      return fixed_reward_scheme(s, scheme, ratio_rewards(s, scheme),
                                 cfg.solver);
    case SchemeId::Kind::token: {
      const double rho =
          scheme.rho > 0.0 ? scheme.rho : calibrate_token_rho(s);
      return fixed_reward_scheme(s, scheme, token_rewards(s, rho), cfg.solver);
    }
  }
  throw std::logic_error("run_scheme: unknown scheme");
}

}  // namespace qoemarket
