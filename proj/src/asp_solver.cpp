#include "qoemarket/asp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace qoemarket {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

// One ASP's problem, with the MU index order preserved.
struct Problem {
  int m_count = 0;
  double kappa = 0, c_f = 0, c_b = 0, f_budget = 0, b_budget = 0;
  std::vector<double> reward, load_f, load_b;  // R_m, A_m, C_m
};

Problem make_problem(const Scenario& s, int n, const RewardMatrix& rewards) {
  require(n >= 0 && n < s.num_asps(), "best_response: ASP index out of range");
  require(rewards.rows() == s.num_asps() && rewards.cols() == s.num_mus(),
          "best_response: reward grid must be N x M");
  Problem p;
  p.m_count = s.num_mus();
  const AspParams& asp = s.asps[n];
  p.kappa = asp.kappa;
  p.c_f = asp.c_f;
  p.c_b = asp.c_b;
  p.f_budget = asp.f_max;
  p.b_budget = asp.b_max;
  p.reward.resize(p.m_count);
  p.load_f.resize(p.m_count);
  p.load_b.resize(p.m_count);
  for (int m = 0; m < p.m_count; ++m) {
    const double r = rewards(n, m);
    require(std::isfinite(r) && r >= 0.0, "best_response: rewards must be >= 0");
    p.reward[m] = r;
    p.load_f[m] = compute_load(asp, s.demands(n, m));
    p.load_b[m] = comm_load(s.demands(n, m), s.channels(n, m));
  }
  return p;
}

// Every MU must reach QoE >= 0; the cheapest way onto that surface uses
// f_m = (A_m + sqrt(w A_m C_m)) / kappa, b_m = (C_m + sqrt(A_m C_m / w)) / kappa
// for some cost ratio w, so total f spend grows in w while b spend shrinks.
// Feasible iff some w fits both budgets.
void check_feasible_joint(const Problem& p) {
  double sum_a = 0, sum_c = 0, sum_sqrt_ac = 0;
  for (int m = 0; m < p.m_count; ++m) {
    sum_a += p.load_f[m];
    sum_c += p.load_b[m];
    sum_sqrt_ac += std::sqrt(p.load_f[m] * p.load_b[m]);
  }
  const double slack = 1.0 + 1e-12;
  std::vector<int> solo_impossible;
  for (int m = 0; m < p.m_count; ++m)
    if (p.load_f[m] / p.kappa > p.f_budget * slack ||
        p.load_b[m] / p.kappa > p.b_budget * slack)
      solo_impossible.push_back(m);
  if (!solo_impossible.empty())
    throw InfeasibleError(
        "best_response: some MUs cannot reach QoE >= 0 even with a full "
        "budget",
        solo_impossible);

  if (sum_a / p.kappa > p.f_budget * slack ||
      sum_c / p.kappa > p.b_budget * slack) {
    std::vector<int> all(p.m_count);
    std::iota(all.begin(), all.end(), 0);
    throw InfeasibleError(
        "best_response: joint service demand exceeds a resource budget", all);
  }
  const double f_room = p.kappa * p.f_budget - sum_a;
  const double b_room = p.kappa * p.b_budget - sum_c;
  // Largest w fitting the f budget, smallest fitting the b budget.
  const double sqrt_w_max = f_room / sum_sqrt_ac;
  const double inv_sqrt_w_min = b_room / sum_sqrt_ac;
  if (sqrt_w_max * inv_sqrt_w_min < 1.0 / slack) {
    std::vector<int> all(p.m_count);
    std::iota(all.begin(), all.end(), 0);
    throw InfeasibleError(
        "best_response: budgets cannot jointly cover the QoE >= 0 surface",
        all);
  }
}

double lift_f_alloc(const Problem& p, int m, double w) {
  return (p.load_f[m] + std::sqrt(w * p.load_f[m] * p.load_b[m])) / p.kappa;
}
double lift_b_alloc(const Problem& p, int m, double w) {
  return (p.load_b[m] + std::sqrt(p.load_f[m] * p.load_b[m] / w)) / p.kappa;
}

// Smallest lambda >= 0 with spend(lambda) <= budget, by bisection;
// spend must be continuous and decreasing in lambda. The unit costs can sit
// at 1e-14, so the tolerance is relative to the bracket, not to 1.
template <typename Spend>
double solve_multiplier(const Spend& spend, double budget, double tol) {
  if (spend(0.0) <= budget) return 0.0;
  double hi = 1.0;
  for (int i = 0; i < 400 && spend(hi) > budget; ++i) hi *= 2.0;
  if (spend(hi) > budget)
    throw std::runtime_error("best_response: multiplier search diverged");
  double lo = 0.0;
  while (hi - lo > tol * hi) {
    const double mid = 0.5 * (lo + hi);
    (spend(mid) > budget ? lo : hi) = mid;
  }
  return hi;
}

struct ActiveSetPoint {
  std::vector<double> f, b;
  std::vector<bool> lifted;
  double lambda_f = 0, lambda_b = 0;
};

// Water-fill both resources with the current lift set held on the QoE = 0
// surface, alternating the two budget multipliers until they settle.
ActiveSetPoint assemble_joint(const Problem& p, const BestResponseConfig& cfg) {
  const int mc = p.m_count;
  ActiveSetPoint pt;
  pt.lifted.assign(mc, false);
  pt.f.assign(mc, 0.0);
  pt.b.assign(mc, 0.0);

  for (int lifts = 0; lifts <= mc; ++lifts) {
    double lam_f = pt.lambda_f, lam_b = pt.lambda_b;
    const auto total_f = [&](double lf, double lb) {
      const double w = (p.c_b + lb) / (p.c_f + lf);
      double t = 0;
      for (int m = 0; m < mc; ++m)
        t += pt.lifted[m]
                 ? lift_f_alloc(p, m, w)
                 : std::sqrt(p.reward[m] * p.load_f[m] / (p.c_f + lf));
      return t;
    };
    const auto total_b = [&](double lf, double lb) {
      const double w = (p.c_b + lb) / (p.c_f + lf);
      double t = 0;
      for (int m = 0; m < mc; ++m)
        t += pt.lifted[m]
                 ? lift_b_alloc(p, m, w)
                 : std::sqrt(p.reward[m] * p.load_b[m] / (p.c_b + lb));
      return t;
    };
    for (int round = 0; round < 200; ++round) {
      const double prev_f = lam_f, prev_b = lam_b;
      lam_f = solve_multiplier(
          [&](double l) { return total_f(l, lam_b); }, p.f_budget,
          cfg.multiplier_tol);
      lam_b = solve_multiplier(
          [&](double l) { return total_b(lam_f, l); }, p.b_budget,
          cfg.multiplier_tol);
      if (std::abs(lam_f - prev_f) <= cfg.multiplier_tol * (p.c_f + lam_f) &&
          std::abs(lam_b - prev_b) <= cfg.multiplier_tol * (p.c_b + lam_b))
        break;
    }
    pt.lambda_f = lam_f;
    pt.lambda_b = lam_b;

    const double w = (p.c_b + lam_b) / (p.c_f + lam_f);
    for (int m = 0; m < mc; ++m) {
      if (pt.lifted[m]) {
        pt.f[m] = lift_f_alloc(p, m, w);
        pt.b[m] = lift_b_alloc(p, m, w);
      } else {
        pt.f[m] = std::sqrt(p.reward[m] * p.load_f[m] / (p.c_f + lam_f));
        pt.b[m] = std::sqrt(p.reward[m] * p.load_b[m] / (p.c_b + lam_b));
      }
    }

    // Lift the lowest-reward violator and redo the fill; ties by index.
    int pick = -1;
    for (int m = 0; m < mc; ++m) {
      if (pt.lifted[m] || pt.f[m] <= 0.0 || pt.b[m] <= 0.0) {
        if (!pt.lifted[m]) {  // zero-reward MU: straight to the surface
          if (pick < 0 || p.reward[m] < p.reward[pick]) pick = m;
        }
        continue;
      }
      const double q =
          p.kappa - p.load_f[m] / pt.f[m] - p.load_b[m] / pt.b[m];
      if (q < -cfg.constraint_tol &&
          (pick < 0 || p.reward[m] < p.reward[pick]))
        pick = m;
    }
    if (pick < 0) break;
    pt.lifted[pick] = true;
  }
  return pt;
}

// Single-resource variant: the other resource is fixed per MU.
ActiveSetPoint assemble_single(const Problem& p, const BestResponseConfig& cfg,
                               bool optimize_f, const std::vector<double>& fixed) {
  const int mc = p.m_count;
  const std::vector<double>& load_opt = optimize_f ? p.load_f : p.load_b;
  const std::vector<double>& load_fix = optimize_f ? p.load_b : p.load_f;
  const double cost = optimize_f ? p.c_f : p.c_b;
  const double budget = optimize_f ? p.f_budget : p.b_budget;

  std::vector<double> headroom(mc), min_alloc(mc);
  std::vector<int> starved;
  double min_total = 0;
  for (int m = 0; m < mc; ++m) {
    headroom[m] = p.kappa - load_fix[m] / fixed[m];
    if (headroom[m] <= 0.0) {
      starved.push_back(m);
      continue;
    }
    min_alloc[m] = load_opt[m] / headroom[m];
    min_total += min_alloc[m];
  }
  if (!starved.empty())
    throw InfeasibleError(
        "best_response: equal split of the fixed resource leaves no latency "
        "headroom",
        starved);
  if (min_total > budget * (1.0 + 1e-12)) {
    std::vector<int> all(mc);
    std::iota(all.begin(), all.end(), 0);
    throw InfeasibleError(
        "best_response: minimal QoE >= 0 allocations exceed the optimized "
        "budget",
        all);
  }

  ActiveSetPoint pt;
  pt.lifted.assign(mc, false);
  std::vector<double> alloc(mc, 0.0);
  double lam = 0.0;
  for (int lifts = 0; lifts <= mc; ++lifts) {
    double lifted_spend = 0;
    for (int m = 0; m < mc; ++m)
      if (pt.lifted[m]) lifted_spend += min_alloc[m];
    const auto spend = [&](double l) {
      double t = lifted_spend;
      for (int m = 0; m < mc; ++m)
        if (!pt.lifted[m])
          t += std::sqrt(p.reward[m] * load_opt[m] / (cost + l));
      return t;
    };
    lam = solve_multiplier(spend, budget, cfg.multiplier_tol);
    int pick = -1;
    for (int m = 0; m < mc; ++m) {
      if (pt.lifted[m]) {
        alloc[m] = min_alloc[m];
        continue;
      }
      alloc[m] = std::sqrt(p.reward[m] * load_opt[m] / (cost + lam));
      const bool violates =
          alloc[m] <= 0.0 ||
          load_opt[m] / alloc[m] > headroom[m] + cfg.constraint_tol;
      if (violates && (pick < 0 || p.reward[m] < p.reward[pick])) pick = m;
    }
    if (pick < 0) break;
    pt.lifted[pick] = true;
  }
  if (optimize_f) {
    pt.f = alloc;
    pt.b = fixed;
    pt.lambda_f = lam;
  } else {
    pt.b = alloc;
    pt.f = fixed;
    pt.lambda_b = lam;
  }
  return pt;
}

double column_utility(const Problem& p, const std::vector<double>& f,
                      const std::vector<double>& b) {
  double u = 0;
  for (int m = 0; m < p.m_count; ++m) {
    const double q = p.kappa - p.load_f[m] / f[m] - p.load_b[m] / b[m];
    u += p.reward[m] * q - p.c_f * f[m] - p.c_b * b[m];
  }
  return u;
}

// Dimensionless KKT residual: stationarity relative to the effective unit
// costs, complementary slackness, and primal violations.
double kkt_residual(const Problem& p, const BestResponseConfig& cfg,
                    const ActiveSetPoint& pt, bool check_f, bool check_b) {
  double res = 0;
  double f_sum = 0, b_sum = 0;
  const double eff_f = p.c_f + pt.lambda_f, eff_b = p.c_b + pt.lambda_b;
  for (int m = 0; m < p.m_count; ++m) {
    f_sum += pt.f[m];
    b_sum += pt.b[m];
    const double q =
        p.kappa - p.load_f[m] / pt.f[m] - p.load_b[m] / pt.b[m];
    res = std::max(res, -q / p.kappa);
    if (pt.lifted[m]) {
      // Multiplier implied by each side must agree and be nonnegative.
      if (check_f && check_b) {
        const double nu_f = eff_f * pt.f[m] * pt.f[m] / p.load_f[m] - p.reward[m];
        const double nu_b = eff_b * pt.b[m] * pt.b[m] / p.load_b[m] - p.reward[m];
        const double scale = p.reward[m] + std::max(nu_f, 0.0) + 1e-300;
        res = std::max(res, std::abs(nu_f - nu_b) / scale);
        res = std::max(res, -nu_f / scale);
      } else {
        const double eff = check_f ? eff_f : eff_b;
        const double alloc = check_f ? pt.f[m] : pt.b[m];
        const double load = check_f ? p.load_f[m] : p.load_b[m];
        const double nu = eff * alloc * alloc / load - p.reward[m];
        res = std::max(res, -nu / (p.reward[m] + std::max(nu, 0.0) + 1e-300));
      }
    } else {
      if (check_f && pt.f[m] > cfg.alloc_floor * 2.0)
        res = std::max(res, std::abs(p.reward[m] * p.load_f[m] /
                                         (pt.f[m] * pt.f[m]) -
                                     eff_f) /
                                eff_f);
      if (check_b && pt.b[m] > cfg.alloc_floor * 2.0)
        res = std::max(res, std::abs(p.reward[m] * p.load_b[m] /
                                         (pt.b[m] * pt.b[m]) -
                                     eff_b) /
                                eff_b);
    }
  }
  if (check_f) {
    res = std::max(res, (f_sum - p.f_budget) / p.f_budget);
    res = std::max(res, pt.lambda_f * std::max(p.f_budget - f_sum, 0.0) /
                            (eff_f * p.f_budget));
  }
  if (check_b) {
    res = std::max(res, (b_sum - p.b_budget) / p.b_budget);
    res = std::max(res, pt.lambda_b * std::max(p.b_budget - b_sum, 0.0) /
                            (eff_b * p.b_budget));
  }
  return std::max(res, 0.0);
}

// Euclidean projection onto { x : x_m >= lo, sum x <= budget }.
void project_budget(std::vector<double>& x, double lo, double budget) {
  for (double& v : x) v = std::max(v, lo);
  double sum = std::accumulate(x.begin(), x.end(), 0.0);
  if (sum <= budget) return;
  double tau_lo = 0.0, tau_hi = (sum - budget);
  for (int i = 0; i < 200; ++i) {
    const double tau = 0.5 * (tau_lo + tau_hi);
    double s = 0;
    for (double v : x) s += std::max(v - tau, lo);
    (s > budget ? tau_lo : tau_hi) = tau;
  }
  for (double& v : x) v = std::max(v - tau_hi, lo);
}

// Penalized projected gradient ascent from the active-set point; only used
// when the assembled point fails the KKT check.
void ascend(const Problem& p, const BestResponseConfig& cfg, bool move_f,
            bool move_b, std::vector<double>& f, std::vector<double>& b) {
  const int mc = p.m_count;
  double penalty = 10.0 * (*std::max_element(p.reward.begin(), p.reward.end()) +
                           1.0);
  const auto merit = [&](const std::vector<double>& ff,
                         const std::vector<double>& bb) {
    double u = column_utility(p, ff, bb);
    for (int m = 0; m < mc; ++m) {
      const double q = p.kappa - p.load_f[m] / ff[m] - p.load_b[m] / bb[m];
      const double viol = std::max(-q, 0.0);
      u -= 0.5 * penalty * viol * viol;
    }
    return u;
  };

  for (int stage = 0; stage < 6; ++stage, penalty *= 10.0) {
    double step_f = 0.1 * p.f_budget, step_b = 0.1 * p.b_budget;
    for (int it = 0; it < cfg.max_iters / 6; ++it) {
      std::vector<double> gf(mc, 0.0), gb(mc, 0.0);
      for (int m = 0; m < mc; ++m) {
        const double q = p.kappa - p.load_f[m] / f[m] - p.load_b[m] / b[m];
        const double boost = p.reward[m] + penalty * std::max(-q, 0.0);
        gf[m] = boost * p.load_f[m] / (f[m] * f[m]) - p.c_f;
        gb[m] = boost * p.load_b[m] / (b[m] * b[m]) - p.c_b;
      }
      const double base = merit(f, b);
      bool moved = false;
      for (int tries = 0; tries < 40; ++tries) {
        std::vector<double> nf = f, nb = b;
        if (move_f) {
          double norm = 0;
          for (double g : gf) norm = std::max(norm, std::abs(g));
          if (norm > 0)
            for (int m = 0; m < mc; ++m) nf[m] += step_f * gf[m] / norm;
          project_budget(nf, cfg.alloc_floor, p.f_budget);
        }
        if (move_b) {
          double norm = 0;
          for (double g : gb) norm = std::max(norm, std::abs(g));
          if (norm > 0)
            for (int m = 0; m < mc; ++m) nb[m] += step_b * gb[m] / norm;
          project_budget(nb, cfg.alloc_floor, p.b_budget);
        }
        if (merit(nf, nb) > base + 1e-300) {
          f = std::move(nf);
          b = std::move(nb);
          moved = true;
          break;
        }
        step_f *= 0.5;
        step_b *= 0.5;
      }
      if (!moved) break;
    }
  }
}

}  // namespace

void BestResponseConfig::validate() const {
  require(multiplier_tol > 0 && ascent_tol > 0 && constraint_tol > 0,
          "BestResponseConfig: tolerances must be positive");
  require(max_iters >= 1, "BestResponseConfig: max_iters must be >= 1");
  require(alloc_floor > 0, "BestResponseConfig: alloc_floor must be positive");
}

std::pair<double, double> interior_optimum(double reward, double compute_load,
                                           double comm_load, double c_f,
                                           double c_b) {
  require(reward > 0 && compute_load > 0 && comm_load > 0 && c_f > 0 && c_b > 0,
          "interior_optimum: all inputs must be positive");
  return {std::sqrt(reward * compute_load / c_f),
          std::sqrt(reward * comm_load / c_b)};
}

BestResponseResult best_response(const Scenario& s, int n,
                                 const RewardMatrix& rewards,
                                 const BestResponseConfig& cfg) {
  cfg.validate();
  Problem p = make_problem(s, n, rewards);
  const bool move_f = cfg.mode != BestResponseConfig::Mode::fix_f_equal;
  const bool move_b = cfg.mode != BestResponseConfig::Mode::fix_b_equal;

  ActiveSetPoint pt;
  if (cfg.mode == BestResponseConfig::Mode::joint) {
    check_feasible_joint(p);
    pt = assemble_joint(p, cfg);
  } else {
    const double share =
        (move_f ? s.asps[n].b_max : s.asps[n].f_max) / p.m_count;
    std::vector<double> fixed(p.m_count, share);
    pt = assemble_single(p, cfg, move_f, fixed);
  }

  BestResponseResult out;
  out.f = pt.f;
  out.b = pt.b;
  for (double& v : out.f)
    if (v < cfg.alloc_floor) {
      v = cfg.alloc_floor;
      ++out.clamp_events;
    }
  for (double& v : out.b)
    if (v < cfg.alloc_floor) {
      v = cfg.alloc_floor;
      ++out.clamp_events;
    }

  pt.f = out.f;
  pt.b = out.b;
  out.kkt_residual = kkt_residual(p, cfg, pt, move_f, move_b);
  if (out.kkt_residual > cfg.ascent_tol) {
    ascend(p, cfg, move_f, move_b, pt.f, pt.b);
    // Re-estimate the budget multipliers from the moved point.
    const auto implied = [&](const std::vector<double>& alloc,
                             const std::vector<double>& load, double cost,
                             double budget) {
      double sum = std::accumulate(alloc.begin(), alloc.end(), 0.0);
      if (sum < budget * (1.0 - 1e-9)) return 0.0;
      std::vector<double> g;
      for (int m = 0; m < p.m_count; ++m)
        g.push_back(p.reward[m] * load[m] / (alloc[m] * alloc[m]) - cost);
      std::nth_element(g.begin(), g.begin() + g.size() / 2, g.end());
      return std::max(g[g.size() / 2], 0.0);
    };
    if (move_f) pt.lambda_f = implied(pt.f, p.load_f, p.c_f, p.f_budget);
    if (move_b) pt.lambda_b = implied(pt.b, p.load_b, p.c_b, p.b_budget);
    for (int m = 0; m < p.m_count; ++m) {
      const double q =
          p.kappa - p.load_f[m] / pt.f[m] - p.load_b[m] / pt.b[m];
      pt.lifted[m] = q < cfg.constraint_tol;
    }
    out.f = pt.f;
    out.b = pt.b;
    out.used_ascent_fallback = true;
    out.kkt_residual = kkt_residual(p, cfg, pt, move_f, move_b);
    if (out.kkt_residual > std::sqrt(cfg.ascent_tol))
      throw std::runtime_error(
          "best_response: did not reach a KKT point within max_iters "
          "(residual " +
          std::to_string(out.kkt_residual) + ")");
  }

  out.lambda_f = pt.lambda_f;
  out.lambda_b = pt.lambda_b;
  out.c1_active = pt.lifted;
  const double f_sum = std::accumulate(out.f.begin(), out.f.end(), 0.0);
  const double b_sum = std::accumulate(out.b.begin(), out.b.end(), 0.0);
  out.f_budget_active = f_sum >= p.f_budget * (1.0 - 1e-9);
  out.b_budget_active = b_sum >= p.b_budget * (1.0 - 1e-9);
  out.utility = column_utility(p, out.f, out.b);
  return out;
}

Allocation best_response_all(const Scenario& s, const RewardMatrix& rewards,
                             const BestResponseConfig& cfg) {
  Allocation alloc{Grid<double>(s.num_asps(), s.num_mus()),
                   Grid<double>(s.num_asps(), s.num_mus())};
  for (int n = 0; n < s.num_asps(); ++n) {
    BestResponseResult r = best_response(s, n, rewards, cfg);
    for (int m = 0; m < s.num_mus(); ++m) {
      alloc.f(n, m) = r.f[m];
      alloc.b(n, m) = r.b[m];
    }
  }
  return alloc;
}

std::vector<double> qoe_at(const BestResponseResult& result, const Scenario& s,
                           int n) {
  std::vector<double> q(s.num_mus());
  for (int m = 0; m < s.num_mus(); ++m)
    q[m] = qoe(s.asps[n], s.demands(n, m), s.channels(n, m), result.f[m],
               result.b[m]);
  return q;
}

}  // namespace qoemarket
