#pragma once

#include <utility>
#include <vector>

#include "qoemarket/model.hpp"

namespace qoemarket {

struct BestResponseConfig {
  double multiplier_tol = 1e-10;  // relative bisection tolerance on multipliers
  double ascent_tol = 1e-8;       // KKT residual accepted without fallback
  int max_iters = 10000;          // iteration cap for the ascent fallback
  double constraint_tol = 1e-9;   // absolute tolerance on constraint checks
  double alloc_floor = 1e-12;     // keeps QoE finite for degenerate rewards

  // Resource mask for the single-resource comparison schemes: the fixed
  // resource is split equally across MUs and only the other one is optimized.
  enum class Mode { joint, fix_b_equal, fix_f_equal };
  Mode mode = Mode::joint;

  void validate() const;
};

struct BestResponseResult {
  std::vector<double> f;  // per-MU FLOPS
  std::vector<double> b;  // per-MU Hz
  double utility = 0.0;
  double lambda_f = 0.0, lambda_b = 0.0;  // budget multipliers
  bool f_budget_active = false, b_budget_active = false;
  std::vector<bool> c1_active;  // per-MU: held on the QoE = 0 surface
  double kkt_residual = 0.0;
  bool used_ascent_fallback = false;
  int clamp_events = 0;  // allocations held at the floor
};

/// Unconstrained maximizer of R*(kappa - A/f - C/b) - c_f*f - c_b*b:
///   f* = sqrt(R*A/c_f), b* = sqrt(R*C/c_b).
std::pair<double, double> interior_optimum(double reward, double compute_load,
                                           double comm_load, double c_f,
                                           double c_b);

/// ASP n's unique best response to the given rewards: KKT point of the
/// concave program with per-MU QoE >= 0 and the two budget constraints.
/// Water-fills the separable f- and b-terms via bisection on the budget
/// multipliers, lifts MUs whose QoE would go negative onto the QoE = 0
/// surface (ascending-reward order), and falls back to projected gradient
/// ascent if the assembled point fails the KKT check.
BestResponseResult best_response(const Scenario& s, int n,
                                 const RewardMatrix& rewards,
                                 const BestResponseConfig& cfg = {});

/// Best responses of every ASP, assembled into one allocation.
Allocation best_response_all(const Scenario& s, const RewardMatrix& rewards,
                             const BestResponseConfig& cfg = {});

/// Per-MU QoE values at a solved best response.
std::vector<double> qoe_at(const BestResponseResult& result, const Scenario& s,
                           int n);

}  // namespace qoemarket
