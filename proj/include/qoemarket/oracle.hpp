#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "qoemarket/model.hpp"

// Independent brute-force and finite-difference verifiers. Everything here is
// deliberately built on module model alone so property tests can use it as an
// oracle against the analytic solvers.

namespace qoemarket::oracle {

struct GridSpec {
  // Grid points per f/b axis for a single-MU search. For 2 or 3 MUs the axis
  // count is capped (the joint grid is exponential in M) and extra refinement
  // passes recover the resolution.
  int points_per_axis = 400;
  int refine_passes = 1;

  void validate() const;
};

struct GridBestResponse {
  std::vector<double> f;  // per-MU, FLOPS
  std::vector<double> b;  // per-MU, Hz
  double utility = 0.0;
};

/// Exhaustively evaluates ASP n's utility over a feasible allocation lattice
/// (budget- or service-violating cells are skipped, not projected) and returns
/// the argmax, refined locally around the coarse winner. Only for M <= 3.
GridBestResponse grid_best_response(const Scenario& s, int n,
                                    const RewardMatrix& rewards,
                                    const GridSpec& spec = {});

/// Follower response used inside the NE search: maps an ASP index and its
/// reward column to the per-MU QoE values at that ASP's best response.
using FollowerResponder =
    std::function<std::vector<double>(int n, const std::vector<double>& column)>;

struct NeSearchSpec {
  int reward_points = 21;  // grid points per reward coordinate, <= 50
  GridSpec inner;          // used when no responder is injected
  double improve_tol = 1e-12;

  void validate() const;
};

/// Enumerates reward matrices on a per-coordinate grid and returns those where
/// no unilateral single-coordinate grid move improves the deviating MU's
/// utility. Only for N <= 2, M <= 2. The follower response defaults to
/// grid_best_response; a faster responder can be injected.
std::vector<RewardMatrix> grid_ne_search(const Scenario& s,
                                         const NeSearchSpec& spec = {},
                                         FollowerResponder responder = {});

using ScalarField = std::function<double(const std::vector<double>&)>;

/// Central-difference Hessian of fn at the given point, symmetrized.
std::vector<std::vector<double>> numeric_hessian(const ScalarField& fn,
                                                 const std::vector<double>& point,
                                                 double h);

/// Largest eigenvalue of a symmetric matrix.
double max_eigenvalue_sym(const std::vector<std::vector<double>>& m);

}  // namespace qoemarket::oracle
