#include "qoemarket/oracle.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

namespace qoemarket::oracle {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

struct Cell {
  double f, b, utility;
};

// Per-MU list of feasible (f, b) lattice cells with their utility share.
std::vector<Cell> feasible_cells(double reward, double load_f, double load_b,
                                 double kappa, double c_f, double c_b,
                                 const std::vector<double>& f_axis,
                                 const std::vector<double>& b_axis) {
  std::vector<Cell> cells;
  cells.reserve(f_axis.size() * b_axis.size());
  for (double f : f_axis) {
    if (f <= 0.0) continue;
    const double q_f = load_f / f;
    for (double b : b_axis) {
      if (b <= 0.0) continue;
      const double q = kappa - q_f - load_b / b;
      if (q < 0.0) continue;  // service constraint: skip, never project
      cells.push_back({f, b, reward * q - c_f * f - c_b * b});
    }
  }
  return cells;
}

std::vector<double> linspace(double lo, double hi, int points) {
  std::vector<double> v(points);
  if (points == 1) {
    v[0] = hi;
    return v;
  }
  for (int i = 0; i < points; ++i)
    v[i] = lo + (hi - lo) * static_cast<double>(i) / (points - 1);
  return v;
}

struct SearchState {
  double best_utility = -std::numeric_limits<double>::infinity();
  std::vector<int> best_choice;
};

// Depth-first enumeration over per-MU cell lists with budget pruning and an
// admissible utility bound, so the result equals full enumeration.
void enumerate(const std::vector<std::vector<Cell>>& lists,
               const std::vector<double>& tail_bound, double f_budget,
               double b_budget, size_t m, double f_sum, double b_sum,
               double util, std::vector<int>& choice, SearchState& st) {
  if (m == lists.size()) {
    if (util > st.best_utility) {
      st.best_utility = util;
      st.best_choice = choice;
    }
    return;
  }
  if (util + tail_bound[m] <= st.best_utility) return;
  for (size_t i = 0; i < lists[m].size(); ++i) {
    const Cell& c = lists[m][i];
    if (f_sum + c.f > f_budget || b_sum + c.b > b_budget) continue;
    choice[m] = static_cast<int>(i);
    enumerate(lists, tail_bound, f_budget, b_budget, m + 1, f_sum + c.f,
              b_sum + c.b, util + c.utility, choice, st);
  }
}

struct AxisWindow {
  double lo, hi;
};

}  // namespace

void GridSpec::validate() const {
  require(points_per_axis >= 2, "GridSpec: points_per_axis must be >= 2");
  require(refine_passes >= 0, "GridSpec: refine_passes must be >= 0");
}

GridBestResponse grid_best_response(const Scenario& s, int n,
                                    const RewardMatrix& rewards,
                                    const GridSpec& spec) {
  spec.validate();
  s.validate();
  require(n >= 0 && n < s.num_asps(), "grid_best_response: ASP index");
  const int m_count = s.num_mus();
  if (m_count > 3)
    throw std::invalid_argument(
        "grid_best_response: joint grid supports at most 3 MUs, got " +
        std::to_string(m_count));

  const AspParams& asp = s.asps[n];
  std::vector<double> load_f(m_count), load_b(m_count), reward(m_count);
  for (int m = 0; m < m_count; ++m) {
    load_f[m] = compute_load(asp, s.demands(n, m));
    load_b[m] = comm_load(s.demands(n, m), s.channels(n, m));
    reward[m] = rewards(n, m);
  }

  // The joint lattice is exponential in M; cap the per-axis count and add
  // refinement passes instead.
  int points = spec.points_per_axis;
  int passes = spec.refine_passes;
  if (m_count == 2) {
    points = std::min(points, 40);
    passes = std::max(passes, 3);
  } else if (m_count == 3) {
    points = std::min(points, 18);
    passes = std::max(passes, 4);
  }

  std::vector<AxisWindow> f_win(m_count, {asp.f_max / points, asp.f_max});
  std::vector<AxisWindow> b_win(m_count, {asp.b_max / points, asp.b_max});

  GridBestResponse result;
  bool found = false;
  for (int pass = 0; pass <= passes; ++pass) {
    std::vector<std::vector<Cell>> lists(m_count);
    std::vector<std::vector<double>> f_axes(m_count), b_axes(m_count);
    for (int m = 0; m < m_count; ++m) {
      f_axes[m] = linspace(f_win[m].lo, f_win[m].hi, points);
      b_axes[m] = linspace(b_win[m].lo, b_win[m].hi, points);
      lists[m] = feasible_cells(reward[m], load_f[m], load_b[m], asp.kappa,
                                asp.c_f, asp.c_b, f_axes[m], b_axes[m]);
      if (lists[m].empty())
        throw InfeasibleError(
            "grid_best_response: no feasible cell for MU " + std::to_string(m),
            {m});
    }
    std::vector<double> tail_bound(m_count + 1, 0.0);
    for (int m = m_count - 1; m >= 0; --m) {
      double best = -std::numeric_limits<double>::infinity();
      for (const Cell& c : lists[m]) best = std::max(best, c.utility);
      tail_bound[m] = tail_bound[m + 1] + best;
    }

    SearchState st;
    std::vector<int> choice(m_count, 0);
    enumerate(lists, tail_bound, asp.f_max, asp.b_max, 0, 0.0, 0.0, 0.0, choice,
              st);
    if (st.best_choice.empty()) {
      if (found) break;  // refinement window missed; keep the coarse result
      throw InfeasibleError(
          "grid_best_response: no jointly feasible lattice point", {});
    }

    result.f.assign(m_count, 0.0);
    result.b.assign(m_count, 0.0);
    result.utility = st.best_utility;
    found = true;
    for (int m = 0; m < m_count; ++m) {
      result.f[m] = lists[m][st.best_choice[m]].f;
      result.b[m] = lists[m][st.best_choice[m]].b;
    }

    // Shrink each axis to +-2 current steps around the winner.
    for (int m = 0; m < m_count; ++m) {
      const double f_step = (f_win[m].hi - f_win[m].lo) / (points - 1);
      const double b_step = (b_win[m].hi - b_win[m].lo) / (points - 1);
      f_win[m] = {std::max(result.f[m] - 2.0 * f_step, asp.f_max * 1e-12),
                  std::min(result.f[m] + 2.0 * f_step, asp.f_max)};
      b_win[m] = {std::max(result.b[m] - 2.0 * b_step, asp.b_max * 1e-12),
                  std::min(result.b[m] + 2.0 * b_step, asp.b_max)};
    }
  }
  return result;
}

void NeSearchSpec::validate() const {
  require(reward_points >= 2 && reward_points <= 50,
          "NeSearchSpec: reward_points must lie in [2, 50]");
  inner.validate();
}

std::vector<RewardMatrix> grid_ne_search(const Scenario& s,
                                         const NeSearchSpec& spec,
                                         FollowerResponder responder) {
  spec.validate();
  s.validate();
  const int n_count = s.num_asps(), m_count = s.num_mus();
  if (n_count > 2 || m_count > 2)
    throw std::invalid_argument(
        "grid_ne_search: enumeration supports at most 2 ASPs x 2 MUs");

  if (!responder) {
    GridSpec inner = spec.inner;
    responder = [&s, inner](int n, const std::vector<double>& column) {
      RewardMatrix r(s.num_asps(), s.num_mus());
      for (int m = 0; m < s.num_mus(); ++m) r(n, m) = column[m];
      GridBestResponse br = grid_best_response(s, n, r, inner);
      std::vector<double> q(s.num_mus());
      for (int m = 0; m < s.num_mus(); ++m)
        q[m] = qoe(s.asps[n], s.demands(n, m), s.channels(n, m), br.f[m],
                   br.b[m]);
      return q;
    };
  }

  const int p = spec.reward_points;
  std::vector<std::vector<double>> axis(m_count);
  for (int m = 0; m < m_count; ++m)
    axis[m] = linspace(s.mus[m].r_min, s.mus[m].r_max, p);

  // QoE of every (ASP, reward-column) combination; a column combo is a
  // mixed-radix index over the M per-MU axes.
  long combos = 1;
  for (int m = 0; m < m_count; ++m) combos *= p;
  std::vector<std::vector<std::vector<double>>> q_tab(
      n_count, std::vector<std::vector<double>>(combos));
  std::vector<double> column(m_count);
  for (int n = 0; n < n_count; ++n) {
    for (long c = 0; c < combos; ++c) {
      long rest = c;
      for (int m = 0; m < m_count; ++m) {
        column[m] = axis[m][rest % p];
        rest /= p;
      }
      q_tab[n][c] = responder(n, column);
    }
  }

  const int coords = n_count * m_count;
  std::vector<int> idx(coords, 0);
  const auto column_combo = [&](int n, const std::vector<int>& ix) {
    long c = 0;
    for (int m = m_count - 1; m >= 0; --m) c = c * p + ix[n * m_count + m];
    return c;
  };
  const auto utility_of = [&](int m, const std::vector<int>& ix) {
    double q_sum = 0.0, cost = 0.0;
    for (int n = 0; n < n_count; ++n) {
      const double q = q_tab[n][column_combo(n, ix)][m];
      q_sum += q;
      cost += axis[m][ix[n * m_count + m]] * q;
    }
    return s.mus[m].mu * std::log(1.0 + q_sum) - cost;
  };

  std::vector<RewardMatrix> equilibria;
  long total = 1;
  for (int c = 0; c < coords; ++c) total *= p;
  std::vector<int> trial(coords);
  for (long point = 0; point < total; ++point) {
    long rest = point;
    for (int c = 0; c < coords; ++c) {
      idx[c] = static_cast<int>(rest % p);
      rest /= p;
    }
    bool is_ne = true;
    for (int c = 0; c < coords && is_ne; ++c) {
      const int m = c % m_count;
      const double base = utility_of(m, idx);
      for (int dir : {-1, +1}) {
        const int moved = idx[c] + dir;
        if (moved < 0 || moved >= p) continue;
        trial = idx;
        trial[c] = moved;
        if (utility_of(m, trial) > base + spec.improve_tol) {
          is_ne = false;
          break;
        }
      }
    }
    if (is_ne) {
      RewardMatrix r(n_count, m_count);
      for (int n = 0; n < n_count; ++n)
        for (int m = 0; m < m_count; ++m)
          r(n, m) = axis[m][idx[n * m_count + m]];
      equilibria.push_back(std::move(r));
    }
  }
  return equilibria;
}

std::vector<std::vector<double>> numeric_hessian(const ScalarField& fn,
                                                 const std::vector<double>& point,
                                                 double h) {
  require(h > 0.0, "numeric_hessian: step must be positive");
  const size_t k = point.size();
  std::vector<std::vector<double>> hess(k, std::vector<double>(k, 0.0));
  std::vector<double> x = point;
  const double f0 = fn(x);
  for (size_t i = 0; i < k; ++i) {
    x = point;
    x[i] = point[i] + h;
    const double fp = fn(x);
    x[i] = point[i] - h;
    const double fm = fn(x);
    hess[i][i] = (fp - 2.0 * f0 + fm) / (h * h);
    for (size_t j = i + 1; j < k; ++j) {
      x = point;
      x[i] = point[i] + h;
      x[j] = point[j] + h;
      const double fpp = fn(x);
      x[j] = point[j] - h;
      const double fpm = fn(x);
      x[i] = point[i] - h;
      x[j] = point[j] + h;
      const double fmp = fn(x);
      x[j] = point[j] - h;
      const double fmm = fn(x);
      hess[i][j] = hess[j][i] = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
    }
  }
  return hess;
}

double max_eigenvalue_sym(const std::vector<std::vector<double>>& m) {
  const int k = static_cast<int>(m.size());
  require(k > 0, "max_eigenvalue_sym: empty matrix");
  Eigen::MatrixXd a(k, k);
  for (int i = 0; i < k; ++i) {
    require(static_cast<int>(m[i].size()) == k,
            "max_eigenvalue_sym: matrix must be square");
    for (int j = 0; j < k; ++j) a(i, j) = m[i][j];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
  return solver.eigenvalues().maxCoeff();
}

}  // namespace qoemarket::oracle
