#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace qoemarket {

/// Thrown when a market instance cannot satisfy the service constraints
/// even at full resource budgets. Carries the offending MU indices.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(std::string what, std::vector<int> mus)
      : std::runtime_error(std::move(what)), violating_mus(std::move(mus)) {}
  std::vector<int> violating_mus;
};

/// Dense row-major N x M grid; rows index ASPs, columns index MUs.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int rows, int cols, T init = T{})
      : rows_(rows), cols_(cols), cells_(static_cast<size_t>(rows) * cols, init) {
    if (rows < 0 || cols < 0) throw std::invalid_argument("Grid: negative extent");
  }

  T& operator()(int n, int m) { return cells_[index(n, m)]; }
  const T& operator()(int n, int m) const { return cells_[index(n, m)]; }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return cells_.empty(); }

  std::vector<T>& cells() { return cells_; }
  const std::vector<T>& cells() const { return cells_; }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.cells_ == b.cells_;
  }

 private:
  size_t index(int n, int m) const {
    if (n < 0 || n >= rows_ || m < 0 || m >= cols_)
      throw std::out_of_range("Grid: index (" + std::to_string(n) + "," +
                              std::to_string(m) + ") outside " +
                              std::to_string(rows_) + "x" + std::to_string(cols_));
    return static_cast<size_t>(n) * cols_ + m;
  }

  int rows_ = 0, cols_ = 0;
  std::vector<T> cells_;
};

/// Per-unit-QoE rewards R[n][m] chosen by the MUs (the leaders).
using RewardMatrix = Grid<double>;

/// Resource allocation decided by the ASPs (the followers):
/// f in FLOPS, b in Hz, both N x M.
struct Allocation {
  Grid<double> f;
  Grid<double> b;
};

/// Parameters of the reasoning-chain performance-gap bound.
/// eta bounds the residual ambiguity of an exemplar chain, zeta0 is the
/// ambiguity of the initial task, upsilon the context skewness, and
/// k_examples the number of exemplar chains supplied with the prompt.
struct GapBoundParams {
  double eta = 1.0 / 11.0;
  double zeta0 = 1.0 / 21.0;
  double upsilon = 1.0;
  int k_examples = 1;

  void validate() const;
};

/// Upper bound on the performance gap:
///   beta * (eta / (1 - eta))^K   with  beta = 2 * upsilon^K * zeta0 / (1 - zeta0).
/// Strictly positive; strictly decreasing in K when upsilon*eta/(1-eta) < 1.
double gap_bound(const GapBoundParams& p);

/// Ratio bound(K+1)/bound(K) = upsilon * eta / (1 - eta).
double gap_bound_ratio(const GapBoundParams& p);

/// Maps an accuracy target theta_hat to the number of exemplar chains needed,
/// by inverting the gap bound with a ceiling (stricter targets need more
/// examples). Ships with the calibration that makes the canonical
/// (theta_hat, K) table {1e-3 -> 2, ..., 1e-11 -> 10} exact fixed points.
struct AccuracyLookup {
  GapBoundParams base;  // K field ignored; eta/zeta0/upsilon drive the inversion

  int k_for_theta(double theta_hat) const;
  double theta_for_k(int k) const;

  /// The canonical five accuracy levels, strictest first.
  static const std::vector<std::pair<double, int>>& canonical_pairs();
};

/// One MU -> ASP service request.
struct Demand {
  double theta_hat = 1e-5;  // accuracy gap target, in (0, 1)
  int x_in = 100;           // input tokens
  int x_out = 100;          // requested output tokens

  void validate() const;
};

/// Radio link between an MU and an ASP, reduced to its linear SNR.
struct Channel {
  double snr = 100.0;  // gamma > 0, linear

  static Channel from_gain(double gain, double tx_power, double noise_power);
  static Channel from_snr_db(double snr_db);

  double spectral_efficiency() const { return std::log2(1.0 + snr); }
  void validate() const;
};

struct AspParams {
  double kappa = 0.5;    // max tolerable latency, seconds
  double xi = 6.0e4;     // FLOPs per token-unit of the generation workload
  double c_f = 1.5e-14;  // currency per FLOPS
  double c_b = 4.0e-9;   // currency per Hz
  double f_max = 1.0e13; // FLOPS budget
  double b_max = 2.0e8;  // Hz budget

  void validate() const;
};

struct MuParams {
  double mu = 6.0;      // gain conversion factor, currency per log-QoE unit
  double r_min = 0.01;  // minimum payable reward per QoE unit, > 0
  double r_max = 1.0;   // maximum payable reward per QoE unit

  void validate() const;
};

/// Full market description: N ASPs, M MUs, per-link demands and channels.
struct Scenario {
  std::vector<AspParams> asps;
  std::vector<MuParams> mus;
  Grid<Demand> demands;    // N x M
  Grid<Channel> channels;  // N x M
  uint64_t seed = 0;

  int num_asps() const { return static_cast<int>(asps.size()); }
  int num_mus() const { return static_cast<int>(mus.size()); }
  void validate() const;

  RewardMatrix midpoint_rewards() const;
  void check_rewards(const RewardMatrix& r) const;
};

/// Total token-pair cost of autoregressive generation:
///   sum_{i=0}^{x_out-1} (x_in + i)  =  x_in*x_out + x_out*(x_out-1)/2.
/// Grows quadratically in the output length.
double token_cost_sum(int x_in, int x_out);

/// Compute-side load A = xi * ln(1/theta_hat) * token_cost_sum (FLOPs weighted
/// by the accuracy cost); the compute latency is A / f.
double compute_load(const AspParams& asp, const Demand& d);

/// Transmission-side load C = 32 * (x_in + x_out) / log2(1 + snr) (payload bits
/// over spectral efficiency); the transmission latency is C / b.
double comm_load(const Demand& d, const Channel& ch);

/// QoE of a served request: the latency headroom
///   kappa - A/f - C/b   (seconds; may be negative — callers enforce C1).
double qoe(const AspParams& asp, const Demand& d, const Channel& ch, double f,
           double b);

/// ASP n's utility: sum over MUs of (reward * QoE - resource costs).
double asp_utility(const Scenario& s, int n, const RewardMatrix& rewards,
                   const Allocation& alloc);

/// MU m's utility: mu * ln(1 + sum_n QoE) - sum_n reward * QoE.
double mu_utility(const Scenario& s, int m, const RewardMatrix& rewards,
                  const Allocation& alloc);

}  // namespace qoemarket
