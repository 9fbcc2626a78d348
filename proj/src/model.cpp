#include "qoemarket/model.hpp"

#include <algorithm>
#include <cmath>

namespace qoemarket {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

bool finite(double x) { return std::isfinite(x); }

}  // namespace

void GapBoundParams::validate() const {
  require(finite(eta) && eta >= 0.0 && eta < 0.5,
          "GapBoundParams: eta must lie in [0, 0.5)");
  require(finite(zeta0) && zeta0 >= 0.0 && zeta0 < 1.0,
          "GapBoundParams: zeta0 must lie in [0, 1)");
  require(finite(upsilon) && upsilon >= 1.0,
          "GapBoundParams: upsilon must be >= 1");
  require(k_examples >= 0, "GapBoundParams: k_examples must be >= 0");
}

double gap_bound(const GapBoundParams& p) {
  p.validate();
  const double beta =
      2.0 * std::pow(p.upsilon, p.k_examples) * p.zeta0 / (1.0 - p.zeta0);
  return beta * std::pow(p.eta / (1.0 - p.eta), p.k_examples);
}

double gap_bound_ratio(const GapBoundParams& p) {
  p.validate();
  return p.upsilon * p.eta / (1.0 - p.eta);
}

const std::vector<std::pair<double, int>>& AccuracyLookup::canonical_pairs() {
  static const std::vector<std::pair<double, int>> pairs = {
      {1e-11, 10}, {1e-9, 8}, {1e-7, 6}, {1e-5, 4}, {1e-3, 2}};
  return pairs;
}

int AccuracyLookup::k_for_theta(double theta_hat) const {
  require(finite(theta_hat) && theta_hat > 0.0 && theta_hat < 1.0,
          "AccuracyLookup: theta_hat must lie in (0, 1)");
  GapBoundParams p = base;
  p.k_examples = 0;
  const double beta0 = gap_bound(p);  // bound at K = 0
  const double ratio = gap_bound_ratio(p);
  require(ratio > 0.0 && ratio < 1.0,
          "AccuracyLookup: bound must be decreasing (upsilon*eta/(1-eta) < 1)");
  if (theta_hat >= beta0) return 1;
  // Smallest K with beta0 * ratio^K <= theta_hat; the 1e-9 slack keeps exact
  // table entries from rounding one level up.
  const double k = std::log(theta_hat / beta0) / std::log(ratio);
  return std::max(1, static_cast<int>(std::ceil(k - 1e-9)));
}

double AccuracyLookup::theta_for_k(int k) const {
  GapBoundParams p = base;
  p.k_examples = k;
  return gap_bound(p);
}

void Demand::validate() const {
  require(finite(theta_hat) && theta_hat > 0.0 && theta_hat < 1.0,
          "Demand: theta_hat must lie in (0, 1)");
  require(x_in >= 1 && x_out >= 1, "Demand: token counts must be >= 1");
}

Channel Channel::from_gain(double gain, double tx_power, double noise_power) {
  require(gain > 0.0 && tx_power > 0.0 && noise_power > 0.0,
          "Channel: gain, tx power and noise power must be positive");
  return Channel{gain * tx_power / noise_power};
}

Channel Channel::from_snr_db(double snr_db) {
  return Channel{std::pow(10.0, snr_db / 10.0)};
}

void Channel::validate() const {
  require(finite(snr) && snr > 0.0, "Channel: snr must be positive");
}

void AspParams::validate() const {
  require(finite(kappa) && kappa > 0.0, "AspParams: kappa must be positive");
  require(finite(xi) && xi > 0.0, "AspParams: xi must be positive");
  require(finite(c_f) && c_f > 0.0, "AspParams: c_f must be positive");
  require(finite(c_b) && c_b > 0.0, "AspParams: c_b must be positive");
  require(finite(f_max) && f_max > 0.0, "AspParams: f_max must be positive");
  require(finite(b_max) && b_max > 0.0, "AspParams: b_max must be positive");
}

void MuParams::validate() const {
  require(finite(mu) && mu > 0.0, "MuParams: mu must be positive");
  require(finite(r_min) && r_min > 0.0, "MuParams: r_min must be positive");
  require(finite(r_max) && r_max > r_min, "MuParams: r_max must exceed r_min");
}

void Scenario::validate() const {
  const int n = num_asps(), m = num_mus();
  require(n >= 1 && m >= 1, "Scenario: need at least one ASP and one MU");
  require(demands.rows() == n && demands.cols() == m,
          "Scenario: demand grid must be N x M");
  require(channels.rows() == n && channels.cols() == m,
          "Scenario: channel grid must be N x M");
  for (const auto& a : asps) a.validate();
  for (const auto& u : mus) u.validate();
  for (const auto& d : demands.cells()) d.validate();
  for (const auto& ch : channels.cells()) ch.validate();
}

RewardMatrix Scenario::midpoint_rewards() const {
  RewardMatrix r(num_asps(), num_mus());
  for (int n = 0; n < num_asps(); ++n)
    for (int m = 0; m < num_mus(); ++m)
      r(n, m) = 0.5 * (mus[m].r_min + mus[m].r_max);
  return r;
}

void Scenario::check_rewards(const RewardMatrix& r) const {
  require(r.rows() == num_asps() && r.cols() == num_mus(),
          "rewards: grid must be N x M");
  for (int n = 0; n < num_asps(); ++n)
    for (int m = 0; m < num_mus(); ++m)
      require(r(n, m) >= mus[m].r_min && r(n, m) <= mus[m].r_max,
              "rewards: R[" + std::to_string(n) + "][" + std::to_string(m) +
                  "] outside [r_min, r_max]");
}

double token_cost_sum(int x_in, int x_out) {
  require(x_in >= 0 && x_out >= 0, "token_cost_sum: token counts must be >= 0");
  const double in = x_in, out = x_out;
  return in * out + out * (out - 1.0) / 2.0;
}

double compute_load(const AspParams& asp, const Demand& d) {
  return asp.xi * std::log(1.0 / d.theta_hat) * token_cost_sum(d.x_in, d.x_out);
}

double comm_load(const Demand& d, const Channel& ch) {
  return 32.0 * (d.x_in + d.x_out) / ch.spectral_efficiency();
}

double qoe(const AspParams& asp, const Demand& d, const Channel& ch, double f,
           double b) {
  require(f > 0.0 && b > 0.0, "qoe: resources must be strictly positive");
  return asp.kappa - compute_load(asp, d) / f - comm_load(d, ch) / b;
}

double asp_utility(const Scenario& s, int n, const RewardMatrix& rewards,
                   const Allocation& alloc) {
  if (n < 0 || n >= s.num_asps())
    throw std::out_of_range("asp_utility: ASP index out of range");
  double total = 0.0;
  for (int m = 0; m < s.num_mus(); ++m) {
    const double f = alloc.f(n, m), b = alloc.b(n, m);
    const double q = qoe(s.asps[n], s.demands(n, m), s.channels(n, m), f, b);
    total += rewards(n, m) * q - s.asps[n].c_f * f - s.asps[n].c_b * b;
  }
  return total;
}

double mu_utility(const Scenario& s, int m, const RewardMatrix& rewards,
                  const Allocation& alloc) {
  if (m < 0 || m >= s.num_mus())
    throw std::out_of_range("mu_utility: MU index out of range");
  double qoe_sum = 0.0, cost = 0.0;
  for (int n = 0; n < s.num_asps(); ++n) {
    const double q = qoe(s.asps[n], s.demands(n, m), s.channels(n, m),
                         alloc.f(n, m), alloc.b(n, m));
    qoe_sum += q;
    cost += rewards(n, m) * q;
  }
  if (1.0 + qoe_sum <= 0.0)
    throw std::domain_error(
        "mu_utility: 1 + sum of QoE is nonpositive (service constraint "
        "violated upstream)");
  return s.mus[m].mu * std::log(1.0 + qoe_sum) - cost;
}

}  // namespace qoemarket
