#pragma once

#include <cmath>

#include "qoemarket/model.hpp"
#include "qoemarket/rng.hpp"

namespace qoemarket::testutil {

// Hand-built small market with moderate loads; budgets generous unless the
// caller tightens them.
inline Scenario simple_scenario(int num_asps, int num_mus, uint64_t seed = 7) {
  Scenario s;
  s.seed = seed;
  for (int n = 0; n < num_asps; ++n) {
    AspParams a;
    a.kappa = 0.5 + 0.25 * n;
    a.xi = 6.0e4;
    a.c_f = 1.5e-14;
    a.c_b = 4.0e-9;
    a.f_max = 1.0e13;
    a.b_max = 2.0e8;
    s.asps.push_back(a);
  }
  for (int m = 0; m < num_mus; ++m) s.mus.push_back(MuParams{6.0, 0.01, 1.0});
  s.demands = Grid<Demand>(num_asps, num_mus);
  s.channels = Grid<Channel>(num_asps, num_mus);
  const double thetas[] = {1e-7, 1e-9, 1e-8, 1e-5, 1e-3};
  for (int n = 0; n < num_asps; ++n)
    for (int m = 0; m < num_mus; ++m) {
      Demand& d = s.demands(n, m);
      d.theta_hat = thetas[(n * num_mus + m) % 5];
      d.x_in = 100 + 50 * ((n + m) % 4);
      d.x_out = 200 + 150 * ((n * 3 + m) % 5);
      s.channels(n, m) =
          Channel::from_snr_db(12.0 + uniform_in(seed, n, m, 0xC4, 0.0, 16.0));
    }
  return s;
}

// Seeded uniform helper for property tests.
inline double u_in(uint64_t seed, uint64_t i, uint64_t field, double lo,
                   double hi) {
  return uniform_in(seed, i, field, 0xabcd, lo, hi);
}

}  // namespace qoemarket::testutil
