#include "qoemarket/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <ostream>
#include <thread>

#include "qoemarket/asp_solver.hpp"
#include "qoemarket/rng.hpp"

namespace qoemarket::harness {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

// Field tags for the counter-based draws.
enum Field : uint64_t {
  kXIn = 1,
  kXOut,
  kKExamples,
  kSnr,
  kKappa,
  kFMax,
  kBMax,
};

int uniform_int(uint64_t seed, uint64_t a, uint64_t b, uint64_t field, int lo,
                int hi) {
  const double u = uniform01(seed, a, b, field);
  return lo + static_cast<int>(u * (hi - lo + 1));
}

uint64_t fnv1a(const std::string& text) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string sanitize(const std::string& name) {
  std::string out;
  for (char c : name)
    out += (std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
  return out;
}

}  // namespace

void GeneratorRanges::validate() const {
  require(tokens.lo >= 1 && tokens.hi >= tokens.lo, "ranges: bad token range");
  require(f_max.lo > 0 && f_max.hi >= f_max.lo, "ranges: bad f_max range");
  require(b_max.lo > 0 && b_max.hi >= b_max.lo, "ranges: bad b_max range");
  require(kappa.lo > 0 && kappa.hi >= kappa.lo, "ranges: bad kappa range");
  require(snr_db.hi >= snr_db.lo, "ranges: bad snr range");
  require(!k_examples.empty(), "ranges: k_examples must be non-empty");
  require(xi > 0 && c_f > 0 && c_b > 0 && mu > 0, "ranges: calibration must be positive");
  require(r_min > 0 && r_max > r_min, "ranges: need 0 < r_min < r_max");
  gap.validate();
}

Scenario generate_scenario(uint64_t seed, int num_asps, int num_mus,
                           const GeneratorRanges& ranges) {
  ranges.validate();
  require(num_asps >= 1 && num_mus >= 1, "generate_scenario: need N, M >= 1");
  AccuracyLookup lookup{ranges.gap};

  Scenario s;
  s.seed = seed;
  s.demands = Grid<Demand>(num_asps, num_mus);
  s.channels = Grid<Channel>(num_asps, num_mus);
  for (int n = 0; n < num_asps; ++n) {
    AspParams a;
    a.kappa = uniform_in(seed, n, 0, kKappa, ranges.kappa.lo, ranges.kappa.hi);
    a.xi = ranges.xi;
    a.c_f = ranges.c_f;
    a.c_b = ranges.c_b;
    a.f_max = uniform_in(seed, n, 0, kFMax, ranges.f_max.lo, ranges.f_max.hi);
    a.b_max = uniform_in(seed, n, 0, kBMax, ranges.b_max.lo, ranges.b_max.hi);
    s.asps.push_back(a);
  }
  for (int m = 0; m < num_mus; ++m)
    s.mus.push_back(MuParams{ranges.mu, ranges.r_min, ranges.r_max});
  const int t_lo = static_cast<int>(ranges.tokens.lo);
  const int t_hi = static_cast<int>(ranges.tokens.hi);
  for (int n = 0; n < num_asps; ++n) {
    for (int m = 0; m < num_mus; ++m) {
      Demand& d = s.demands(n, m);
      d.x_in = uniform_int(seed, n, m, kXIn, t_lo, t_hi);
      d.x_out = uniform_int(seed, n, m, kXOut, t_lo, t_hi);
      const int pick = uniform_int(seed, n, m, kKExamples, 0,
                                   static_cast<int>(ranges.k_examples.size()) - 1);
      d.theta_hat = lookup.theta_for_k(ranges.k_examples[pick]);
      s.channels(n, m) = Channel::from_snr_db(
          uniform_in(seed, n, m, kSnr, ranges.snr_db.lo, ranges.snr_db.hi));
    }
  }
  s.validate();
  return s;
}

Scenario case_study_scenario(const GeneratorRanges& ranges) {
  ranges.validate();
  Scenario s;
  s.seed = 0;
  AspParams asp1, asp2;
  asp1.kappa = 0.5;
  asp2.kappa = 1.0;
  for (AspParams* a : {&asp1, &asp2}) {
    a->xi = ranges.xi;
    a->c_f = ranges.c_f;
    a->c_b = ranges.c_b;
    a->f_max = 10e12;
    a->b_max = 2e8;
  }
  s.asps = {asp1, asp2};
  // MU 3 asks for the strictest accuracy on both providers and values the
  // service accordingly; MU 1 is the most price-sensitive.
  s.mus = {MuParams{ranges.mu * 0.96, ranges.r_min, ranges.r_max},
           MuParams{ranges.mu, ranges.r_min, ranges.r_max},
           MuParams{ranges.mu * 1.04, ranges.r_min, ranges.r_max}};

  s.demands = Grid<Demand>(2, 3);
  s.demands(0, 0) = {1e-7, 100, 200};
  s.demands(0, 1) = {1e-9, 100, 500};
  s.demands(0, 2) = {1e-8, 100, 800};
  s.demands(1, 0) = {1e-5, 100, 1400};
  s.demands(1, 1) = {1e-7, 100, 1200};
  s.demands(1, 2) = {1e-8, 100, 1000};

  // Link qualities vary per MU; MU 1 enjoys the cleanest channels.
  s.channels = Grid<Channel>(2, 3);
  s.channels(0, 0) = Channel::from_snr_db(24.0);
  s.channels(0, 1) = Channel::from_snr_db(20.0);
  s.channels(0, 2) = Channel::from_snr_db(16.0);
  s.channels(1, 0) = Channel::from_snr_db(28.0);
  s.channels(1, 1) = Channel::from_snr_db(18.0);
  s.channels(1, 2) = Channel::from_snr_db(12.0);
  s.validate();
  return s;
}

std::string to_string(SweepVar v) {
  switch (v) {
    case SweepVar::none:
      return "none";
    case SweepVar::theta_hat:
      return "theta_hat";
    case SweepVar::x_out:
      return "x_out";
    case SweepVar::kappa:
      return "kappa";
    case SweepVar::num_mus:
      return "M";
    case SweepVar::num_asps:
      return "N";
  }
  return "?";
}

SweepVar sweep_var_from_string(const std::string& name) {
  if (name == "none") return SweepVar::none;
  if (name == "theta_hat" || name == "theta") return SweepVar::theta_hat;
  if (name == "x_out") return SweepVar::x_out;
  if (name == "kappa") return SweepVar::kappa;
  if (name == "M" || name == "num_mus") return SweepVar::num_mus;
  if (name == "N" || name == "num_asps") return SweepVar::num_asps;
  throw std::invalid_argument("sweep: unknown variable '" + name + "'");
}

void ExperimentSpec::validate() const {
  ranges.validate();
  game.validate();
  require(!schemes.empty(), "experiment: schemes must be non-empty");
  for (const SchemeId& s : schemes) s.validate();
  if (sweep != SweepVar::none)
    require(!sweep_values.empty(), "experiment: sweep needs values");
  if (!override_ranges) {
    for (double v : sweep_values) {
      switch (sweep) {
        case SweepVar::theta_hat:
          require(v >= 1e-11 && v <= 1e-3,
                  "experiment: theta_hat sweep outside the accuracy table; "
                  "pass override_ranges to allow");
          break;
        case SweepVar::x_out:
          require(ranges.tokens.contains(v),
                  "experiment: x_out sweep outside the token range");
          break;
        case SweepVar::kappa:
          require(ranges.kappa.contains(v),
                  "experiment: kappa sweep outside the latency range");
          break;
        case SweepVar::num_mus:
          require(v >= 1 && v <= 25, "experiment: M sweep outside [1, 25]");
          break;
        case SweepVar::num_asps:
          require(v >= 1 && v <= 5, "experiment: N sweep outside [1, 5]");
          break;
        case SweepVar::none:
          break;
      }
    }
  }
  if (sweep == SweepVar::num_mus || sweep == SweepVar::num_asps)
    require(!scenario_file && !use_case_study,
            "experiment: market-size sweeps need the generator source");
}

namespace {

Scenario base_scenario(const ExperimentSpec& spec) {
  if (spec.scenario_file) return load_scenario(*spec.scenario_file);
  if (spec.use_case_study) return case_study_scenario(spec.ranges);
  return generate_scenario(spec.seed, spec.num_asps, spec.num_mus, spec.ranges);
}

Scenario scenario_at(const ExperimentSpec& spec, const Scenario& base,
                     double value) {
  switch (spec.sweep) {
    case SweepVar::none:
      return base;
    case SweepVar::theta_hat: {
      Scenario s = base;
      s.demands(0, 0).theta_hat = value;
      return s;
    }
    case SweepVar::x_out: {
      Scenario s = base;
      s.demands(0, 0).x_out = static_cast<int>(value);
      return s;
    }
    case SweepVar::kappa: {
      Scenario s = base;
      s.asps[0].kappa = value;
      return s;
    }
    case SweepVar::num_mus:
      return generate_scenario(spec.seed, spec.num_asps,
                               static_cast<int>(value), spec.ranges);
    case SweepVar::num_asps:
      return generate_scenario(spec.seed, static_cast<int>(value),
                               spec.num_mus, spec.ranges);
  }
  throw std::logic_error("scenario_at: unknown sweep variable");
}

PointRecord run_point(const Scenario& s, const SchemeId& scheme,
                      const GameConfig& game, double value) {
  SchemeResult res = run_scheme(s, scheme, game);
  PointRecord pt;
  pt.sweep_value = value;
  pt.scheme = scheme.name();
  pt.rewards = res.rewards;
  pt.alloc = res.alloc;
  pt.metrics = res.metrics;
  pt.qoe_values = Grid<double>(s.num_asps(), s.num_mus());
  for (int n = 0; n < s.num_asps(); ++n)
    for (int m = 0; m < s.num_mus(); ++m)
      pt.qoe_values(n, m) = qoe(s.asps[n], s.demands(n, m), s.channels(n, m),
                                res.alloc.f(n, m), res.alloc.b(n, m));
  pt.mu_utilities.resize(s.num_mus());
  for (int m = 0; m < s.num_mus(); ++m)
    pt.mu_utilities[m] = mu_utility(s, m, res.rewards, res.alloc);
  pt.asp_utilities.resize(s.num_asps());
  for (int n = 0; n < s.num_asps(); ++n)
    pt.asp_utilities[n] = asp_utility(s, n, res.rewards, res.alloc);
  if (res.report) {
    pt.converged = res.report->converged;
    pt.rounds_used = res.report->rounds_used;
    pt.gap_trajectory = res.report->utility_gap_trajectory;
    pt.mu_utility_trajectory = res.report->mu_utility_trajectory;
  }
  return pt;
}

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%FT%TZ", std::gmtime(&t));
  return buf;
}

}  // namespace

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void emit_trend_csv(const ExperimentSpec& spec, const RunRecord& rec,
                    std::ostream& os) {
  os << "sweep_var,sweep_value,scheme,metric,value\n";
  const std::string var = to_string(spec.sweep);
  for (const PointRecord& pt : rec.points) {
    const auto row = [&](const std::string& metric, double value) {
      os << var << ',' << format_value(pt.sweep_value) << ',' << pt.scheme
         << ',' << metric << ',' << format_value(value) << '\n';
    };
    row("reward_11", pt.rewards(0, 0));
    row("qoe_11", pt.qoe_values(0, 0));
    row("f_11", pt.alloc.f(0, 0));
    row("b_11", pt.alloc.b(0, 0));
    row("mu1_utility", pt.mu_utilities[0]);
    row("asp1_utility", pt.asp_utilities[0]);
    row("avg_mu_utility", pt.metrics.avg_mu_utility);
    row("avg_asp_utility", pt.metrics.avg_asp_utility);
    row("avg_mu_cost", pt.metrics.avg_mu_cost);
    row("avg_asp_cost", pt.metrics.avg_asp_cost);
    row("mean_f_usage", pt.metrics.mean_f_usage());
    row("mean_b_usage", pt.metrics.mean_b_usage());
    row("rounds", pt.rounds_used);
    row("converged", pt.converged ? 1.0 : 0.0);
  }
}

void emit_case_study_csv(const Scenario& s, const PointRecord& point,
                         std::ostream& os) {
  os << "asp,mu,f_tflops,b_mhz,reward,qoe_ms\n";
  for (int n = 0; n < s.num_asps(); ++n)
    for (int m = 0; m < s.num_mus(); ++m)
      os << (n + 1) << ',' << (m + 1) << ','
         << format_value(point.alloc.f(n, m) / 1e12) << ','
         << format_value(point.alloc.b(n, m) / 1e6) << ','
         << format_value(point.rewards(n, m)) << ','
         << format_value(point.qoe_values(n, m) * 1e3) << '\n';
}

void emit_trajectory_csv(const PointRecord& point, std::ostream& os) {
  os << "round,sum_abs_utility_change";
  const size_t mus =
      point.mu_utility_trajectory.empty() ? 0 : point.mu_utility_trajectory[0].size();
  for (size_t m = 0; m < mus; ++m) os << ",mu" << (m + 1) << "_utility";
  os << '\n';
  for (size_t t = 0; t < point.gap_trajectory.size(); ++t) {
    os << (t + 1) << ',' << format_value(point.gap_trajectory[t]);
    for (size_t m = 0; m < mus; ++m)
      os << ',' << format_value(point.mu_utility_trajectory[t][m]);
    os << '\n';
  }
}

RunRecord run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  RunRecord rec;
  rec.seed = spec.seed;
  rec.version = kVersion;
  rec.started_at = now_iso8601();
  char hash_buf[24];
  std::snprintf(hash_buf, sizeof(hash_buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(spec_to_json(spec))));
  rec.spec_hash = hash_buf;

  const Scenario base = base_scenario(spec);
  std::vector<double> values =
      spec.sweep == SweepVar::none ? std::vector<double>{0.0} : spec.sweep_values;

  struct Slot {
    std::optional<PointRecord> point;
    std::string failure;
  };
  std::vector<Slot> slots(values.size() * spec.schemes.size());
  const auto work = [&](size_t idx) {
    const size_t vi = idx / spec.schemes.size();
    const size_t si = idx % spec.schemes.size();
    Slot& slot = slots[idx];
    try {
      const Scenario s = scenario_at(spec, base, values[vi]);
      slot.point = run_point(s, spec.schemes[si], spec.game, values[vi]);
    } catch (const std::exception& e) {
      slot.failure = "value " + format_value(values[vi]) + " scheme " +
                     spec.schemes[si].name() + ": " + e.what();
    }
  };
  const int jobs = std::max(1, spec.jobs);
  if (jobs == 1 || slots.size() <= 1) {
    for (size_t i = 0; i < slots.size(); ++i) work(i);
  } else {
    std::atomic<size_t> next{0};
    const auto worker = [&] {
      for (size_t i; (i = next.fetch_add(1)) < slots.size();) work(i);
    };
    std::vector<std::thread> pool;
    for (int j = 0; j < std::min<size_t>(jobs, slots.size()); ++j)
      pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  for (Slot& slot : slots) {
    if (slot.point)
      rec.points.push_back(std::move(*slot.point));
    else
      rec.failures.push_back(slot.failure);
  }

  if (!spec.out_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(spec.out_dir);
    const fs::path dir(spec.out_dir);
    {
      std::ofstream os(dir / "trend.csv");
      emit_trend_csv(spec, rec, os);
    }
    for (size_t i = 0; i < rec.points.size(); ++i) {
      const PointRecord& pt = rec.points[i];
      if (!pt.gap_trajectory.empty()) {
        std::ofstream os(dir / ("trajectory_" + std::to_string(i) + "_" +
                                sanitize(pt.scheme) + ".csv"));
        emit_trajectory_csv(pt, os);
      }
      if (spec.use_case_study && spec.sweep == SweepVar::none) {
        std::ofstream os(dir /
                         ("case_study_" + sanitize(pt.scheme) + ".csv"));
        emit_case_study_csv(base, pt, os);
      }
    }
    nlohmann::json manifest;
    manifest["spec_hash"] = rec.spec_hash;
    manifest["seed"] = rec.seed;
    manifest["version"] = rec.version;
    manifest["started_at"] = rec.started_at;
    manifest["name"] = spec.name;
    manifest["points"] = rec.points.size();
    manifest["failures"] = rec.failures;
    manifest["calibration"] = {
        {"xi", spec.ranges.xi},       {"c_f", spec.ranges.c_f},
        {"c_b", spec.ranges.c_b},     {"mu", spec.ranges.mu},
        {"r_min", spec.ranges.r_min}, {"r_max", spec.ranges.r_max},
        {"eta", spec.ranges.gap.eta}, {"zeta0", spec.ranges.gap.zeta0},
        {"upsilon", spec.ranges.gap.upsilon}};
    std::ofstream os(dir / "manifest.json");
    os << manifest.dump(2) << "\n";
  }
  return rec;
}

}  // namespace qoemarket::harness
