#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qoemarket/baselines.hpp"
#include "qoemarket/model.hpp"
#include "qoemarket/mu_game.hpp"

namespace qoemarket::harness {

inline constexpr const char* kVersion = "0.1.0";

struct Range {
  double lo = 0, hi = 0;
  bool contains(double v) const { return v >= lo && v <= hi; }
};

/// Scenario generator ranges plus the calibration block for the parameters
/// the demand tables leave unstated. Canonical SI units throughout.
struct GeneratorRanges {
  Range tokens{100, 2000};     // x_in, x_out
  Range f_max{5e12, 30e12};    // FLOPS
  Range b_max{1e8, 5e8};       // Hz
  Range kappa{0.3, 1.5};       // seconds
  Range snr_db{10, 30};
  std::vector<int> k_examples{2, 4, 6, 8, 10};

  // calibration block
  double xi = 4.0e3;
  double c_f = 4.0e-14;
  double c_b = 1.333e-9;
  double mu = 4.0;
  double r_min = 0.01;
  double r_max = 1.0;
  GapBoundParams gap;  // drives the theta <-> K lookup

  void validate() const;
};

/// Uniform draws inside the ranges; every field is keyed on
/// (seed, n, m, field), so the same seed always rebuilds the same market.
Scenario generate_scenario(uint64_t seed, int num_asps, int num_mus,
                           const GeneratorRanges& ranges = {});

/// The two-ASP / three-MU demand-table instance used for the case study.
Scenario case_study_scenario(const GeneratorRanges& ranges = {});

enum class SweepVar { none, theta_hat, x_out, kappa, num_mus, num_asps };

std::string to_string(SweepVar v);
SweepVar sweep_var_from_string(const std::string& name);

struct ExperimentSpec {
  std::string name = "experiment";
  uint64_t seed = 1;
  std::string out_dir;  // empty: no files, in-memory record only

  // scenario source: a file, the case study, or the generator
  std::optional<std::string> scenario_file;
  bool use_case_study = false;
  int num_asps = 2, num_mus = 3;
  GeneratorRanges ranges;

  SweepVar sweep = SweepVar::none;
  std::vector<double> sweep_values;
  bool override_ranges = false;

  std::vector<SchemeId> schemes{SchemeId::proposed()};
  GameConfig game;
  int jobs = 1;  // sweep points are pure; merge order stays deterministic

  void validate() const;
};

struct PointRecord {
  double sweep_value = 0;
  std::string scheme;
  RewardMatrix rewards;
  Allocation alloc;
  Grid<double> qoe_values;  // N x M at the final allocation
  MarketMetrics metrics;
  std::vector<double> mu_utilities, asp_utilities;
  bool converged = true;
  int rounds_used = 0;
  std::vector<double> gap_trajectory;
  std::vector<std::vector<double>> mu_utility_trajectory;
};

struct RunRecord {
  std::string spec_hash;
  uint64_t seed = 0;
  std::string version;
  std::string started_at;  // informational; never written into CSV output
  std::vector<PointRecord> points;
  std::vector<std::string> failures;  // per-point notes; run continues
};

/// Executes every (sweep value x scheme) pair; when out_dir is set, writes the
/// trend CSV, trajectory CSVs, the case-study table when applicable, and a
/// manifest. Per-point failures are recorded and the rest of the run proceeds.
RunRecord run_experiment(const ExperimentSpec& spec);

void emit_trend_csv(const ExperimentSpec& spec, const RunRecord& rec,
                    std::ostream& os);
void emit_case_study_csv(const Scenario& s, const PointRecord& point,
                         std::ostream& os);
void emit_trajectory_csv(const PointRecord& point, std::ostream& os);

/// Deterministic float formatting used in every CSV: 9 significant digits.
std::string format_value(double v);

// --- config / scenario files (JSON, unit-suffixed strings) ---

Scenario load_scenario(const std::string& path);
void save_scenario(const Scenario& s, const std::string& path);
ExperimentSpec load_experiment_spec(const std::string& path);
std::string spec_to_json(const ExperimentSpec& spec);

/// Parses "500ms", "10TFLOPS", "250MHz", "20dB" or a bare SI number.
double parse_quantity(const std::string& text);

}  // namespace qoemarket::harness
