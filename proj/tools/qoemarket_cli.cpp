#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "qoemarket/asp_solver.hpp"
#include "qoemarket/harness.hpp"
#include "qoemarket/mu_game.hpp"
#include "qoemarket/oracle.hpp"

namespace qm = qoemarket;
namespace hn = qoemarket::harness;

namespace {

// 0 = success, 2 = some sweep points failed, 1 = fatal.
int report_run(const hn::RunRecord& rec) {
  std::cout << "run " << rec.spec_hash << " v" << rec.version << ": "
            << rec.points.size() << " points";
  if (!rec.failures.empty()) {
    std::cout << ", " << rec.failures.size() << " failed";
    for (const std::string& f : rec.failures) std::cout << "\n  FAILED " << f;
  }
  std::cout << std::endl;
  return rec.failures.empty() ? 0 : 2;
}

struct GameFlags {
  std::string schedule = "diminishing:0.1";
  double epsilon = 1e-6;
  int max_rounds = 2000;

  void attach(CLI::App* cmd) {
    cmd->add_option("--schedule", schedule,
                    "diminishing:u or constant:delta (default diminishing:0.1)");
    cmd->add_option("--epsilon", epsilon, "convergence threshold");
    cmd->add_option("--max-rounds", max_rounds, "round budget");
  }

  void apply(qm::GameConfig& cfg) const {
    std::istringstream is(schedule);
    std::string kind;
    std::getline(is, kind, ':');
    double value = 0;
    is >> value;
    if (kind == "diminishing")
      cfg.schedule = qm::StepSchedule::diminishing(value);
    else if (kind == "constant")
      cfg.schedule = qm::StepSchedule::constant(value);
    else
      throw CLI::ValidationError("--schedule", "expected diminishing:u or constant:delta");
    cfg.epsilon = epsilon;
    cfg.max_rounds = max_rounds;
  }
};

std::vector<qm::SchemeId> parse_schemes(const std::vector<std::string>& names) {
  std::vector<qm::SchemeId> out;
  for (const std::string& raw : names) {
    if (raw == "Proposed" || raw == "proposed") {
      out.push_back(qm::SchemeId::proposed());
    } else if (raw.rfind("Ratio", 0) == 0 || raw.rfind("ratio", 0) == 0) {
      double total = 5.0;
      const auto sep = raw.find_first_of(":(");
      if (sep != std::string::npos) total = std::stod(raw.substr(sep + 1));
      out.push_back(qm::SchemeId::ratio(total));
    } else if (raw.rfind("Token", 0) == 0 || raw.rfind("token", 0) == 0) {
      double rho = 0.0;
      const auto sep = raw.find(':');
      if (sep != std::string::npos) rho = std::stod(raw.substr(sep + 1));
      out.push_back(qm::SchemeId::token(rho));
    } else if (raw == "OnlyF" || raw == "onlyf") {
      out.push_back(qm::SchemeId::only_f());
    } else if (raw == "OnlyB" || raw == "onlyb") {
      out.push_back(qm::SchemeId::only_b());
    } else {
      throw CLI::ValidationError("--scheme", "unknown scheme " + raw);
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"QoE-driven incentive market simulator: reward games between "
               "mobile users and edge AIGC service providers"};
  app.require_subcommand(1);

  // --- run: execute an experiment spec file ---
  auto* run_cmd = app.add_subcommand("run", "run an experiment spec file");
  std::string spec_path, run_out;
  uint64_t run_seed = 0;
  int jobs = 1;
  run_cmd->add_option("spec", spec_path, "experiment spec (JSON)")->required();
  run_cmd->add_option("--out", run_out, "output directory override");
  run_cmd->add_option("--seed", run_seed, "seed override");
  run_cmd->add_option("--jobs", jobs, "parallel sweep points");

  // --- case-study: the built-in 2-ASP x 3-MU demand-table instance ---
  auto* case_cmd = app.add_subcommand("case-study",
                                      "run the built-in two-ASP three-MU case");
  std::string case_out = "out/case_study";
  std::vector<std::string> case_schemes{"Proposed"};
  uint64_t case_seed = 1;
  GameFlags case_game;
  case_cmd->add_option("--out", case_out, "output directory");
  case_cmd->add_option("--scheme", case_schemes, "schemes to run");
  case_cmd->add_option("--seed", case_seed, "seed");
  case_game.attach(case_cmd);

  // --- sweep: inline parameter sweep ---
  auto* sweep_cmd = app.add_subcommand("sweep", "sweep one variable");
  std::string sweep_var;
  std::vector<double> sweep_values;
  std::string sweep_out = "out/sweep";
  std::vector<std::string> sweep_schemes{"Proposed"};
  bool sweep_case = false, override_ranges = false;
  int sweep_n = 2, sweep_m = 3;
  uint64_t sweep_seed = 1;
  GameFlags sweep_game;
  sweep_cmd->add_option("--var", sweep_var, "theta_hat | x_out | kappa | M | N")
      ->required();
  sweep_cmd->add_option("--values", sweep_values, "sweep values")->required();
  sweep_cmd->add_option("--out", sweep_out, "output directory");
  sweep_cmd->add_option("--scheme", sweep_schemes, "schemes to run");
  sweep_cmd->add_flag("--case-study", sweep_case, "sweep over the case study");
  sweep_cmd->add_option("--n", sweep_n, "generated ASP count");
  sweep_cmd->add_option("--m", sweep_m, "generated MU count");
  sweep_cmd->add_option("--seed", sweep_seed, "generator seed");
  sweep_cmd->add_flag("--override-ranges", override_ranges,
                      "allow values outside the documented ranges");
  sweep_cmd->add_option("--jobs", jobs, "parallel sweep points");
  sweep_game.attach(sweep_cmd);

  // --- certify: converge a game and check the epsilon-NE property ---
  auto* cert_cmd = app.add_subcommand(
      "certify", "run the reward game and certify the equilibrium");
  uint64_t cert_seed = 1;
  int cert_n = 2, cert_m = 3, cert_grid = 20;
  double cert_probe = 0.0;
  bool cert_oracle = false;
  GameFlags cert_game;
  cert_cmd->add_option("--seed", cert_seed, "generator seed");
  cert_cmd->add_option("--n", cert_n, "ASP count");
  cert_cmd->add_option("--m", cert_m, "MU count");
  cert_cmd->add_option("--probe", cert_probe,
                       "probe delta (default reward range / 20)");
  cert_cmd->add_option("--grid", cert_grid, "deviations per coordinate");
  cert_cmd->add_flag("--oracle", cert_oracle,
                     "also cross-check the solver against the grid oracle");
  cert_game.attach(cert_cmd);

  // --- gen: emit a scenario file ---
  auto* gen_cmd = app.add_subcommand("gen", "emit a generated scenario file");
  uint64_t gen_seed = 1;
  int gen_n = 2, gen_m = 3;
  std::string gen_out = "scenario.json";
  gen_cmd->add_option("--seed", gen_seed, "generator seed");
  gen_cmd->add_option("--n", gen_n, "ASP count");
  gen_cmd->add_option("--m", gen_m, "MU count");
  gen_cmd->add_option("--out", gen_out, "output path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      hn::ExperimentSpec spec = hn::load_experiment_spec(spec_path);
      if (!run_out.empty()) spec.out_dir = run_out;
      if (run_seed != 0) spec.seed = run_seed;
      spec.jobs = jobs;
      return report_run(hn::run_experiment(spec));
    }
    if (*case_cmd) {
      hn::ExperimentSpec spec;
      spec.name = "case-study";
      spec.use_case_study = true;
      spec.seed = case_seed;
      spec.out_dir = case_out;
      spec.schemes = parse_schemes(case_schemes);
      case_game.apply(spec.game);
      return report_run(hn::run_experiment(spec));
    }
    if (*sweep_cmd) {
      hn::ExperimentSpec spec;
      spec.name = "sweep-" + sweep_var;
      spec.sweep = hn::sweep_var_from_string(sweep_var);
      spec.sweep_values = sweep_values;
      spec.use_case_study = sweep_case;
      spec.num_asps = sweep_n;
      spec.num_mus = sweep_m;
      spec.seed = sweep_seed;
      spec.out_dir = sweep_out;
      spec.override_ranges = override_ranges;
      spec.schemes = parse_schemes(sweep_schemes);
      spec.jobs = jobs;
      sweep_game.apply(spec.game);
      return report_run(hn::run_experiment(spec));
    }
    if (*cert_cmd) {
      const qm::Scenario s = hn::generate_scenario(cert_seed, cert_n, cert_m);
      qm::GameConfig cfg;
      cert_game.apply(cfg);
      const qm::EquilibriumReport rep = qm::run_game(s, cfg);
      double probe = cert_probe;
      if (probe <= 0.0)
        probe = (s.mus[0].r_max - s.mus[0].r_min) / 20.0;
      const qm::CertificationResult cert = qm::certify_epsilon_ne(
          s, rep.rewards_star, probe, cfg.epsilon, cert_grid, cfg.solver);
      std::cout << "game: " << (rep.converged ? "converged" : "round budget hit")
                << " after " << rep.rounds_used << " rounds, final gap "
                << hn::format_value(rep.utility_gap_trajectory.empty()
                                        ? 0.0
                                        : rep.utility_gap_trajectory.back())
                << "\n";
      std::cout << "certification: "
                << (cert.certified ? "PASS" : "FAIL")
                << " (worst unilateral improvement "
                << hn::format_value(cert.worst_improvement) << " vs epsilon "
                << hn::format_value(cfg.epsilon) << ")\n";
      bool oracle_ok = true;
      if (cert_oracle) {
        for (int n = 0; n < s.num_asps() && s.num_mus() <= 3; ++n) {
          const auto grid =
              qm::oracle::grid_best_response(s, n, rep.rewards_star);
          const auto solved =
              qm::best_response(s, n, rep.rewards_star, cfg.solver);
          const double gap = (solved.utility - grid.utility) /
                             std::max(1.0, std::abs(grid.utility));
          const bool ok = gap >= -0.01;
          oracle_ok = oracle_ok && ok;
          std::cout << "oracle ASP " << (n + 1) << ": solver utility "
                    << hn::format_value(solved.utility) << ", grid "
                    << hn::format_value(grid.utility) << " -> "
                    << (ok ? "OK" : "MISMATCH") << "\n";
        }
      }
      return (cert.certified && oracle_ok) ? 0 : 2;
    }
    if (*gen_cmd) {
      const qm::Scenario s = hn::generate_scenario(gen_seed, gen_n, gen_m);
      hn::save_scenario(s, gen_out);
      std::cout << "wrote " << gen_out << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 1;
}
