#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qoemarket/asp_solver.hpp"
#include "qoemarket/baselines.hpp"
#include "qoemarket/harness.hpp"
#include "qoemarket/model.hpp"
#include "qoemarket/mu_game.hpp"
#include "qoemarket/oracle.hpp"

namespace py = pybind11;
using namespace qoemarket;

namespace {

std::vector<std::vector<double>> grid_rows(const Grid<double>& g) {
  std::vector<std::vector<double>> rows(g.rows(),
                                        std::vector<double>(g.cols()));
  for (int n = 0; n < g.rows(); ++n)
    for (int m = 0; m < g.cols(); ++m) rows[n][m] = g(n, m);
  return rows;
}

Grid<double> grid_from_rows(const std::vector<std::vector<double>>& rows) {
  const int nc = static_cast<int>(rows.size());
  const int mc = nc ? static_cast<int>(rows[0].size()) : 0;
  Grid<double> g(nc, mc);
  for (int n = 0; n < nc; ++n) {
    if (static_cast<int>(rows[n].size()) != mc)
      throw std::invalid_argument("matrix rows must have equal length");
    for (int m = 0; m < mc; ++m) g(n, m) = rows[n][m];
  }
  return g;
}

}  // namespace

PYBIND11_MODULE(_qoemarket, mod) {
  mod.doc() = "QoE-driven incentive market between mobile users and edge AIGC "
              "service providers: best responses, the reward game, baselines "
              "and the experiment harness.";

  py::register_exception<InfeasibleError>(mod, "InfeasibleError");

  py::class_<Grid<double>>(mod, "Matrix")
      .def(py::init([](const std::vector<std::vector<double>>& rows) {
        return grid_from_rows(rows);
      }))
      .def_property_readonly("rows", &Grid<double>::rows)
      .def_property_readonly("cols", &Grid<double>::cols)
      .def("__getitem__",
           [](const Grid<double>& g, std::pair<int, int> nm) {
             return g(nm.first, nm.second);
           })
      .def("__setitem__",
           [](Grid<double>& g, std::pair<int, int> nm, double v) {
             g(nm.first, nm.second) = v;
           })
      .def("tolist", &grid_rows);

  py::class_<Allocation>(mod, "Allocation")
      .def_readonly("f", &Allocation::f)
      .def_readonly("b", &Allocation::b);

  py::class_<GapBoundParams>(mod, "GapBoundParams")
      .def(py::init<>())
      .def(py::init([](double eta, double zeta0, double upsilon, int k) {
             return GapBoundParams{eta, zeta0, upsilon, k};
           }),
           py::arg("eta"), py::arg("zeta0"), py::arg("upsilon") = 1.0,
           py::arg("k_examples") = 1)
      .def_readwrite("eta", &GapBoundParams::eta)
      .def_readwrite("zeta0", &GapBoundParams::zeta0)
      .def_readwrite("upsilon", &GapBoundParams::upsilon)
      .def_readwrite("k_examples", &GapBoundParams::k_examples);
  mod.def("gap_bound", &gap_bound, py::arg("params"));
  mod.def("gap_bound_ratio", &gap_bound_ratio, py::arg("params"));

  py::class_<AccuracyLookup>(mod, "AccuracyLookup")
      .def(py::init<>())
      .def(py::init([](const GapBoundParams& base) {
             return AccuracyLookup{base};
           }),
           py::arg("base"))
      .def("k_for_theta", &AccuracyLookup::k_for_theta)
      .def("theta_for_k", &AccuracyLookup::theta_for_k)
      .def_static("canonical_pairs", &AccuracyLookup::canonical_pairs);

  py::class_<Demand>(mod, "Demand")
      .def(py::init([](double theta_hat, int x_in, int x_out) {
             return Demand{theta_hat, x_in, x_out};
           }),
           py::arg("theta_hat"), py::arg("x_in"), py::arg("x_out"))
      .def_readwrite("theta_hat", &Demand::theta_hat)
      .def_readwrite("x_in", &Demand::x_in)
      .def_readwrite("x_out", &Demand::x_out);

  py::class_<Channel>(mod, "Channel")
      .def(py::init([](double snr) { return Channel{snr}; }), py::arg("snr"))
      .def_static("from_snr_db", &Channel::from_snr_db)
      .def_static("from_gain", &Channel::from_gain, py::arg("gain"),
                  py::arg("tx_power"), py::arg("noise_power"))
      .def_readwrite("snr", &Channel::snr);

  py::class_<AspParams>(mod, "AspParams")
      .def(py::init<>())
      .def_readwrite("kappa", &AspParams::kappa)
      .def_readwrite("xi", &AspParams::xi)
      .def_readwrite("c_f", &AspParams::c_f)
      .def_readwrite("c_b", &AspParams::c_b)
      .def_readwrite("f_max", &AspParams::f_max)
      .def_readwrite("b_max", &AspParams::b_max);

  py::class_<MuParams>(mod, "MuParams")
      .def(py::init<>())
      .def_readwrite("mu", &MuParams::mu)
      .def_readwrite("r_min", &MuParams::r_min)
      .def_readwrite("r_max", &MuParams::r_max);

  py::class_<Scenario>(mod, "Scenario")
      .def(py::init<>())
      .def_readwrite("asps", &Scenario::asps)
      .def_readwrite("mus", &Scenario::mus)
      .def_readwrite("seed", &Scenario::seed)
      .def_property_readonly("num_asps", &Scenario::num_asps)
      .def_property_readonly("num_mus", &Scenario::num_mus)
      .def("demand", [](const Scenario& s, int n, int m) { return s.demands(n, m); })
      .def("set_demand",
           [](Scenario& s, int n, int m, const Demand& d) { s.demands(n, m) = d; })
      .def("channel",
           [](const Scenario& s, int n, int m) { return s.channels(n, m); })
      .def("set_channel",
           [](Scenario& s, int n, int m, const Channel& c) { s.channels(n, m) = c; })
      .def("validate", &Scenario::validate)
      .def("midpoint_rewards", &Scenario::midpoint_rewards);

  mod.def("token_cost_sum", &token_cost_sum, py::arg("x_in"), py::arg("x_out"));
  mod.def("compute_load", &compute_load, py::arg("asp"), py::arg("demand"));
  mod.def("comm_load", &comm_load, py::arg("demand"), py::arg("channel"));
  mod.def("qoe", &qoe, py::arg("asp"), py::arg("demand"), py::arg("channel"),
          py::arg("f"), py::arg("b"));
  mod.def("asp_utility", &asp_utility, py::arg("scenario"), py::arg("n"),
          py::arg("rewards"), py::arg("alloc"));
  mod.def("mu_utility", &mu_utility, py::arg("scenario"), py::arg("m"),
          py::arg("rewards"), py::arg("alloc"));

  py::class_<BestResponseConfig> brc(mod, "BestResponseConfig");
  py::enum_<BestResponseConfig::Mode>(brc, "Mode")
      .value("joint", BestResponseConfig::Mode::joint)
      .value("fix_b_equal", BestResponseConfig::Mode::fix_b_equal)
      .value("fix_f_equal", BestResponseConfig::Mode::fix_f_equal);
  brc.def(py::init<>())
      .def_readwrite("multiplier_tol", &BestResponseConfig::multiplier_tol)
      .def_readwrite("ascent_tol", &BestResponseConfig::ascent_tol)
      .def_readwrite("max_iters", &BestResponseConfig::max_iters)
      .def_readwrite("mode", &BestResponseConfig::mode);

  py::class_<BestResponseResult>(mod, "BestResponseResult")
      .def_readonly("f", &BestResponseResult::f)
      .def_readonly("b", &BestResponseResult::b)
      .def_readonly("utility", &BestResponseResult::utility)
      .def_readonly("lambda_f", &BestResponseResult::lambda_f)
      .def_readonly("lambda_b", &BestResponseResult::lambda_b)
      .def_readonly("f_budget_active", &BestResponseResult::f_budget_active)
      .def_readonly("b_budget_active", &BestResponseResult::b_budget_active)
      .def_readonly("c1_active", &BestResponseResult::c1_active)
      .def_readonly("kkt_residual", &BestResponseResult::kkt_residual)
      .def_readonly("used_ascent_fallback",
                    &BestResponseResult::used_ascent_fallback);

  mod.def("interior_optimum", &interior_optimum, py::arg("reward"),
          py::arg("compute_load"), py::arg("comm_load"), py::arg("c_f"),
          py::arg("c_b"));
  mod.def("best_response", &best_response, py::arg("scenario"), py::arg("n"),
          py::arg("rewards"), py::arg("config") = BestResponseConfig{});
  mod.def("best_response_all", &best_response_all, py::arg("scenario"),
          py::arg("rewards"), py::arg("config") = BestResponseConfig{});

  py::class_<StepSchedule>(mod, "StepSchedule")
      .def_static("diminishing", &StepSchedule::diminishing, py::arg("u"))
      .def_static("constant", &StepSchedule::constant, py::arg("delta_hat"))
      .def_static("constant_levels", &StepSchedule::constant_levels,
                  py::arg("r_min"), py::arg("r_max"), py::arg("levels"))
      .def("step", &StepSchedule::step, py::arg("round"));

  py::class_<GameConfig>(mod, "GameConfig")
      .def(py::init<>())
      .def_readwrite("schedule", &GameConfig::schedule)
      .def_readwrite("epsilon", &GameConfig::epsilon)
      .def_readwrite("max_rounds", &GameConfig::max_rounds)
      .def_readwrite("initial_rewards", &GameConfig::initial_rewards)
      .def_readwrite("randomize_initial", &GameConfig::randomize_initial)
      .def_readwrite("init_seed", &GameConfig::init_seed)
      .def_readwrite("dead_band", &GameConfig::dead_band)
      .def_readwrite("solver", &GameConfig::solver)
      .def_readwrite("certify_after", &GameConfig::certify_after);

  py::class_<CertificationResult>(mod, "CertificationResult")
      .def_readonly("certified", &CertificationResult::certified)
      .def_readonly("worst_improvement", &CertificationResult::worst_improvement)
      .def_readonly("worst_mu", &CertificationResult::worst_mu)
      .def_readonly("worst_asp", &CertificationResult::worst_asp)
      .def_readonly("worst_reward", &CertificationResult::worst_reward);

  py::class_<EquilibriumReport>(mod, "EquilibriumReport")
      .def_readonly("rewards_star", &EquilibriumReport::rewards_star)
      .def_readonly("alloc_star", &EquilibriumReport::alloc_star)
      .def_readonly("mu_utilities", &EquilibriumReport::mu_utilities)
      .def_readonly("asp_utilities", &EquilibriumReport::asp_utilities)
      .def_readonly("rounds_used", &EquilibriumReport::rounds_used)
      .def_readonly("converged", &EquilibriumReport::converged)
      .def_readonly("utility_gap_trajectory",
                    &EquilibriumReport::utility_gap_trajectory)
      .def_readonly("certification", &EquilibriumReport::certification);

  mod.def("run_game", &run_game, py::arg("scenario"), py::arg("config"));
  mod.def("finite_diff_update", &finite_diff_update, py::arg("scenario"),
          py::arg("config"));
  mod.def("certify_epsilon_ne", &certify_epsilon_ne, py::arg("scenario"),
          py::arg("rewards"), py::arg("probe_delta"), py::arg("epsilon"),
          py::arg("grid_points") = 20,
          py::arg("solver") = BestResponseConfig{});

  py::class_<SchemeId>(mod, "SchemeId")
      .def_static("proposed", &SchemeId::proposed)
      .def_static("ratio", &SchemeId::ratio, py::arg("r_total"),
                  py::arg("split") = SchemeId::RatioSplit::equal)
      .def_static("token", &SchemeId::token, py::arg("rho") = 0.0)
      .def_static("only_f", &SchemeId::only_f)
      .def_static("only_b", &SchemeId::only_b)
      .def("name", &SchemeId::name);
  py::enum_<SchemeId::RatioSplit>(mod, "RatioSplit")
      .value("equal", SchemeId::RatioSplit::equal)
      .value("load_proportional", SchemeId::RatioSplit::load_proportional);

  py::class_<MarketMetrics>(mod, "MarketMetrics")
      .def_readonly("f_usage_ratio", &MarketMetrics::f_usage_ratio)
      .def_readonly("b_usage_ratio", &MarketMetrics::b_usage_ratio)
      .def_readonly("avg_mu_cost", &MarketMetrics::avg_mu_cost)
      .def_readonly("avg_asp_cost", &MarketMetrics::avg_asp_cost)
      .def_readonly("avg_mu_utility", &MarketMetrics::avg_mu_utility)
      .def_readonly("avg_asp_utility", &MarketMetrics::avg_asp_utility)
      .def("mean_f_usage", &MarketMetrics::mean_f_usage)
      .def("mean_b_usage", &MarketMetrics::mean_b_usage);

  py::class_<SchemeResult>(mod, "SchemeResult")
      .def_readonly("rewards", &SchemeResult::rewards)
      .def_readonly("alloc", &SchemeResult::alloc)
      .def_readonly("metrics", &SchemeResult::metrics)
      .def_readonly("report", &SchemeResult::report);

  mod.def("calibrate_token_rho", &calibrate_token_rho, py::arg("scenario"));
  mod.def("compute_metrics", &compute_metrics, py::arg("scenario"),
          py::arg("rewards"), py::arg("alloc"));
  mod.def("run_scheme", &run_scheme, py::arg("scenario"), py::arg("scheme"),
          py::arg("config"));

  mod.def("generate_scenario", &harness::generate_scenario, py::arg("seed"),
          py::arg("num_asps"), py::arg("num_mus"),
          py::arg("ranges") = harness::GeneratorRanges{});
  mod.def("case_study_scenario", &harness::case_study_scenario,
          py::arg("ranges") = harness::GeneratorRanges{});
  mod.def("load_scenario", &harness::load_scenario, py::arg("path"));
  mod.def("save_scenario", &harness::save_scenario, py::arg("scenario"),
          py::arg("path"));

  py::class_<harness::GeneratorRanges>(mod, "GeneratorRanges")
      .def(py::init<>())
      .def_readwrite("xi", &harness::GeneratorRanges::xi)
      .def_readwrite("c_f", &harness::GeneratorRanges::c_f)
      .def_readwrite("c_b", &harness::GeneratorRanges::c_b)
      .def_readwrite("mu", &harness::GeneratorRanges::mu)
      .def_readwrite("r_min", &harness::GeneratorRanges::r_min)
      .def_readwrite("r_max", &harness::GeneratorRanges::r_max);

  mod.attr("__version__") = harness::kVersion;
}
