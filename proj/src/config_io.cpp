#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <json.hpp>

#include "qoemarket/harness.hpp"

namespace qoemarket::harness {

using nlohmann::json;

namespace {

double number_or_quantity(const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return parse_quantity(v.get<std::string>());
  throw std::invalid_argument("config: expected a number or a unit string, got " +
                              v.dump());
}

Channel channel_from_json(const json& v) {
  if (v.is_object())
    return Channel::from_gain(number_or_quantity(v.at("gain")),
                              number_or_quantity(v.at("tx_power")),
                              number_or_quantity(v.at("noise_power")));
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s.size() > 2 && s.substr(s.size() - 2) == "dB")
      return Channel::from_snr_db(parse_quantity(s.substr(0, s.size() - 2)));
    return Channel{parse_quantity(s)};
  }
  return Channel{number_or_quantity(v)};
}

Range range_from_json(const json& v) {
  if (!v.is_array() || v.size() != 2)
    throw std::invalid_argument("config: a range must be [lo, hi]");
  return Range{number_or_quantity(v[0]), number_or_quantity(v[1])};
}

void apply_ranges(const json& j, GeneratorRanges& r) {
  if (j.contains("tokens")) r.tokens = range_from_json(j["tokens"]);
  if (j.contains("f_max")) r.f_max = range_from_json(j["f_max"]);
  if (j.contains("b_max")) r.b_max = range_from_json(j["b_max"]);
  if (j.contains("kappa")) r.kappa = range_from_json(j["kappa"]);
  if (j.contains("snr_db")) r.snr_db = range_from_json(j["snr_db"]);
  if (j.contains("k_examples"))
    r.k_examples = j["k_examples"].get<std::vector<int>>();
  if (j.contains("xi")) r.xi = number_or_quantity(j["xi"]);
  if (j.contains("c_f")) r.c_f = number_or_quantity(j["c_f"]);
  if (j.contains("c_b")) r.c_b = number_or_quantity(j["c_b"]);
  if (j.contains("mu")) r.mu = number_or_quantity(j["mu"]);
  if (j.contains("r_min")) r.r_min = number_or_quantity(j["r_min"]);
  if (j.contains("r_max")) r.r_max = number_or_quantity(j["r_max"]);
  if (j.contains("eta")) r.gap.eta = number_or_quantity(j["eta"]);
  if (j.contains("zeta0")) r.gap.zeta0 = number_or_quantity(j["zeta0"]);
  if (j.contains("upsilon")) r.gap.upsilon = number_or_quantity(j["upsilon"]);
}

SchemeId scheme_from_string(const std::string& raw) {
  std::string name = raw;
  double arg = 0;
  bool has_arg = false;
  const auto colon = raw.find(':');
  const auto paren = raw.find('(');
  if (colon != std::string::npos) {
    name = raw.substr(0, colon);
    arg = std::stod(raw.substr(colon + 1));
    has_arg = true;
  } else if (paren != std::string::npos && raw.back() == ')') {
    name = raw.substr(0, paren);
    arg = std::stod(raw.substr(paren + 1, raw.size() - paren - 2));
    has_arg = true;
  }
  if (name == "Proposed" || name == "proposed") return SchemeId::proposed();
  if (name == "Ratio" || name == "ratio")
    return SchemeId::ratio(has_arg ? arg : 5.0);
  if (name == "Token" || name == "token")
    return SchemeId::token(has_arg ? arg : 0.0);
  if (name == "OnlyF" || name == "onlyf" || name == "only_f")
    return SchemeId::only_f();
  if (name == "OnlyB" || name == "onlyb" || name == "only_b")
    return SchemeId::only_b();
  throw std::invalid_argument("config: unknown scheme '" + raw + "'");
}

StepSchedule schedule_from_string(const std::string& raw) {
  const auto colon = raw.find(':');
  if (colon == std::string::npos)
    throw std::invalid_argument(
        "config: schedule must be 'diminishing:u' or 'constant:delta'");
  const std::string kind = raw.substr(0, colon);
  const double value = std::stod(raw.substr(colon + 1));
  if (kind == "diminishing") return StepSchedule::diminishing(value);
  if (kind == "constant") return StepSchedule::constant(value);
  throw std::invalid_argument("config: unknown schedule kind '" + kind + "'");
}

json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("config: cannot open '" + path + "' for reading");
  json j;
  in >> j;
  return j;
}

}  // namespace

double parse_quantity(const std::string& text) {
  static const std::pair<const char*, double> units[] = {
      {"TFLOPS", 1e12}, {"GFLOPS", 1e9}, {"MFLOPS", 1e6}, {"FLOPS", 1.0},
      {"GHz", 1e9},     {"MHz", 1e6},    {"kHz", 1e3},    {"Hz", 1.0},
      {"ms", 1e-3},     {"s", 1.0}};
  std::string s = text;
  s.erase(std::remove_if(s.begin(), s.end(),
                         [](unsigned char c) { return std::isspace(c); }),
          s.end());
  if (s.empty()) throw std::invalid_argument("parse_quantity: empty value");
  if (s.size() > 2 && s.substr(s.size() - 2) == "dB")
    return std::pow(10.0, std::stod(s.substr(0, s.size() - 2)) / 10.0);
  for (const auto& [suffix, scale] : units) {
    const size_t len = std::strlen(suffix);
    if (s.size() > len && s.compare(s.size() - len, len, suffix) == 0) {
      size_t pos = 0;
      const double value = std::stod(s.substr(0, s.size() - len), &pos);
      if (pos != s.size() - len)
        throw std::invalid_argument("parse_quantity: bad number in '" + text +
                                    "'");
      return value * scale;
    }
  }
  size_t pos = 0;
  const double value = std::stod(s, &pos);
  if (pos != s.size())
    throw std::invalid_argument("parse_quantity: unknown unit in '" + text +
                                "'");
  return value;
}

Scenario load_scenario(const std::string& path) {
  const json j = read_file(path);
  Scenario s;
  s.seed = j.value("seed", 0ULL);
  for (const json& a : j.at("asps")) {
    AspParams p;
    p.kappa = number_or_quantity(a.at("kappa"));
    p.xi = number_or_quantity(a.at("xi"));
    p.c_f = number_or_quantity(a.at("c_f"));
    p.c_b = number_or_quantity(a.at("c_b"));
    p.f_max = number_or_quantity(a.at("f_max"));
    p.b_max = number_or_quantity(a.at("b_max"));
    s.asps.push_back(p);
  }
  for (const json& u : j.at("mus")) {
    MuParams p;
    p.mu = number_or_quantity(u.at("mu"));
    p.r_min = number_or_quantity(u.at("r_min"));
    p.r_max = number_or_quantity(u.at("r_max"));
    s.mus.push_back(p);
  }
  const int nc = s.num_asps(), mc = s.num_mus();
  s.demands = Grid<Demand>(nc, mc);
  s.channels = Grid<Channel>(nc, mc);
  const json& dg = j.at("demands");
  const json& cg = j.at("channels");
  if (static_cast<int>(dg.size()) != nc || static_cast<int>(cg.size()) != nc)
    throw std::invalid_argument("scenario: demand/channel grids must have one "
                                "row per ASP");
  for (int n = 0; n < nc; ++n) {
    if (static_cast<int>(dg[n].size()) != mc ||
        static_cast<int>(cg[n].size()) != mc)
      throw std::invalid_argument(
          "scenario: demand/channel rows must have one entry per MU");
    for (int m = 0; m < mc; ++m) {
      const json& d = dg[n][m];
      s.demands(n, m).theta_hat = d.at("theta_hat").get<double>();
      s.demands(n, m).x_in = d.at("x_in").get<int>();
      s.demands(n, m).x_out = d.at("x_out").get<int>();
      s.channels(n, m) = channel_from_json(cg[n][m]);
    }
  }
  s.validate();
  return s;
}

void save_scenario(const Scenario& s, const std::string& path) {
  json j;
  j["seed"] = s.seed;
  j["asps"] = json::array();
  for (const AspParams& a : s.asps)
    j["asps"].push_back({{"kappa", a.kappa},
                         {"xi", a.xi},
                         {"c_f", a.c_f},
                         {"c_b", a.c_b},
                         {"f_max", a.f_max},
                         {"b_max", a.b_max}});
  j["mus"] = json::array();
  for (const MuParams& u : s.mus)
    j["mus"].push_back({{"mu", u.mu}, {"r_min", u.r_min}, {"r_max", u.r_max}});
  j["demands"] = json::array();
  j["channels"] = json::array();
  for (int n = 0; n < s.num_asps(); ++n) {
    json drow = json::array(), crow = json::array();
    for (int m = 0; m < s.num_mus(); ++m) {
      drow.push_back({{"theta_hat", s.demands(n, m).theta_hat},
                      {"x_in", s.demands(n, m).x_in},
                      {"x_out", s.demands(n, m).x_out}});
      crow.push_back(s.channels(n, m).snr);
    }
    j["demands"].push_back(std::move(drow));
    j["channels"].push_back(std::move(crow));
  }
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("scenario: cannot open '" + path +
                             "' for writing");
  out << j.dump(2) << "\n";
}

ExperimentSpec load_experiment_spec(const std::string& path) {
  const json j = read_file(path);
  ExperimentSpec spec;
  spec.name = j.value("name", spec.name);
  spec.seed = j.value("seed", spec.seed);
  spec.out_dir = j.value("out", spec.out_dir);
  spec.override_ranges = j.value("override_ranges", false);

  if (j.contains("scenario")) {
    const json& sc = j["scenario"];
    if (sc.contains("file")) spec.scenario_file = sc["file"].get<std::string>();
    spec.use_case_study = sc.value("case_study", false);
    if (sc.contains("generate")) {
      spec.num_asps = sc["generate"].value("num_asps", spec.num_asps);
      spec.num_mus = sc["generate"].value("num_mus", spec.num_mus);
    }
  }
  if (j.contains("ranges")) apply_ranges(j["ranges"], spec.ranges);
  if (j.contains("sweep")) {
    spec.sweep = sweep_var_from_string(j["sweep"].at("var").get<std::string>());
    for (const json& v : j["sweep"].at("values"))
      spec.sweep_values.push_back(number_or_quantity(v));
  }
  if (j.contains("schemes")) {
    spec.schemes.clear();
    for (const json& v : j["schemes"])
      spec.schemes.push_back(scheme_from_string(v.get<std::string>()));
  }
  if (j.contains("game")) {
    const json& g = j["game"];
    if (g.contains("schedule"))
      spec.game.schedule = schedule_from_string(g["schedule"].get<std::string>());
    if (g.contains("epsilon")) spec.game.epsilon = g["epsilon"].get<double>();
    if (g.contains("max_rounds"))
      spec.game.max_rounds = g["max_rounds"].get<int>();
    if (g.contains("dead_band"))
      spec.game.dead_band = g["dead_band"].get<double>();
    if (g.contains("initial")) {
      const std::string init = g["initial"].get<std::string>();
      if (init == "random")
        spec.game.randomize_initial = true;
      else if (init != "midpoint")
        throw std::invalid_argument("config: game.initial must be 'midpoint' "
                                    "or 'random'");
    }
    spec.game.init_seed = g.value("init_seed", spec.seed);
    if (g.contains("certify")) spec.game.certify_after = g["certify"].get<bool>();
  }
  spec.validate();
  return spec;
}

std::string spec_to_json(const ExperimentSpec& spec) {
  json j;  // nlohmann::json orders keys, so the dump is canonical
  j["name"] = spec.name;
  j["seed"] = spec.seed;
  j["scenario"] = {{"case_study", spec.use_case_study},
                   {"file", spec.scenario_file ? *spec.scenario_file : ""},
                   {"num_asps", spec.num_asps},
                   {"num_mus", spec.num_mus}};
  j["ranges"] = {{"tokens", {spec.ranges.tokens.lo, spec.ranges.tokens.hi}},
                 {"f_max", {spec.ranges.f_max.lo, spec.ranges.f_max.hi}},
                 {"b_max", {spec.ranges.b_max.lo, spec.ranges.b_max.hi}},
                 {"kappa", {spec.ranges.kappa.lo, spec.ranges.kappa.hi}},
                 {"snr_db", {spec.ranges.snr_db.lo, spec.ranges.snr_db.hi}},
                 {"k_examples", spec.ranges.k_examples},
                 {"xi", spec.ranges.xi},
                 {"c_f", spec.ranges.c_f},
                 {"c_b", spec.ranges.c_b},
                 {"mu", spec.ranges.mu},
                 {"r_min", spec.ranges.r_min},
                 {"r_max", spec.ranges.r_max},
                 {"eta", spec.ranges.gap.eta},
                 {"zeta0", spec.ranges.gap.zeta0},
                 {"upsilon", spec.ranges.gap.upsilon}};
  j["sweep"] = {{"var", to_string(spec.sweep)}, {"values", spec.sweep_values}};
  std::vector<std::string> scheme_names;
  for (const SchemeId& s : spec.schemes) scheme_names.push_back(s.name());
  j["schemes"] = scheme_names;
  j["game"] = {
      {"schedule", spec.game.schedule.kind == StepSchedule::Kind::diminishing
                       ? "diminishing:" + std::to_string(spec.game.schedule.u)
                       : "constant:" + std::to_string(spec.game.schedule.delta_hat)},
      {"epsilon", spec.game.epsilon},
      {"max_rounds", spec.game.max_rounds},
      {"dead_band", spec.game.dead_band},
      {"initial", spec.game.randomize_initial ? "random" : "midpoint"},
      {"init_seed", spec.game.init_seed}};
  j["override_ranges"] = spec.override_ranges;
  return j.dump();
}

}  // namespace qoemarket::harness
