#include "qsi/cover.hpp"
#include "qsi/envision.hpp"
#include "qsi/equiv.hpp"
#include "qsi/experiments.hpp"
#include "qsi/learner.hpp"
#include "qsi/metabolic.hpp"
#include "qsi/quant2qual.hpp"
#include "qsi/systems.hpp"
#include "qsi/wellposed.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string join_ints(const std::vector<int>& v, const char* sep = ",") {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + std::to_string(v[i]);
  return out;
}

std::string fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct Run {
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  bool verbose = false;
  std::vector<std::string> outputs;

  // Resolves a file name inside the output directory; names escaping it are rejected.
  fs::path path(const std::string& name) const {
    fs::path p(name);
    fs::path base = fs::weakly_canonical(fs::absolute(out_dir));
    fs::path full = fs::weakly_canonical(p.is_absolute() ? p : base / p);
    auto rel = full.lexically_relative(base);
    if (rel.empty() || *rel.begin() == "..") {
      throw UsageError("output '" + name + "' lies outside the output directory " + base.string());
    }
    return full;
  }

  void write(const std::string& name, std::string_view content) {
    auto p = path(name);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    qsi::write_text_file(p.string(), content);
    outputs.push_back(p.lexically_relative(fs::weakly_canonical(fs::absolute(out_dir))).string());
  }

  // Writes to the named file, or to stdout when no name was given.
  void emit(const std::string& name, std::string_view content) {
    if (name.empty()) {
      std::cout << content;
    } else {
      write(name, content);
    }
  }
};

qsi::SystemId system_of(const std::string& name) { return qsi::parse_system_id(name); }

const std::vector<std::string> kSystemNames{"utube", "coupled", "cascaded", "spring"};

std::vector<double> parse_doubles(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw UsageError("expected comma-separated numbers, got '" + text + "'");
    }
  }
  return out;
}

std::map<std::string, double> parse_assignments(const std::vector<std::string>& items) {
  std::map<std::string, double> out;
  for (const auto& item : items) {
    auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError("expected name=value, got '" + item + "'");
    auto v = parse_doubles(item.substr(eq + 1));
    if (v.size() != 1) throw UsageError("expected name=value, got '" + item + "'");
    out[item.substr(0, eq)] = v[0];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Subcommands

struct EnvisionArgs {
  std::string system, model, out, map;
};

int cmd_envision(Run& run, const EnvisionArgs& a) {
  if (a.system.empty() == a.model.empty()) throw UsageError("envision needs exactly one of --system and --model");
  qsi::Envisionment env;
  const qsi::SystemDefinition* def = nullptr;
  if (!a.system.empty()) {
    def = &qsi::builtin(system_of(a.system));
    env = qsi::enumerate_states(def->target, def->exogenous);
  } else {
    auto mf = qsi::read_model_file(a.model);
    env = qsi::enumerate_states(mf.model, mf.exogenous);
  }
  run.emit(a.out, qsi::format_states_csv(env.states));
  std::string map_name = a.map;
  if (map_name.empty() && def && !a.out.empty()) map_name = fs::path(a.out).replace_extension("map.csv").string();
  if (!map_name.empty()) {
    if (!def) throw UsageError("--map needs --system");
    std::string side = "paper_state_id,canonical_state_id\n";
    for (const auto& ns : def->envisionment_truth) {
      auto it = std::find(env.states.begin(), env.states.end(), ns.state);
      side += std::to_string(ns.number) + "," +
              (it == env.states.end() ? std::string("") : std::to_string(it - env.states.begin() + 1)) + "\n";
    }
    run.write(map_name, side);
  }
  if (run.verbose) std::cerr << env.states.size() << " states\n";
  return 0;
}

struct LearnArgs {
  std::string states, system, spec, modes, out;
  std::optional<std::size_t> nodes;
  std::optional<double> theta;
  bool index = false;
};

int cmd_learn(Run& run, const LearnArgs& a) {
  qsi::SearchConfig cfg;
  if (!a.system.empty()) {
    if (!a.spec.empty()) throw UsageError("learn takes --system or --spec, not both");
    cfg = qsi::builtin(system_of(a.system)).search_config();
  } else if (!a.spec.empty()) {
    cfg = qsi::parse_search_config(qsi::read_text_file(a.spec));
  } else {
    throw UsageError("learn needs --system or --spec");
  }
  if (!a.modes.empty()) {
    auto mf = qsi::parse_mode_text(qsi::read_text_file(a.modes));
    cfg.modes = mf.modes;
    for (const auto& [k, n] : mf.limits) cfg.spec.language_limits[k] = n;
  }
  if (cfg.modes.empty()) throw UsageError("no mode declarations given");
  if (a.theta) cfg.spec.theta = *a.theta;
  if (a.nodes) cfg.node_limit = *a.nodes;
  cfg.score.seed = run.seed;
  auto states = qsi::read_states_csv(a.states);

  qsi::SearchResult result;
  if (a.index) {
    qsi::HypothesisIndex index(cfg);
    result = index.search(states, cfg);
  } else {
    result = qsi::bb_search(states, cfg);
  }
  std::string text;
  for (std::size_t i = 0; i < result.models.size(); ++i) {
    text += "# model " + std::to_string(i + 1) + "\n" + qsi::format_model_text(result.models[i], cfg.spec.exogenous) + "\n";
  }
  for (std::size_t i = 0; i < result.models.size(); ++i) {
    const auto& s = result.scores[i];
    json j{{"cost", s.cost()}, {"p", s.p}, {"g", s.g}, {"size", result.models[i].size()},
           {"nodes_explored", result.nodes_explored}};
    text += j.dump() + "\n";
  }
  if (result.exhausted) std::cerr << "warning: node limit reached before the search completed\n";
  if (result.models.empty()) std::cerr << "no acceptable model found\n";
  run.emit(a.out, text);
  return 0;
}

struct SweepArgs {
  std::string system = "utube", mode = "clean", out, curve;
  std::optional<std::size_t> sample;
  std::size_t max_size = 0;
  std::optional<double> theta;
  std::size_t nodes = 200'000;
};

int cmd_sweep(Run& run, const SweepArgs& a) {
  qsi::SweepConfig cfg;
  cfg.system = system_of(a.system);
  cfg.mode = a.mode == "noisy" ? qsi::SweepMode::noisy : qsi::SweepMode::noise_free;
  cfg.sample_per_size = a.sample;
  cfg.max_subset_size = a.max_size;
  cfg.theta = a.theta;
  cfg.seed = run.seed;
  cfg.jobs = run.jobs;
  cfg.node_limit = a.nodes;
  if (run.verbose) {
    cfg.progress = [](std::size_t done, std::size_t total) {
      if (done == total || done % 100 == 0) std::cerr << "\r" << done << "/" << total << (done == total ? "\n" : "") << std::flush;
    };
  }
  const auto& def = qsi::builtin(cfg.system);
  auto records = qsi::sweep(cfg);
  std::string csv = "subset;k;precision;result_size;nodes\n";
  for (const auto& r : records) {
    csv += join_ints(r.subset) + ";" + std::to_string(r.k) + ";" + fmt(r.precision) + ";" + std::to_string(r.result_size) +
           ";" + std::to_string(r.nodes_explored) + "\n";
  }
  run.emit(a.out, csv);
  if (!a.curve.empty()) {
    std::string c = "size,avg_precision\n";
    for (const auto& p : qsi::size_averages(records, def.envisionment_truth.size())) {
      c += std::to_string(p.size) + "," + fmt(p.avg_precision) + "\n";
    }
    run.write(a.curve, c);
  }
  return 0;
}

struct KernelArgs {
  std::string system = "utube", out;
  std::size_t max_size = 0;
};

int cmd_kernels(Run& run, const KernelArgs& a) {
  const auto id = system_of(a.system);
  const auto& def = qsi::builtin(id);
  auto kernels = qsi::find_kernels(id, a.max_size, run.jobs);
  std::string text;
  for (const auto& k : kernels) text += "[" + join_ints(k, ", ") + "]\n";
  std::size_t found = 0;
  std::set<std::vector<int>> got(kernels.begin(), kernels.end());
  for (const auto& k : def.kernel_sets) {
    auto sorted = k;
    std::sort(sorted.begin(), sorted.end());
    if (got.contains(sorted)) ++found;
  }
  text += "# " + std::to_string(kernels.size()) + " minimal sets; " + std::to_string(found) + " of " +
          std::to_string(def.kernel_sets.size()) + " listed sets are minimal\n";
  run.emit(a.out, text);
  return 0;
}

struct ConvertArgs {
  std::string trace, reference, system, out, report;
  std::optional<double> eps;
  std::optional<std::size_t> window;
};

int cmd_convert(Run& run, const ConvertArgs& a) {
  auto trace = qsi::read_trace_csv(a.trace);
  qsi::ConversionParams cp;
  cp.eps = a.eps;
  cp.window = a.window;
  if (!a.system.empty()) {
    const auto& def = qsi::builtin(system_of(a.system));
    for (const auto& v : def.target.variables()) cp.domains.emplace(v.name, v.domain);
    for (const auto& [n, v] : def.exogenous) cp.fixed.emplace(n, v);
    for (const auto& c : def.target.constraints()) {
      if (c.kind == qsi::ConstraintKind::DERIV && trace.series.contains(c.args[0]) && trace.series.contains(c.args[1])) {
        cp.derivative_of.emplace(c.args[1], c.args[0]);
      }
    }
    if (a.reference.empty()) cp.reference = def.truth_states();
  }
  if (!a.reference.empty()) cp.reference = qsi::read_states_csv(a.reference);
  auto rep = qsi::trace_to_states(trace, cp);
  run.emit(a.out, qsi::format_states_csv(rep.states));
  json j{{"states", rep.states.size()}};
  if (cp.reference) {
    j["tp"] = rep.true_positive;
    j["fp"] = rep.false_positive;
    j["fn"] = rep.false_negative;
  }
  if (!a.report.empty()) {
    run.write(a.report, j.dump() + "\n");
  } else {
    (a.out.empty() ? std::cerr : std::cout) << j.dump() << "\n";
  }
  return 0;
}

struct SimulateArgs {
  std::string system = "utube", init, out;
  double noise = 0;
  double duration = 20.0;
  double step = 0.01;
  std::vector<std::string> coef;
};

int cmd_simulate(Run& run, const SimulateArgs& a) {
  const auto id = system_of(a.system);
  const auto& def = qsi::builtin(id);
  qsi::OdeParams op;
  auto init = parse_doubles(a.init);
  if (init.size() != def.ode_state.size()) {
    throw UsageError("--init needs " + std::to_string(def.ode_state.size()) + " values for " + a.system);
  }
  for (std::size_t i = 0; i < init.size(); ++i) op.initial[def.ode_state[i]] = init[i];
  op.coefficients = parse_assignments(a.coef);
  op.noise_sigma_scale = a.noise;
  op.duration = a.duration;
  op.step = a.step;
  op.seed = run.seed;
  run.emit(a.out, qsi::format_trace_csv(qsi::simulate(id, op)));
  return 0;
}

struct QuantArgs {
  std::string system = "utube", out;
  bool no_learn = false;
  std::optional<double> clean_theta, noisy_theta;
};

int cmd_quantexp(Run& run, const QuantArgs& a) {
  qsi::QuantConfig cfg;
  cfg.system = system_of(a.system);
  cfg.seed = run.seed;
  cfg.learn = !a.no_learn;
  if (a.clean_theta) cfg.clean_theta = *a.clean_theta;
  if (a.noisy_theta) cfg.noisy_theta = *a.noisy_theta;
  auto rep = qsi::quantitative_experiment(cfg);
  std::string text = "noise,init,true,false,total\n";
  for (const auto& r : rep.rows) {
    std::string init;
    for (std::size_t i = 0; i < r.init.size(); ++i) init += (i ? " " : "") + fmt(r.init[i], 1);
    text += fmt(r.noise, 2) + ",(" + init + ")," + std::to_string(r.true_states) + "," + std::to_string(r.false_states) +
            "," + std::to_string(r.states) + "\n";
  }
  text += "\nnoise,pooled_states,pooled_true,precision,result_size\n";
  for (const auto& l : rep.levels) {
    text += fmt(l.noise, 2) + "," + std::to_string(l.pooled_states) + "," + std::to_string(l.pooled_true) + "," +
            (cfg.learn ? fmt(l.precision, 4) : std::string("-")) + "," + std::to_string(l.result_size) + "\n";
  }
  run.emit(a.out, text);
  return 0;
}

struct FixtureArgs {
  std::string system = "utube";
  bool dump = false;
};

int cmd_fixture(Run& run, const FixtureArgs& a) {
  const auto& def = qsi::builtin(system_of(a.system));
  if (!a.dump) {
    std::cout << a.system << ": " << def.target.size() << " constraints, " << def.envisionment_truth.size()
              << " envisionment states, " << def.kernel_sets.size() << " listed kernel sets\n";
    std::cout << qsi::format_model_text(def.target, def.exogenous);
    return 0;
  }
  run.write(a.system + ".model", qsi::format_model_text(def.target, def.exogenous));
  std::string numbered = "# published state numbers in row order:";
  for (const auto& ns : def.envisionment_truth) numbered += " " + std::to_string(ns.number);
  run.write(a.system + ".states.csv", qsi::format_states_csv(def.truth_states()));
  run.write(a.system + ".search", numbered + "\n" + qsi::format_search_config(def.search_config()));
  for (const auto& o : run.outputs) std::cout << o << "\n";
  return 0;
}

struct WellposedArgs {
  std::string model, states, spec;
};

int cmd_wellposed(Run&, const WellposedArgs& a) {
  auto mf = qsi::read_model_file(a.model);
  auto states = qsi::read_states_csv(a.states);
  qsi::WellPosedSpec spec;
  if (!a.spec.empty()) {
    spec = qsi::parse_search_config(qsi::read_text_file(a.spec)).spec;
  } else {
    spec.target_size = mf.model.size();
    spec.measured = mf.model.measured();
    spec.exogenous = mf.exogenous;
  }
  auto violations = qsi::all_violations(mf.model, spec, states);
  for (const auto& v : violations) std::cout << qsi::to_string(v.rule) << ": " << v.detail << "\n";
  if (violations.empty()) std::cout << "acceptable\n";
  return violations.empty() ? 0 : 1;
}

struct BalanceArgs {
  std::string formulas;
  std::vector<std::string> exclude = qsi::kUbiquitousMetabolites;
  std::size_t max_substrates = 3, max_products = 3;
  bool list = false;
};

int cmd_balance(Run&, const BalanceArgs& a) {
  auto formulas = a.formulas.empty() ? qsi::glycolysis_formulas() : qsi::parse_formulas(qsi::read_text_file(a.formulas));
  const std::size_t given = formulas.size();
  formulas = qsi::without(std::move(formulas), a.exclude);
  auto reactions = qsi::balanced_reactions(formulas, a.max_substrates, a.max_products);
  std::size_t unordered = 0;
  for (const auto& r : reactions) {
    if (r.substrates < r.products) ++unordered;
  }
  if (a.list) {
    for (const auto& r : reactions) std::cout << r.str() << "\n";
  }
  std::cout << "formulas: " << given << " given, " << formulas.size() << " balanced over\n";
  std::cout << "balanced reactions: " << reactions.size() << " (" << unordered
            << " up to direction); the published glycolysis figure is 172\n";
  return 0;
}

struct SearchArgs {
  std::string reactions, states;
  std::size_t max_size = 8;
  bool reversible = false;
};

int cmd_pathway(Run&, const SearchArgs& a) {
  auto reactions = qsi::parse_reactions(qsi::read_text_file(a.reactions));
  std::vector<qsi::QualState> states;
  if (!a.states.empty()) states = qsi::read_states_csv(a.states);
  std::set<std::string> mets;
  for (const auto& r : reactions) {
    mets.insert(r.substrates.begin(), r.substrates.end());
    mets.insert(r.products.begin(), r.products.end());
  }
  qsi::PathwayOptions opt;
  opt.reversible = a.reversible;
  auto survivors = qsi::pathway_search(reactions, {mets.begin(), mets.end()}, states, a.max_size, opt);
  for (const auto& c : survivors) {
    std::string line;
    for (const auto& r : c.reactions) line += (line.empty() ? "" : "; ") + r.str();
    std::cout << line << "\n";
  }
  std::cout << "# " << survivors.size() << " surviving reaction sets\n";
  return 0;
}

struct PlausibleArgs {
  std::string reactions, bonds;
};

int cmd_plausible(Run&, const PlausibleArgs& a) {
  auto reactions = qsi::parse_reactions(qsi::read_text_file(a.reactions));
  auto bonds = qsi::parse_bond_graphs(qsi::read_text_file(a.bonds));
  std::size_t kept = 0;
  for (const auto& r : reactions) {
    bool ok = qsi::plausible(r, bonds);
    kept += ok ? 1 : 0;
    std::cout << (ok ? "plausible   " : "implausible ") << r.str() << "\n";
  }
  std::cout << "# " << kept << " of " << reactions.size() << " plausible\n";
  return 0;
}

struct GlycolysisArgs {
  bool print_model = false;
};

int cmd_glycolysis(Run&, const GlycolysisArgs& a) {
  auto m = qsi::glycolysis_model();
  if (a.print_model) std::cout << qsi::format_model_text(m) << "\n";
  auto structure = qsi::check_structure(m);
  auto order = qsi::causal_order(m);
  bool covered = qsi::covers(m, qsi::glycolysis_state());
  std::cout << "constraints: " << m.size() << "\n";
  std::cout << "structure: " << (structure.empty() ? "ok" : "violated") << "\n";
  for (const auto& v : structure) std::cout << "  " << qsi::to_string(v.rule) << ": " << v.detail << "\n";
  std::cout << "causal order: " << (order.ok ? "ok" : order.detail) << "\n";
  std::cout << "covers the published glycolysis state: " << (covered ? "yes" : "no") << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

std::string unquote(std::string v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
  return v;
}

// Flat view of a subcommand's resolved options; arrays become JSON arrays.
json resolved_config(CLI::App& sub) {
  json cfg = json::object();
  std::istringstream in(sub.config_to_str(true, false));
  for (std::string line; std::getline(in, line);) {
    auto eq = line.find('=');
    if (eq == std::string::npos || line.empty() || line[0] == '[' || line[0] == '#') continue;
    auto key = line.substr(0, eq);
    auto value = unquote(line.substr(eq + 1));
    if (!value.empty() && value.front() == '[') {
      json items = json::array();
      std::stringstream ss(value.substr(1, value.size() - 2));
      for (std::string item; std::getline(ss, item, ',');) {
        while (!item.empty() && item.front() == ' ') item.erase(item.begin());
        if (!item.empty()) items.push_back(unquote(item));
      }
      cfg[key] = items;
    } else {
      cfg[key] = unquote(value);
    }
  }
  return cfg;
}

void write_manifest(Run& run, const std::string& command, const std::vector<std::string>& argv, CLI::App& sub,
                    double seconds) {
  json j;
  j["command"] = command;
  j["argv"] = argv;
  j["version"] = kVersion;
  j["seed"] = run.seed;
  j["jobs"] = run.jobs;
  j["out_dir"] = fs::weakly_canonical(fs::absolute(run.out_dir)).string();
  j["config"] = resolved_config(sub);
  j["config_hash"] = fnv1a(j["config"].dump());
  j["outputs"] = run.outputs;
  j["wall_seconds"] = seconds;
  auto name = command;
  std::replace(name.begin(), name.end(), ' ', '-');
  qsi::write_text_file(run.path(name + ".manifest.json").string(), j.dump(2) + "\n");
}

int dispatch(int argc, char** argv);

// Re-executes the command a manifest records, from its resolved options rather than its argv.
int replay(const std::string& manifest, const std::string& into) {
  auto j = json::parse(qsi::read_text_file(manifest));
  std::vector<std::string> args{"qsi",    "--seed", std::to_string(j.at("seed").get<std::uint64_t>()),
                                "--jobs", std::to_string(j.value("jobs", std::size_t{1})),
                                "--out-dir", into.empty() ? j.at("out_dir").get<std::string>() : into};
  std::istringstream words(j.at("command").get<std::string>());
  for (std::string w; words >> w;) args.push_back(w);
  for (const auto& [key, value] : j.at("config").items()) {
    if (value.is_array()) {
      if (value.empty()) continue;
      args.push_back("--" + key);
      for (const auto& item : value) args.push_back(item.get<std::string>());
      continue;
    }
    auto v = value.get<std::string>();
    if (v.empty() || v == "false") continue;
    args.push_back("--" + key);
    if (v != "true") args.push_back(v);
  }
  std::vector<char*> ptrs;
  for (auto& s : args) ptrs.push_back(s.data());
  return dispatch(static_cast<int>(ptrs.size()), ptrs.data());
}

int dispatch(int argc, char** argv) {
  CLI::App app{"Qualitative system identification: envisionment, model learning and experiments"};
  app.set_version_flag("--version", kVersion);
  app.set_config("--config", "", "Read options from a flat key = value file ([subcommand] sections)");
  app.require_subcommand(1);
  Run run;
  app.add_option("--out-dir", run.out_dir, "Directory for every file a run writes")->capture_default_str();
  app.add_option("--seed", run.seed, "Master seed")->capture_default_str();
  app.add_option("--jobs", run.jobs, "Worker threads; results do not depend on it")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_flag("-v,--verbose", run.verbose, "Progress on stderr");
  const auto systems = CLI::IsMember(kSystemNames);

  EnvisionArgs env;
  auto* s_env = app.add_subcommand("envision", "Complete envisionment as a state CSV (state_id,var,qmag,qdir)");
  s_env->add_option("--system", env.system, "Built-in system")->check(systems);
  s_env->add_option("--model", env.model, "Model text file (var/fix lines and constraints)");
  s_env->add_option("--out", env.out, "State CSV (default stdout)");
  s_env->add_option("--map", env.map, "Sidecar paper_state_id,canonical_state_id CSV (default: --out with extension .map.csv)");

  LearnArgs learn;
  auto* s_learn = app.add_subcommand("learn", "Search for cost-minimal well-posed models of a state CSV");
  s_learn->add_option("--states", learn.states, "Training states CSV")->required();
  s_learn->add_option("--system", learn.system, "Use a built-in system's variables, modes and limits")->check(systems);
  s_learn->add_option("--spec", learn.spec, "Search configuration: var/fix, mode/limit and key = value lines");
  s_learn->add_option("--modes", learn.modes, "Mode file (mode/limit lines); extends or replaces the spec's modes");
  s_learn->add_option("--nodes", learn.nodes, "Node limit");
  s_learn->add_option("--theta", learn.theta, "Sufficiency threshold")->check(CLI::Range(0.0, 1.0));
  s_learn->add_flag("--index", learn.index, "Enumerate every acceptable model once and scan it (exhaustive)");
  s_learn->add_option("--out", learn.out, "Output file (default stdout)");

  SweepArgs sw;
  auto* s_sweep = app.add_subcommand("sweep", "Learning runs over subsets of a system's envisionment");
  s_sweep->add_option("--system", sw.system)->check(systems)->capture_default_str();
  s_sweep->add_option("--mode", sw.mode, "clean or noisy")->check(CLI::IsMember({"clean", "noisy"}))->capture_default_str();
  s_sweep->add_option("--sample", sw.sample, "Sample at most K subsets per size");
  s_sweep->add_option("--max-size", sw.max_size, "Largest subset size (0 = all)")->capture_default_str();
  s_sweep->add_option("--theta", sw.theta, "Sufficiency threshold (default 1 clean, 0.7 noisy)")->check(CLI::Range(0.0, 1.0));
  s_sweep->add_option("--nodes", sw.nodes, "Node limit")->capture_default_str();
  s_sweep->add_option("--out", sw.out, "Results CSV: subset;k;precision;result_size;nodes (default stdout)");
  s_sweep->add_option("--curve", sw.curve, "Size-averaged curve CSV: size,avg_precision");

  KernelArgs ker;
  auto* s_ker = app.add_subcommand("kernels", "Minimal state subsets that identify the target exactly");
  s_ker->add_option("--system", ker.system)->check(systems)->capture_default_str();
  s_ker->add_option("--max-size", ker.max_size, "Largest subset size (0 = all)")->capture_default_str();
  s_ker->add_option("--out", ker.out, "Output file (default stdout)");

  ConvertArgs conv;
  auto* s_conv = app.add_subcommand("convert", "Numeric trace CSV (t,var1,...) to qualitative states");
  s_conv->add_option("--trace", conv.trace, "Trace CSV")->required();
  s_conv->add_option("--reference", conv.reference, "Reference envisionment state CSV for TP/FP/FN");
  s_conv->add_option("--system", conv.system, "Take domains, fixed inputs, derivative pairs and reference from a built-in system")
      ->check(systems);
  s_conv->add_option("--eps", conv.eps, "Absolute zero band (default 2% of each series' range)");
  s_conv->add_option("--window", conv.window, "Blackman window length");
  s_conv->add_option("--out", conv.out, "State CSV (default stdout)");
  s_conv->add_option("--report", conv.report, "Report JSON {tp, fp, fn, states}");

  SimulateArgs sim;
  auto* s_sim = app.add_subcommand("simulate", "Integrate a built-in system and write a trace CSV");
  s_sim->add_option("--system", sim.system)->check(systems)->capture_default_str();
  s_sim->add_option("--init", sim.init, "Initial values of the two state variables, e.g. 2,0")->required();
  s_sim->add_option("--noise", sim.noise, "Gaussian noise scale")->check(CLI::IsMember({0.0, 0.01, 0.1, 1.0}))->capture_default_str();
  s_sim->add_option("--duration", sim.duration)->capture_default_str();
  s_sim->add_option("--step", sim.step)->capture_default_str();
  s_sim->add_option("--coef", sim.coef, "Coefficient override name=value (repeatable)");
  s_sim->add_option("--out", sim.out, "Trace CSV (default stdout)");

  QuantArgs qa;
  auto* s_q = app.add_subcommand("quantexp", "Simulate, convert, pool and learn at each noise level");
  s_q->add_option("--system", qa.system)->check(systems)->capture_default_str();
  s_q->add_flag("--no-learn", qa.no_learn, "Report conversion counts only");
  s_q->add_option("--clean-theta", qa.clean_theta)->check(CLI::Range(0.0, 1.0));
  s_q->add_option("--noisy-theta", qa.noisy_theta)->check(CLI::Range(0.0, 1.0));
  s_q->add_option("--out", qa.out, "Output file (default stdout)");

  FixtureArgs fx;
  auto* s_fx = app.add_subcommand("fixture", "Show or export a built-in system");
  s_fx->add_option("--system", fx.system)->check(systems)->capture_default_str();
  s_fx->add_flag("--dump", fx.dump, "Write <system>.model, <system>.states.csv and <system>.search");

  WellposedArgs wp;
  auto* s_wp = app.add_subcommand("wellposed", "List well-posedness violations; exit 0 iff acceptable");
  s_wp->add_option("--model", wp.model)->required();
  s_wp->add_option("--states", wp.states)->required();
  s_wp->add_option("--spec", wp.spec, "Search configuration file (default: the model's own size and measured variables)");

  auto* s_metab = app.add_subcommand("metab", "Metabolic components and pathway candidates");
  s_metab->require_subcommand(1);
  BalanceArgs bal;
  auto* s_bal = s_metab->add_subcommand("balance", "Count element-balanced reactions");
  s_bal->add_option("--formulas", bal.formulas, "Formula file name,C:6;H:12 (default: glycolysis set)");
  s_bal->add_option("--exclude", bal.exclude, "Metabolites left out as ubiquitous")->capture_default_str();
  s_bal->add_option("--max-substrates", bal.max_substrates)->capture_default_str();
  s_bal->add_option("--max-products", bal.max_products)->capture_default_str();
  s_bal->add_flag("--list", bal.list, "Print every reaction");
  SearchArgs ps;
  auto* s_ps = s_metab->add_subcommand("search", "Connected reaction sets whose models cover every observed state");
  s_ps->add_option("--reactions", ps.reactions, "Reaction lines A + B -> C")->required();
  s_ps->add_option("--states", ps.states, "Observed state CSV over Xc/Xf variables");
  s_ps->add_option("--max-size", ps.max_size)->capture_default_str();
  s_ps->add_flag("--reversible", ps.reversible);
  PlausibleArgs pl;
  auto* s_pl = s_metab->add_subcommand("plausible", "Bond-break filter: at most one broken bond per substrate");
  s_pl->add_option("--reactions", pl.reactions)->required();
  s_pl->add_option("--bonds", pl.bonds, "Bond graphs NAME: C1-C2 C2-O3")->required();
  GlycolysisArgs gl;
  auto* s_gl = s_metab->add_subcommand("glycolysis", "Expand the glycolysis model and check it");
  s_gl->add_flag("--print-model", gl.print_model);

  std::string manifest, into;
  auto* s_replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  s_replay->add_option("manifest", manifest)->required();
  s_replay->add_option("--into", into, "Output directory (default: the recorded one)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (s_replay->parsed()) {
    try {
      return replay(manifest, into);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }

  const auto start = std::chrono::steady_clock::now();
  CLI::App* leaf = app.get_subcommands().front();
  std::string command = leaf->get_name();
  while (!leaf->get_subcommands().empty()) {
    leaf = leaf->get_subcommands().front();
    command += " " + leaf->get_name();
  }
  int code = 0;
  try {
    fs::create_directories(run.out_dir);
    if (s_env->parsed()) code = cmd_envision(run, env);
    else if (s_learn->parsed()) code = cmd_learn(run, learn);
    else if (s_sweep->parsed()) code = cmd_sweep(run, sw);
    else if (s_ker->parsed()) code = cmd_kernels(run, ker);
    else if (s_conv->parsed()) code = cmd_convert(run, conv);
    else if (s_sim->parsed()) code = cmd_simulate(run, sim);
    else if (s_q->parsed()) code = cmd_quantexp(run, qa);
    else if (s_fx->parsed()) code = cmd_fixture(run, fx);
    else if (s_wp->parsed()) code = cmd_wellposed(run, wp);
    else if (s_bal->parsed()) code = cmd_balance(run, bal);
    else if (s_ps->parsed()) code = cmd_pathway(run, ps);
    else if (s_pl->parsed()) code = cmd_plausible(run, pl);
    else if (s_gl->parsed()) code = cmd_glycolysis(run, gl);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(run, command, {argv, argv + argc}, *leaf, secs);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const qsi::GuardError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) { return dispatch(argc, argv); }
