#include "qsi/systems.hpp"

#include "text_util.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <set>

namespace qsi {

std::string_view to_string(SystemId id) {
  switch (id) {
    case SystemId::utube: return "utube";
    case SystemId::coupled: return "coupled";
    case SystemId::cascaded: return "cascaded";
    case SystemId::spring: return "spring";
  }
  return "?";
}

SystemId parse_system_id(std::string_view text) {
  for (auto id : kAllSystems) {
    if (to_string(id) == text) return id;
  }
  throw ContractViolation("unknown system '" + std::string(text) + "' (expected utube, coupled, cascaded or spring)");
}

std::vector<Variable> SystemDefinition::measured_variables() const {
  std::vector<Variable> out;
  for (const auto& v : target.variables()) {
    if (!v.hidden()) out.push_back(v);
  }
  return out;
}

std::vector<QualState> SystemDefinition::truth_states() const {
  std::vector<QualState> out;
  for (const auto& s : envisionment_truth) out.push_back(s.state);
  return out;
}

int SystemDefinition::number_of(const QualState& s) const {
  for (const auto& ns : envisionment_truth) {
    if (ns.state == s) return ns.number;
  }
  return 0;
}

const QualState& SystemDefinition::state(int number) const {
  for (const auto& ns : envisionment_truth) {
    if (ns.number == number) return ns.state;
  }
  throw ContractViolation("system " + std::string(to_string(id)) + " has no state " + std::to_string(number));
}

SearchConfig SystemDefinition::search_config(double theta) const {
  SearchConfig cfg;
  cfg.variables = measured_variables();
  cfg.modes = modes;
  cfg.spec = spec;
  cfg.spec.theta = theta;
  return cfg;
}

namespace {

// Values in `order`, e.g. "zero/inc pos/dec neg/inc".
NumberedState numbered(int number, const std::vector<std::string>& order, std::string_view values, const ExoBindings& exo) {
  auto tokens = text::split_ws(values);
  if (tokens.size() != order.size()) throw ContractViolation("fixture state arity mismatch");
  NumberedState ns{number, {}};
  for (std::size_t i = 0; i < order.size(); ++i) ns.state.bindings[order[i]] = parse_qual_value(tokens[i]);
  for (const auto& [n, v] : exo) ns.state.bindings[n] = v;
  return ns;
}

// DERIV for each type t whose rate t/T is also a type, ADD and MINUS per type, M+ per unordered pair.
// A rate-typed variable is introduced only as the rate of a DERIV; elsewhere rate slots take
// existing variables.
std::vector<ModeDecl> default_modes(const std::vector<Dimension>& types) {
  std::set<Dimension> set(types.begin(), types.end());
  std::set<Dimension> rates;
  for (const auto& t : types) {
    if (set.contains(t / Dimension::time())) rates.insert(t / Dimension::time());
  }
  auto arg = [&](const Dimension& d) {
    return ArgMode{rates.contains(d) ? ArgMode::Kind::input : ArgMode::Kind::output, d};
  };
  std::vector<ModeDecl> modes;
  for (const auto& t : types) {
    if (rates.contains(t / Dimension::time())) {
      modes.push_back({ConstraintKind::DERIV, {arg(t), ArgMode{ArgMode::Kind::output, t / Dimension::time()}}});
    }
  }
  for (const auto& t : types) modes.push_back({ConstraintKind::ADD, {arg(t), arg(t), arg(t)}});
  for (const auto& t : types) modes.push_back({ConstraintKind::MINUS, {arg(t), arg(t)}});
  for (std::size_t i = 0; i < types.size(); ++i) {
    for (std::size_t j = i; j < types.size(); ++j) {
      modes.push_back({ConstraintKind::M_PLUS, {arg(types[i]), arg(types[j])}});
    }
  }
  return modes;
}

void finish(SystemDefinition& d, std::string_view model_text, const std::vector<Dimension>& types) {
  auto mf = parse_model_text(model_text);
  d.target = std::move(mf.model);
  d.exogenous = mf.exogenous;
  d.modes = default_modes(types);
  d.spec.target_size = d.target.size();
  d.spec.exogenous = d.exogenous;
  for (const auto& v : d.target.variables()) {
    if (!v.hidden()) d.spec.measured.push_back(v.name);
  }
}

SystemDefinition make_utube() {
  SystemDefinition d;
  d.id = SystemId::utube;
  finish(d, R"(
var h1 nonnegative L state
var h2 nonnegative L state
var qx unrestricted L*T^-1 measured-algebraic
var mqx unrestricted L*T^-1 measured-algebraic
var Delta_h unrestricted L intermediate
DERIV(h1, mqx)
DERIV(h2, qx)
ADD(h2, Delta_h, h1)
M+(Delta_h, qx)
MINUS(qx, mqx)
)",
         {Dimension::parse("L"), Dimension::parse("L*T^-1")});
  const std::vector<std::string> order{"h1", "h2", "qx", "mqx"};
  d.envisionment_truth = {
      numbered(1, order, "zero/std zero/std zero/std zero/std", d.exogenous),
      numbered(2, order, "zero/inc pos/dec neg/inc pos/dec", d.exogenous),
      numbered(3, order, "pos/dec zero/inc pos/dec neg/inc", d.exogenous),
      numbered(4, order, "pos/dec pos/inc pos/dec neg/inc", d.exogenous),
      numbered(5, order, "pos/std pos/std zero/std zero/std", d.exogenous),
      numbered(6, order, "pos/inc pos/dec neg/inc pos/dec", d.exogenous),
  };
  d.kernel_sets = {{2, 3}, {2, 4}, {2, 5}, {3, 5}, {3, 6}, {4, 5}, {4, 6}, {5, 6}};
  d.spec.language_limits = {{ConstraintKind::DERIV, 2}, {ConstraintKind::ADD, 1}, {ConstraintKind::MINUS, 1},
                            {ConstraintKind::M_PLUS, 1}};
  d.coefficients = {{"k", 1.0}};
  d.ode_state = {"h1", "h2"};
  d.isoclines.state_variables = {"h1", "h2"};
  d.isoclines.regions = {{"-,+", "h1-above-h2"}, {"+,-", "h2-above-h1"}};
  return d;
}

SystemDefinition make_coupled() {
  SystemDefinition d;
  d.id = SystemId::coupled;
  finish(d, R"(
var qi nonnegative L*T^-1 exogenous
var h1 nonnegative L state
var h2 nonnegative L state
var qx unrestricted L*T^-1 measured-algebraic
var qo nonnegative L*T^-1 measured-algebraic
var h1_dot unrestricted L*T^-1 derivative
var h2_dot unrestricted L*T^-1 derivative
var Delta_h unrestricted L intermediate
fix qi zero/std
DERIV(h1, h1_dot)
DERIV(h2, h2_dot)
ADD(h2, Delta_h, h1)
M+(Delta_h, qx)
M+(h2, qo)
ADD(h2_dot, qo, qx)
ADD(qx, h1_dot, qi)
)",
         {Dimension::parse("L"), Dimension::parse("L*T^-1")});
  const std::vector<std::string> order{"h1", "h2", "qx", "qo"};
  d.envisionment_truth = {
      numbered(1, order, "zero/std zero/std zero/std zero/std", d.exogenous),
      numbered(2, order, "zero/inc pos/dec neg/inc pos/dec", d.exogenous),
      numbered(3, order, "pos/dec zero/inc pos/dec zero/inc", d.exogenous),
      numbered(4, order, "pos/dec pos/inc pos/dec pos/inc", d.exogenous),
      numbered(6, order, "pos/inc pos/dec neg/inc pos/dec", d.exogenous),
      numbered(7, order, "pos/dec pos/std pos/dec pos/std", d.exogenous),
      numbered(8, order, "pos/std pos/dec zero/inc pos/dec", d.exogenous),
      numbered(9, order, "pos/dec pos/dec pos/dec pos/dec", d.exogenous),
      numbered(10, order, "pos/dec pos/dec pos/std pos/dec", d.exogenous),
      numbered(11, order, "pos/dec pos/dec pos/inc pos/dec", d.exogenous),
  };
  d.kernel_sets = {{2, 7}, {3, 8}, {4, 8}, {6, 7}, {7, 8}};
  for (auto pair : std::vector<std::array<int, 2>>{{2, 3}, {2, 4}, {3, 6}, {4, 6}}) {
    for (int third : {9, 10, 11}) d.kernel_sets.push_back({pair[0], pair[1], third});
  }
  d.spec.language_limits = {{ConstraintKind::DERIV, 2}, {ConstraintKind::ADD, 3}, {ConstraintKind::MINUS, 0},
                            {ConstraintKind::M_PLUS, 2}};
  d.coefficients = {{"k1", 1.0}, {"k2", 1.0}, {"qi", 0.0}};
  d.ode_state = {"h1", "h2"};
  d.isoclines.state_variables = {"h1", "h2"};
  d.isoclines.regions = {{"-,-", "between-isoclines"}, {"-,+", "below-h2-isocline"}, {"+,-", "above-h1-isocline"}};
  return d;
}

SystemDefinition make_cascaded() {
  SystemDefinition d;
  d.id = SystemId::cascaded;
  finish(d, R"(
var qi nonnegative L*T^-1 exogenous
var h1 nonnegative L state
var h2 nonnegative L state
var qx nonnegative L*T^-1 measured-algebraic
var qo nonnegative L*T^-1 measured-algebraic
var h1_dot unrestricted L*T^-1 derivative
var h2_dot unrestricted L*T^-1 derivative
fix qi pos/std
DERIV(h1, h1_dot)
DERIV(h2, h2_dot)
M+(h1, qx)
M+(h2, qo)
ADD(h2_dot, qo, qx)
ADD(qx, h1_dot, qi)
)",
         {Dimension::parse("L"), Dimension::parse("L*T^-1")});
  const std::vector<std::string> order{"h1", "h2", "qx", "qo"};
  d.envisionment_truth = {
      numbered(1, order, "zero/inc zero/std zero/inc zero/std", d.exogenous),
      numbered(2, order, "zero/inc pos/dec zero/inc pos/dec", d.exogenous),
      numbered(3, order, "pos/dec zero/inc pos/dec zero/inc", d.exogenous),
      numbered(4, order, "pos/dec pos/dec pos/dec pos/dec", d.exogenous),
      numbered(5, order, "pos/dec pos/std pos/dec pos/std", d.exogenous),
      numbered(6, order, "pos/dec pos/inc pos/dec pos/inc", d.exogenous),
      numbered(7, order, "pos/std zero/inc pos/std zero/inc", d.exogenous),
      numbered(8, order, "pos/std pos/dec pos/std pos/dec", d.exogenous),
      numbered(9, order, "pos/std pos/std pos/std pos/std", d.exogenous),
      numbered(10, order, "pos/std pos/inc pos/std pos/inc", d.exogenous),
      numbered(11, order, "pos/inc zero/inc pos/inc zero/inc", d.exogenous),
      numbered(12, order, "pos/inc pos/dec pos/inc pos/dec", d.exogenous),
      numbered(13, order, "pos/inc pos/std pos/inc pos/std", d.exogenous),
      numbered(14, order, "pos/inc pos/inc pos/inc pos/inc", d.exogenous),
  };
  d.kernel_sets = {{1, 3, 4}, {1, 3, 5}, {1, 3, 8}, {1, 3, 9}, {1, 7, 4}, {1, 7, 5}, {1, 7, 8}, {1, 7, 9}};
  d.spec.language_limits = {{ConstraintKind::DERIV, 2}, {ConstraintKind::ADD, 2}, {ConstraintKind::MINUS, 0},
                            {ConstraintKind::M_PLUS, 2}};
  d.coefficients = {{"k1", 1.0}, {"k2", 1.0}, {"qi", 1.0}};
  d.ode_state = {"h1", "h2"};
  d.isoclines.state_variables = {"h1", "h2"};
  return d;
}

SystemDefinition make_spring() {
  SystemDefinition d;
  d.id = SystemId::spring;
  finish(d, R"(
var force unrestricted F exogenous
var disp unrestricted L state
var vel unrestricted L*T^-1 state
var acc unrestricted L*T^-2 measured-algebraic
var H1 unrestricted F intermediate
var H2 unrestricted F intermediate
var H3 unrestricted F intermediate
var H4 unrestricted F intermediate
fix force pos/std
DERIV(disp, vel)
DERIV(vel, acc)
M+(disp, H1)
M+(vel, H2)
M+(acc, H3)
ADD(H1, H2, H4)
ADD(H3, H4, force)
)",
         {Dimension::parse("L"), Dimension::parse("L*T^-1"), Dimension::parse("L*T^-2"), Dimension::parse("F")});
  auto env = enumerate_states(d.target, d.exogenous);
  int n = 0;
  for (const auto& s : env.states) d.envisionment_truth.push_back({++n, s});
  d.spec.language_limits = {{ConstraintKind::DERIV, 2}, {ConstraintKind::ADD, 2}, {ConstraintKind::MINUS, 0},
                            {ConstraintKind::M_PLUS, 3}};
  d.coefficients = {{"m", 1.0}, {"c", 1.0}, {"k", 1.0}, {"F", 1.0}};
  d.ode_state = {"disp", "vel"};
  d.isoclines.state_variables = {"disp", "vel"};
  return d;
}

double coef(const std::map<std::string, double>& c, const std::string& name) {
  auto it = c.find(name);
  if (it == c.end()) throw ContractViolation("missing coefficient '" + name + "'");
  return it->second;
}

}  // namespace

const SystemDefinition& builtin(SystemId id) {
  static const std::array<SystemDefinition, 4> defs{make_utube(), make_coupled(), make_cascaded(), make_spring()};
  return defs[static_cast<std::size_t>(id)];
}

void OdeParams::validate() const {
  if (!(step > 0)) throw ContractViolation("integration step must be positive");
  if (!(duration >= step)) throw ContractViolation("duration must be at least one step");
  if (!(noise_sigma_scale >= 0)) throw ContractViolation("noise scale must be non-negative");
  for (const auto& [name, v] : coefficients) {
    // The coupled/cascaded inflow may be zero; every rate constant must be positive.
    if (name == "qi" || name == "F") {
      if (!(v >= 0)) throw ContractViolation("coefficient '" + name + "' must be non-negative");
    } else if (!(v > 0)) {
      throw ContractViolation("coefficient '" + name + "' must be positive");
    }
  }
}

Trace simulate(SystemId id, const OdeParams& params) {
  params.validate();
  const auto& def = builtin(id);
  auto c = def.coefficients;
  for (const auto& [name, v] : params.coefficients) {
    if (!c.contains(name)) throw ContractViolation("unknown coefficient '" + name + "' for " + std::string(to_string(id)));
    c[name] = v;
  }
  for (const auto& [name, v] : params.initial) {
    if (std::find(def.ode_state.begin(), def.ode_state.end(), name) == def.ode_state.end()) {
      throw ContractViolation("'" + name + "' is not a state variable of " + std::string(to_string(id)));
    }
  }
  using State = std::array<double, 2>;
  auto rhs = [&](const State& x) -> State {
    switch (id) {
      case SystemId::utube: {
        double q = coef(c, "k") * (x[0] - x[1]);
        return {-q, q};
      }
      case SystemId::coupled: {
        double q = coef(c, "k1") * (x[0] - x[1]);
        return {coef(c, "qi") - q, q - coef(c, "k2") * x[1]};
      }
      case SystemId::cascaded: {
        double q = coef(c, "k1") * x[0];
        return {coef(c, "qi") - q, q - coef(c, "k2") * x[1]};
      }
      case SystemId::spring:
        return {x[1], (coef(c, "F") - coef(c, "c") * x[1] - coef(c, "k") * x[0]) / coef(c, "m")};
    }
    return {0, 0};
  };
  auto observe = [&](const State& x) -> std::map<std::string, double> {
    switch (id) {
      case SystemId::utube: {
        double q = coef(c, "k") * (x[0] - x[1]);
        return {{"h1", x[0]}, {"h2", x[1]}, {"qx", q}, {"mqx", -q}};
      }
      case SystemId::coupled:
        return {{"qi", coef(c, "qi")}, {"h1", x[0]}, {"h2", x[1]}, {"qx", coef(c, "k1") * (x[0] - x[1])},
                {"qo", coef(c, "k2") * x[1]}};
      case SystemId::cascaded:
        return {{"qi", coef(c, "qi")}, {"h1", x[0]}, {"h2", x[1]}, {"qx", coef(c, "k1") * x[0]},
                {"qo", coef(c, "k2") * x[1]}};
      case SystemId::spring:
        return {{"force", coef(c, "F")}, {"disp", x[0]}, {"vel", x[1]}, {"acc", rhs(x)[1]}};
    }
    return {};
  };

  State x{0, 0};
  for (std::size_t i = 0; i < 2; ++i) {
    if (auto it = params.initial.find(def.ode_state[i]); it != params.initial.end()) x[i] = it->second;
  }
  const auto steps = static_cast<std::size_t>(std::llround(params.duration / params.step));
  const double h = params.step;
  Trace t;
  auto record = [&](std::size_t i) {
    t.times.push_back(static_cast<double>(i) * h);
    for (const auto& [name, v] : observe(x)) {
      if (!std::isfinite(v) || std::abs(v) > 1e6) {
        throw InstabilityError("simulation of " + std::string(to_string(id)) + " diverged at t=" + std::to_string(t.times.back()));
      }
      t.series[name].push_back(v);
    }
  };
  record(0);
  for (std::size_t i = 1; i <= steps; ++i) {
    auto add = [](const State& a, const State& b, double s) { return State{a[0] + s * b[0], a[1] + s * b[1]}; };
    State k1 = rhs(x);
    State k2 = rhs(add(x, k1, h / 2));
    State k3 = rhs(add(x, k2, h / 2));
    State k4 = rhs(add(x, k3, h));
    for (std::size_t j = 0; j < 2; ++j) x[j] += h / 6.0 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]);
    record(i);
  }
  if (params.noise_sigma_scale > 0) {
    std::mt19937_64 rng(params.seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (auto& [name, s] : t.series) {
      for (auto& v : s) v += params.noise_sigma_scale * noise(rng);
    }
  }
  return t;
}

std::vector<IsoclineLine> isocline(SystemId id, const std::map<std::string, double>& coefficients) {
  const auto& def = builtin(id);
  auto c = def.coefficients;
  for (const auto& [name, v] : coefficients) c[name] = v;
  auto fmt = [](double v) {
    std::string s = std::to_string(v);
    while (s.size() > 1 && s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
    return s;
  };
  std::vector<IsoclineLine> out;
  switch (id) {
    case SystemId::utube:
      out.push_back({"h1", 1.0, 0.0, false, false, "h2 = h1"});
      out.push_back({"h2", 1.0, 0.0, false, false, "h2 = h1"});
      break;
    case SystemId::coupled: {
      double k1 = coef(c, "k1");
      double k2 = coef(c, "k2");
      double qi = coef(c, "qi");
      // dh1/dt = qi - k1(h2 - h1) = 0 and dh2/dt = k1(h2 - h1) - k2 h2 = 0, as printed.
      out.push_back({"h1", 1.0, qi / k1, false, false, "h2 = h1 + " + fmt(qi / k1)});
      if (k1 == k2) {
        out.push_back({"h2", 0.0, 0.0, true, true, "h1 = 0 (k1 = k2: slope k1/(k1-k2) is singular)"});
      } else {
        double slope = k1 / (k1 - k2);
        out.push_back({"h2", slope, 0.0, false, false, "h2 = " + fmt(slope) + " h1"});
      }
      break;
    }
    case SystemId::cascaded: {
      double k1 = coef(c, "k1");
      double k2 = coef(c, "k2");
      double qi = coef(c, "qi");
      out.push_back({"h1", 0.0, qi / k1, true, false, "h1 = " + fmt(qi / k1)});
      out.push_back({"h2", k1 / k2, 0.0, false, false, "h2 = " + fmt(k1 / k2) + " h1"});
      break;
    }
    case SystemId::spring:
      throw ContractViolation("no isoclines are defined for the spring system");
  }
  return out;
}

}  // namespace qsi
