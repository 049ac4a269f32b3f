#include "qsi/envision.hpp"

#include "qsi/cover.hpp"

#include <algorithm>
#include <functional>

namespace qsi {

Envisionment enumerate_states(const Model& m, const ExoBindings& exo) {
  Envisionment env;
  env.exogenous = exo;
  std::vector<Variable> free_vars;
  for (const auto& v : m.variables()) {
    if (v.hidden()) continue;
    if (v.exogenous()) {
      if (!exo.contains(v.name)) throw ContractViolation("exogenous variable '" + v.name + "' is unbound");
      continue;
    }
    free_vars.push_back(v);
  }
  if (free_vars.size() > kMaxEnvisionVariables) {
    throw SizeLimitError("envisionment over " + std::to_string(free_vars.size()) + " measured variables exceeds the limit of " +
                         std::to_string(kMaxEnvisionVariables));
  }
  std::sort(free_vars.begin(), free_vars.end(), [](const Variable& a, const Variable& b) { return a.name < b.name; });
  for (const auto& v : free_vars) env.variables.push_back(v.name);

  ConstraintNetwork net(m);
  auto pins = net.no_pins();
  for (const auto& [name, value] : exo) {
    int idx = net.index_of(name);
    if (idx >= 0) pins[idx] = value;
  }
  std::vector<int> targets;
  for (const auto& v : free_vars) targets.push_back(net.index_of(v.name));
  net.for_each_projection(targets, pins, [&](std::span<const QualValue> values) {
    QualState s;
    for (std::size_t i = 0; i < values.size(); ++i) s.bindings[free_vars[i].name] = values[i];
    for (const auto& [name, value] : exo) s.bindings[name] = value;
    env.states.push_back(std::move(s));
  });
  std::sort(env.states.begin(), env.states.end());
  env.states.erase(std::unique(env.states.begin(), env.states.end()), env.states.end());
  return env;
}

bool IsoclineClass::critical() const {
  return std::all_of(side.begin(), side.end(), [](const auto& kv) { return kv.second == IsoclineSide::on; });
}

IsoclineClass classify_isocline(const QualState& s, const IsoclineSpec& spec) {
  IsoclineClass out;
  std::string key;
  for (const auto& name : spec.state_variables) {
    auto v = s.get(name);
    if (!v) throw ContractViolation("state does not bind state variable '" + name + "'");
    IsoclineSide side = v->dir == Dir::inc ? IsoclineSide::positive
                        : v->dir == Dir::dec ? IsoclineSide::negative
                                             : IsoclineSide::on;
    out.side[name] = side;
    if (!key.empty()) key += ',';
    key += side == IsoclineSide::positive ? "+" : side == IsoclineSide::negative ? "-" : "0";
    if (side == IsoclineSide::on) {
      out.labels.push_back("on-" + name + "-isocline");
    } else {
      out.labels.push_back(name + "-isocline:" + (side == IsoclineSide::positive ? "positive" : "negative"));
    }
  }
  if (out.critical()) {
    out.region = "critical-point";
  } else if (auto it = spec.regions.find(key); it != spec.regions.end()) {
    out.region = it->second;
  } else {
    out.region = key;
  }
  return out;
}

}  // namespace qsi
