#include "qsi/wellposed.hpp"

#include "qsi/cover.hpp"

#include <algorithm>
#include <functional>
#include <set>

namespace qsi {

void WellPosedSpec::validate() const {
  if (!(theta >= 0.0 && theta <= 1.0)) throw ContractViolation("sufficiency threshold must lie in [0,1]");
  if (target_size < 1) throw ContractViolation("target size must be at least 1");
}

std::string_view to_string(Rule r) {
  switch (r) {
    case Rule::size: return "size";
    case Rule::complete: return "complete";
    case Rule::determinate: return "determinate";
    case Rule::language: return "language";
    case Rule::sufficient: return "sufficient";
    case Rule::redundant: return "redundant";
    case Rule::contradictory: return "contradictory";
    case Rule::dimensional: return "dimensional";
    case Rule::single: return "single";
    case Rule::connected: return "connected";
    case Rule::causal: return "causal";
  }
  return "?";
}

namespace {

std::set<std::string> used_variables(const Model& m) {
  std::set<std::string> out;
  for (const auto& c : m.constraints()) out.insert(c.args.begin(), c.args.end());
  return out;
}

Model sub_model(const Model& m, std::initializer_list<const Constraint*> cs) {
  std::vector<Variable> vars;
  std::set<std::string> seen;
  std::vector<Constraint> cons;
  for (const auto* c : cs) {
    for (const auto& a : c->args) {
      if (seen.insert(a).second) vars.push_back(m.at(a));
    }
    cons.push_back(*c);
  }
  return Model(std::move(vars), std::move(cons));
}

}  // namespace

bool dimensionally_consistent(const Constraint& c, const Model& m) {
  auto dim = [&](std::size_t i) -> const Dimension& { return m.at(c.args[i]).dimension; };
  switch (c.kind) {
    case ConstraintKind::ADD:
    case ConstraintKind::SUB:
    case ConstraintKind::SUM:
    case ConstraintKind::MINUS:
      for (std::size_t i = 1; i < c.args.size(); ++i) {
        if (dim(i) != dim(0)) return false;
      }
      return true;
    case ConstraintKind::M_PLUS:
    case ConstraintKind::M_MINUS:
      return true;
    case ConstraintKind::MULT:
    case ConstraintKind::PROD: {
      Dimension prod;
      for (std::size_t i = 0; i + 1 < c.args.size(); ++i) prod = prod * dim(i);
      return prod == dim(c.args.size() - 1);
    }
    case ConstraintKind::DERIV:
      return dim(1) == dim(0) / Dimension::time();
  }
  return false;
}

bool implied_by(const Constraint& c, const Constraint& by, const Model& m) {
  for (const auto& a : c.args) {
    if (std::find(by.args.begin(), by.args.end(), a) == by.args.end()) return false;
  }
  Model sm = sub_model(m, {&by});
  ConstraintNetwork net(sm);
  std::vector<int> targets;
  for (const auto& a : c.args) targets.push_back(net.index_of(a));
  bool implied = true;
  net.for_each_projection(targets, net.no_pins(), [&](std::span<const QualValue> values) {
    if (implied && !check_constraint(c.kind, values)) implied = false;
  });
  return implied;
}

bool jointly_satisfiable(const Constraint& a, const Constraint& b, const Model& m, const ExoBindings& exo) {
  Model sm = sub_model(m, {&a, &b});
  ConstraintNetwork net(sm);
  auto pins = net.no_pins();
  for (const auto& [name, value] : exo) {
    int idx = net.index_of(name);
    if (idx >= 0 && sm.at(name).exogenous()) pins[idx] = value;
  }
  return net.satisfiable(pins);
}

std::vector<Violation> check_syntactic(const Model& m, const WellPosedSpec& spec) {
  std::vector<Violation> out;
  if (m.size() != spec.target_size) {
    out.push_back({Rule::size, std::to_string(m.size()) + " constraints, expected " + std::to_string(spec.target_size)});
  }
  auto used = used_variables(m);
  std::vector<std::string> missing;
  for (const auto& v : spec.measured) {
    if (!used.contains(v)) missing.push_back(v);
  }
  if (!missing.empty()) {
    std::string d = "measured variables not used:";
    for (const auto& v : missing) d += " " + v;
    out.push_back({Rule::complete, d});
  }
  std::size_t endogenous = 0;
  for (const auto& v : used) {
    if (!m.at(v).exogenous()) ++endogenous;
  }
  if (endogenous != m.size()) {
    out.push_back({Rule::determinate, std::to_string(m.size()) + " constraints for " + std::to_string(endogenous) +
                                          " non-exogenous variables"});
  }
  std::map<ConstraintKind, std::size_t> count;
  for (const auto& c : m.constraints()) ++count[c.kind];
  for (const auto& [kind, limit] : spec.language_limits) {
    if (count[kind] > limit) {
      out.push_back({Rule::language, std::to_string(count[kind]) + " instances of " + std::string(to_string(kind)) +
                                         " exceed limit " + std::to_string(limit)});
    }
  }
  return out;
}

std::vector<Violation> check_semantic(const Model& m, const std::vector<QualState>& states, const WellPosedSpec& spec) {
  std::vector<Violation> out;
  if (!states.empty()) {
    std::size_t covered = 0;
    for (const auto& s : states) {
      if (covers(m, s)) ++covered;
    }
    double fraction = static_cast<double>(covered) / static_cast<double>(states.size());
    if (fraction < spec.theta) {
      out.push_back({Rule::sufficient, std::to_string(covered) + "/" + std::to_string(states.size()) +
                                           " states covered, below threshold " + std::to_string(spec.theta)});
    }
  }
  const auto& cs = m.constraints();
  for (std::size_t i = 0; i < cs.size(); ++i) {
    for (std::size_t j = 0; j < cs.size(); ++j) {
      if (i == j) continue;
      // Report a mutually-implying pair once.
      if (implied_by(cs[i], cs[j], m) && !(j < i && implied_by(cs[j], cs[i], m))) {
        out.push_back({Rule::redundant, cs[i].str() + " is implied by " + cs[j].str()});
        break;
      }
    }
  }
  for (std::size_t i = 0; i < cs.size(); ++i) {
    for (std::size_t j = i; j < cs.size(); ++j) {
      if (!jointly_satisfiable(cs[i], cs[j], m, spec.exogenous)) {
        out.push_back({Rule::contradictory, i == j ? cs[i].str() + " is unsatisfiable"
                                                   : cs[i].str() + " contradicts " + cs[j].str()});
      }
    }
  }
  for (const auto& c : cs) {
    if (!dimensionally_consistent(c, m)) out.push_back({Rule::dimensional, c.str() + " is dimensionally inconsistent"});
  }
  return out;
}

std::vector<Violation> check_structure(const Model& m) {
  std::vector<Violation> out;
  const auto& cs = m.constraints();
  if (!cs.empty()) {
    // Union-find over constraints joined by shared variables.
    std::vector<std::size_t> parent(cs.size());
    for (std::size_t i = 0; i < cs.size(); ++i) parent[i] = i;
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
      return parent[x] == x ? x : parent[x] = find(parent[x]);
    };
    std::map<std::string, std::size_t> owner;
    for (std::size_t i = 0; i < cs.size(); ++i) {
      for (const auto& a : cs[i].args) {
        auto [it, fresh] = owner.emplace(a, i);
        if (!fresh) parent[find(i)] = find(it->second);
      }
    }
    std::set<std::size_t> roots;
    for (std::size_t i = 0; i < cs.size(); ++i) roots.insert(find(i));
    if (roots.size() > 1) out.push_back({Rule::single, std::to_string(roots.size()) + " disjoint sub-models"});
  }
  std::map<std::string, std::size_t> occurrences;
  for (const auto& c : cs) {
    for (const auto& a : c.args) ++occurrences[a];
  }
  std::vector<std::string> flapping;
  for (const auto& [name, n] : occurrences) {
    if (n < 2 && !m.at(name).exogenous()) flapping.push_back(name);
  }
  if (!flapping.empty()) {
    std::string d = "variables in only one constraint:";
    for (const auto& v : flapping) d += " " + v;
    out.push_back({Rule::connected, d});
  }
  return out;
}

CausalOrder causal_order(const Model& m) {
  CausalOrder out;
  const auto& cs = m.constraints();
  std::set<std::string> known;
  std::map<std::string, std::size_t> integrand_uses;
  for (const auto& v : m.variables()) {
    if (v.exogenous()) known.insert(v.name);
  }
  for (const auto& c : cs) {
    if (c.kind == ConstraintKind::DERIV) {
      known.insert(c.args[0]);
      ++integrand_uses[c.args[0]];
    }
  }
  for (const auto& [name, n] : integrand_uses) {
    if (n > 1) {
      out.detail = "'" + name + "' is integrated by more than one DERIV";
      return out;
    }
  }
  std::vector<char> done(cs.size(), 0);
  bool progress = true;
  while (progress) {
    progress = false;
    for (std::size_t i = 0; i < cs.size(); ++i) {
      if (done[i] || cs[i].kind == ConstraintKind::DERIV) continue;
      std::vector<std::string> unknown;
      for (const auto& a : cs[i].args) {
        if (!known.contains(a)) unknown.push_back(a);
      }
      if (unknown.empty()) {
        out.detail = cs[i].str() + " relates only already-determined variables";
        out.loop_constraints.push_back(i);
        return out;
      }
      if (unknown.size() == 1) {
        done[i] = 1;
        known.insert(unknown[0]);
        out.schedule.push_back({i, unknown[0]});
        progress = true;
        break;
      }
    }
  }
  std::set<std::string> undetermined;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    if (done[i] || cs[i].kind == ConstraintKind::DERIV) continue;
    out.loop_constraints.push_back(i);
    for (const auto& a : cs[i].args) {
      if (!known.contains(a)) undetermined.insert(a);
    }
  }
  for (std::size_t i = 0; i < cs.size(); ++i) {
    if (cs[i].kind != ConstraintKind::DERIV) continue;
    if (!known.contains(cs[i].args[1])) {
      out.loop_constraints.push_back(i);
      undetermined.insert(cs[i].args[1]);
    }
  }
  if (!out.loop_constraints.empty()) {
    std::sort(out.loop_constraints.begin(), out.loop_constraints.end());
    out.loop_variables.assign(undetermined.begin(), undetermined.end());
    out.detail = "algebraic loop over";
    for (const auto& v : out.loop_variables) out.detail += " " + v;
    return out;
  }
  // A derivative that is not itself integrated may only feed other such derivatives, possibly
  // through hidden variables.
  std::set<std::string> tainted;
  for (const auto& c : cs) {
    if (c.kind == ConstraintKind::DERIV && !integrand_uses.contains(c.args[1])) tainted.insert(c.args[1]);
  }
  const std::set<std::string> rates = tainted;
  for (const auto& step : out.schedule) {
    for (const auto& a : cs[step.constraint].args) {
      if (a == step.output || !tainted.contains(a)) continue;
      const auto* v = m.find(step.output);
      if (!rates.contains(step.output) && !(v && v->hidden())) {
        out.detail = "derivative '" + a + "' determines '" + step.output + "' in " + cs[step.constraint].str();
        out.loop_constraints.push_back(step.constraint);
        return out;
      }
      tainted.insert(step.output);
    }
  }
  for (std::size_t i = 0; i < cs.size(); ++i) {
    if (cs[i].kind == ConstraintKind::DERIV) out.schedule.push_back({i, ""});
  }
  out.ok = true;
  return out;
}

std::vector<Violation> all_violations(const Model& m, const WellPosedSpec& spec, const std::vector<QualState>& states) {
  auto out = check_syntactic(m, spec);
  auto sem = check_semantic(m, states, spec);
  out.insert(out.end(), sem.begin(), sem.end());
  auto st = check_structure(m);
  out.insert(out.end(), st.begin(), st.end());
  auto causal = causal_order(m);
  if (!causal.ok) out.push_back({Rule::causal, causal.detail});
  std::stable_sort(out.begin(), out.end(), [](const Violation& a, const Violation& b) { return a.rule < b.rule; });
  return out;
}

bool acceptable(const Model& m, const WellPosedSpec& spec, const std::vector<QualState>& states) {
  if (m.size() > spec.target_size) return false;
  if (m.size() == spec.target_size) return all_violations(m, spec, states).empty();
  for (const auto& v : check_syntactic(m, spec)) {
    if (v.rule == Rule::language) return false;
  }
  WellPosedSpec partial = spec;
  partial.theta = 0.0;
  return check_semantic(m, {}, partial).empty();
}

}  // namespace qsi
