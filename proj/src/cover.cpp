#include "qsi/cover.hpp"

#include <algorithm>
#include <bit>
#include <numeric>

namespace qsi {

namespace {

SignSet dir_set(Dir d) { return SignSet{as_sign(d)}; }

bool check_sum(std::span<const QualValue> inputs, QualValue out) {
  SignSet mag{Sign::zero};
  SignSet dir{Sign::zero};
  for (auto v : inputs) {
    mag = sign_add(mag, SignSet{v.mag});
    dir = sign_add(dir, dir_set(v.dir));
  }
  return mag.contains(out.mag) && dir.contains(as_sign(out.dir));
}

// Product rule: d(x1*...*xn) = sum_i x_i' * prod_{j!=i} x_j.
bool check_prod(std::span<const QualValue> inputs, QualValue out) {
  Sign mag = Sign::pos;
  for (auto v : inputs) mag = sign_mul(mag, v.mag);
  if (mag != out.mag) return false;
  SignSet dir{Sign::zero};
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    Sign term = as_sign(inputs[i].dir);
    for (std::size_t j = 0; j < inputs.size(); ++j) {
      if (j != i) term = sign_mul(term, inputs[j].mag);
    }
    dir = sign_add(dir, SignSet{term});
  }
  return dir.contains(as_sign(out.dir));
}

}  // namespace

bool check_constraint(ConstraintKind kind, std::span<const QualValue> a) {
  switch (kind) {
    case ConstraintKind::DERIV:
      return as_sign(a[0].dir) == a[1].mag;
    case ConstraintKind::MINUS:
    case ConstraintKind::M_MINUS:
      return a[1].mag == negate(a[0].mag) && a[1].dir == negate(a[0].dir);
    case ConstraintKind::M_PLUS:
      return a[0] == a[1];
    case ConstraintKind::ADD:
      return check_sum(a.first(2), a[2]);
    case ConstraintKind::SUB: {
      // c = a - b, i.e. a = b + c
      const QualValue in[2] = {a[1], a[2]};
      return check_sum(in, a[0]);
    }
    case ConstraintKind::SUM:
      return check_sum(a.first(a.size() - 1), a.back());
    case ConstraintKind::MULT:
    case ConstraintKind::PROD:
      return check_prod(a.first(a.size() - 1), a.back());
  }
  return false;
}

bool check_constraint(const Constraint& c, const QualState& s) {
  std::vector<QualValue> values;
  values.reserve(c.args.size());
  for (const auto& name : c.args) {
    auto v = s.get(name);
    if (!v) throw ContractViolation("argument '" + name + "' of " + c.str() + " is unbound");
    values.push_back(*v);
  }
  return check_constraint(c.kind, values);
}

// ---------------------------------------------------------------------------
// ConstraintNetwork

struct ConstraintNetwork::Plan {
  std::vector<int> order;                 // variable visited at each depth
  std::vector<std::vector<int>> checks;   // constraints completed at each depth
  std::size_t prefix = 0;                 // depths belonging to the projected variables
};

ConstraintNetwork::ConstraintNetwork(const Model& m) : variables_(m.variables()) {
  constraints_.reserve(m.size());
  for (const auto& c : m.constraints()) {
    Compiled cc{c.kind, {}};
    for (const auto& a : c.args) {
      int idx = index_of(a);
      if (idx < 0) throw ContractViolation("undeclared variable '" + a + "' in " + c.str());
      cc.args.push_back(idx);
    }
    constraints_.push_back(std::move(cc));
  }
}

int ConstraintNetwork::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < variables_.size(); ++i) {
    if (variables_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

// Greedy ordering: the given variables first, then repeatedly the unplaced variable that
// completes the most constraints, so checks fire as early as possible.
ConstraintNetwork::Plan ConstraintNetwork::plan(std::span<const int> first) const {
  const std::size_t n = variables_.size();
  Plan p;
  std::vector<char> placed(n, 0);
  std::vector<int> missing(constraints_.size());
  std::vector<std::vector<int>> incident(n);
  for (std::size_t ci = 0; ci < constraints_.size(); ++ci) {
    missing[ci] = static_cast<int>(constraints_[ci].args.size());
    for (int a : constraints_[ci].args) incident[a].push_back(static_cast<int>(ci));
  }
  auto place = [&](int v) {
    placed[v] = 1;
    p.order.push_back(v);
    p.checks.emplace_back();
    for (int ci : incident[v]) {
      if (--missing[ci] == 0) p.checks.back().push_back(ci);
    }
  };
  auto place_greedy = [&](const std::vector<int>& pool) {
    std::vector<char> in_pool(n, 0);
    for (int v : pool) in_pool[v] = 1;
    for (std::size_t k = 0; k < pool.size(); ++k) {
      int best = -1;
      std::pair<int, int> best_score{-1, -1};
      for (int v : pool) {
        if (placed[v]) continue;
        int completes = 0;
        int touches = 0;
        for (int ci : incident[v]) {
          if (missing[ci] == 1) ++completes;
          if (missing[ci] < static_cast<int>(constraints_[ci].args.size())) ++touches;
        }
        std::pair<int, int> score{completes, touches};
        if (score > best_score) {
          best_score = score;
          best = v;
        }
      }
      place(best);
    }
  };
  std::vector<int> head(first.begin(), first.end());
  place_greedy(head);
  p.prefix = p.order.size();
  std::vector<int> rest;
  for (std::size_t v = 0; v < n; ++v) {
    if (!placed[v]) rest.push_back(static_cast<int>(v));
  }
  place_greedy(rest);
  return p;
}

namespace {

struct Search {
  const std::vector<Variable>& vars;
  const std::vector<std::pair<ConstraintKind, std::vector<int>>>& cons;
  const std::vector<int>& order;
  const std::vector<std::vector<int>>& checks;
  const ConstraintNetwork::Pins& pins;
  std::vector<QualValue> value;
  std::vector<QualValue> scratch;

  bool consistent(std::size_t depth) {
    for (int ci : checks[depth]) {
      const auto& [kind, args] = cons[ci];
      scratch.clear();
      for (int a : args) scratch.push_back(value[a]);
      if (!check_constraint(kind, scratch)) return false;
    }
    return true;
  }

  template <class F>
  void for_values(int v, F&& f) {
    if (pins[v]) {
      if (domain_admits(vars[v].domain, *pins[v])) f(*pins[v]);
      return;
    }
    for (auto q : domain_values(vars[v].domain)) {
      if (!f(q)) return;
    }
  }

  // Existential search over depths [depth, end).
  bool extend(std::size_t depth) {
    if (depth == order.size()) return true;
    int v = order[depth];
    bool found = false;
    for_values(v, [&](QualValue q) {
      value[v] = q;
      if (consistent(depth) && extend(depth + 1)) found = true;
      return !found;
    });
    return found;
  }
};

}  // namespace

void ConstraintNetwork::for_each_projection(std::span<const int> targets, const Pins& pins,
                                            const std::function<void(std::span<const QualValue>)>& visit) const {
  if (pins.size() != variables_.size()) throw ContractViolation("pin vector size mismatch");
  Plan p = plan(targets);
  std::vector<std::pair<ConstraintKind, std::vector<int>>> cons;
  cons.reserve(constraints_.size());
  for (const auto& c : constraints_) cons.emplace_back(c.kind, c.args);
  Search s{variables_, cons, p.order, p.checks, pins, std::vector<QualValue>(variables_.size()), {}};
  std::vector<QualValue> out(targets.size());

  std::function<void(std::size_t)> enumerate = [&](std::size_t depth) {
    if (depth == p.prefix) {
      if (s.extend(depth)) {
        for (std::size_t i = 0; i < targets.size(); ++i) out[i] = s.value[targets[i]];
        visit(out);
      }
      return;
    }
    int v = p.order[depth];
    s.for_values(v, [&](QualValue q) {
      s.value[v] = q;
      if (s.consistent(depth)) enumerate(depth + 1);
      return true;
    });
  };
  enumerate(0);
}

bool ConstraintNetwork::satisfiable(const Pins& pins) const {
  bool any = false;
  for_each_projection({}, pins, [&](std::span<const QualValue>) { any = true; });
  return any;
}

bool covers(const Model& m, const QualState& s) {
  ConstraintNetwork net(m);
  auto pins = net.no_pins();
  for (std::size_t i = 0; i < net.variable_count(); ++i) {
    const auto& v = net.variable(i);
    if (v.hidden()) continue;
    auto value = s.get(v.name);
    if (!value) throw UnmeasuredVariable("state does not bind measured variable '" + v.name + "'");
    if (!domain_admits(v.domain, *value)) return false;
    pins[i] = *value;
  }
  return net.satisfiable(pins);
}

// ---------------------------------------------------------------------------
// StateSpace / StateSet

StateSpace::StateSpace(std::vector<Variable> vars) : vars_(std::move(vars)) {
  size_ = 1;
  for (const auto& v : vars_) {
    std::vector<int> slots(kQualValueCount, -1);
    int k = 0;
    for (auto q : domain_values(v.domain)) slots[q.code()] = k++;
    slot_of_code_.push_back(std::move(slots));
    size_ *= static_cast<std::size_t>(k);
  }
}

std::size_t StateSpace::index(std::span<const QualValue> values) const {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    int slot = slot_of_code_[i][values[i].code()];
    if (slot < 0) throw ContractViolation("value outside domain of '" + vars_[i].name + "'");
    idx = idx * domain_values(vars_[i].domain).size() + static_cast<std::size_t>(slot);
  }
  return idx;
}

std::optional<std::size_t> StateSpace::index_of(const QualState& s) const {
  std::vector<QualValue> values;
  values.reserve(vars_.size());
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    auto v = s.get(vars_[i].name);
    if (!v) throw UnmeasuredVariable("state does not bind '" + vars_[i].name + "'");
    if (slot_of_code_[i][v->code()] < 0) return std::nullopt;
    values.push_back(*v);
  }
  return index(values);
}

QualState StateSpace::decode(std::size_t index, const ExoBindings& exo) const {
  QualState s;
  for (std::size_t i = vars_.size(); i-- > 0;) {
    auto values = domain_values(vars_[i].domain);
    s.bindings[vars_[i].name] = values[index % values.size()];
    index /= values.size();
  }
  for (const auto& [name, v] : exo) s.bindings[name] = v;
  return s;
}

std::size_t StateSet::count() const {
  std::size_t n = 0;
  for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

StateSet coverage(const Model& m, const StateSpace& space, const ExoBindings& exo) {
  ConstraintNetwork net(m);
  auto pins = net.no_pins();
  for (const auto& [name, value] : exo) {
    int idx = net.index_of(name);
    if (idx >= 0) pins[idx] = value;
  }
  const auto& vars = space.variables();
  std::vector<int> targets;
  std::vector<std::size_t> target_pos;
  std::vector<std::size_t> free_pos;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    int idx = net.index_of(vars[i].name);
    if (idx >= 0) {
      targets.push_back(idx);
      target_pos.push_back(i);
    } else {
      free_pos.push_back(i);
    }
  }
  StateSet out(space.size());
  std::vector<QualValue> tuple(vars.size());
  std::function<void(std::size_t)> fill_free = [&](std::size_t k) {
    if (k == free_pos.size()) {
      out.insert(space.index(tuple));
      return;
    }
    for (auto q : domain_values(vars[free_pos[k]].domain)) {
      tuple[free_pos[k]] = q;
      fill_free(k + 1);
    }
  };
  net.for_each_projection(targets, pins, [&](std::span<const QualValue> values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!domain_admits(vars[target_pos[i]].domain, values[i])) return;
      tuple[target_pos[i]] = values[i];
    }
    fill_free(0);
  });
  return out;
}

}  // namespace qsi
