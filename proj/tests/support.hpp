#pragma once

#include "qsi/cover.hpp"
#include "qsi/model.hpp"
#include "qsi/systems.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

namespace qsi::test {

inline Model model_of(std::string_view text) { return parse_model_text(text).model; }

inline QualValue qv(std::string_view token) { return parse_qual_value(token); }

inline QualState state_of(std::initializer_list<std::pair<std::string, std::string_view>> items) {
  QualState s;
  for (const auto& [name, token] : items) s.bindings[name] = qv(token);
  return s;
}

// Real-valued grid used to search for witnesses of sign relations.
inline constexpr std::array<double, 7> kGrid{-2, -1, -0.5, 0, 0.5, 1, 2};

inline int sgn(double x) { return x > 1e-12 ? 2 : (x < -1e-12 ? 0 : 1); }

// Is there a point on the grid with the given signs for the inputs whose image under f has the
// required sign? Inputs are indexed 0..n-1.
inline bool grid_witness(const std::vector<int>& signs, int out_sign,
                         const std::function<double(const std::vector<double>&)>& f) {
  std::vector<double> x(signs.size());
  std::function<bool(std::size_t)> rec = [&](std::size_t i) -> bool {
    if (i == signs.size()) return sgn(f(x)) == out_sign;
    for (double g : kGrid) {
      if (sgn(g) != signs[i]) continue;
      x[i] = g;
      if (rec(i + 1)) return true;
    }
    return false;
  };
  return rec(0);
}

inline int mag(QualValue v) { return static_cast<int>(v.mag); }
inline int dir(QualValue v) { return static_cast<int>(v.dir); }

// Independent semantics of one constraint, from real witnesses: magnitudes need a witness of the
// relation itself, directions a witness of its time derivative.
inline bool oracle_constraint_uncached(ConstraintKind kind, const std::vector<QualValue>& a) {
  const std::size_t n = a.size();
  auto sum_holds = [&](const std::vector<QualValue>& in, QualValue out) {
    std::vector<int> m, d;
    for (auto v : in) {
      m.push_back(mag(v));
      d.push_back(dir(v));
    }
    auto total = [](const std::vector<double>& x) {
      double s = 0;
      for (double v : x) s += v;
      return s;
    };
    return grid_witness(m, mag(out), total) && grid_witness(d, dir(out), total);
  };
  switch (kind) {
    case ConstraintKind::DERIV:
      return dir(a[0]) == mag(a[1]);
    case ConstraintKind::M_PLUS:
      return mag(a[0]) == mag(a[1]) && dir(a[0]) == dir(a[1]);
    case ConstraintKind::M_MINUS:
    case ConstraintKind::MINUS:
      return mag(a[0]) == 2 - mag(a[1]) && dir(a[0]) == 2 - dir(a[1]);
    case ConstraintKind::ADD:
      return sum_holds({a[0], a[1]}, a[2]);
    case ConstraintKind::SUB:
      // SUB(x, y, z): z = x - y, i.e. x = y + z.
      return sum_holds({a[1], a[2]}, a[0]);
    case ConstraintKind::SUM:
      return sum_holds({a.begin(), a.end() - 1}, a[n - 1]);
    case ConstraintKind::MULT:
    case ConstraintKind::PROD: {
      // Product rule over (x_1..x_k, x_1'..x_k').
      const std::size_t k = n - 1;
      std::vector<int> m, md;
      for (std::size_t i = 0; i < k; ++i) m.push_back(mag(a[i]));
      md = m;
      for (std::size_t i = 0; i < k; ++i) md.push_back(dir(a[i]));
      auto prod = [k](const std::vector<double>& x) {
        double p = 1;
        for (std::size_t i = 0; i < k; ++i) p *= x[i];
        return p;
      };
      auto dprod = [k](const std::vector<double>& x) {
        double s = 0;
        for (std::size_t i = 0; i < k; ++i) {
          double t = x[k + i];
          for (std::size_t j = 0; j < k; ++j) {
            if (j != i) t *= x[j];
          }
          s += t;
        }
        return s;
      };
      return grid_witness(m, mag(a[n - 1]), prod) && grid_witness(md, dir(a[n - 1]), dprod);
    }
  }
  return false;
}

inline bool oracle_constraint(ConstraintKind kind, const std::vector<QualValue>& a) {
  static thread_local std::unordered_map<std::uint64_t, bool> memo;
  std::uint64_t key = static_cast<std::uint64_t>(kind);
  for (auto v : a) key = key * 10 + static_cast<std::uint64_t>(v.code() + 1);
  if (auto it = memo.find(key); it != memo.end()) return it->second;
  return memo[key] = oracle_constraint_uncached(kind, a);
}

inline bool oracle_domain_ok(Domain d, QualValue v) {
  if (d == Domain::unrestricted) return true;
  if (v.mag == Sign::neg) return false;
  return !(v.mag == Sign::zero && v.dir == Dir::dec);
}

// Brute force over all 9^|hidden| assignments of the hidden variables.
inline bool oracle_covers(const Model& m, const QualState& s) {
  std::map<std::string, QualValue> values;
  std::vector<const Variable*> hidden;
  for (const auto& v : m.variables()) {
    if (v.hidden()) {
      hidden.push_back(&v);
    } else {
      auto x = s.get(v.name);
      if (!x || !oracle_domain_ok(v.domain, *x)) return false;
      values[v.name] = *x;
    }
  }
  std::function<bool(std::size_t)> rec = [&](std::size_t i) -> bool {
    if (i == hidden.size()) {
      for (const auto& c : m.constraints()) {
        std::vector<QualValue> args;
        for (const auto& name : c.args) args.push_back(values.at(name));
        if (!oracle_constraint(c.kind, args)) return false;
      }
      return true;
    }
    for (int code = 0; code < kQualValueCount; ++code) {
      auto v = QualValue::from_code(code);
      if (!oracle_domain_ok(hidden[i]->domain, v)) continue;
      values[hidden[i]->name] = v;
      if (rec(i + 1)) return true;
    }
    return false;
  };
  return rec(0);
}

// Hand-rolled generators.

struct Gen {
  std::mt19937_64 rng;
  explicit Gen(std::uint64_t seed) : rng(seed) {}

  std::size_t below(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

  QualValue value(Domain d = Domain::unrestricted) {
    for (;;) {
      auto v = QualValue::from_code(static_cast<int>(below(kQualValueCount)));
      if (oracle_domain_ok(d, v)) return v;
    }
  }

  // A random model over at most `max_vars` variables; some are hidden, some nonnegative.
  Model model(std::size_t max_vars = 8, std::size_t max_constraints = 4) {
    const std::size_t nv = 2 + below(max_vars - 1);
    std::vector<Variable> vars;
    for (std::size_t i = 0; i < nv; ++i) {
      Variable v;
      v.name = "x" + std::to_string(i);
      v.domain = coin(0.3) ? Domain::nonnegative : Domain::unrestricted;
      v.kind = coin(0.35) ? VarKind::intermediate : VarKind::measured_algebraic;
      vars.push_back(v);
    }
    static constexpr ConstraintKind kinds[] = {ConstraintKind::DERIV, ConstraintKind::ADD,     ConstraintKind::SUB,
                                               ConstraintKind::MINUS, ConstraintKind::MULT,    ConstraintKind::M_PLUS,
                                               ConstraintKind::M_MINUS, ConstraintKind::SUM, ConstraintKind::PROD};
    std::vector<Constraint> cs;
    const std::size_t nc = 1 + below(max_constraints);
    for (std::size_t i = 0; i < nc; ++i) {
      auto kind = kinds[below(std::size(kinds))];
      std::size_t arity = fixed_arity(kind).value_or(3 + below(2));
      if (arity > nv) continue;
      std::vector<std::size_t> idx(nv);
      for (std::size_t j = 0; j < nv; ++j) idx[j] = j;
      std::shuffle(idx.begin(), idx.end(), rng);
      Constraint c;
      c.kind = kind;
      for (std::size_t j = 0; j < arity; ++j) c.args.push_back(vars[idx[j]].name);
      cs.push_back(c);
    }
    return Model(vars, cs);
  }

  // A state over the model's measured variables, domain-valid.
  QualState state(const Model& m) {
    QualState s;
    for (const auto& v : m.variables()) {
      if (!v.hidden()) s.bindings[v.name] = value(v.domain);
    }
    return s;
  }

  // Same model with hidden variables renamed and constraints shuffled.
  Model renamed(const Model& m) {
    std::map<std::string, std::string> rename;
    std::size_t k = 0;
    for (const auto& v : m.variables()) {
      if (v.hidden()) rename[v.name] = "H" + std::to_string(100 + k++);
    }
    auto name = [&](const std::string& n) { return rename.contains(n) ? rename.at(n) : n; };
    std::vector<Variable> vars;
    for (auto v : m.variables()) {
      v.name = name(v.name);
      vars.push_back(v);
    }
    std::vector<Constraint> cs;
    for (auto c : m.constraints()) {
      for (auto& a : c.args) a = name(a);
      cs.push_back(c);
    }
    std::shuffle(cs.begin(), cs.end(), rng);
    return Model(vars, cs);
  }
};

inline std::vector<QualState> truth_subset(const SystemDefinition& def, std::initializer_list<int> numbers) {
  std::vector<QualState> out;
  for (int n : numbers) out.push_back(def.state(n));
  return out;
}

}  // namespace qsi::test
