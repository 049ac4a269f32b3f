#include "qsi/equiv.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <tuple>
#include <map>
#include <numeric>
#include <set>

namespace qsi {

namespace {

enum class RelKind { linear, deriv, product };

// Normalized relation over variable ids. Linear: sum of coef*var = 0 (coef = +-1).
// Deriv: args {x, y}, sign s means s*y = dx/dt. Product: inputs..., output, sign s means
// output = s * prod(inputs).
struct Relation {
  RelKind kind;
  std::vector<std::pair<int, int>> terms;  // (var, coef); for deriv/product the coef is unused
  int sign = 1;
};

struct Normalized {
  std::vector<std::string> names;
  std::vector<char> hidden;
  std::vector<char> flippable;
  std::vector<Relation> rels;
};

Normalized normalize(const Model& m) {
  Normalized n;
  std::map<std::string, int> id;
  for (const auto& c : m.constraints()) {
    for (const auto& a : c.args) {
      if (id.contains(a)) continue;
      const auto& v = m.at(a);
      id[a] = static_cast<int>(n.names.size());
      n.names.push_back(a);
      n.hidden.push_back(v.hidden() ? 1 : 0);
      n.flippable.push_back(v.hidden() && v.domain == Domain::unrestricted ? 1 : 0);
    }
  }
  for (const auto& c : m.constraints()) {
    std::vector<int> a;
    for (const auto& s : c.args) a.push_back(id.at(s));
    Relation r{RelKind::linear, {}, 1};
    switch (c.kind) {
      case ConstraintKind::ADD: r.terms = {{a[0], 1}, {a[1], 1}, {a[2], -1}}; break;
      case ConstraintKind::SUB: r.terms = {{a[0], 1}, {a[1], -1}, {a[2], -1}}; break;
      case ConstraintKind::SUM:
        for (std::size_t i = 0; i + 1 < a.size(); ++i) r.terms.emplace_back(a[i], 1);
        r.terms.emplace_back(a.back(), -1);
        break;
      case ConstraintKind::M_PLUS: r.terms = {{a[0], 1}, {a[1], -1}}; break;
      case ConstraintKind::M_MINUS:
      case ConstraintKind::MINUS: r.terms = {{a[0], 1}, {a[1], 1}}; break;
      case ConstraintKind::DERIV:
        r.kind = RelKind::deriv;
        r.terms = {{a[0], 0}, {a[1], 0}};
        break;
      case ConstraintKind::MULT:
      case ConstraintKind::PROD:
        r.kind = RelKind::product;
        for (int x : a) r.terms.emplace_back(x, 0);
        break;
    }
    n.rels.push_back(std::move(r));
  }
  return n;
}

// Eliminates hidden variables that link exactly two additive relations of three or more terms.
void flatten(Normalized& n) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t v = 0; v < n.names.size() && !changed; ++v) {
      if (!n.hidden[v]) continue;
      std::vector<std::size_t> where;
      for (std::size_t r = 0; r < n.rels.size(); ++r) {
        for (const auto& t : n.rels[r].terms) {
          if (t.first == static_cast<int>(v)) where.push_back(r);
        }
      }
      if (where.size() != 2 || where[0] == where[1]) continue;
      auto& r1 = n.rels[where[0]];
      auto& r2 = n.rels[where[1]];
      if (r1.kind != RelKind::linear || r2.kind != RelKind::linear) continue;
      if (r1.terms.size() < 3 || r2.terms.size() < 3) continue;
      auto coef = [&](const Relation& r) {
        for (const auto& t : r.terms) {
          if (t.first == static_cast<int>(v)) return t.second;
        }
        return 0;
      };
      int c1 = coef(r1);
      int c2 = coef(r2);
      std::set<int> seen;
      Relation merged{RelKind::linear, {}, 1};
      bool clash = false;
      for (const auto& t : r1.terms) {
        if (t.first == static_cast<int>(v)) continue;
        seen.insert(t.first);
        merged.terms.emplace_back(t.first, c2 * t.second);
      }
      for (const auto& t : r2.terms) {
        if (t.first == static_cast<int>(v)) continue;
        if (!seen.insert(t.first).second) clash = true;
        merged.terms.emplace_back(t.first, -c1 * t.second);
      }
      if (clash) continue;
      std::size_t hi = std::max(where[0], where[1]);
      std::size_t lo = std::min(where[0], where[1]);
      n.rels.erase(n.rels.begin() + static_cast<std::ptrdiff_t>(hi));
      n.rels[lo] = std::move(merged);
      changed = true;
    }
  }
}

std::string render(const Normalized& n, const std::vector<std::string>& label, const std::vector<int>& flip) {
  std::vector<std::string> parts;
  parts.reserve(n.rels.size());
  for (const auto& r : n.rels) {
    std::string s;
    switch (r.kind) {
      case RelKind::linear: {
        std::vector<std::pair<std::string, int>> terms;
        for (const auto& [v, c] : r.terms) terms.emplace_back(label[v], c * flip[v]);
        std::sort(terms.begin(), terms.end());
        int g = terms.front().second;
        s = "L(";
        for (const auto& [name, c] : terms) s += (c * g > 0 ? "+" : "-") + name + ",";
        s += ")";
        break;
      }
      case RelKind::deriv: {
        int sign = r.sign * flip[r.terms[0].first] * flip[r.terms[1].first];
        s = std::string(sign > 0 ? "D+(" : "D-(") + label[r.terms[0].first] + "," + label[r.terms[1].first] + ")";
        break;
      }
      case RelKind::product: {
        int sign = r.sign;
        std::vector<std::string> in;
        for (std::size_t i = 0; i < r.terms.size(); ++i) {
          sign *= flip[r.terms[i].first];
          if (i + 1 < r.terms.size()) in.push_back(label[r.terms[i].first]);
        }
        std::sort(in.begin(), in.end());
        s = sign > 0 ? "P+(" : "P-(";
        for (const auto& x : in) s += x + ",";
        s += ">" + label[r.terms.back().first] + ")";
        break;
      }
    }
    parts.push_back(std::move(s));
  }
  std::sort(parts.begin(), parts.end());
  std::string out;
  for (const auto& p : parts) out += p + ";";
  return out;
}

// Flip- and rename-invariant description of a hidden variable's neighbourhood.
std::string signature(const Normalized& n, int v) {
  std::vector<std::string> parts;
  for (const auto& r : n.rels) {
    for (std::size_t i = 0; i < r.terms.size(); ++i) {
      if (r.terms[i].first != v) continue;
      std::string s = std::to_string(static_cast<int>(r.kind)) + ":" + std::to_string(r.terms.size()) + ":";
      if (r.kind != RelKind::linear) s += std::to_string(i == r.terms.size() - 1 ? 1 : 0) + ":";
      if (r.kind == RelKind::deriv) s += std::to_string(i) + ":";
      std::vector<std::string> fixed;
      for (const auto& t : r.terms) {
        if (!n.hidden[t.first]) fixed.push_back(n.names[t.first]);
      }
      std::sort(fixed.begin(), fixed.end());
      for (const auto& f : fixed) s += f + ",";
      parts.push_back(std::move(s));
    }
  }
  std::sort(parts.begin(), parts.end());
  std::string out;
  for (const auto& p : parts) out += p + "|";
  return out;
}

// Measured variables tied by M+/M-/MINUS form signed alias classes; every other relation is
// rewritten in terms of the alphabetically first member of each class.
void substitute_aliases(Normalized& n) {
  const std::size_t nv = n.names.size();
  std::vector<std::vector<std::pair<int, int>>> adj(nv);
  std::vector<char> is_alias(n.rels.size(), 0);
  for (std::size_t r = 0; r < n.rels.size(); ++r) {
    const auto& rel = n.rels[r];
    if (rel.kind != RelKind::linear || rel.terms.size() != 2) continue;
    auto [a, ca] = rel.terms[0];
    auto [b, cb] = rel.terms[1];
    if (n.hidden[a] || n.hidden[b]) continue;
    is_alias[r] = 1;
    int parity = -ca * cb;  // a = parity * b
    adj[a].emplace_back(b, parity);
    adj[b].emplace_back(a, parity);
  }
  std::vector<int> rep(nv, -1);
  std::vector<int> par(nv, 1);
  for (std::size_t start = 0; start < nv; ++start) {
    if (rep[start] >= 0 || adj[start].empty()) continue;
    std::vector<int> members{static_cast<int>(start)};
    std::vector<int> sign_of(nv, 0);
    sign_of[start] = 1;
    for (std::size_t k = 0; k < members.size(); ++k) {
      int u = members[k];
      for (auto [w, p] : adj[u]) {
        if (sign_of[w] == 0) {
          sign_of[w] = sign_of[u] * p;
          members.push_back(w);
        }
      }
    }
    int root = *std::min_element(members.begin(), members.end(),
                                 [&](int a, int b) { return n.names[a] < n.names[b]; });
    for (int u : members) {
      rep[u] = root;
      par[u] = sign_of[u] * sign_of[root];
    }
  }
  for (std::size_t r = 0; r < n.rels.size(); ++r) {
    if (is_alias[r]) continue;
    auto& rel = n.rels[r];
    for (auto& [v, c] : rel.terms) {
      if (rep[v] < 0 || rep[v] == v) continue;
      if (rel.kind == RelKind::linear) {
        c *= par[v];
      } else {
        rel.sign *= par[v];
      }
      v = rep[v];
    }
  }
  // A linear relation may now mention a variable twice; keep it as written in that case.
}

// Removes each two-term relation v = p*y with v hidden and unrestricted, substituting p*y for v.
void eliminate_hidden_aliases(Normalized& n) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t r = 0; r < n.rels.size() && !changed; ++r) {
      const auto& rel = n.rels[r];
      if (rel.kind != RelKind::linear || rel.terms.size() != 2) continue;
      auto [a, ca] = rel.terms[0];
      auto [b, cb] = rel.terms[1];
      if (a == b) continue;
      if (!n.flippable[a]) {
        std::swap(a, b);
        std::swap(ca, cb);
      }
      if (!n.flippable[a]) continue;
      const int parity = -ca * cb;  // a = parity * b
      n.rels.erase(n.rels.begin() + static_cast<std::ptrdiff_t>(r));
      for (auto& other : n.rels) {
        for (auto& [v, c] : other.terms) {
          if (v != a) continue;
          v = b;
          if (other.kind == RelKind::linear) {
            c *= parity;
          } else {
            other.sign *= parity;
          }
        }
      }
      changed = true;
    }
  }
}

}  // namespace

std::string canonical_form(const Model& m, const CanonicalOptions& opt) {
  Normalized n = normalize(m);
  if (opt.hidden_aliases) eliminate_hidden_aliases(n);
  if (opt.measured_aliases) substitute_aliases(n);
  if (opt.flatten_sums) flatten(n);

  std::vector<int> hidden;
  for (std::size_t v = 0; v < n.names.size(); ++v) {
    if (!n.hidden[v]) continue;
    bool used = false;
    for (const auto& r : n.rels) {
      for (const auto& t : r.terms) used = used || t.first == static_cast<int>(v);
    }
    if (used) hidden.push_back(static_cast<int>(v));
  }
  std::vector<std::string> sig(n.names.size());
  for (int v : hidden) sig[v] = signature(n, v);
  std::sort(hidden.begin(), hidden.end(), [&](int a, int b) { return std::tie(sig[a], a) < std::tie(sig[b], b); });

  // Permute only within groups of equal signature.
  std::vector<std::pair<std::size_t, std::size_t>> groups;
  for (std::size_t i = 0; i < hidden.size();) {
    std::size_t j = i;
    while (j < hidden.size() && sig[hidden[j]] == sig[hidden[i]]) ++j;
    groups.emplace_back(i, j);
    i = j;
  }
  double combos = 1;
  for (auto [b, e] : groups) {
    for (std::size_t k = 2; k <= e - b; ++k) combos *= static_cast<double>(k);
  }
  std::vector<int> flippable;
  if (opt.sign_flips) {
    for (int v : hidden) {
      if (n.flippable[v]) flippable.push_back(v);
    }
  }
  combos *= static_cast<double>(std::uint64_t{1} << std::min<std::size_t>(flippable.size(), 62));
  if (combos > 4e6) throw ContractViolation("model has too many interchangeable hidden variables to canonicalize");

  std::vector<std::string> label = n.names;
  std::vector<int> flip(n.names.size(), 1);
  std::string best;
  bool have = false;
  auto try_all_flips = [&] {
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << flippable.size()); ++mask) {
      for (std::size_t k = 0; k < flippable.size(); ++k) flip[flippable[k]] = (mask >> k) & 1U ? -1 : 1;
      auto s = render(n, label, flip);
      if (!have || s < best) {
        best = std::move(s);
        have = true;
      }
    }
  };
  std::vector<int> perm = hidden;
  std::function<void(std::size_t)> permute_group = [&](std::size_t g) {
    if (g == groups.size()) {
      for (std::size_t i = 0; i < perm.size(); ++i) label[perm[i]] = "_" + std::to_string(i);
      try_all_flips();
      return;
    }
    auto [b, e] = groups[g];
    std::sort(perm.begin() + static_cast<std::ptrdiff_t>(b), perm.begin() + static_cast<std::ptrdiff_t>(e));
    do {
      permute_group(g + 1);
    } while (std::next_permutation(perm.begin() + static_cast<std::ptrdiff_t>(b),
                                   perm.begin() + static_cast<std::ptrdiff_t>(e)));
  };
  permute_group(0);
  if (!have) best = render(n, label, flip);
  return best;
}

bool model_equivalent(const Model& a, const Model& b) {
  if (a.size() == 0 || b.size() == 0) return a.size() == b.size();
  return canonical_form(a) == canonical_form(b);
}

}  // namespace qsi
