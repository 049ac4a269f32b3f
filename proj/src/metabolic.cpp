#include "qsi/metabolic.hpp"

#include "qsi/cover.hpp"
#include "text_util.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <functional>
#include <numeric>
#include <regex>
#include <set>

namespace qsi {

void EnzymeSpec::validate() const {
  if (substrates.empty() || substrates.size() > 3) throw ContractViolation("enzyme " + flow + " needs 1..3 substrates");
  if (products.empty() || products.size() > 3) throw ContractViolation("enzyme " + flow + " needs 1..3 products");
  if (flow.empty()) throw ContractViolation("enzyme needs a flow variable");
}

std::string enzyme_minus(const std::string& flow) { return flow + "_minus"; }

namespace {

std::string side_variable(const std::vector<std::string>& side, const std::string& name) {
  return side.size() == 1 ? side[0] : name;
}

}  // namespace

std::vector<Constraint> expand_enzyme(const EnzymeSpec& e) {
  e.validate();
  std::vector<Constraint> out;
  const std::string sfor = side_variable(e.substrates, e.flow + "_Sfor");
  const std::string prev = side_variable(e.products, e.flow + "_Prev");
  if (e.substrates.size() > 1) {
    Constraint c{ConstraintKind::PROD, e.substrates};
    c.args.push_back(sfor);
    out.push_back(std::move(c));
  }
  if (e.products.size() > 1) {
    Constraint c{ConstraintKind::PROD, e.products};
    c.args.push_back(prev);
    out.push_back(std::move(c));
  }
  out.push_back({ConstraintKind::M_PLUS, {sfor, e.flow + "_Ds"}});
  out.push_back({ConstraintKind::M_PLUS, {prev, e.flow + "_Dp"}});
  out.push_back({ConstraintKind::SUB, {e.flow + "_Ds", e.flow + "_Dp", e.flow}});
  out.push_back({ConstraintKind::MINUS, {e.flow, enzyme_minus(e.flow)}});
  return out;
}

MetaboliteExpansion expand_metabolite(const MetaboliteSpec& m) {
  if (m.terms.empty()) throw ContractViolation("metabolite " + m.name + " has no flow terms (flapping)");
  MetaboliteExpansion out;
  out.constraints.push_back({ConstraintKind::DERIV, {m.concentration, m.flow}});
  auto term_var = [](const FlowTerm& t) { return t.positive ? t.enzyme_flow : enzyme_minus(t.enzyme_flow); };
  if (m.terms.size() == 1) {
    out.alias = std::make_pair(term_var(m.terms[0]), m.flow);
    return out;
  }
  Constraint sum{ConstraintKind::SUM, {}};
  for (const auto& t : m.terms) sum.args.push_back(term_var(t));
  sum.args.push_back(m.flow);
  out.constraints.push_back(std::move(sum));
  return out;
}

Model build_metabolic_model(const std::vector<EnzymeSpec>& enzymes, const std::vector<MetaboliteSpec>& metabolites,
                            const PathwayOptions& opt) {
  const Dimension conc = Dimension::base("C");
  const Dimension rate = conc / Dimension::time();
  std::vector<Constraint> cs;
  std::map<std::string, Variable> vars;
  std::vector<std::string> order;
  auto declare = [&](const std::string& name, Domain d, Dimension dim, VarKind k) {
    if (vars.emplace(name, Variable{name, d, std::move(dim), k}).second) order.push_back(name);
  };
  for (const auto& m : metabolites) {
    declare(m.concentration, Domain::nonnegative, conc, VarKind::state);
    declare(m.flow, Domain::unrestricted, rate, VarKind::measured_algebraic);
  }
  for (const auto& e : enzymes) {
    for (const auto& s : e.substrates) declare(s, Domain::nonnegative, conc, VarKind::state);
    for (const auto& p : e.products) declare(p, Domain::nonnegative, conc, VarKind::state);
    auto side_dim = [&](const std::vector<std::string>& side) {
      Dimension d;
      for (std::size_t i = 0; i < side.size(); ++i) d = d * conc;
      return d;
    };
    if (e.substrates.size() > 1) declare(e.flow + "_Sfor", Domain::nonnegative, side_dim(e.substrates), VarKind::intermediate);
    if (e.products.size() > 1) declare(e.flow + "_Prev", Domain::nonnegative, side_dim(e.products), VarKind::intermediate);
    declare(e.flow + "_Ds", Domain::unrestricted, rate, VarKind::intermediate);
    declare(e.flow + "_Dp", Domain::unrestricted, rate, VarKind::intermediate);
    declare(e.flow, opt.reversible ? Domain::unrestricted : Domain::nonnegative, rate, VarKind::intermediate);
    declare(enzyme_minus(e.flow), Domain::unrestricted, rate, VarKind::intermediate);
    auto ec = expand_enzyme(e);
    cs.insert(cs.end(), ec.begin(), ec.end());
  }
  std::map<std::string, std::string> rename;
  for (const auto& m : metabolites) {
    auto ex = expand_metabolite(m);
    cs.insert(cs.end(), ex.constraints.begin(), ex.constraints.end());
    if (ex.alias) {
      if (rename.contains(ex.alias->first)) {
        // The term already stands for another metabolite's flow: tie the two explicitly.
        cs.push_back({ConstraintKind::M_PLUS, {ex.alias->first, ex.alias->second}});
      } else {
        rename[ex.alias->first] = ex.alias->second;
      }
    }
  }
  for (auto& c : cs) {
    for (auto& a : c.args) {
      if (auto it = rename.find(a); it != rename.end()) a = it->second;
    }
  }
  // Drop MINUS outputs nothing else reads.
  std::map<std::string, std::size_t> uses;
  for (const auto& c : cs) {
    for (const auto& a : c.args) ++uses[a];
  }
  std::erase_if(cs, [&](const Constraint& c) {
    return c.kind == ConstraintKind::MINUS && uses[c.args[1]] == 1 && vars.at(c.args[1]).hidden();
  });
  std::vector<Variable> declared;
  for (const auto& name : order) {
    if (rename.contains(name)) continue;
    declared.push_back(vars.at(name));
  }
  Model model(std::move(declared), std::move(cs));
  model.prune_unused_hidden();
  return model;
}

void parse_metabolic_text(std::string_view content, std::vector<EnzymeSpec>& enzymes,
                          std::vector<MetaboliteSpec>& metabolites) {
  static const std::regex group(R"(\(([^()]*)\))");
  int lineno = 0;
  for (auto raw : text::lines(content)) {
    ++lineno;
    auto line = std::string(text::strip_comment(raw));
    if (line.empty()) continue;
    while (!line.empty() && (line.back() == ',' || line.back() == '.')) line.pop_back();
    auto open = line.find('(');
    auto close = line.rfind(')');
    if (open == std::string::npos || close == std::string::npos) {
      throw ParseError("line " + std::to_string(lineno) + ": malformed metabolic component");
    }
    std::string head(text::trim(std::string_view(line).substr(0, open)));
    std::transform(head.begin(), head.end(), head.begin(), ::toupper);
    std::string body = line.substr(open + 1, close - open - 1);
    auto names = [](const std::string& s) {
      std::vector<std::string> out;
      for (auto tok : text::split(s, ',')) {
        for (auto w : text::split_ws(tok)) out.emplace_back(w);
      }
      return out;
    };
    std::vector<std::string> groups;
    for (std::sregex_iterator it(body.begin(), body.end(), group), end; it != end; ++it) groups.push_back((*it)[1]);
    if (head == "ENZYME") {
      if (groups.size() != 2) throw ParseError("line " + std::to_string(lineno) + ": ENZYME needs substrate and product lists");
      auto tail = body.substr(body.rfind(')') + 1);
      auto flow = names(tail);
      if (flow.size() != 1) throw ParseError("line " + std::to_string(lineno) + ": ENZYME needs one flow variable");
      EnzymeSpec e{names(groups[0]), names(groups[1]), flow[0]};
      e.validate();
      enzymes.push_back(std::move(e));
    } else if (head == "METABOLITE") {
      auto lead = names(body.substr(0, body.find('(')));
      if (lead.size() != 2) throw ParseError("line " + std::to_string(lineno) + ": METABOLITE needs concentration and flow");
      MetaboliteSpec m;
      m.concentration = lead[0];
      m.flow = lead[1];
      m.name = m.concentration.size() > 1 && m.concentration.back() == 'c' ? m.concentration.substr(0, m.concentration.size() - 1)
                                                                          : m.concentration;
      for (const auto& g : groups) {
        auto parts = names(g);
        if (parts.size() != 2 || (parts[1] != "+" && parts[1] != "-")) {
          throw ParseError("line " + std::to_string(lineno) + ": flow term needs an enzyme flow and a sign");
        }
        m.terms.push_back({parts[0], parts[1] == "+"});
      }
      metabolites.push_back(std::move(m));
    } else {
      throw ParseError("line " + std::to_string(lineno) + ": unknown component '" + head + "'");
    }
  }
}

std::string glycolysis_model_text() {
  return R"(ENZYME((Glcc, ATPc),(G6Pc,ADPc),Enz1f),
ENZYME((G6Pc),(F6Pc),Enz2f),
ENZYME((F6Pc,ATPc),(F16BPc,ADPc),Enz3f),
ENZYME((F16BPc),(G3Pc,DHAPc),Enz4f),
ENZYME((DHAPc),(G3Pc),Enz5f),
ENZYME((G3Pc,NADc),(13BPc,NADHc),Enz6f),
ENZYME((13BPc,ADPc),(3PGc,ATPc),Enz7f),
ENZYME((3PGc),(2PGc),Enz8f),
ENZYME((2PGc),(PEPc),Enz9f),
ENZYME((PEPc,ADPc),(Pyrc,ATPc),Enz10f),
METABOLITE(ATPc,ATPf, (Enz10f +), (Enz7f, +),(Enz1f, -),(Enz3f, -)),
METABOLITE(ADPc,ADPf,(Enz1f, +),(Enz3f, +),(Enz10f, -)(Enz7f, -)),
METABOLITE(NADc,NADf,(Enz6f, -)),
METABOLITE(NADHc,NADHf,(Enz6f, +)),
METABOLITE(Pyrc,Pyrf,(Enz10f, +)),
METABOLITE(Glcc,Glcf,(Enz1f, -)),
METABOLITE(PEPc,PEPf,(Enz9f, +),(Enz10f, -)),
METABOLITE(F6Pc,F6Pf,(Enz2f, +),(Enz3f, -)),
METABOLITE(G6Pc,G6Pf,(Enz1f, +),(Enz2f, -)),
METABOLITE(DHAPc,DHAPf,(Enz4f, +),(Enz5f, -)),
METABOLITE(3PGc,3PGf,(Enz7f, +),(Enz8f, -)),
METABOLITE(13BPc,13BPf,(Enz6f, +),(Enz7f, -)),
METABOLITE(F16BPc,F16BPf,(Enz3f, +), (Enz4f, -)),
METABOLITE(2PGc,2PGf,(Enz8f, +),(Enz9f, -)),
METABOLITE(G3Pc,G3Pf,(Enz5f, +),(Enz4f, +),(Enz6f, -)).
)";
}

Model glycolysis_model() {
  std::vector<EnzymeSpec> enzymes;
  std::vector<MetaboliteSpec> metabolites;
  parse_metabolic_text(glycolysis_model_text(), enzymes, metabolites);
  return build_metabolic_model(enzymes, metabolites);
}

QualState glycolysis_state() {
  static const char* rows[][3] = {
      {"NAD", "pos/dec", "neg/dec"},  {"NADH", "pos/inc", "pos/inc"}, {"ATP", "pos/dec", "neg/dec"},
      {"ADP", "pos/dec", "neg/dec"},  {"Pyr", "pos/inc", "pos/dec"},  {"Glc", "pos/dec", "neg/inc"},
      {"PEP", "pos/dec", "neg/dec"},  {"F6P", "pos/dec", "neg/dec"},  {"G6P", "pos/dec", "neg/dec"},
      {"DHAP", "pos/dec", "neg/dec"}, {"3PG", "pos/inc", "pos/std"},  {"13BP", "pos/std", "zero/inc"},
      {"F16BP", "pos/inc", "pos/dec"}, {"2PG", "pos/dec", "neg/dec"}, {"G3P", "pos/inc", "pos/inc"},
  };
  QualState s;
  for (const auto& r : rows) {
    s.bindings[std::string(r[0]) + "c"] = parse_qual_value(r[1]);
    s.bindings[std::string(r[0]) + "f"] = parse_qual_value(r[2]);
  }
  return s;
}

std::string Reaction::str() const {
  auto join = [](const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) out += (out.empty() ? "" : " + ") + s;
    return out;
  };
  return join(substrates) + " -> " + join(products);
}

std::map<std::string, Formula> parse_formulas(std::string_view content) {
  std::map<std::string, Formula> out;
  int lineno = 0;
  for (auto raw : text::lines(content)) {
    ++lineno;
    auto line = text::strip_comment(raw);
    if (line.empty()) continue;
    auto comma = line.find(',');
    if (comma == std::string_view::npos) throw ParseError("line " + std::to_string(lineno) + ": expected 'name,element:count;...'");
    std::string name(text::trim(line.substr(0, comma)));
    Formula f;
    for (auto item : text::split(line.substr(comma + 1), ';')) {
      item = text::trim(item);
      if (item.empty()) continue;
      auto colon = item.find(':');
      if (colon == std::string_view::npos) throw ParseError("line " + std::to_string(lineno) + ": expected element:count");
      int count = 0;
      try {
        count = std::stoi(std::string(item.substr(colon + 1)));
      } catch (const std::logic_error&) {
        throw ParseError("line " + std::to_string(lineno) + ": bad element count");
      }
      if (count < 1) throw ParseError("line " + std::to_string(lineno) + ": element counts must be positive");
      f[std::string(text::trim(item.substr(0, colon)))] += count;
    }
    if (f.empty()) throw ParseError("line " + std::to_string(lineno) + ": empty formula");
    if (!out.emplace(name, f).second) throw ParseError("line " + std::to_string(lineno) + ": duplicate metabolite " + name);
  }
  return out;
}

std::map<std::string, Formula> glycolysis_formulas() {
  return parse_formulas(R"(Glc,C:6;H:12;O:6
G6P,C:6;H:13;O:9;P:1
F6P,C:6;H:13;O:9;P:1
F16BP,C:6;H:14;O:12;P:2
DHAP,C:3;H:7;O:6;P:1
G3P,C:3;H:7;O:6;P:1
13BP,C:3;H:8;O:10;P:2
3PG,C:3;H:7;O:7;P:1
2PG,C:3;H:7;O:7;P:1
PEP,C:3;H:5;O:6;P:1
Pyr,C:3;H:4;O:3
ATP,C:10;H:16;N:5;O:13;P:3
ADP,C:10;H:15;N:5;O:10;P:2
NAD,C:21;H:27;N:7;O:14;P:2
NADH,C:21;H:29;N:7;O:14;P:2
H2O,H:2;O:1
Pi,H:3;O:4;P:1
H,H:1
)");
}

std::map<std::string, Formula> without(std::map<std::string, Formula> formulas, const std::vector<std::string>& names) {
  for (const auto& n : names) formulas.erase(n);
  return formulas;
}

std::vector<Reaction> parse_reactions(std::string_view content) {
  std::vector<Reaction> out;
  int lineno = 0;
  for (auto raw : text::lines(content)) {
    ++lineno;
    auto line = text::strip_comment(raw);
    if (line.empty()) continue;
    auto arrow = line.find("->");
    if (arrow == std::string_view::npos) throw ParseError("line " + std::to_string(lineno) + ": expected 'A + B -> C'");
    auto side = [&](std::string_view s) {
      std::vector<std::string> names;
      for (auto tok : text::split(s, '+')) {
        tok = text::trim(tok);
        if (tok.empty()) throw ParseError("line " + std::to_string(lineno) + ": empty metabolite name");
        names.emplace_back(tok);
      }
      std::sort(names.begin(), names.end());
      return names;
    };
    Reaction r{side(line.substr(0, arrow)), side(line.substr(arrow + 2))};
    if (r.substrates.size() > 3 || r.products.size() > 3) {
      throw ParseError("line " + std::to_string(lineno) + ": at most three substrates and three products");
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<Reaction> balanced_reactions(const std::map<std::string, Formula>& formulas, std::size_t max_substrates,
                                         std::size_t max_products) {
  if (formulas.empty()) throw ContractViolation("balanced_reactions needs at least one formula");
  std::vector<std::string> names;
  std::set<std::string> elements;
  for (const auto& [n, f] : formulas) {
    names.push_back(n);
    for (const auto& [e, c] : f) elements.insert(e);
  }
  std::vector<std::string> el(elements.begin(), elements.end());
  using Counts = std::vector<int>;
  auto counts_of = [&](const std::string& n) {
    Counts c(el.size(), 0);
    for (const auto& [e, k] : formulas.at(n)) c[static_cast<std::size_t>(std::find(el.begin(), el.end(), e) - el.begin())] = k;
    return c;
  };
  std::vector<Counts> base;
  for (const auto& n : names) base.push_back(counts_of(n));

  // All sorted multisets of up to max size, grouped by total element counts.
  std::map<Counts, std::vector<std::vector<std::size_t>>> by_counts;
  const std::size_t max_side = std::max(max_substrates, max_products);
  std::vector<std::size_t> cur;
  std::function<void(std::size_t, Counts&)> rec = [&](std::size_t from, Counts& total) {
    if (!cur.empty()) by_counts[total].push_back(cur);
    if (cur.size() == max_side) return;
    for (std::size_t i = from; i < names.size(); ++i) {
      cur.push_back(i);
      for (std::size_t j = 0; j < el.size(); ++j) total[j] += base[i][j];
      rec(i, total);
      for (std::size_t j = 0; j < el.size(); ++j) total[j] -= base[i][j];
      cur.pop_back();
    }
  };
  Counts zero(el.size(), 0);
  rec(0, zero);

  std::vector<Reaction> out;
  for (const auto& [counts, sides] : by_counts) {
    for (const auto& s : sides) {
      if (s.size() > max_substrates) continue;
      for (const auto& p : sides) {
        if (p.size() > max_products) continue;
        bool disjoint = std::none_of(s.begin(), s.end(), [&](std::size_t x) { return std::find(p.begin(), p.end(), x) != p.end(); });
        if (!disjoint) continue;
        Reaction r;
        for (auto i : s) r.substrates.push_back(names[i]);
        for (auto i : p) r.products.push_back(names[i]);
        out.push_back(std::move(r));
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::map<std::string, BondGraph> parse_bond_graphs(std::string_view content) {
  std::map<std::string, BondGraph> out;
  int lineno = 0;
  for (auto raw : text::lines(content)) {
    ++lineno;
    auto line = text::strip_comment(raw);
    if (line.empty()) continue;
    auto colon = line.find(':');
    if (colon == std::string_view::npos) throw ParseError("line " + std::to_string(lineno) + ": expected 'NAME: atom-atom ...'");
    std::string name(text::trim(line.substr(0, colon)));
    BondGraph g;
    std::map<std::string, int> ids;
    auto atom = [&](std::string_view tok) {
      tok = text::trim(tok);
      std::size_t k = 0;
      if (tok.empty() || !std::isupper(static_cast<unsigned char>(tok[0]))) {
        throw ParseError("line " + std::to_string(lineno) + ": atom tokens start with an element symbol");
      }
      k = 1;
      while (k < tok.size() && std::islower(static_cast<unsigned char>(tok[k]))) ++k;
      auto [it, fresh] = ids.emplace(std::string(tok), static_cast<int>(g.elements.size()));
      if (fresh) g.elements.emplace_back(tok.substr(0, k));
      return it->second;
    };
    for (auto tok : text::split_ws(line.substr(colon + 1))) {
      auto dash = tok.find('-');
      if (dash == std::string_view::npos) {
        atom(tok);
      } else {
        int a = atom(tok.substr(0, dash));
        int b = atom(tok.substr(dash + 1));
        if (a == b) throw ParseError("line " + std::to_string(lineno) + ": self bond");
        g.bonds.emplace_back(std::min(a, b), std::max(a, b));
      }
    }
    out[name] = std::move(g);
  }
  return out;
}

bool plausible(const Reaction& r, const std::map<std::string, BondGraph>& bonds) {
  struct Atom {
    std::string element;
    int molecule;
  };
  auto flatten = [&](const std::vector<std::string>& side, std::vector<Atom>& atoms, std::set<std::pair<int, int>>& edges,
                     std::vector<std::vector<int>>* adjacency) {
    int mol = 0;
    for (const auto& name : side) {
      auto it = bonds.find(name);
      if (it == bonds.end()) throw UnsupportedMetabolite("no bond graph for metabolite '" + name + "'");
      const int offset = static_cast<int>(atoms.size());
      for (const auto& e : it->second.elements) atoms.push_back({e, mol});
      for (auto [a, b] : it->second.bonds) edges.emplace(a + offset, b + offset);
      ++mol;
    }
    if (adjacency) {
      adjacency->assign(atoms.size(), {});
      for (auto [a, b] : edges) {
        (*adjacency)[static_cast<std::size_t>(a)].push_back(b);
        (*adjacency)[static_cast<std::size_t>(b)].push_back(a);
      }
    }
  };
  std::vector<Atom> sa;
  std::vector<Atom> pa;
  std::set<std::pair<int, int>> se;
  std::set<std::pair<int, int>> pe;
  std::vector<std::vector<int>> sadj;
  flatten(r.substrates, sa, se, &sadj);
  flatten(r.products, pa, pe, nullptr);
  if (sa.size() != pa.size()) return false;
  {
    std::vector<std::string> a;
    std::vector<std::string> b;
    for (const auto& x : sa) a.push_back(x.element);
    for (const auto& x : pa) b.push_back(x.element);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b) return false;
  }
  const std::size_t n = sa.size();
  std::vector<int> image(n, -1);
  std::vector<char> used(n, 0);
  std::vector<int> broken(r.substrates.size(), 0);
  std::function<bool(std::size_t)> assign = [&](std::size_t i) -> bool {
    if (i == n) return true;
    for (std::size_t j = 0; j < n; ++j) {
      if (used[j] || pa[j].element != sa[i].element) continue;
      image[i] = static_cast<int>(j);
      // Bonds to already-mapped neighbours that do not survive the mapping.
      int extra = 0;
      for (int nb : sadj[i]) {
        if (static_cast<std::size_t>(nb) < i) {
          int a = std::min(image[static_cast<std::size_t>(nb)], image[i]);
          int b = std::max(image[static_cast<std::size_t>(nb)], image[i]);
          if (!pe.contains({a, b})) ++extra;
        }
      }
      auto& count = broken[static_cast<std::size_t>(sa[i].molecule)];
      if (count + extra <= 1) {
        count += extra;
        used[j] = 1;
        if (assign(i + 1)) return true;
        used[j] = 0;
        count -= extra;
      }
      image[i] = -1;
    }
    return false;
  };
  return assign(0);
}

Model pathway_model(const std::vector<Reaction>& reactions, const PathwayOptions& opt) {
  std::vector<EnzymeSpec> enzymes;
  std::map<std::string, MetaboliteSpec> mets;
  std::vector<std::string> order;
  auto touch = [&](const std::string& name) {
    if (!mets.contains(name)) {
      mets[name] = MetaboliteSpec{name, {}, name + "c", name + "f", {}};
      order.push_back(name);
    }
    return &mets[name];
  };
  for (std::size_t i = 0; i < reactions.size(); ++i) {
    const auto& r = reactions[i];
    EnzymeSpec e;
    e.flow = "Enz" + std::to_string(i + 1) + "f";
    for (const auto& s : r.substrates) {
      e.substrates.push_back(s + "c");
      touch(s)->terms.push_back({e.flow, false});
    }
    for (const auto& p : r.products) {
      e.products.push_back(p + "c");
      touch(p)->terms.push_back({e.flow, true});
    }
    enzymes.push_back(std::move(e));
  }
  std::vector<MetaboliteSpec> ms;
  for (const auto& n : order) ms.push_back(mets[n]);
  return build_metabolic_model(enzymes, ms, opt);
}

std::vector<PathwayCandidate> pathway_search(const std::vector<Reaction>& reactions,
                                             const std::vector<std::string>& metabolites,
                                             const std::vector<QualState>& observed, std::size_t max_reactions,
                                             const PathwayOptions& opt) {
  if (reactions.size() > kPathwayMaxReactions || metabolites.size() > kPathwayMaxMetabolites) {
    throw ContractViolation("pathway search is limited to " + std::to_string(kPathwayMaxReactions) + " reactions and " +
                            std::to_string(kPathwayMaxMetabolites) + " metabolites");
  }
  std::map<std::string, std::size_t> met_index;
  for (std::size_t i = 0; i < metabolites.size(); ++i) met_index[metabolites[i]] = i;
  for (const auto& r : reactions) {
    for (const auto* side : {&r.substrates, &r.products}) {
      for (const auto& m : *side) {
        if (!met_index.contains(m)) throw ContractViolation("reaction " + r.str() + " uses unknown metabolite " + m);
      }
    }
  }
  auto connected_cover = [&](std::uint32_t mask) {
    std::vector<std::size_t> parent(metabolites.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
    std::vector<char> touched(metabolites.size(), 0);
    for (std::size_t i = 0; i < reactions.size(); ++i) {
      if (!(mask >> i & 1)) continue;
      std::vector<std::size_t> ids;
      for (const auto* side : {&reactions[i].substrates, &reactions[i].products}) {
        for (const auto& m : *side) ids.push_back(met_index[m]);
      }
      for (auto id : ids) {
        touched[id] = 1;
        parent[find(id)] = find(ids[0]);
      }
    }
    std::set<std::size_t> roots;
    for (std::size_t i = 0; i < metabolites.size(); ++i) {
      if (!touched[i]) return false;
      roots.insert(find(i));
    }
    return roots.size() == 1;
  };
  std::vector<PathwayCandidate> out;
  const std::size_t limit = std::min(max_reactions, reactions.size());
  for (std::size_t size = 1; size <= limit; ++size) {
    for (std::uint32_t mask = 1; mask < (1u << reactions.size()); ++mask) {
      if (static_cast<std::size_t>(std::popcount(mask)) != size || !connected_cover(mask)) continue;
      PathwayCandidate cand;
      for (std::size_t i = 0; i < reactions.size(); ++i) {
        if (mask >> i & 1) cand.reactions.push_back(reactions[i]);
      }
      cand.model = pathway_model(cand.reactions, opt);
      bool ok = std::all_of(observed.begin(), observed.end(), [&](const QualState& s) { return covers(cand.model, s); });
      if (ok) out.push_back(std::move(cand));
    }
  }
  return out;
}

}  // namespace qsi
