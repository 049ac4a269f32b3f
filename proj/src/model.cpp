#include "qsi/model.hpp"

#include "text_util.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace qsi {

// ---------------------------------------------------------------------------
// Dimension

Dimension Dimension::base(std::string name) {
  Dimension d;
  d.exponents_[std::move(name)] = 1;
  return d;
}

Dimension Dimension::parse(std::string_view text) {
  text = text::trim(text);
  Dimension d;
  if (text.empty() || text == "1") return d;
  for (auto factor : text::split(text, '*')) {
    factor = text::trim(factor);
    int exponent = 1;
    auto caret = factor.find('^');
    std::string_view name = factor;
    if (caret != std::string_view::npos) {
      name = factor.substr(0, caret);
      auto exp_text = factor.substr(caret + 1);
      auto [ptr, ec] = std::from_chars(exp_text.data(), exp_text.data() + exp_text.size(), exponent);
      if (ec != std::errc{} || ptr != exp_text.data() + exp_text.size()) {
        throw ParseError("bad exponent in dimension '" + std::string(text) + "'");
      }
    }
    if (name.empty()) throw ParseError("empty base dimension in '" + std::string(text) + "'");
    d.exponents_[std::string(name)] += exponent;
    if (d.exponents_[std::string(name)] == 0) d.exponents_.erase(std::string(name));
  }
  return d;
}

std::string Dimension::str() const {
  if (exponents_.empty()) return "1";
  std::string out;
  for (const auto& [name, e] : exponents_) {
    if (!out.empty()) out += '*';
    out += name;
    if (e != 1) out += "^" + std::to_string(e);
  }
  return out;
}

Dimension operator*(const Dimension& a, const Dimension& b) {
  Dimension out = a;
  for (const auto& [name, e] : b.exponents_) {
    int& slot = out.exponents_[name];
    slot += e;
    if (slot == 0) out.exponents_.erase(name);
  }
  return out;
}

Dimension operator/(const Dimension& a, const Dimension& b) {
  Dimension out = a;
  for (const auto& [name, e] : b.exponents_) {
    int& slot = out.exponents_[name];
    slot -= e;
    if (slot == 0) out.exponents_.erase(name);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Enumerations

std::string_view to_string(Domain d) { return d == Domain::nonnegative ? "nonnegative" : "unrestricted"; }

std::string_view to_string(VarKind k) {
  switch (k) {
    case VarKind::exogenous: return "exogenous";
    case VarKind::state: return "state";
    case VarKind::derivative: return "derivative";
    case VarKind::intermediate: return "intermediate";
    case VarKind::measured_algebraic: return "measured-algebraic";
  }
  return "?";
}

Domain parse_domain(std::string_view text) {
  if (text == "nonnegative") return Domain::nonnegative;
  if (text == "unrestricted") return Domain::unrestricted;
  throw ParseError("unknown domain '" + std::string(text) + "'");
}

VarKind parse_var_kind(std::string_view text) {
  if (text == "exogenous") return VarKind::exogenous;
  if (text == "state") return VarKind::state;
  if (text == "derivative") return VarKind::derivative;
  if (text == "intermediate") return VarKind::intermediate;
  if (text == "measured-algebraic") return VarKind::measured_algebraic;
  throw ParseError("unknown variable kind '" + std::string(text) + "'");
}

namespace {

constexpr std::array<QualValue, 9> kAllValues = {
    QualValue::from_code(0), QualValue::from_code(1), QualValue::from_code(2),
    QualValue::from_code(3), QualValue::from_code(4), QualValue::from_code(5),
    QualValue::from_code(6), QualValue::from_code(7), QualValue::from_code(8)};

constexpr std::array<QualValue, 5> kNonnegValues = {
    QualValue{Sign::zero, Dir::std}, QualValue{Sign::zero, Dir::inc}, QualValue{Sign::pos, Dir::dec},
    QualValue{Sign::pos, Dir::std}, QualValue{Sign::pos, Dir::inc}};

}  // namespace

std::span<const QualValue> domain_values(Domain d) {
  if (d == Domain::nonnegative) return kNonnegValues;
  return kAllValues;
}

bool domain_admits(Domain d, QualValue v) {
  if (d == Domain::unrestricted) return true;
  if (v.mag == Sign::neg) return false;
  return !(v.mag == Sign::zero && v.dir == Dir::dec);
}

std::string_view to_string(ConstraintKind k) {
  switch (k) {
    case ConstraintKind::DERIV: return "DERIV";
    case ConstraintKind::ADD: return "ADD";
    case ConstraintKind::SUB: return "SUB";
    case ConstraintKind::MINUS: return "MINUS";
    case ConstraintKind::MULT: return "MULT";
    case ConstraintKind::M_PLUS: return "M+";
    case ConstraintKind::M_MINUS: return "M-";
    case ConstraintKind::SUM: return "SUM";
    case ConstraintKind::PROD: return "PROD";
  }
  return "?";
}

ConstraintKind parse_constraint_kind(std::string_view text) {
  static const std::map<std::string_view, ConstraintKind> names = {
      {"DERIV", ConstraintKind::DERIV}, {"ADD", ConstraintKind::ADD},     {"SUB", ConstraintKind::SUB},
      {"MINUS", ConstraintKind::MINUS}, {"MULT", ConstraintKind::MULT},   {"M+", ConstraintKind::M_PLUS},
      {"M_PLUS", ConstraintKind::M_PLUS}, {"M-", ConstraintKind::M_MINUS}, {"M_MINUS", ConstraintKind::M_MINUS},
      {"SUM", ConstraintKind::SUM},     {"PROD", ConstraintKind::PROD}};
  auto it = names.find(text);
  if (it == names.end()) throw ParseError("unknown constraint kind '" + std::string(text) + "'");
  return it->second;
}

std::optional<std::size_t> fixed_arity(ConstraintKind k) {
  switch (k) {
    case ConstraintKind::DERIV:
    case ConstraintKind::MINUS:
    case ConstraintKind::M_PLUS:
    case ConstraintKind::M_MINUS: return 2;
    case ConstraintKind::ADD:
    case ConstraintKind::SUB:
    case ConstraintKind::MULT: return 3;
    case ConstraintKind::SUM:
    case ConstraintKind::PROD: return std::nullopt;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Constraint

void Constraint::validate() const {
  auto arity = fixed_arity(kind);
  if (arity ? args.size() != *arity : args.size() < 3) {
    throw ContractViolation("wrong arity for " + str());
  }
  std::set<std::string_view> seen;
  for (const auto& a : args) {
    if (!seen.insert(a).second) throw ContractViolation("argument '" + a + "' repeats in " + str());
  }
}

std::string Constraint::str() const {
  std::string out(to_string(kind));
  out += '(';
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) out += ", ";
    out += args[i];
  }
  out += ')';
  return out;
}

Constraint Constraint::parse(std::string_view text) {
  text = text::trim(text);
  if (!text.empty() && (text.back() == ',' || text.back() == '.')) text.remove_suffix(1);
  auto open = text.find('(');
  auto close = text.rfind(')');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
    throw ParseError("malformed constraint '" + std::string(text) + "'");
  }
  Constraint c;
  c.kind = parse_constraint_kind(text::trim(text.substr(0, open)));
  for (auto arg : text::split(text.substr(open + 1, close - open - 1), ',')) {
    arg = text::trim(arg);
    if (arg.empty()) throw ParseError("empty argument in '" + std::string(text) + "'");
    c.args.emplace_back(arg);
  }
  return c;
}

// ---------------------------------------------------------------------------
// QualState / Model

std::optional<QualValue> QualState::get(const std::string& name) const {
  auto it = bindings.find(name);
  if (it == bindings.end()) return std::nullopt;
  return it->second;
}

Model::Model(std::vector<Variable> variables, std::vector<Constraint> constraints)
    : variables_(std::move(variables)), constraints_(std::move(constraints)) {
  validate();
}

const Variable* Model::find(std::string_view name) const {
  for (const auto& v : variables_) {
    if (v.name == name) return &v;
  }
  return nullptr;
}

const Variable& Model::at(std::string_view name) const {
  const auto* v = find(name);
  if (!v) throw ContractViolation("undeclared variable '" + std::string(name) + "'");
  return *v;
}

std::vector<std::string> Model::measured() const {
  std::vector<std::string> out;
  for (const auto& v : variables_) {
    if (!v.hidden()) out.push_back(v.name);
  }
  return out;
}

std::vector<std::string> Model::hidden() const {
  std::vector<std::string> out;
  for (const auto& v : variables_) {
    if (v.hidden()) out.push_back(v.name);
  }
  return out;
}

std::vector<std::string> Model::exogenous() const {
  std::vector<std::string> out;
  for (const auto& v : variables_) {
    if (v.exogenous()) out.push_back(v.name);
  }
  return out;
}

void Model::add_variable(Variable v) {
  if (find(v.name)) throw ContractViolation("duplicate variable '" + v.name + "'");
  variables_.push_back(std::move(v));
}

void Model::add_constraint(Constraint c) {
  c.validate();
  for (const auto& a : c.args) static_cast<void>(at(a));
  constraints_.push_back(std::move(c));
}

void Model::prune_unused_hidden() {
  std::set<std::string> used;
  for (const auto& c : constraints_) used.insert(c.args.begin(), c.args.end());
  std::erase_if(variables_, [&](const Variable& v) { return v.hidden() && !used.contains(v.name); });
}

void Model::validate() const {
  std::set<std::string_view> names;
  for (const auto& v : variables_) {
    if (!names.insert(v.name).second) throw ContractViolation("duplicate variable '" + v.name + "'");
  }
  for (const auto& c : constraints_) {
    c.validate();
    for (const auto& a : c.args) {
      if (!names.contains(a)) throw ContractViolation("undeclared variable '" + a + "' in " + c.str());
    }
  }
}

// ---------------------------------------------------------------------------
// Text formats

ModelFile parse_model_text(std::string_view content) {
  ModelFile out;
  std::vector<Variable> vars;
  std::vector<Constraint> constraints;
  int lineno = 0;
  for (auto raw : text::lines(content)) {
    ++lineno;
    auto line = text::strip_comment(raw);
    if (line.empty()) continue;
    auto words = text::split_ws(line);
    try {
      if (words[0] == "var") {
        if (words.size() != 5) throw ParseError("expected 'var name domain dimension kind'");
        vars.push_back(Variable{std::string(words[1]), parse_domain(words[2]), Dimension::parse(words[3]),
                                parse_var_kind(words[4])});
      } else if (words[0] == "fix") {
        if (words.size() != 3) throw ParseError("expected 'fix name qmag/qdir'");
        out.exogenous[std::string(words[1])] = parse_qual_value(words[2]);
      } else {
        constraints.push_back(Constraint::parse(line));
      }
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  try {
    out.model = Model(std::move(vars), std::move(constraints));
  } catch (const ContractViolation& e) {
    throw ParseError(e.what());
  }
  for (const auto& [name, value] : out.exogenous) {
    const auto* v = out.model.find(name);
    if (!v || !v->exogenous()) throw ParseError("'fix " + name + "' does not name an exogenous variable");
    (void)value;
  }
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

ModelFile read_model_file(const std::string& path) { return parse_model_text(read_text_file(path)); }

std::string format_model_text(const Model& m, const ExoBindings& exo) {
  std::string out;
  for (const auto& v : m.variables()) {
    out += "var " + v.name + " " + std::string(to_string(v.domain)) + " " + v.dimension.str() + " " +
           std::string(to_string(v.kind)) + "\n";
  }
  for (const auto& [name, value] : exo) out += "fix " + name + " " + to_string(value) + "\n";
  for (const auto& c : m.constraints()) out += c.str() + "\n";
  return out;
}

std::vector<QualState> parse_states_csv(std::string_view content) {
  std::vector<QualState> states;
  std::map<std::string, std::size_t> slot;
  bool header = true;
  int lineno = 0;
  for (auto raw : text::lines(content)) {
    ++lineno;
    auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto cells = text::split(line, ',');
    if (header) {
      header = false;
      if (cells.size() != 4 || text::trim(cells[0]) != "state_id") {
        throw ParseError("state CSV must start with header 'state_id,var,qmag,qdir'");
      }
      continue;
    }
    if (cells.size() != 4) throw ParseError("line " + std::to_string(lineno) + ": expected 4 columns");
    std::string id(text::trim(cells[0]));
    auto [it, fresh] = slot.emplace(id, states.size());
    if (fresh) states.emplace_back();
    try {
      QualValue v{parse_sign(text::trim(cells[2])), parse_dir(text::trim(cells[3]))};
      states[it->second].bindings[std::string(text::trim(cells[1]))] = v;
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (header) throw ParseError("state CSV is empty");
  return states;
}

std::vector<QualState> read_states_csv(const std::string& path) { return parse_states_csv(read_text_file(path)); }

std::string format_states_csv(std::span<const QualState> states) {
  std::string out = "state_id,var,qmag,qdir\n";
  for (std::size_t i = 0; i < states.size(); ++i) {
    for (const auto& [name, v] : states[i].bindings) {
      out += std::to_string(i + 1) + "," + name + "," + std::string(to_string(v.mag)) + "," +
             std::string(to_string(v.dir)) + "\n";
    }
  }
  return out;
}

}  // namespace qsi
