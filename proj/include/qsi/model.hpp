#pragma once

#include "qsi/qual.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qsi {

/// Physical dimension as a product of named base dimensions with integer exponents.
/// Text form: `L*T^-1`, `F`, `1` for dimensionless.
class Dimension {
 public:
  Dimension() = default;
  static Dimension base(std::string name);
  static Dimension parse(std::string_view text);
  static Dimension time() { return base("T"); }

  [[nodiscard]] std::string str() const;
  [[nodiscard]] bool dimensionless() const { return exponents_.empty(); }

  friend Dimension operator*(const Dimension& a, const Dimension& b);
  friend Dimension operator/(const Dimension& a, const Dimension& b);
  friend bool operator==(const Dimension&, const Dimension&) = default;
  friend auto operator<=>(const Dimension&, const Dimension&) = default;

 private:
  std::map<std::string, int> exponents_;
};

enum class Domain { unrestricted, nonnegative };

enum class VarKind { exogenous, state, derivative, intermediate, measured_algebraic };

std::string_view to_string(Domain d);
std::string_view to_string(VarKind k);
Domain parse_domain(std::string_view text);
VarKind parse_var_kind(std::string_view text);

struct Variable {
  std::string name;
  Domain domain = Domain::unrestricted;
  Dimension dimension;
  VarKind kind = VarKind::intermediate;

  /// Hidden variables are existentially quantified by the cover test.
  [[nodiscard]] bool hidden() const { return kind == VarKind::intermediate || kind == VarKind::derivative; }
  [[nodiscard]] bool exogenous() const { return kind == VarKind::exogenous; }
  friend bool operator==(const Variable&, const Variable&) = default;
};

/// Qualitative values a variable of the given domain may take (boundary rule applied).
std::span<const QualValue> domain_values(Domain d);
bool domain_admits(Domain d, QualValue v);

enum class ConstraintKind { DERIV, ADD, SUB, MINUS, MULT, M_PLUS, M_MINUS, SUM, PROD };

std::string_view to_string(ConstraintKind k);
ConstraintKind parse_constraint_kind(std::string_view text);
/// Fixed arity of the kind, or nullopt for the n-ary SUM/PROD (which need at least 3 args).
std::optional<std::size_t> fixed_arity(ConstraintKind k);

struct Constraint {
  ConstraintKind kind = ConstraintKind::ADD;
  std::vector<std::string> args;

  /// Throws ContractViolation when the arity does not match the kind or an argument repeats.
  void validate() const;
  [[nodiscard]] std::string str() const;
  static Constraint parse(std::string_view text);
  friend bool operator==(const Constraint&, const Constraint&) = default;
  friend auto operator<=>(const Constraint&, const Constraint&) = default;
};

/// Assignment of qualitative values to variable names.
struct QualState {
  std::map<std::string, QualValue> bindings;

  [[nodiscard]] std::optional<QualValue> get(const std::string& name) const;
  friend bool operator==(const QualState&, const QualState&) = default;
  friend auto operator<=>(const QualState&, const QualState&) = default;
};

using ExoBindings = std::map<std::string, QualValue>;

/// A set of qualitative constraints over declared variables. Size is the number of constraints.
class Model {
 public:
  Model() = default;
  Model(std::vector<Variable> variables, std::vector<Constraint> constraints);

  [[nodiscard]] const std::vector<Variable>& variables() const { return variables_; }
  [[nodiscard]] const std::vector<Constraint>& constraints() const { return constraints_; }
  [[nodiscard]] std::size_t size() const { return constraints_.size(); }

  [[nodiscard]] const Variable* find(std::string_view name) const;
  [[nodiscard]] const Variable& at(std::string_view name) const;

  /// Declared, non-hidden variables (including exogenous ones), in declaration order.
  [[nodiscard]] std::vector<std::string> measured() const;
  [[nodiscard]] std::vector<std::string> hidden() const;
  [[nodiscard]] std::vector<std::string> exogenous() const;

  void add_variable(Variable v);
  void add_constraint(Constraint c);
  /// Drops declared variables that appear in no constraint and are hidden.
  void prune_unused_hidden();

  /// Throws ContractViolation on an undeclared argument, duplicate names or bad arity.
  void validate() const;

 private:
  std::vector<Variable> variables_;
  std::vector<Constraint> constraints_;
};

/// Parsed model text: variable declarations, constraints and optional `fix name qval` bindings.
struct ModelFile {
  Model model;
  ExoBindings exogenous;
};

ModelFile parse_model_text(std::string_view text);
ModelFile read_model_file(const std::string& path);
std::string format_model_text(const Model& m, const ExoBindings& exo = {});

/// State CSV with header `state_id,var,qmag,qdir`, one row per (state, variable).
std::vector<QualState> parse_states_csv(std::string_view text);
std::vector<QualState> read_states_csv(const std::string& path);
std::string format_states_csv(std::span<const QualState> states);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

}  // namespace qsi
