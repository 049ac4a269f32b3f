#pragma once

#include "qsi/model.hpp"

#include <map>
#include <string>
#include <vector>

namespace qsi {

struct WellPosedSpec {
  std::size_t target_size = 1;
  std::vector<std::string> measured;
  /// Maximum number of instances per constraint kind; kinds not listed are unlimited.
  std::map<ConstraintKind, std::size_t> language_limits;
  /// Fraction of observed states that must be covered.
  double theta = 1.0;
  /// Fixed values of exogenous variables, used by the contradiction check.
  ExoBindings exogenous;

  /// Throws ContractViolation unless 0 <= theta <= 1 and target_size >= 1.
  void validate() const;
};

enum class Rule {
  size,
  complete,
  determinate,
  language,
  sufficient,
  redundant,
  contradictory,
  dimensional,
  single,
  connected,
  causal
};

std::string_view to_string(Rule r);

struct Violation {
  Rule rule;
  std::string detail;
};

/// Size, Complete, Determinate and Language rules.
std::vector<Violation> check_syntactic(const Model& m, const WellPosedSpec& spec);

/// Sufficient, Redundant, Contradictory and Dimensional rules.
std::vector<Violation> check_semantic(const Model& m, const std::vector<QualState>& states, const WellPosedSpec& spec);

/// Single (one connected component) and Connected (no endogenous variable in fewer than two constraints).
std::vector<Violation> check_structure(const Model& m);

struct CausalStep {
  std::size_t constraint;  // index into m.constraints()
  std::string output;      // variable computed by the step; empty for DERIV links
};

struct CausalOrder {
  bool ok = false;
  std::vector<CausalStep> schedule;
  /// When !ok: constraints that could not be scheduled and their undetermined variables.
  std::vector<std::size_t> loop_constraints;
  std::vector<std::string> loop_variables;
  std::string detail;
};

/// Integral-causality schedule: exogenous variables and integrands of DERIV constraints are known;
/// algebraic constraints are scheduled when exactly one argument is unknown; DERIV links come last.
/// A rate that is not itself integrated must not determine a measured non-rate variable, directly
/// or through hidden variables.
CausalOrder causal_order(const Model& m);

/// All eleven rules when size(m) == target_size; only Language, Redundant, Contradictory and
/// Dimensional for smaller (partial) models.
bool acceptable(const Model& m, const WellPosedSpec& spec, const std::vector<QualState>& states);

/// Every violation of the eleven rules, in rule order.
std::vector<Violation> all_violations(const Model& m, const WellPosedSpec& spec, const std::vector<QualState>& states);

// Building blocks shared with the search.

/// Dimensional consistency of a single constraint given the model's declarations.
bool dimensionally_consistent(const Constraint& c, const Model& m);

/// True iff every domain-valid binding satisfying `by` also satisfies `c` (requires args(c) within args(by)).
bool implied_by(const Constraint& c, const Constraint& by, const Model& m);

/// True iff some domain-valid binding satisfies both constraints, with exogenous variables pinned.
bool jointly_satisfiable(const Constraint& a, const Constraint& b, const Model& m, const ExoBindings& exo);

}  // namespace qsi
