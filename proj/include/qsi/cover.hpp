#pragma once

#include "qsi/model.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qsi {

/// The cover test was asked about a state that does not bind a measured variable of the model.
class UnmeasuredVariable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sign-consistency of one constraint given the values of its arguments, in argument order.
bool check_constraint(ConstraintKind kind, std::span<const QualValue> args);

/// As above, looking the arguments up in `s`. Unbound arguments are a ContractViolation.
bool check_constraint(const Constraint& c, const QualState& s);

/// True iff some assignment of the hidden variables (respecting domains and the boundary rule)
/// satisfies every constraint, with measured variables fixed by `s`.
bool covers(const Model& m, const QualState& s);

/// Index-based form of a model used by the enumeration engine.
class ConstraintNetwork {
 public:
  explicit ConstraintNetwork(const Model& m);

  [[nodiscard]] std::size_t variable_count() const { return variables_.size(); }
  [[nodiscard]] const Variable& variable(std::size_t i) const { return variables_[i]; }
  [[nodiscard]] int index_of(std::string_view name) const;

  /// Per-variable restriction used by the searches below; empty optional means "any domain value".
  using Pins = std::vector<std::optional<QualValue>>;
  [[nodiscard]] Pins no_pins() const { return Pins(variables_.size()); }

  /// Calls `visit` once for every distinct assignment to `targets` that extends to a full
  /// solution. The visitor receives values for `targets` in the order given.
  void for_each_projection(std::span<const int> targets, const Pins& pins,
                           const std::function<void(std::span<const QualValue>)>& visit) const;

  /// True iff a full solution exists under `pins`.
  [[nodiscard]] bool satisfiable(const Pins& pins) const;

 private:
  struct Compiled {
    ConstraintKind kind;
    std::vector<int> args;
  };
  struct Plan;
  Plan plan(std::span<const int> first) const;

  std::vector<Variable> variables_;
  std::vector<Compiled> constraints_;
};

/// Fixed-order tuple space over measured, non-exogenous variables with domain-valid values.
class StateSpace {
 public:
  StateSpace() = default;
  explicit StateSpace(std::vector<Variable> vars);

  [[nodiscard]] const std::vector<Variable>& variables() const { return vars_; }
  [[nodiscard]] std::size_t size() const { return size_; }
  [[nodiscard]] std::size_t index(std::span<const QualValue> values) const;
  /// Index of the state's values for this space's variables; nullopt if a value is not domain-valid.
  [[nodiscard]] std::optional<std::size_t> index_of(const QualState& s) const;
  [[nodiscard]] QualState decode(std::size_t index, const ExoBindings& exo = {}) const;

 private:
  std::vector<Variable> vars_;
  std::vector<std::vector<int>> slot_of_code_;
  std::size_t size_ = 1;
};

/// Dense bitset over the indices of a StateSpace.
class StateSet {
 public:
  StateSet() = default;
  explicit StateSet(std::size_t n) : n_(n), words_((n + 63) / 64, 0) {}

  void insert(std::size_t i) { words_[i / 64] |= (std::uint64_t{1} << (i % 64)); }
  [[nodiscard]] bool contains(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1U; }
  [[nodiscard]] std::size_t count() const;
  [[nodiscard]] std::size_t universe() const { return n_; }
  friend bool operator==(const StateSet&, const StateSet&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Every point of `space` covered by `m` with exogenous variables pinned to `exo`.
StateSet coverage(const Model& m, const StateSpace& space, const ExoBindings& exo);

}  // namespace qsi
