#pragma once

#include "qsi/model.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace qsi {

class SizeLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kMaxEnvisionVariables = 12;

/// Every qualitative state over the measured variables that a model admits.
struct Envisionment {
  std::vector<std::string> variables;  // measured variables, sorted by name
  std::vector<QualState> states;       // canonical order; exogenous bindings included
  ExoBindings exogenous;
};

/// Complete envisionment of `m` with exogenous variables fixed by `exo`. States are ordered
/// lexicographically by (variable name, value code). Throws SizeLimitError beyond 12 measured
/// variables and ContractViolation when an exogenous variable is unbound.
Envisionment enumerate_states(const Model& m, const ExoBindings& exo);

enum class IsoclineSide { negative, on, positive };

/// How to read a state against the dh/dt = 0 loci of a system.
struct IsoclineSpec {
  std::vector<std::string> state_variables;
  /// Optional names for derivative-sign patterns, keyed like "-,-" or "0,+" in state_variables order.
  std::map<std::string, std::string> regions;
};

struct IsoclineClass {
  std::map<std::string, IsoclineSide> side;  // sign of d(var)/dt, i.e. which side of var's isocline
  std::vector<std::string> labels;           // e.g. "on-h1-isocline", "h2-isocline:positive"
  std::string region;                        // named region or "critical-point"
  [[nodiscard]] bool critical() const;
};

IsoclineClass classify_isocline(const QualState& s, const IsoclineSpec& spec);

}  // namespace qsi
