#pragma once

#include "qsi/envision.hpp"
#include "qsi/learner.hpp"
#include "qsi/model.hpp"
#include "qsi/quant2qual.hpp"
#include "qsi/wellposed.hpp"

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace qsi {

enum class SystemId { utube, coupled, cascaded, spring };

std::string_view to_string(SystemId id);
/// Throws ContractViolation for an unknown name.
SystemId parse_system_id(std::string_view text);
inline constexpr SystemId kAllSystems[] = {SystemId::utube, SystemId::coupled, SystemId::cascaded, SystemId::spring};

/// An envisionment state with its published number.
struct NumberedState {
  int number = 0;
  QualState state;
};

struct SystemDefinition {
  SystemId id = SystemId::utube;
  Model target;
  ExoBindings exogenous;
  /// Published envisionment (enumerated and numbered 1..n where no table exists).
  std::vector<NumberedState> envisionment_truth;
  std::vector<std::vector<int>> kernel_sets;
  std::vector<ModeDecl> modes;
  WellPosedSpec spec;
  /// ODE coefficient defaults and the two simulated state variables.
  std::map<std::string, double> coefficients;
  std::vector<std::string> ode_state;
  IsoclineSpec isoclines;

  /// Measured variable declarations (exogenous included), in target declaration order.
  [[nodiscard]] std::vector<Variable> measured_variables() const;
  [[nodiscard]] std::vector<QualState> truth_states() const;
  /// Published number of a state, or 0 when it is not in the envisionment.
  [[nodiscard]] int number_of(const QualState& s) const;
  [[nodiscard]] const QualState& state(int number) const;
  /// Learner configuration for this system with the given sufficiency threshold.
  [[nodiscard]] SearchConfig search_config(double theta = 1.0) const;
};

const SystemDefinition& builtin(SystemId id);

class InstabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OdeParams {
  std::map<std::string, double> coefficients;  // overrides of the system defaults
  std::map<std::string, double> initial;       // by ode_state variable; missing ones start at 0
  double duration = 20.0;
  double step = 0.01;
  double noise_sigma_scale = 0.0;
  std::uint64_t seed = 0;

  /// Throws ContractViolation unless step > 0, duration >= step and coefficients are positive.
  void validate() const;
};

/// Integrates the linearized system with fixed-step RK4 and adds seeded N(0,1) noise scaled by
/// noise_sigma_scale to every emitted sample. Series are named after the measured variables.
Trace simulate(SystemId id, const OdeParams& params);

/// A locus d(var)/dt = 0 in the (h1,h2) plane: h2 = slope*h1 + intercept, or h1 = intercept
/// when vertical. `singular` marks a division by zero in the formula.
struct IsoclineLine {
  std::string variable;
  double slope = 0;
  double intercept = 0;
  bool vertical = false;
  bool singular = false;
  std::string text;
};

/// Closed-form isoclines for the tank systems. Throws ContractViolation for spring.
std::vector<IsoclineLine> isocline(SystemId id, const std::map<std::string, double>& coefficients = {});

}  // namespace qsi
