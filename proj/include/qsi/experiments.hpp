#pragma once

#include "qsi/learner.hpp"
#include "qsi/quant2qual.hpp"
#include "qsi/systems.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace qsi {

class GuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kExhaustiveLimit = 70'000;

enum class SweepMode { noise_free, noisy };

struct SweepConfig {
  SystemId system = SystemId::utube;
  SweepMode mode = SweepMode::noise_free;
  /// Sampled strategy: at most this many subsets per subset size, drawn with the master seed.
  std::optional<std::size_t> sample_per_size;
  /// Restricts the sweep to subsets of at most this size (0 = no restriction).
  std::size_t max_subset_size = 0;
  /// Sufficiency threshold; nullopt means 1.0 for noise-free and 0.7 for noisy sweeps.
  std::optional<double> theta;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::size_t node_limit = 200'000;
  /// Called after each finished run with (done, total); may be empty.
  std::function<void(std::size_t, std::size_t)> progress;

  [[nodiscard]] double effective_theta() const;
};

struct SweepRecord {
  std::vector<int> subset;  // published state numbers (replaced states for noisy sweeps)
  std::size_t k = 0;        // number of states replaced by random states
  double precision = 0;
  std::size_t result_size = 0;
  std::size_t nodes_explored = 0;
  bool exhausted = false;
  /// Size of the training set that the learning curve is indexed by: the subset size for
  /// noise-free runs and the number of retained noise-free states (N - k) for noisy ones.
  [[nodiscard]] std::size_t curve_size(std::size_t envisionment_size) const;
};

/// Subsets of {0..n-1} as bit masks, ordered by size then lexicographically. Throws GuardError when
/// an exhaustive enumeration would exceed kExhaustiveLimit.
std::vector<std::uint64_t> sweep_subsets(std::size_t n, const SweepConfig& cfg);

std::vector<SweepRecord> sweep_noise_free(const SweepConfig& cfg);
std::vector<SweepRecord> sweep_noisy(const SweepConfig& cfg);
std::vector<SweepRecord> sweep(const SweepConfig& cfg);

/// Deterministic per-run seed from the master seed and the run index.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Uniform draw over domain-valid values of the measured, non-exogenous variables; exogenous
/// variables take their fixed values.
QualState random_state(const std::vector<Variable>& variables, const ExoBindings& exo, std::mt19937_64& rng);

struct CurvePoint {
  std::size_t size = 0;
  double avg_precision = 0;
  std::size_t runs = 0;
};
std::vector<CurvePoint> size_averages(const std::vector<SweepRecord>& records, std::size_t envisionment_size);

/// Minimal subsets reaching precision 1.0 (no proper subset does), from noise-free runs with
/// theta = 1 over subsets of at most `max_size` states (0 = all).
std::vector<std::vector<int>> find_kernels(SystemId system, std::size_t max_size = 0, std::size_t jobs = 1);
std::vector<std::vector<int>> minimal_perfect_subsets(const std::vector<SweepRecord>& records);

struct QuantRow {
  double noise = 0;
  std::vector<double> init;
  std::size_t states = 0;
  std::size_t true_states = 0;
  std::size_t false_states = 0;
};

struct QuantLevel {
  double noise = 0;
  std::size_t pooled_states = 0;
  std::size_t pooled_true = 0;
  double precision = 0;
  std::size_t result_size = 0;
  bool exhausted = false;
};

struct QuantConfig {
  SystemId system = SystemId::utube;
  std::vector<std::vector<double>> inits{{2, 0}, {0, 3}, {2, 3}};
  std::vector<double> noise_levels{0.0, 0.01, 0.1, 1.0};
  std::uint64_t seed = 0;
  ConversionParams conversion;
  /// Sufficiency threshold for clean and for noisy training sets.
  double clean_theta = 0.7;
  double noisy_theta = 0.7;
  std::size_t node_limit = 200'000;
  /// Skip learning and report conversion counts only.
  bool learn = true;
};

struct QuantReport {
  std::vector<QuantRow> rows;
  std::vector<QuantLevel> levels;
};

/// Simulates each initial condition, converts to qualitative states, pools them and learns.
QuantReport quantitative_experiment(const QuantConfig& cfg);

/// Process-wide hypothesis index for the configuration, built on first use.
const HypothesisIndex& shared_index(const SearchConfig& cfg);

/// Runs `count` independent jobs on up to `jobs` threads.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& body);

}  // namespace qsi
