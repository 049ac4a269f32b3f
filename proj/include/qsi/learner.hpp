#pragma once

#include "qsi/cover.hpp"
#include "qsi/model.hpp"
#include "qsi/wellposed.hpp"

#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace qsi {

/// One argument of a mode declaration: `+t` (existing variable of type t), `-t` (existing or fresh
/// variable of type t) or `#t` (an exogenous variable of type t). Types are dimensions.
struct ArgMode {
  enum class Kind { input, output, constant };
  Kind kind = Kind::input;
  Dimension type;
};

struct ModeDecl {
  ConstraintKind kind = ConstraintKind::ADD;
  std::vector<ArgMode> args;

  /// Text form `KIND(-L, +L*T^-1, #F)`; an optional leading `mode` keyword is accepted by parse.
  [[nodiscard]] std::string str() const;
  static ModeDecl parse(std::string_view text);
};

/// Modes file: `mode KIND(...)` lines and `limit KIND n` lines; `#` comments.
struct ModeFile {
  std::vector<ModeDecl> modes;
  std::map<ConstraintKind, std::size_t> limits;
};
ModeFile parse_mode_text(std::string_view text);

struct ScoreParams {
  enum class Generality { automatic, exact, sampled };
  /// automatic: exact enumeration when the state space has at most `exact_limit` points.
  Generality generality = Generality::automatic;
  std::size_t exact_limit = 1'000'000;
  std::size_t sample_size = 1000;
  std::uint64_t seed = 0;
};

struct SearchConfig {
  /// Measured variable declarations (exogenous ones included).
  std::vector<Variable> variables;
  std::vector<ModeDecl> modes;
  WellPosedSpec spec;
  ScoreParams score;
  std::size_t node_limit = 200'000;
  bool prune = true;
};

struct CostScore {
  double q = 0;          // log D_H + p log(1/g)
  double prior_log = 0;  // log D_H = -size * log 2
  std::size_t p = 0;     // training states covered
  double g = 0;          // smoothed generality in (0,1)
  std::size_t covered = 0;  // state-space points covered (exact mode) or sample hits
  [[nodiscard]] double cost() const { return -q; }
};

/// Search configuration file: `var`/`fix` lines as in model text, `mode`/`limit` lines as in mode
/// files and `key = value` settings (target_size, theta, nodes, seed, generality, sample_size,
/// exact_limit). Variables must all be measured.
SearchConfig parse_search_config(std::string_view text);

std::string format_search_config(const SearchConfig& cfg);

/// Q(C) for a model of `size` constraints covering `p` training states with generality `g`.
CostScore make_score(std::size_t size, std::size_t p, double g);

/// Laplace-smoothed generality estimate from `sample_size` uniform draws over `space`.
double generality(const Model& m, const StateSpace& space, const ExoBindings& exo, std::size_t sample_size,
                  std::uint64_t seed);
/// Exact smoothed generality (covered + 1) / (|space| + 2).
double generality_exact(const Model& m, const StateSpace& space, const ExoBindings& exo);

/// Cost of a full-size acceptable model against training states.
CostScore cost(const Model& m, const std::vector<QualState>& states, const SearchConfig& cfg);

/// Measured, non-exogenous variables sorted by name: the space generality is measured over.
StateSpace measured_space(const std::vector<Variable>& variables);

/// Training-set independent search state: the refinement graph and per-model coverage, shared by
/// every search with the same variables, modes, limits and target size. Thread-safe.
class SearchContext {
 public:
  explicit SearchContext(const SearchConfig& cfg);

  [[nodiscard]] const StateSpace& space() const { return space_; }
  [[nodiscard]] const std::string& signature() const { return signature_; }
  [[nodiscard]] std::size_t node_count() const;

  struct Node {
    Model model;
    std::string key;
    StateSet coverage;
    bool full_ok = false;  // full size and passes the data-independent rules
    bool expanded = false;
    std::vector<std::size_t> children;
  };

  std::size_t root();
  /// Node by id; references stay valid for the context's lifetime.
  const Node& node(std::size_t id) const;
  /// Children that pass the data-independent gates; computed once per node.
  const std::vector<std::size_t>& children(std::size_t id);

  /// Candidate literals for `m` under the modes, before gating (the raw refinement step).
  std::vector<Model> raw_refinements(const Model& m) const;
  /// Data-independent partial gates: language, dimensions, redundancy, contradiction,
  /// intermediate budget and completability.
  bool static_gate(const Model& parent, const Model& child) const;

 private:
  std::size_t intern(Model m);
  bool implied_cached(const Constraint& a, const Constraint& b, const Model& m) const;
  bool joint_cached(const Constraint& a, const Constraint& b, const Model& m) const;
  bool full_rules_ok(const Model& m) const;

  std::vector<Variable> variables_;
  ExoBindings exo_;
  std::vector<ModeDecl> modes_;
  std::map<ConstraintKind, std::size_t> limits_;
  std::size_t target_size_;
  std::size_t max_intermediates_;
  std::size_t max_arity_;
  std::vector<std::string> measured_;
  StateSpace space_;
  std::string signature_;

  mutable std::recursive_mutex mu_;
  std::deque<Node> nodes_;
  std::unordered_map<std::string, std::size_t> index_;
  mutable std::unordered_map<std::string, bool> implied_cache_;
  mutable std::unordered_map<std::string, bool> joint_cache_;
};

/// Adds one constraint to `m` in every way the modes allow, keeping children that pass the
/// partial gates; duplicates (renaming and argument symmetries) are removed.
std::vector<Model> refine(const Model& m, const std::vector<ModeDecl>& modes, const SearchConfig& cfg);

struct SearchResult {
  std::vector<Model> models;
  std::vector<CostScore> scores;
  bool exhausted = false;  // node limit reached with open nodes left
  std::size_t nodes_explored = 0;
};

/// Best-first branch-and-bound over refinements of the empty model. Returns every cost-minimal
/// acceptable full-size model among those explored, one per equivalence class. `ctx` may be
/// shared across calls.
SearchResult bb_search(const std::vector<QualState>& states, const SearchConfig& cfg, SearchContext* ctx = nullptr);

/// Every acceptable full-size model reachable by refinement, enumerated once without reference
/// to training data. Searching the index returns exactly the models an exhaustive bb_search
/// returns for the same configuration, without a node limit.
class HypothesisIndex {
 public:
  explicit HypothesisIndex(const SearchConfig& cfg);

  struct Entry {
    Model model;
    StateSet coverage;
  };

  [[nodiscard]] const std::vector<Entry>& entries() const { return entries_; }
  [[nodiscard]] const StateSpace& space() const { return space_; }
  [[nodiscard]] const std::string& signature() const { return signature_; }
  /// Key identifying the variables, exogenous values, modes, limits and size of a configuration.
  static std::string signature_of(const SearchConfig& cfg);
  /// Number of complete literal combinations examined while building.
  [[nodiscard]] std::size_t candidates_examined() const { return examined_; }

  /// Thread-safe; `cfg` must match the configuration the index was built for except for theta,
  /// scoring parameters and the node limit.
  [[nodiscard]] SearchResult search(const std::vector<QualState>& states, const SearchConfig& cfg) const;

 private:
  StateSpace space_;
  std::string signature_;
  std::vector<Entry> entries_;
  std::size_t examined_ = 0;
};

/// Fraction of `result` equivalent to `target`; 0 for an empty result.
double precision(const std::vector<Model>& result, const Model& target);

}  // namespace qsi
