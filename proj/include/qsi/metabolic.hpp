#pragma once

#include "qsi/model.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qsi {

class UnsupportedMetabolite : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Formula = std::map<std::string, int>;

struct FlowTerm {
  std::string enzyme_flow;
  bool positive = true;
};

struct MetaboliteSpec {
  std::string name;
  Formula formula;
  std::string concentration;  // e.g. NADc
  std::string flow;           // e.g. NADf, the concentration's rate of change
  std::vector<FlowTerm> terms;
};

struct EnzymeSpec {
  std::vector<std::string> substrates;  // concentration variables, 1..3
  std::vector<std::string> products;    // 1..3
  std::string flow;                     // e.g. Enz6f

  /// Throws ContractViolation unless both sides hold 1..3 names.
  void validate() const;
};

/// Names of the internal variables of an enzyme expansion.
std::string enzyme_minus(const std::string& flow);

/// PROD(substrates, S-for), PROD(products, P-rev), M+(S-for, Ds), M+(P-rev, Dp), SUB(Ds, Dp, Flow),
/// MINUS(Flow, Flow_minus). A one-metabolite side uses the concentration directly instead of a PROD.
std::vector<Constraint> expand_enzyme(const EnzymeSpec& e);

/// DERIV(concentration, flow) plus SUM of the signed enzyme flows into `flow`; negative terms use
/// the enzyme's MINUS output. With a single term the SUM is elided and `alias` receives the
/// (term variable, flow) pair the caller must identify.
struct MetaboliteExpansion {
  std::vector<Constraint> constraints;
  std::optional<std::pair<std::string, std::string>> alias;
};
MetaboliteExpansion expand_metabolite(const MetaboliteSpec& m);

struct PathwayOptions {
  /// Irreversible enzymes carry a nonnegative flow; reversible ones an unrestricted one.
  bool reversible = false;
};

/// Builds the QSIM model of a metabolic network: metabolite concentrations and flows are measured;
/// enzyme internals are hidden. Unused MINUS outputs are dropped.
Model build_metabolic_model(const std::vector<EnzymeSpec>& enzymes, const std::vector<MetaboliteSpec>& metabolites,
                            const PathwayOptions& opt = {});

/// Parses `ENZYME((A, B), (C, D), Enz1f)` and `METABOLITE(Ac, Af, (Enz1f, -), ...)` lines.
void parse_metabolic_text(std::string_view text, std::vector<EnzymeSpec>& enzymes, std::vector<MetaboliteSpec>& metabolites);

/// The ten-enzyme, fifteen-metabolite glycolysis network.
std::string glycolysis_model_text();
Model glycolysis_model();
/// A legal observed state of the fifteen glycolysis metabolites (concentrations and flows).
QualState glycolysis_state();

struct Reaction {
  std::vector<std::string> substrates;  // sorted multiset
  std::vector<std::string> products;    // sorted multiset
  [[nodiscard]] std::string str() const;
  friend bool operator==(const Reaction&, const Reaction&) = default;
  friend auto operator<=>(const Reaction&, const Reaction&) = default;
};

/// Formula file lines `name,C:6;H:12;O:6`.
std::map<std::string, Formula> parse_formulas(std::string_view text);
/// The fifteen glycolysis metabolites plus water, orthophosphate and a proton.
std::map<std::string, Formula> glycolysis_formulas();

/// Metabolites assumed ubiquitous and left out of balancing.
inline const std::vector<std::string> kUbiquitousMetabolites{"H2O", "Pi", "H"};
std::map<std::string, Formula> without(std::map<std::string, Formula> formulas, const std::vector<std::string>& names);

/// Reaction lines `A + B -> C + D`; `#` comments.
std::vector<Reaction> parse_reactions(std::string_view text);

/// Every element-balanced reaction with disjoint sides of 1..max metabolites (multisets).
std::vector<Reaction> balanced_reactions(const std::map<std::string, Formula>& formulas, std::size_t max_substrates = 3,
                                         std::size_t max_products = 3);

/// Atom-level structure of a metabolite: atoms labelled by element and undirected bonds.
struct BondGraph {
  std::vector<std::string> elements;
  std::vector<std::pair<int, int>> bonds;
};
/// Lines `NAME: C1-C2 C2-O3` (isolated atoms as `NAME: C1`). Atom tokens are element + index.
std::map<std::string, BondGraph> parse_bond_graphs(std::string_view text);

/// True iff some element-preserving atom mapping from substrates to products breaks at most one
/// bond in each substrate molecule. Throws UnsupportedMetabolite without a bond graph.
bool plausible(const Reaction& r, const std::map<std::string, BondGraph>& bonds);

struct PathwayCandidate {
  std::vector<Reaction> reactions;
  Model model;
};

inline constexpr std::size_t kPathwayMaxReactions = 8;
inline constexpr std::size_t kPathwayMaxMetabolites = 8;

/// Expands a reaction set into a metabolic model; metabolite concentration `Xc`, flow `Xf` and
/// enzyme flows `Enz{i}f` numbered by position.
Model pathway_model(const std::vector<Reaction>& reactions, const PathwayOptions& opt = {});

/// Connected reaction subsets touching every metabolite, in increasing size up to `max_reactions`,
/// whose model covers every observed state. Throws ContractViolation beyond toy scale.
std::vector<PathwayCandidate> pathway_search(const std::vector<Reaction>& reactions,
                                             const std::vector<std::string>& metabolites,
                                             const std::vector<QualState>& observed, std::size_t max_reactions,
                                             const PathwayOptions& opt = {});

}  // namespace qsi
