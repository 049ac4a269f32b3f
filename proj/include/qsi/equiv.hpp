#pragma once

#include "qsi/model.hpp"

#include <string>

namespace qsi {

struct CanonicalOptions {
  /// Allow replacing an unrestricted hidden variable v by -v (rewrites ADD/M+/M-/MINUS accordingly).
  bool sign_flips = true;
  /// Merge two additive relations that share a hidden variable occurring nowhere else.
  bool flatten_sums = true;
  /// Rewrite relations through measured variables tied by M+/M-/MINUS (e.g. qx = -mqx).
  bool measured_aliases = true;
  /// Eliminate an unrestricted hidden variable tied to another variable by M+/M-/MINUS, which
  /// under sign semantics only renames that variable (possibly negated).
  bool hidden_aliases = true;
};

/// Text that is identical for two models iff they are equal up to renaming of hidden variables,
/// argument-order symmetries and the rewrites enabled in `opt`. Additive relations
/// (ADD, SUB, SUM) are written as signed sums, and M+/M-/MINUS as signed pairs, so SUB(a,b,c)
/// and ADD(b,c,a) coincide, as do M-(x,y) and MINUS(x,y) (identical under sign semantics).
std::string canonical_form(const Model& m, const CanonicalOptions& opt = {});

bool model_equivalent(const Model& a, const Model& b);

}  // namespace qsi
