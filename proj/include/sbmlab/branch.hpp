#pragma once

namespace sbmlab {

// Which evaluation branch a special-function call took.
enum class BranchKind { series, asymptotic };

// Introspection record attached to branchy evaluators.  All evaluators with
// multiple branches accept an optional EvalBranch* out-parameter and fill in
// the kind of branch used, the argument threshold at which the implementation
// switches branches, and the number of series/expansion terms consumed.
//
// Invariants: switch_point > 0, terms_used >= 1, and at the switch point the
// two branches agree to better than 1e-9 relative (covered by tests).
struct EvalBranch {
  BranchKind kind = BranchKind::series;
  double switch_point = 1.0;
  int terms_used = 1;
};

inline const char* branch_kind_name(BranchKind k) {
  return k == BranchKind::series ? "series" : "asymptotic";
}

}  // namespace sbmlab
