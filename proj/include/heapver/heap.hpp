#pragma once

#include <string>
#include <variant>
#include <vector>

#include "heapver/pure.hpp"

namespace heapver {

// One digit per branch point along a path; used both as the branch tag of a
// predicate-definition disjunct and as one component of a trace.
using BranchLabel = std::vector<int>;

std::string label_str(const BranchLabel& l);

// A single points-to cell: root -> type{field: var, ...}.
struct PointsTo {
    Var root;
    std::string type_name;
    std::vector<std::pair<std::string, Var>> fields;
};

// An instance of an inductive predicate. `unfold` counts how many times this
// occurrence has been unfolded on the current path; `order` is the birth
// index used to break ties among occurrences with equal unfold counts.
struct PredInst {
    std::string pred;
    std::vector<Var> args;
    int order = 0;
    int unfold = 0;
};

using HeapAtom = std::variant<PointsTo, PredInst>;

// One disjunct of a formula in the fragment: existentials over a spatial
// part (emp is the empty list, atoms joined by separating conjunction) and a
// pure part. `nonempty` asserts the heap under this disjunct is non-empty,
// which is how leaked memory stays observable after its cells leave the
// spatial part. `label` names the program branch this disjunct came from.
struct SymbolicHeap {
    std::vector<Var> ex_vars;
    std::vector<HeapAtom> spatial;
    std::vector<PurePtr> pure;
    bool nonempty = false;
    BranchLabel label;
};

struct Formula {
    std::vector<SymbolicHeap> disjuncts;
};

std::set<Var> free_vars(const SymbolicHeap& sh);
std::set<Var> free_vars(const Formula& f);

// Substitution over a disjunct. Spatial positions and access-atom positions
// hold bare variables, so any mapping that reaches one must be
// variable-to-variable; violating that raises logic_error.
SymbolicHeap subst_heap(const SymbolicHeap& sh, const std::map<Var, TermPtr>& m);
SymbolicHeap rename_heap(const SymbolicHeap& sh, const std::map<Var, Var>& m);

// Renames every existential to a fresh variable drawn from `names`.
SymbolicHeap freshen_existentials(const SymbolicHeap& sh, FreshNames& names);

// Structural equality up to renaming of existentials (order-sensitive
// elsewhere: spatial atoms and pure conjuncts must line up positionally).
bool alpha_equal(const SymbolicHeap& a, const SymbolicHeap& b);
bool alpha_equal(const Formula& a, const Formula& b);

} // namespace heapver
