#pragma once

#include <map>
#include <string>

#include "heapver/heap.hpp"

namespace heapver {

// Textual form of formulas, round-trippable through parse_formula:
//
//   exists i1, r. res->node{val: i, next: r} * sll(i1, r, eps)^o:0,u:1
//     & i != 0 & i1 = i - 1 : [2]
//
// "emp" stands for the empty spatial part, "@NE" (printed before the label)
// asserts a non-empty heap, and ": [digits]" is the optional branch tag.
std::string render(const TermPtr& t);
std::string render(const PurePtr& p);
std::string render(const HeapAtom& a);
std::string render(const SymbolicHeap& sh);
std::string render(const Formula& f); // disjuncts joined by " | "

struct ParseError : std::runtime_error {
    int line, col;
    ParseError(const std::string& msg, int line, int col);
};

TermPtr parse_term(const std::string& text);
PurePtr parse_pure(const std::string& text);
SymbolicHeap parse_heap(const std::string& text);
Formula parse_formula(const std::string& text);

// A predicate definition: branches keep their order; `invariant` is the
// over-approximation over the parameters (btrue until inference runs).
// `origins` records, per branch, which kind of program event produced it.
enum class BranchOrigin {
    ProgramPath,
    Assertion,
    NullDeref,
    DanglingDeref,
    FreeNull,
    DoubleFree,
    Leak,
};

const char* origin_str(BranchOrigin o);

struct PredDef {
    std::string name;
    std::vector<Var> params;
    std::vector<SymbolicHeap> branches;
    std::vector<BranchOrigin> origins; // parallel to branches
    std::vector<int> lines;            // parallel: source line each branch ends at
    PurePtr invariant;
};

struct CHCSystem {
    std::vector<PredDef> preds; // callees before callers
    SymbolicHeap query;         // reachable-error condition
};

// Serialized system: one "pred NAME(params) := ..." block per definition
// with one indented "| ..." line per branch, an "inv" line when the
// invariant is not trivially true, then a final "query ..." line.
std::string render(const CHCSystem& sys);
CHCSystem parse_system(const std::string& text);

// Equality of whole systems up to renaming existentials inside each branch.
// Parameter lists, branch order, labels, and the query must match exactly.
bool alpha_equal(const CHCSystem& a, const CHCSystem& b);

} // namespace heapver
