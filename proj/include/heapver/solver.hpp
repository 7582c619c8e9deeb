#pragma once

#include <optional>
#include <unordered_map>

#include "heapver/heap.hpp"

namespace heapver {

struct SolverLimitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Resolves the access atoms of a base disjunct against its cells and applies
// the cheap contradiction rules. Returns nullopt when the disjunct is
// contradictory on its face: an access through null or through a pointer
// with no matching live cell, aliased or overlapping cells, a non-empty
// assertion over an empty residue. In the result the access atoms are gone:
// loads became equalities, stores rewrote their cell's field slot, deletes
// removed the cell and left a dangl fact behind.
//
// Precondition (met by everything the encoder produces): each access base
// either reaches a cell root through the equality closure or refers to
// provably unallocated memory; bases are never left ambiguously aliasable.
std::optional<SymbolicHeap> normalize(const SymbolicHeap& sh);

// Translates a normalized disjunct into a pure integer formula: null becomes
// 0, live roots become nonzero and pairwise distinct, dangl(y) pins y
// outside the live roots, and its negation inside them (or null).
PurePtr expure(const SymbolicHeap& sh);

// Cheap quantifier elimination for satisfiability: substitute equalities
// that define an existential, drop disequalities that are the sole
// occurrences of one. Sound because every variable is ultimately
// existential in a satisfiability query.
PurePtr project(const PurePtr& p, const std::set<Var>& ex_vars);

enum class Sat { Sat, Unsat };

struct SolverOptions {
    // When nonempty, satisfiability queries go to this external command,
    // which is given an SMT-LIB2 file path and must answer sat/unsat on
    // stdout. Empty selects the built-in procedure.
    std::string smt_command;
};

// Satisfiability of quantifier-free integer formulas with full boolean
// structure; the formula view of the access-free fragment. Results are
// memoized per rendered formula.
class BaseSolver {
public:
    explicit BaseSolver(SolverOptions opts = {});

    Sat decide(const PurePtr& p);

    // Full pipeline on one base disjunct.
    bool heap_sat(const SymbolicHeap& sh);

    std::uint64_t queries_decided() const { return decided_; }

private:
    SolverOptions opts_;
    std::unordered_map<std::string, Sat> memo_;
    std::uint64_t decided_ = 0;
};

// SMT-LIB2 serialization of a pure integer formula (used by the external
// solver route; exposed for tests).
std::string to_smt2(const PurePtr& p);

} // namespace heapver
