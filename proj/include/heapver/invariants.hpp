#pragma once

#include "heapver/render.hpp"
#include "heapver/solver.hpp"

namespace heapver {

// Computes a per-predicate over-approximation of the derivable argument
// tuples: interval bounds on the parameters found by a fixed-point
// iteration with widening, plus parameter-only facts shared by every
// branch. The result is written into each PredDef::invariant (conjunction,
// btrue when nothing was found). Returns false when the iteration cap was
// reached before stabilizing (the invariants are still sound).
bool infer_invariants(CHCSystem& sys);

struct PruneReport {
    struct Removed {
        std::string pred;
        BranchLabel label;
        std::vector<std::string> reason; // minimal unsatisfiable conjunct set
    };
    std::vector<Removed> removed;
    int rounds = 0;        // invariant/prune alternations performed
    bool converged = true; // false when max_rounds was hit while still pruning
};

// Drops branches whose bodies are unsatisfiable once every predicate
// occurrence is replaced by its invariant, then re-infers invariants, and
// repeats until nothing changes (at most max_rounds alternations).
PruneReport prune_system(CHCSystem& sys, BaseSolver& solver, int max_rounds = 5);

} // namespace heapver
