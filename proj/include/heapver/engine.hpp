#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "heapver/render.hpp"
#include "heapver/solver.hpp"

namespace heapver {

// One step of a path through the predicate system: which predicate was
// unfolded and which of its branches was taken, with the branch's origin
// and the source line it ends at.
struct TraceStep {
    std::string pred;
    BranchLabel label;
    BranchOrigin origin = BranchOrigin::ProgramPath;
    int line = 0;
};

struct TreeNode {
    enum class Status { Open, ClosedUnsat, LinkedBack, ErrorWitness };

    int id = 0;
    int parent = -1; // -1 marks the root
    std::vector<int> children;
    SymbolicHeap heap; // every variable free: existentials are skolemized
    TraceStep via;     // unfold step that created this node; root: empty pred
    Status status = Status::Open;
    int link_target = -1; // LinkedBack: id of the ancestor this leaf repeats
    std::string note;     // one-line diagnostic, shown in the dot dump
};

struct ExecTree {
    std::vector<TreeNode> nodes;
    int error_node = -1; // id of the satisfiable error leaf, if one was found
};

enum class Outcome { Safe, Bug, Unknown };
enum class UnknownWhy { UnfoldBound, SolverLimit };

struct Verdict {
    Outcome outcome = Outcome::Unknown;
    UnknownWhy why = UnknownWhy::UnfoldBound;

    // Bug data: the branch path to the satisfiable error leaf, integer
    // inputs that drive execution down it, and the error branch's origin.
    std::vector<TraceStep> trace;
    std::map<std::string, std::int64_t> model;
    BranchOrigin bug_origin = BranchOrigin::ProgramPath;
    int bug_line = 0;

    // Proof data: how many leaves closed by repeating an ancestor.
    int back_links = 0;

    ExecTree tree;
};

struct EngineOptions {
    int unfold_bound = 28; // per-occurrence unfold depth cap
    double timeout_seconds = 180.0;
    SolverOptions solver{};
};

// Decides the query of `sys`. Safe when every path closes: by outright
// contradiction, by the predicate invariants, or by repeating a strictly
// shallower ancestor whose constraints it implies. Bug when some
// predicate-free error leaf is satisfiable. Unknown when the unfold bound
// or a solver limit is hit first. Deterministic for a fixed input.
Verdict solve(const CHCSystem& sys, const EngineOptions& opts = {});

// Graphviz dump of the search tree.
std::string tree_dot(const ExecTree& tree);

} // namespace heapver
