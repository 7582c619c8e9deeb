#pragma once

#include "heapver/program.hpp"
#include "heapver/render.hpp"

namespace heapver {

struct EncodeError : std::runtime_error {
    int line;
    EncodeError(const std::string& msg, int line);
};

// Turns a lowered program into one inductive predicate per procedure
// (parameters ++ result slots ++ the status variable eps) plus the
// reachable-error query main(...) & eps = 1. Every program path becomes one
// branch; memory operations on pointers of unknown provenance fork error
// disjuncts, calls conjoin predicate instances, and main's exits that still
// own cells get a non-empty leak twin. Branch k / call-order counters
// restart per path and grow strictly along it.
CHCSystem encode_program(const CoreProgram& prog);

// The result slots used for a procedure with the given return count.
std::vector<Var> result_slots(std::size_t ret_count);

} // namespace heapver
