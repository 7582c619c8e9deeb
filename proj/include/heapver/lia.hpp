#pragma once

#include <stdexcept>
#include <vector>

#include "heapver/terms.hpp"

namespace heapver::lia {

// expr >= 0, expr = 0, or expr != 0 over the integers
struct Constraint {
    enum class Kind { Ge0, Eq0, Ne0 };
    LinTerm expr;
    Kind kind = Kind::Ge0;
};

struct LimitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Exact integer satisfiability. Disequalities are case split; equalities are
// eliminated by substitution (with the modulus trick when no coefficient is
// a unit); inequalities go through shadow projection, with the tight shadow
// confirming satisfiable answers and splinter enumeration covering the gap
// between the two shadows. Raises LimitError if the node budget or the
// 64-bit coefficient range is exhausted.
bool sat(const std::vector<Constraint>& cs, std::uint64_t node_budget = 2'000'000);

} // namespace heapver::lia
