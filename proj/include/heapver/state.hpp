#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "heapver/heap.hpp"

namespace heapver {

// Runtime values: integers, heap locations (1-based), and the null pointer.
struct Value {
    enum class Kind { Int, Loc, Null };
    Kind kind = Kind::Null;
    std::int64_t num = 0;  // Int
    std::uint32_t loc = 0; // Loc

    static Value of_int(std::int64_t v) { return {Kind::Int, v, 0}; }
    static Value of_loc(std::uint32_t l) { return {Kind::Loc, 0, l}; }
    static Value null() { return {}; }

    bool operator==(const Value&) const = default;
    std::string str() const;
};

struct HeapCell {
    std::string type_name;
    std::vector<std::pair<std::string, Value>> fields;

    Value* find(const std::string& field);
    const Value* find(const std::string& field) const;
};

struct ConcreteState {
    std::map<Var, Value> stack;
    std::map<std::uint32_t, HeapCell> heap;

    std::string str() const;
};

struct EvalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Decides whether `state` satisfies one disjunct. Existentials are treated
// as free (the caller's state must assign them). The spatial part must match
// the heap exactly: distinct locations, full coverage, equal field contents.
// Access atoms then replay against a copy of the heap in sequence order,
// each checking its own legality. A positive dangl claim and the non-empty
// flag are judged on the heap as it stands after that replay; a negated
// dangl claim is a guard and is judged on the heap at entry, before the
// replay. Ill-typed formulas (an ordered comparison on pointers, an
// unassigned variable) raise EvalError.
bool eval_base(const ConcreteState& state, const SymbolicHeap& sh);

struct EnumLimitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Exhaustively enumerates the states over the disjunct's variables that
// satisfy it: integer variables range over [-int_bound, int_bound], pointer
// variables over null plus `heap_locs` locations (variables are classified
// by how the formula uses them). Raises EnumLimitError when the raw
// assignment space exceeds `max_space`.
std::vector<ConcreteState> enumerate_models(const SymbolicHeap& sh,
                                            std::int64_t int_bound,
                                            std::uint32_t heap_locs,
                                            std::uint64_t max_space = 60'000'000);

} // namespace heapver
