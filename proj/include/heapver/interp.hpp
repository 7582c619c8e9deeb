#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "heapver/program.hpp"

namespace heapver {

// Result of running a program concretely. `value` carries main's result for
// Ok; `mem` and `line` describe the fault for MemError; AssertError carries
// the failing line. Leak means main returned with cells still allocated.
struct RunOutcome {
    enum class Kind { Ok, AssertError, MemError, Leak, Bound };
    enum class Mem { None, NullDeref, DanglingDeref, FreeNull, DoubleFree };

    Kind kind = Kind::Ok;
    std::int64_t value = 0;
    Mem mem = Mem::None;
    int line = 0;

    bool operator==(const RunOutcome&) const = default;
    std::string str() const;
};

// Runs main with the given integer inputs (missing parameters default to 0).
// Execution stops with Kind::Bound once `step_bound` statements have run or
// the call stack exceeds `depth_cap`. A failed assume ends the run as Ok(0).
RunOutcome interpret_bounded(const CoreProgram& prog,
                             const std::map<std::string, std::int64_t>& inputs,
                             std::uint64_t step_bound = 100000, int depth_cap = 5000);

} // namespace heapver
