#pragma once

#include <compare>
#include <map>
#include <string>

namespace heapver {

// An SSA-style variable: base name plus a version counter. Version 0 renders
// as the bare name, version k>0 as name followed by k ("i" -> "i1"). Base
// names never end in a digit (the program parser enforces this), so the
// rendering parses back unambiguously.
struct Var {
    std::string name;
    int version = 0;

    auto operator<=>(const Var&) const = default;

    std::string str() const {
        return version == 0 ? name : name + std::to_string(version);
    }
};

// Reserved variables of the encoding: the exit-status slot and the return
// slot. Rendered as "eps" / "res"; source programs cannot declare them.
inline const Var kEps{"eps", 0};
inline const Var kRes{"res", 0};

// Deterministic fresh-variable source: bumps a per-base-name counter.
// Seed it with every variable already in scope before drawing.
class FreshNames {
public:
    Var fresh(const std::string& base) { return Var{base, ++counters_[base]}; }

    void reserve(const Var& v) {
        int& c = counters_[v.name];
        if (v.version > c) c = v.version;
    }

private:
    std::map<std::string, int> counters_;
};

} // namespace heapver
