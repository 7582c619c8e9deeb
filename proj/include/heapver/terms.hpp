#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>

#include "heapver/vars.hpp"

namespace heapver {

struct Term;
using TermPtr = std::shared_ptr<const Term>;

// Integer-valued terms. Everything the surface language produces is linear;
// min/max show up only through the solver's internal rewrites and are
// eliminated by case split before deciding.
struct Term {
    enum class Kind { Const, VarRef, Add, Neg, Scale, Min, Max };

    Kind kind;
    std::int64_t num = 0; // Const value, or Scale coefficient
    Var var;              // VarRef
    TermPtr a, b;         // Add/Min/Max children; Neg/Scale child in a

    static TermPtr constant(std::int64_t v);
    static TermPtr ref(Var v);
    static TermPtr add(TermPtr x, TermPtr y);
    static TermPtr sub(TermPtr x, TermPtr y);
    static TermPtr neg(TermPtr x);
    static TermPtr scale(std::int64_t c, TermPtr x);
    static TermPtr min(TermPtr x, TermPtr y);
    static TermPtr max(TermPtr x, TermPtr y);
};

bool term_equal(const TermPtr& x, const TermPtr& y);
void collect_vars(const TermPtr& t, std::set<Var>& out);
TermPtr subst_term(const TermPtr& t, const std::map<Var, TermPtr>& m);

// A term is "simple" when it is a bare variable reference; several positions
// (heap cells, predicate arguments) only admit variables, and substitution
// into those positions requires the replacement to be simple.
std::optional<Var> as_var(const TermPtr& t);

// Linear view: coeffs * vars + constant. Empty when the term contains min/max.
struct LinTerm {
    std::map<Var, std::int64_t> coeffs;
    std::int64_t constant = 0;

    LinTerm& operator+=(const LinTerm& o);
    LinTerm& operator*=(std::int64_t c);
    bool is_constant() const { return coeffs.empty(); }
};

std::optional<LinTerm> to_linear(const TermPtr& t);
TermPtr from_linear(const LinTerm& lt);

} // namespace heapver
