#pragma once

#include <memory>
#include <string>
#include <vector>

#include "heapver/terms.hpp"

namespace heapver {

struct Pure;
using PurePtr = std::shared_ptr<const Pure>;

enum class CmpOp { Eq, Ne, Le, Lt, Ge, Gt };

CmpOp negate(CmpOp op);
const char* cmp_str(CmpOp op);

// Pure (non-spatial) constraints. Besides boolean structure and integer
// comparisons these carry the heap-history atoms: Load/Store/Del record a
// field read, a field write, and a deallocation, each stamped with a
// sequence number that fixes their relative order along a path; Dangling
// marks a pointer whose cell has been freed (or never allocated).
struct Pure {
    enum class Kind {
        BoolConst, // value
        VarAtom,   // boolean variable used as an atom
        Cmp,       // lhs op rhs
        EqNull,    // ptr = null
        Dangling,  // dangl(ptr)
        Load,      // LD(base, field, target, seq)
        Store,     // ST(base, field, source, seq)
        Del,       // DEL(base, seq)
        Not,
        And,
        Or,
        Exists, // binder, body in sub[0]
    };

    Kind kind;
    bool value = false;            // BoolConst
    Var var;                       // VarAtom, EqNull, Dangling; binder of Exists
    CmpOp op = CmpOp::Eq;          // Cmp
    TermPtr lhs, rhs;              // Cmp
    Var base, target;              // Load/Store/Del (source of Store in target)
    std::string field;             // Load/Store
    int seq = 0;                   // Load/Store/Del sequence number
    std::vector<PurePtr> sub;      // Not/Exists: 1 child; And/Or: 2+
};

namespace mk {
PurePtr btrue();
PurePtr bfalse();
PurePtr bconst(bool v);
PurePtr var_atom(Var v);
PurePtr cmp(CmpOp op, TermPtr l, TermPtr r);
PurePtr eq(TermPtr l, TermPtr r);
PurePtr ne(TermPtr l, TermPtr r);
PurePtr eq_var(Var a, Var b);
PurePtr ne_var(Var a, Var b);
PurePtr eq_null(Var v);
PurePtr ne_null(Var v);
PurePtr dangl(Var v);
PurePtr not_dangl(Var v);
PurePtr load(Var base, std::string field, Var target, int seq);
PurePtr store(Var base, std::string field, Var source, int seq);
PurePtr del(Var base, int seq);
PurePtr negate(PurePtr p);
PurePtr conj(std::vector<PurePtr> ps); // flattens; drops true; false wins
PurePtr disj(std::vector<PurePtr> ps);
PurePtr exists(Var binder, PurePtr body);
} // namespace mk

bool pure_equal(const PurePtr& x, const PurePtr& y);
void collect_vars(const PurePtr& p, std::set<Var>& out);
std::set<Var> free_vars(const PurePtr& p);

// Capture-safe substitution: entries shadowed by a binder are dropped; a
// replacement whose variables would be captured raises logic_error (callers
// freshen binders first, so this never fires along engine paths).
PurePtr subst_pure(const PurePtr& p, const std::map<Var, TermPtr>& m);

// Total rename of variables, binders included. No shadowing or capture
// checks; the target names must be fresh for the formula.
PurePtr rename_pure(const PurePtr& p, const std::map<Var, Var>& m);

// Splits nested conjunctions into a flat atom list (no And nodes in output).
std::vector<PurePtr> conjuncts(const PurePtr& p);
std::vector<PurePtr> conjuncts(const std::vector<PurePtr>& ps);

} // namespace heapver
