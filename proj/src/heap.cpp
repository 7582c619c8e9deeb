#include "heapver/heap.hpp"

#include <algorithm>
#include <functional>
#include <stdexcept>

#include "heapver/render.hpp"

namespace heapver {

std::string label_str(const BranchLabel& l) {
    std::string out = "[";
    for (size_t i = 0; i < l.size(); ++i) {
        if (i) out += ";";
        out += std::to_string(l[i]);
    }
    return out + "]";
}

static void collect_atom_vars(const HeapAtom& a, std::set<Var>& out) {
    if (const auto* pt = std::get_if<PointsTo>(&a)) {
        out.insert(pt->root);
        for (const auto& [f, v] : pt->fields) {
            (void)f;
            out.insert(v);
        }
    } else {
        const auto& pi = std::get<PredInst>(a);
        out.insert(pi.args.begin(), pi.args.end());
    }
}

std::set<Var> free_vars(const SymbolicHeap& sh) {
    std::set<Var> out;
    for (const auto& a : sh.spatial) collect_atom_vars(a, out);
    for (const auto& p : sh.pure) collect_vars(p, out);
    for (const auto& e : sh.ex_vars) out.erase(e);
    return out;
}

std::set<Var> free_vars(const Formula& f) {
    std::set<Var> out;
    for (const auto& d : f.disjuncts) {
        auto fv = free_vars(d);
        out.insert(fv.begin(), fv.end());
    }
    return out;
}

static Var map_var(const Var& v, const std::map<Var, TermPtr>& m) {
    auto it = m.find(v);
    if (it == m.end()) return v;
    if (auto w = as_var(it->second)) return *w;
    throw std::logic_error("substitution maps spatial position to a compound term: " + v.str());
}

static HeapAtom subst_atom(const HeapAtom& a, const std::map<Var, TermPtr>& m) {
    if (const auto* pt = std::get_if<PointsTo>(&a)) {
        PointsTo out = *pt;
        out.root = map_var(out.root, m);
        for (auto& [f, v] : out.fields) {
            (void)f;
            v = map_var(v, m);
        }
        return out;
    }
    PredInst out = std::get<PredInst>(a);
    for (auto& v : out.args) v = map_var(v, m);
    return out;
}

SymbolicHeap subst_heap(const SymbolicHeap& sh, const std::map<Var, TermPtr>& m) {
    auto inner = m;
    for (const auto& e : sh.ex_vars) inner.erase(e); // binders shadow
    if (inner.empty()) return sh;
    for (const auto& [from, to] : inner) {
        (void)from;
        std::set<Var> range;
        collect_vars(to, range);
        for (const auto& e : sh.ex_vars)
            if (range.count(e))
                throw std::logic_error("substitution would capture existential " + e.str());
    }
    SymbolicHeap out = sh;
    for (auto& a : out.spatial) a = subst_atom(a, inner);
    for (auto& p : out.pure) p = subst_pure(p, inner);
    return out;
}

// Total rename, including the existential binders themselves. Used to
// freshen or canonicalize bound variables; does not shield anything.
SymbolicHeap rename_heap(const SymbolicHeap& sh, const std::map<Var, Var>& m) {
    std::map<Var, TermPtr> tm;
    for (const auto& [from, to] : m) tm.emplace(from, Term::ref(to));
    SymbolicHeap out = sh;
    for (auto& e : out.ex_vars) {
        auto it = m.find(e);
        if (it != m.end()) e = it->second;
    }
    for (auto& a : out.spatial) a = subst_atom(a, tm);
    for (auto& p : out.pure) p = rename_pure(p, m);
    return out;
}

SymbolicHeap freshen_existentials(const SymbolicHeap& sh, FreshNames& names) {
    if (sh.ex_vars.empty()) return sh;
    std::map<Var, Var> m;
    for (const auto& e : sh.ex_vars) m.emplace(e, names.fresh(e.name));
    return rename_heap(sh, m);
}

// Existentials renamed to _c1.._cN in order of first syntactic occurrence,
// which makes renders of alpha-equivalent disjuncts string-equal.
static SymbolicHeap canonical_form(const SymbolicHeap& sh) {
    if (sh.ex_vars.empty()) return sh;
    std::set<Var> ex(sh.ex_vars.begin(), sh.ex_vars.end());
    std::vector<Var> order;
    std::set<Var> seen;
    auto note = [&](const Var& v) {
        if (ex.count(v) && !seen.count(v)) {
            seen.insert(v);
            order.push_back(v);
        }
    };
    for (const auto& a : sh.spatial) {
        if (const auto* pt = std::get_if<PointsTo>(&a)) {
            note(pt->root);
            for (const auto& [f, v] : pt->fields) {
                (void)f;
                note(v);
            }
        } else {
            for (const auto& v : std::get<PredInst>(a).args) note(v);
        }
    }
    for (const auto& p : sh.pure) {
        // occurrence order within a conjunct follows render order, which is a
        // preorder walk; collect_vars returns a set, so walk manually here
        std::vector<Var> occ;
        std::function<void(const TermPtr&)> walk_t = [&](const TermPtr& t) {
            if (!t) return;
            if (t->kind == Term::Kind::VarRef) occ.push_back(t->var);
            walk_t(t->a);
            walk_t(t->b);
        };
        std::function<void(const PurePtr&)> walk_p = [&](const PurePtr& q) {
            if (!q) return;
            switch (q->kind) {
            case Pure::Kind::BoolConst: return;
            case Pure::Kind::VarAtom:
            case Pure::Kind::EqNull:
            case Pure::Kind::Dangling: occ.push_back(q->var); return;
            case Pure::Kind::Cmp:
                walk_t(q->lhs);
                walk_t(q->rhs);
                return;
            case Pure::Kind::Load:
            case Pure::Kind::Store:
                occ.push_back(q->base);
                occ.push_back(q->target);
                return;
            case Pure::Kind::Del: occ.push_back(q->base); return;
            default:
                for (const auto& s : q->sub) walk_p(s);
                return;
            }
        };
        walk_p(p);
        for (const auto& v : occ) note(v);
    }
    for (const auto& e : sh.ex_vars) note(e); // unused existentials last
    std::map<Var, Var> m;
    int i = 0;
    for (const auto& v : order) m.emplace(v, Var{"_c", ++i});
    SymbolicHeap out = rename_heap(sh, m);
    // put binder list in canonical order too
    std::sort(out.ex_vars.begin(), out.ex_vars.end());
    return out;
}

bool alpha_equal(const SymbolicHeap& a, const SymbolicHeap& b) {
    return render(canonical_form(a)) == render(canonical_form(b));
}

bool alpha_equal(const Formula& a, const Formula& b) {
    if (a.disjuncts.size() != b.disjuncts.size()) return false;
    for (size_t i = 0; i < a.disjuncts.size(); ++i)
        if (!alpha_equal(a.disjuncts[i], b.disjuncts[i])) return false;
    return true;
}

} // namespace heapver
