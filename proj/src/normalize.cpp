#include <algorithm>

#include "heapver/solver.hpp"

namespace heapver {

namespace {

// Union-find over variables plus a distinguished null element.
struct EqClasses {
    std::map<Var, int> ids;
    std::vector<int> parent;
    int null_id;

    EqClasses() { null_id = make(); }

    int make() {
        parent.push_back(static_cast<int>(parent.size()));
        return static_cast<int>(parent.size()) - 1;
    }
    int id(const Var& v) {
        auto it = ids.find(v);
        if (it != ids.end()) return it->second;
        int n = make();
        ids.emplace(v, n);
        return n;
    }
    int find(int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    }
    void join(int a, int b) { parent[find(a)] = find(b); }
    bool same(int a, int b) { return find(a) == find(b); }
};

bool is_access(const PurePtr& p) {
    return p->kind == Pure::Kind::Load || p->kind == Pure::Kind::Store ||
           p->kind == Pure::Kind::Del;
}

// Negated dangling claims are guards: they speak about the heap at the entry
// of the branch, before any access replay. Rewrite such occurrences into
// arithmetic over the entry roots so the later translation (which only sees
// the cells that survive the replay) cannot misread them. Positive
// occurrences keep the after-replay reading and are handled downstream.
PurePtr expand_guard_dangl(const PurePtr& p, bool positive,
                           const std::vector<Var>& entry_roots) {
    if (!p) return p;
    switch (p->kind) {
    case Pure::Kind::Dangling: {
        if (positive) return p;
        std::vector<PurePtr> parts{mk::ne_null(p->var)};
        for (const auto& r : entry_roots) parts.push_back(mk::ne_var(p->var, r));
        return mk::conj(std::move(parts));
    }
    case Pure::Kind::Not: {
        auto s = expand_guard_dangl(p->sub[0], !positive, entry_roots);
        return s == p->sub[0] ? p : mk::negate(std::move(s));
    }
    case Pure::Kind::And:
    case Pure::Kind::Or: {
        std::vector<PurePtr> subs;
        bool changed = false;
        for (const auto& s : p->sub) {
            subs.push_back(expand_guard_dangl(s, positive, entry_roots));
            changed = changed || subs.back() != s;
        }
        if (!changed) return p;
        return p->kind == Pure::Kind::And ? mk::conj(std::move(subs))
                                          : mk::disj(std::move(subs));
    }
    default: return p;
    }
}

} // namespace

std::optional<SymbolicHeap> normalize(const SymbolicHeap& sh) {
    SymbolicHeap out = sh;
    out.pure = conjuncts(sh.pure);

    // equality closure over the top-level pure part
    EqClasses eq;
    for (const auto& p : out.pure) {
        if (p->kind == Pure::Kind::EqNull) eq.join(eq.id(p->var), eq.null_id);
        if (p->kind == Pure::Kind::Cmp && p->op == CmpOp::Eq) {
            auto l = as_var(p->lhs);
            auto r = as_var(p->rhs);
            if (l && r) eq.join(eq.id(*l), eq.id(*r));
        }
    }

    // cells: only points-to atoms take part in resolution
    struct Cell {
        size_t spatial_index;
        int root_class;
        bool live = true;
    };
    std::vector<Cell> cells;
    for (size_t i = 0; i < out.spatial.size(); ++i) {
        const auto* pt = std::get_if<PointsTo>(&out.spatial[i]);
        if (!pt) continue;
        int rc = eq.find(eq.id(pt->root));
        if (eq.same(rc, eq.null_id)) return std::nullopt; // cell at null
        for (const auto& c : cells)
            if (eq.same(c.root_class, rc)) return std::nullopt; // overlapping cells
        cells.push_back({i, rc, true});
    }

    auto find_live_cell = [&](const Var& base) -> Cell* {
        int bc = eq.find(eq.id(base));
        for (auto& c : cells)
            if (c.live && eq.same(c.root_class, bc)) return &c;
        return nullptr;
    };

    // replay access atoms in sequence order against the cells
    std::vector<Var> entry_roots;
    for (const auto& c : cells)
        entry_roots.push_back(std::get<PointsTo>(out.spatial[c.spatial_index]).root);
    std::vector<PurePtr> accesses;
    std::vector<PurePtr> kept;
    for (const auto& p : out.pure)
        (is_access(p) ? accesses : kept).push_back(expand_guard_dangl(p, true, entry_roots));
    std::stable_sort(accesses.begin(), accesses.end(),
                     [](const PurePtr& a, const PurePtr& b) { return a->seq < b->seq; });

    std::vector<PurePtr> appended;
    for (const auto& a : accesses) {
        if (eq.same(eq.id(a->base), eq.null_id)) return std::nullopt; // access through null
        Cell* cell = find_live_cell(a->base);
        if (!cell) return std::nullopt; // freed or never allocated
        auto& pt = std::get<PointsTo>(out.spatial[cell->spatial_index]);
        if (a->kind == Pure::Kind::Del) {
            cell->live = false;
            appended.push_back(mk::dangl(a->base));
            continue;
        }
        auto slot = std::find_if(pt.fields.begin(), pt.fields.end(),
                                 [&](const auto& f) { return f.first == a->field; });
        if (slot == pt.fields.end()) return std::nullopt; // no such field
        if (a->kind == Pure::Kind::Load) {
            appended.push_back(mk::eq_var(a->target, slot->second));
            eq.join(eq.id(a->target), eq.id(slot->second));
        } else {
            slot->second = a->target; // the cell now holds the stored value
        }
    }

    // drop freed cells from the spatial part (their facts live on as dangl)
    std::vector<HeapAtom> residual;
    for (size_t i = 0; i < out.spatial.size(); ++i) {
        bool freed = std::any_of(cells.begin(), cells.end(), [&](const Cell& c) {
            return c.spatial_index == i && !c.live;
        });
        if (!freed) residual.push_back(out.spatial[i]);
    }
    out.spatial = std::move(residual);

    // cheap contradiction rules on the residue
    auto live_class_of = [&](const Var& v) -> bool {
        int c = eq.find(eq.id(v));
        for (const auto& a : out.spatial) {
            const auto* pt = std::get_if<PointsTo>(&a);
            if (pt && eq.same(eq.find(eq.id(pt->root)), c)) return true;
        }
        return false;
    };
    for (const auto& p : kept) {
        if (p->kind == Pure::Kind::Cmp && p->op == CmpOp::Ne) {
            auto l = as_var(p->lhs);
            auto r = as_var(p->rhs);
            if (l && r && eq.same(eq.id(*l), eq.id(*r))) return std::nullopt;
        }
        if (p->kind == Pure::Kind::Not && p->sub[0]->kind == Pure::Kind::EqNull &&
            eq.same(eq.id(p->sub[0]->var), eq.null_id))
            return std::nullopt;
        if (p->kind == Pure::Kind::Dangling && live_class_of(p->var)) return std::nullopt;
    }

    // the non-empty assertion needs at least one surviving cell
    bool any_live_pointsto = std::any_of(out.spatial.begin(), out.spatial.end(), [](auto& a) {
        return std::holds_alternative<PointsTo>(a);
    });
    bool any_pred = std::any_of(out.spatial.begin(), out.spatial.end(), [](auto& a) {
        return std::holds_alternative<PredInst>(a);
    });
    if (out.nonempty) {
        if (any_live_pointsto) {
            out.nonempty = false; // discharged: live cells witness it
        } else if (!any_pred) {
            return std::nullopt;
        }
    }

    out.pure = std::move(kept);
    out.pure.insert(out.pure.end(), appended.begin(), appended.end());
    return out;
}

PurePtr expure_pure(const PurePtr& p, const std::vector<Var>& roots);

PurePtr expure(const SymbolicHeap& sh) {
    std::vector<Var> roots;
    for (const auto& a : sh.spatial) {
        const auto* pt = std::get_if<PointsTo>(&a);
        if (!pt) throw std::logic_error("expure on a disjunct with predicate instances");
        roots.push_back(pt->root);
    }
    std::vector<PurePtr> parts;
    for (const auto& r : roots) parts.push_back(mk::ne(Term::ref(r), Term::constant(0)));
    for (size_t i = 0; i < roots.size(); ++i)
        for (size_t j = i + 1; j < roots.size(); ++j)
            parts.push_back(mk::ne_var(roots[i], roots[j]));
    for (const auto& p : sh.pure) parts.push_back(expure_pure(p, roots));
    if (sh.nonempty && roots.empty()) parts.push_back(mk::bfalse());
    return mk::conj(std::move(parts));
}

PurePtr expure_pure(const PurePtr& p, const std::vector<Var>& roots) {
    switch (p->kind) {
    case Pure::Kind::BoolConst:
    case Pure::Kind::VarAtom:
    case Pure::Kind::Cmp: return p;
    case Pure::Kind::EqNull: return mk::eq(Term::ref(p->var), Term::constant(0));
    case Pure::Kind::Dangling: {
        // a location, but not one of the live cells
        std::vector<PurePtr> parts{mk::ne(Term::ref(p->var), Term::constant(0))};
        for (const auto& r : roots) parts.push_back(mk::ne_var(p->var, r));
        return mk::conj(std::move(parts));
    }
    case Pure::Kind::Load:
    case Pure::Kind::Store:
    case Pure::Kind::Del:
        throw std::logic_error("expure: unresolved access atom (normalize first)");
    case Pure::Kind::Not: {
        const auto& inner = p->sub[0];
        if (inner->kind == Pure::Kind::Dangling) {
            // null or one of the live cells
            std::vector<PurePtr> parts{mk::eq(Term::ref(inner->var), Term::constant(0))};
            for (const auto& r : roots) parts.push_back(mk::eq_var(inner->var, r));
            return mk::disj(std::move(parts));
        }
        return mk::negate(expure_pure(inner, roots));
    }
    case Pure::Kind::And:
    case Pure::Kind::Or: {
        std::vector<PurePtr> parts;
        for (const auto& s : p->sub) parts.push_back(expure_pure(s, roots));
        return p->kind == Pure::Kind::And ? mk::conj(std::move(parts))
                                          : mk::disj(std::move(parts));
    }
    case Pure::Kind::Exists: return mk::exists(p->var, expure_pure(p->sub[0], roots));
    }
    throw std::logic_error("expure: bad kind");
}

PurePtr project(const PurePtr& p, const std::set<Var>& ex_vars) {
    std::vector<PurePtr> cs = conjuncts(p);
    std::set<Var> ex = ex_vars;
    bool changed = true;
    while (changed) {
        changed = false;
        // substitute an equality that defines an existential
        for (size_t i = 0; i < cs.size(); ++i) {
            const auto& c = cs[i];
            if (c->kind != Pure::Kind::Cmp || c->op != CmpOp::Eq) continue;
            for (bool flip : {false, true}) {
                auto v = as_var(flip ? c->rhs : c->lhs);
                TermPtr other = flip ? c->lhs : c->rhs;
                if (!v || !ex.count(*v)) continue;
                std::set<Var> rhs_vars;
                collect_vars(other, rhs_vars);
                if (rhs_vars.count(*v)) continue;
                // spatial slots are gone by now, but access atoms and null
                // tests still hold bare variables; only substitute a
                // compound term where it cannot reach such a position
                bool blocked = false;
                if (!as_var(other)) {
                    for (size_t j = 0; j < cs.size() && !blocked; ++j) {
                        if (j == i) continue;
                        const auto& d = cs[j];
                        if (d->kind == Pure::Kind::Cmp || d->kind == Pure::Kind::BoolConst)
                            continue;
                        blocked = free_vars(d).count(*v) != 0;
                    }
                }
                if (blocked) continue;
                std::map<Var, TermPtr> m{{*v, other}};
                std::vector<PurePtr> next;
                for (size_t j = 0; j < cs.size(); ++j)
                    if (j != i) next.push_back(subst_pure(cs[j], m));
                cs = conjuncts(next);
                ex.erase(*v);
                changed = true;
                break;
            }
            if (changed) break;
        }
        if (changed) continue;
        // drop disequalities that are the only mentions of an existential
        std::map<Var, int> uses;
        std::map<Var, int> ne_uses;
        for (const auto& c : cs) {
            bool is_ne = c->kind == Pure::Kind::Cmp && c->op == CmpOp::Ne;
            for (const auto& v : free_vars(c)) {
                uses[v]++;
                if (is_ne) ne_uses[v]++;
            }
        }
        for (size_t i = 0; i < cs.size(); ++i) {
            const auto& c = cs[i];
            if (c->kind != Pure::Kind::Cmp || c->op != CmpOp::Ne) continue;
            // the existential must actually move the difference; a vacuous
            // t != t whose sides cancel is a contradiction, not a freedom
            auto l = to_linear(c->lhs);
            auto r = to_linear(c->rhs);
            if (!l || !r) continue;
            LinTerm diff = *l;
            diff += [&] {
                LinTerm neg = *r;
                neg *= -1;
                return neg;
            }();
            bool droppable = false;
            for (const auto& [v, coeff] : diff.coeffs) {
                (void)coeff;
                if (ex.count(v) && uses[v] == ne_uses[v]) {
                    droppable = true;
                    break;
                }
            }
            if (droppable) {
                cs.erase(cs.begin() + static_cast<long>(i));
                changed = true;
                break;
            }
        }
    }
    return mk::conj(std::move(cs));
}

} // namespace heapver
