#include "heapver/invariants.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>

namespace heapver {

namespace {

// ------------------------------------------------------------- intervals

// Bounds are saturated well below the int64 range so products of small
// coefficients cannot overflow; anything larger counts as unbounded.
constexpr std::int64_t kHuge = std::int64_t{1} << 40;

using Bound = std::optional<std::int64_t>; // nullopt = unbounded

struct Itv {
    Bound lo, hi; // both unbounded by default

    bool empty() const { return lo && hi && *lo > *hi; }
    bool operator==(const Itv&) const = default;
};

Bound clamp(std::int64_t v) {
    if (v > kHuge || v < -kHuge) return std::nullopt;
    return v;
}

Itv hull(const Itv& a, const Itv& b) {
    Itv r;
    if (a.lo && b.lo) r.lo = std::min(*a.lo, *b.lo);
    if (a.hi && b.hi) r.hi = std::max(*a.hi, *b.hi);
    return r;
}

// Standard interval widening: a bound that moved since the last pass is
// given up entirely. `grown` must contain `old`.
Itv widen(const Itv& old, const Itv& grown) {
    Itv r = grown;
    if (!old.lo || !grown.lo || *grown.lo < *old.lo) r.lo = std::nullopt;
    if (!old.hi || !grown.hi || *grown.hi > *old.hi) r.hi = std::nullopt;
    return r;
}

// Variable box for one branch; absent variables are unconstrained.
using LocalBox = std::map<Var, Itv>;

bool refine_lo(Itv& it, std::int64_t v) {
    if (!it.lo || *it.lo < v) {
        it.lo = v;
        return true;
    }
    return false;
}

bool refine_hi(Itv& it, std::int64_t v) {
    if (!it.hi || *it.hi > v) {
        it.hi = v;
        return true;
    }
    return false;
}

// floor / ceil division for exact integer bound scaling
std::int64_t fdiv(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b, r = a % b;
    return (r != 0 && ((r < 0) != (b < 0))) ? q - 1 : q;
}
std::int64_t cdiv(std::int64_t a, std::int64_t b) { return -fdiv(-a, b); }

// One propagation step of `sum(coeffs·vars) + c <op> 0` into the box.
// Returns true when some interval narrowed, false otherwise; sets `dead`
// when a variable's interval became empty.
bool propagate(const LinTerm& lt, CmpOp op, LocalBox& box, bool& dead) {
    bool changed = false;
    for (const auto& [v, a] : lt.coeffs) {
        if (a == 0) continue;
        // Bound rest = lt - a*v over the current box.
        Bound rest_lo = lt.constant, rest_hi = lt.constant;
        for (const auto& [u, b] : lt.coeffs) {
            if (u == v || b == 0) continue;
            const Itv iu = box.count(u) ? box[u] : Itv{};
            Bound blo = b > 0 ? iu.lo : iu.hi;
            Bound bhi = b > 0 ? iu.hi : iu.lo;
            rest_lo = (rest_lo && blo) ? clamp(*rest_lo + b * *blo) : std::nullopt;
            rest_hi = (rest_hi && bhi) ? clamp(*rest_hi + b * *bhi) : std::nullopt;
        }
        Itv& iv = box[v];
        // a*v + rest <op> 0
        switch (op) {
        case CmpOp::Eq:
            // a*v in [-rest_hi, -rest_lo]
            if (rest_hi) {
                std::int64_t num = -*rest_hi;
                changed |= a > 0 ? refine_lo(iv, cdiv(num, a)) : refine_hi(iv, fdiv(num, a));
            }
            if (rest_lo) {
                std::int64_t num = -*rest_lo;
                changed |= a > 0 ? refine_hi(iv, fdiv(num, a)) : refine_lo(iv, cdiv(num, a));
            }
            break;
        case CmpOp::Le: // a*v <= -rest_lo
        case CmpOp::Lt: // a*v <= -rest_lo - 1
            if (rest_lo) {
                std::int64_t num = -*rest_lo - (op == CmpOp::Lt ? 1 : 0);
                changed |= a > 0 ? refine_hi(iv, fdiv(num, a)) : refine_lo(iv, cdiv(num, a));
            }
            break;
        case CmpOp::Ge: // a*v >= -rest_hi
        case CmpOp::Gt: // a*v >= -rest_hi + 1
            if (rest_hi) {
                std::int64_t num = -*rest_hi + (op == CmpOp::Gt ? 1 : 0);
                changed |= a > 0 ? refine_lo(iv, cdiv(num, a)) : refine_hi(iv, fdiv(num, a));
            }
            break;
        case CmpOp::Ne:
            break;
        }
        if (iv.empty()) {
            dead = true;
            return true;
        }
    }
    return changed;
}

// ------------------------------------------------------- per-pred summary

struct Summary {
    bool reachable = false;    // some branch is (interval-)satisfiable
    std::map<Var, Itv> params; // empty interval map = no information
    int unstable = 0;

    bool same_as(const Summary& o) const {
        return reachable == o.reachable && params == o.params;
    }
};

const PredDef* find_pred(const CHCSystem& sys, const std::string& name) {
    for (const auto& pd : sys.preds)
        if (pd.name == name) return &pd;
    return nullptr;
}

// Evaluates one branch under the current summaries: box over all branch
// variables, nullopt when the branch is certainly unreachable.
std::optional<LocalBox> branch_box(const CHCSystem& sys, const PredDef& pd,
                                   const SymbolicHeap& br,
                                   const std::map<std::string, Summary>& cur) {
    LocalBox box;
    // Hypotheses: each occurrence constrains its arguments by the callee's
    // current parameter intervals.
    for (const auto& a : br.spatial) {
        const auto* pi = std::get_if<PredInst>(&a);
        if (!pi) continue;
        auto it = cur.find(pi->pred);
        if (it == cur.end()) continue;
        if (!it->second.reachable) return std::nullopt;
        const PredDef* callee = find_pred(sys, pi->pred);
        if (!callee || callee->params.size() != pi->args.size()) continue;
        for (std::size_t j = 0; j < pi->args.size(); ++j) {
            auto pit = it->second.params.find(callee->params[j]);
            if (pit == it->second.params.end()) continue;
            Itv& iv = box[pi->args[j]];
            if (pit->second.lo) refine_lo(iv, *pit->second.lo);
            if (pit->second.hi) refine_hi(iv, *pit->second.hi);
            if (iv.empty()) return std::nullopt;
        }
    }
    auto cs = conjuncts(br.pure);
    for (int round = 0; round < 20; ++round) {
        bool changed = false, dead = false;
        for (const auto& c : cs) {
            if (!c) continue;
            if (c->kind == Pure::Kind::BoolConst && !c->value) return std::nullopt;
            if (c->kind != Pure::Kind::Cmp) continue;
            auto lt = to_linear(Term::sub(c->lhs, c->rhs));
            if (!lt) continue;
            if (lt->coeffs.empty()) {
                // ground comparison: reject plainly false branches
                std::int64_t d = lt->constant;
                bool ok = true;
                switch (c->op) {
                case CmpOp::Eq: ok = d == 0; break;
                case CmpOp::Ne: ok = d != 0; break;
                case CmpOp::Le: ok = d <= 0; break;
                case CmpOp::Lt: ok = d < 0; break;
                case CmpOp::Ge: ok = d >= 0; break;
                case CmpOp::Gt: ok = d > 0; break;
                }
                if (!ok) return std::nullopt;
                continue;
            }
            changed |= propagate(*lt, c->op, box, dead);
            if (dead) return std::nullopt;
        }
        if (!changed) break;
    }
    (void)pd;
    return box;
}

Summary summarize(const CHCSystem& sys, const PredDef& pd,
                  const std::map<std::string, Summary>& cur) {
    Summary out;
    bool first = true;
    for (const auto& br : pd.branches) {
        auto box = branch_box(sys, pd, br, cur);
        if (!box) continue;
        std::map<Var, Itv> proj;
        for (const Var& p : pd.params) {
            auto it = box->find(p);
            proj[p] = it == box->end() ? Itv{} : it->second;
        }
        if (first) {
            out.params = std::move(proj);
            first = false;
        } else {
            for (auto& [v, iv] : out.params) iv = hull(iv, proj[v]);
        }
    }
    out.reachable = !first;
    return out;
}

// ------------------------------------------------- retained shared facts

bool is_param_fact(const PurePtr& c, const std::set<Var>& params) {
    auto fv = free_vars(c);
    if (fv.empty()) return false;
    for (const Var& v : fv)
        if (!params.count(v)) return false;
    switch (c->kind) {
    case Pure::Kind::Cmp:
    case Pure::Kind::EqNull:
    case Pure::Kind::VarAtom:
        return true;
    case Pure::Kind::Not: {
        auto k = c->sub[0]->kind;
        return k == Pure::Kind::EqNull || k == Pure::Kind::VarAtom;
    }
    default:
        return false; // access history and heap-state markers stay per-branch
    }
}

std::vector<PurePtr> shared_facts(const PredDef& pd) {
    std::set<Var> params(pd.params.begin(), pd.params.end());
    std::vector<PurePtr> common;
    bool first = true;
    for (const auto& br : pd.branches) {
        std::vector<PurePtr> facts;
        for (const auto& c : conjuncts(br.pure))
            if (is_param_fact(c, params)) facts.push_back(c);
        // A parameter that owns a cell in this branch is certainly not null.
        for (const auto& a : br.spatial) {
            const auto* pt = std::get_if<PointsTo>(&a);
            if (pt && params.count(pt->root)) facts.push_back(mk::ne_null(pt->root));
        }
        if (first) {
            common = std::move(facts);
            first = false;
        } else {
            std::vector<PurePtr> kept;
            for (const auto& c : common)
                for (const auto& f : facts)
                    if (pure_equal(c, f)) {
                        kept.push_back(c);
                        break;
                    }
            common = std::move(kept);
        }
        if (common.empty()) break;
    }
    return first ? std::vector<PurePtr>{} : common;
}

PurePtr render_invariant(const PredDef& pd, const Summary& s) {
    if (!s.reachable) return mk::bfalse();
    std::vector<PurePtr> atoms;
    std::set<std::string> seen;
    auto push = [&](PurePtr p) {
        if (seen.insert(render(p)).second) atoms.push_back(std::move(p));
    };
    for (const Var& p : pd.params) {
        auto it = s.params.find(p);
        if (it == s.params.end()) continue;
        const Itv& iv = it->second;
        if (iv.lo && iv.hi && *iv.lo == *iv.hi) {
            push(mk::eq(Term::ref(p), Term::constant(*iv.lo)));
            continue;
        }
        if (iv.lo) push(mk::cmp(CmpOp::Ge, Term::ref(p), Term::constant(*iv.lo)));
        if (iv.hi) push(mk::cmp(CmpOp::Le, Term::ref(p), Term::constant(*iv.hi)));
    }
    for (const auto& c : shared_facts(pd)) push(c);
    return mk::conj(std::move(atoms));
}

} // namespace

bool infer_invariants(CHCSystem& sys) {
    std::map<std::string, Summary> cur;
    for (const auto& pd : sys.preds) cur[pd.name] = Summary{}; // unreachable
    bool stable = false;
    for (int pass = 0; pass < 100 && !stable; ++pass) {
        stable = true;
        for (const auto& pd : sys.preds) {
            Summary next = summarize(sys, pd, cur);
            Summary& old = cur[pd.name];
            if (next.same_as(old)) continue;
            stable = false;
            if (old.reachable && next.reachable) {
                old.unstable += 1;
                if (old.unstable >= 3)
                    for (auto& [v, iv] : next.params)
                        iv = widen(old.params[v], hull(old.params[v], iv));
            }
            next.unstable = old.unstable;
            old = std::move(next);
        }
    }
    for (auto& pd : sys.preds) pd.invariant = render_invariant(pd, cur[pd.name]);
    return stable;
}

namespace {

// Rewrites negative-polarity dangling atoms to false (so the enclosing
// negation becomes true). A negated dangling claim can be witnessed by a
// cell inside an occurrence we replaced with its invariant, so keeping it
// would wrongly restrict the weakened formula. Positive occurrences stay:
// they only talk about separation from the cells that are still visible.
PurePtr weaken_dangling(const PurePtr& p, bool positive) {
    if (!p) return p;
    switch (p->kind) {
    case Pure::Kind::Dangling: return positive ? p : mk::bfalse();
    case Pure::Kind::Not: {
        auto s = weaken_dangling(p->sub[0], !positive);
        return s == p->sub[0] ? p : mk::negate(std::move(s));
    }
    case Pure::Kind::And:
    case Pure::Kind::Or: {
        std::vector<PurePtr> subs;
        bool changed = false;
        for (const auto& s : p->sub) {
            subs.push_back(weaken_dangling(s, positive));
            changed = changed || subs.back() != s;
        }
        if (!changed) return p;
        return p->kind == Pure::Kind::And ? mk::conj(std::move(subs))
                                          : mk::disj(std::move(subs));
    }
    default: return p;
    }
}

// The branch body with every occurrence replaced by its invariant; access
// atoms whose base cannot be resolved against a remaining cell are dropped
// (a sound weakening for unsatisfiability checks).
std::optional<SymbolicHeap> inv_substituted(const CHCSystem& sys,
                                            const SymbolicHeap& br) {
    SymbolicHeap out;
    out.ex_vars = br.ex_vars;
    out.pure = br.pure;
    out.nonempty = false; // the flag talks about cells the occurrences hid
    for (const auto& a : br.spatial) {
        if (const auto* pt = std::get_if<PointsTo>(&a)) {
            out.spatial.push_back(*pt);
            continue;
        }
        const auto& pi = std::get<PredInst>(a);
        const PredDef* callee = find_pred(sys, pi.pred);
        if (!callee) return std::nullopt;
        std::map<Var, TermPtr> m;
        for (std::size_t j = 0; j < callee->params.size() && j < pi.args.size(); ++j)
            m[callee->params[j]] = Term::ref(pi.args[j]);
        out.pure.push_back(subst_pure(callee->invariant, m));
    }
    // Decide which access atoms survive: bases must alias a cell root or be
    // provably separated from every cell for exact replay; otherwise strip.
    std::set<Var> cell_roots;
    for (const auto& a : out.spatial)
        cell_roots.insert(std::get<PointsTo>(a).root);
    std::vector<PurePtr> kept;
    for (const auto& c : out.pure) {
        if (c && (c->kind == Pure::Kind::Load || c->kind == Pure::Kind::Store ||
                  c->kind == Pure::Kind::Del)) {
            if (!cell_roots.count(c->base)) continue; // unresolved: weaken
        }
        auto w = weaken_dangling(c, true);
        if (w && w->kind == Pure::Kind::BoolConst && w->value)
            continue; // whole conjunct weakened to true
        kept.push_back(std::move(w));
    }
    out.pure = std::move(kept);
    return out;
}

std::vector<std::string> minimal_reason(BaseSolver& solver, SymbolicHeap sh) {
    // Greedy conjunct minimization: drop a conjunct whenever the rest stays
    // unsatisfiable.
    for (std::size_t i = 0; i < sh.pure.size();) {
        SymbolicHeap trial = sh;
        trial.pure.erase(trial.pure.begin() + i);
        bool unsat = false;
        try {
            unsat = !solver.heap_sat(trial);
        } catch (const SolverLimitError&) {
            unsat = false;
        }
        if (unsat) sh = std::move(trial);
        else ++i;
    }
    std::vector<std::string> out;
    for (const auto& c : sh.pure) out.push_back(render(c));
    return out;
}

} // namespace

PruneReport prune_system(CHCSystem& sys, BaseSolver& solver, int max_rounds) {
    PruneReport rep;
    for (rep.rounds = 1; rep.rounds <= max_rounds; ++rep.rounds) {
        infer_invariants(sys);
        bool pruned = false;
        for (auto& pd : sys.preds) {
            for (std::size_t i = 0; i < pd.branches.size();) {
                auto sub = inv_substituted(sys, pd.branches[i]);
                bool drop = false;
                if (sub) {
                    try {
                        drop = !solver.heap_sat(*sub);
                    } catch (const SolverLimitError&) {
                        drop = false;
                    }
                }
                if (!drop) {
                    ++i;
                    continue;
                }
                rep.removed.push_back({pd.name, pd.branches[i].label,
                                       minimal_reason(solver, *sub)});
                pd.branches.erase(pd.branches.begin() + i);
                if (i < pd.origins.size()) pd.origins.erase(pd.origins.begin() + i);
                if (i < pd.lines.size()) pd.lines.erase(pd.lines.begin() + i);
                pruned = true;
            }
        }
        if (!pruned) {
            infer_invariants(sys);
            return rep;
        }
    }
    rep.converged = false;
    return rep;
}

} // namespace heapver
