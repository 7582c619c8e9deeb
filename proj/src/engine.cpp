#include "heapver/engine.hpp"

#include <algorithm>
#include <chrono>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>
#include <variant>

#include "heapver/lia.hpp"
#include "heapver/state.hpp"

namespace heapver {
namespace {

// ---------------------------------------------------------------------------
// Equality classes over the top-level conjuncts of one disjunct.

struct Classes {
    std::map<Var, int> ids;
    std::vector<int> up;
    int null_id = 0;

    Classes() { up.push_back(0); }

    int find(int a) {
        while (up[a] != a) a = up[a] = up[up[a]];
        return a;
    }
    void join(int a, int b) { up[find(a)] = find(b); }
    int of(const Var& v) {
        auto it = ids.find(v);
        if (it == ids.end()) {
            up.push_back(static_cast<int>(up.size()));
            it = ids.emplace(v, static_cast<int>(up.size()) - 1).first;
        }
        return find(it->second);
    }
    void absorb(const std::vector<PurePtr>& pure) {
        for (const auto& c : conjuncts(pure)) {
            if (!c) continue;
            if (c->kind == Pure::Kind::EqNull) join(of(c->var), null_id);
            if (c->kind == Pure::Kind::Cmp && c->op == CmpOp::Eq) {
                auto l = as_var(c->lhs);
                auto r = as_var(c->rhs);
                if (l && r) join(of(*l), of(*r));
            }
        }
    }
    bool is_null(const Var& v) { return of(v) == find(null_id); }
};

bool is_access(const PurePtr& p) {
    return p && (p->kind == Pure::Kind::Load || p->kind == Pure::Kind::Store ||
                 p->kind == Pure::Kind::Del);
}

std::vector<const PointsTo*> cells_of(const SymbolicHeap& sh) {
    std::vector<const PointsTo*> out;
    for (const auto& a : sh.spatial)
        if (const auto* pt = std::get_if<PointsTo>(&a)) out.push_back(pt);
    return out;
}

std::vector<const PredInst*> insts_of(const SymbolicHeap& sh) {
    std::vector<const PredInst*> out;
    for (const auto& a : sh.spatial)
        if (const auto* pi = std::get_if<PredInst>(&a)) out.push_back(pi);
    return out;
}

bool pred_free(const SymbolicHeap& sh) {
    for (const auto& a : sh.spatial)
        if (std::holds_alternative<PredInst>(a)) return false;
    return true;
}

// Sound weakening after footprint abstraction: a negated dangl claim whose
// witness cell may sit inside a dropped occurrence cannot be judged against
// the cells that remain, so it weakens to true. A positive claim only gets
// weaker when roots are dropped, so it stays.
PurePtr weaken_guards(const PurePtr& p, bool positive) {
    if (!p) return p;
    switch (p->kind) {
    case Pure::Kind::Dangling:
        return positive ? p : mk::bfalse();
    case Pure::Kind::Not: {
        auto s = weaken_guards(p->sub[0], !positive);
        return s == p->sub[0] ? p : mk::negate(std::move(s));
    }
    case Pure::Kind::And:
    case Pure::Kind::Or: {
        std::vector<PurePtr> subs;
        bool changed = false;
        for (const auto& s : p->sub) {
            auto w = weaken_guards(s, positive);
            changed = changed || w != s;
            subs.push_back(std::move(w));
        }
        if (!changed) return p;
        return p->kind == Pure::Kind::And ? mk::conj(std::move(subs))
                                          : mk::disj(std::move(subs));
    }
    default:
        return p;
    }
}

// Max access sequence number inside a formula, or -1 when there is none.
void scan_max_seq(const PurePtr& p, int& out) {
    if (!p) return;
    if (is_access(p)) out = std::max(out, p->seq);
    for (const auto& s : p->sub) scan_max_seq(s, out);
}

// Rebuilds a formula with every access sequence number shifted by `delta`,
// recording the largest shifted value seen.
PurePtr shift_seqs(const PurePtr& p, int delta, int& max_seen) {
    if (!p) return p;
    switch (p->kind) {
    case Pure::Kind::Load: {
        int s = p->seq + delta;
        max_seen = std::max(max_seen, s);
        return mk::load(p->base, p->field, p->target, s);
    }
    case Pure::Kind::Store: {
        int s = p->seq + delta;
        max_seen = std::max(max_seen, s);
        return mk::store(p->base, p->field, p->target, s);
    }
    case Pure::Kind::Del: {
        int s = p->seq + delta;
        max_seen = std::max(max_seen, s);
        return mk::del(p->base, s);
    }
    case Pure::Kind::Not: {
        auto s = shift_seqs(p->sub[0], delta, max_seen);
        return s == p->sub[0] ? p : mk::negate(std::move(s));
    }
    case Pure::Kind::Exists: {
        auto s = shift_seqs(p->sub[0], delta, max_seen);
        return s == p->sub[0] ? p : mk::exists(p->var, std::move(s));
    }
    case Pure::Kind::And:
    case Pure::Kind::Or: {
        std::vector<PurePtr> subs;
        bool changed = false;
        for (const auto& c : p->sub) {
            auto s = shift_seqs(c, delta, max_seen);
            changed = changed || s != c;
            subs.push_back(std::move(s));
        }
        if (!changed) return p;
        return p->kind == Pure::Kind::And ? mk::conj(std::move(subs))
                                          : mk::disj(std::move(subs));
    }
    default:
        return p;
    }
}

// The occurrence unfolded next: minimal by (unfold count, birth order,
// position), so the least-developed occurrence is always advanced first.
struct Occurrence {
    int pos = -1;
    const PredInst* inst = nullptr;
};

std::optional<Occurrence> pick_occurrence(const SymbolicHeap& h) {
    std::optional<Occurrence> best;
    for (int i = 0; i < static_cast<int>(h.spatial.size()); ++i) {
        const auto* pi = std::get_if<PredInst>(&h.spatial[i]);
        if (!pi) continue;
        if (!best || std::tuple(pi->unfold, pi->order, i) <
                         std::tuple(best->inst->unfold, best->inst->order, best->pos))
            best = Occurrence{i, pi};
    }
    return best;
}

// Bijective matching of the spatial atoms of a candidate repeat (bud)
// against an ancestor (companion). Builds the companion-to-bud renaming;
// conflicting images are accepted when the bud's own equalities identify
// them.
struct AtomMatcher {
    const std::vector<const PointsTo*>& bud_cells;
    const std::vector<const PredInst*>& bud_insts;
    Classes& bud_cls;
    std::map<Var, std::pair<int, Var>> theta; // companion var -> (bud class, image)

    bool bind(const Var& c, const Var& b) {
        int cl = bud_cls.of(b);
        auto it = theta.find(c);
        if (it == theta.end()) {
            theta.emplace(c, std::make_pair(cl, b));
            return true;
        }
        return it->second.first == cl;
    }

    bool bind_cell(const PointsTo& c, const PointsTo& b) {
        if (c.type_name != b.type_name || c.fields.size() != b.fields.size())
            return false;
        for (std::size_t i = 0; i < c.fields.size(); ++i)
            if (c.fields[i].first != b.fields[i].first) return false;
        if (!bind(c.root, b.root)) return false;
        for (std::size_t i = 0; i < c.fields.size(); ++i)
            if (!bind(c.fields[i].second, b.fields[i].second)) return false;
        return true;
    }

    bool bind_inst(const PredInst& c, const PredInst& b) {
        if (c.pred != b.pred || c.args.size() != b.args.size()) return false;
        for (std::size_t i = 0; i < c.args.size(); ++i)
            if (!bind(c.args[i], b.args[i])) return false;
        return true;
    }

    bool match_insts(const std::vector<const PredInst*>& comp, std::size_t i,
                     std::vector<bool>& used) {
        if (i == comp.size()) return true;
        for (std::size_t j = 0; j < bud_insts.size(); ++j) {
            if (used[j]) continue;
            auto save = theta;
            if (bind_inst(*comp[i], *bud_insts[j])) {
                used[j] = true;
                if (match_insts(comp, i + 1, used)) return true;
                used[j] = false;
            }
            theta = std::move(save);
        }
        return false;
    }

    bool match_cells(const std::vector<const PointsTo*>& comp_cells,
                     const std::vector<const PredInst*>& comp_insts, std::size_t i,
                     std::vector<bool>& used) {
        if (i == comp_cells.size()) {
            std::vector<bool> used_insts(bud_insts.size(), false);
            return match_insts(comp_insts, 0, used_insts);
        }
        for (std::size_t j = 0; j < bud_cells.size(); ++j) {
            if (used[j]) continue;
            auto save = theta;
            if (bind_cell(*comp_cells[i], *bud_cells[j])) {
                used[j] = true;
                if (match_cells(comp_cells, comp_insts, i + 1, used)) return true;
                used[j] = false;
            }
            theta = std::move(save);
        }
        return false;
    }
};

const char* status_str(TreeNode::Status s) {
    switch (s) {
    case TreeNode::Status::Open: return "open";
    case TreeNode::Status::ClosedUnsat: return "closed";
    case TreeNode::Status::LinkedBack: return "linked";
    case TreeNode::Status::ErrorWitness: return "error";
    }
    return "?";
}

// ---------------------------------------------------------------------------

struct Engine {
    const CHCSystem& sys;
    EngineOptions opts;
    BaseSolver solver;
    FreshNames names;
    ExecTree tree;
    std::map<std::string, const PredDef*> defs;
    std::set<Var> query_vars;
    int next_seq = 0;
    int back_links = 0;
    std::chrono::steady_clock::time_point start;

    Engine(const CHCSystem& s, EngineOptions o)
        : sys(s), opts(o), solver(o.solver), start(std::chrono::steady_clock::now()) {
        for (const auto& pd : sys.preds) {
            defs[pd.name] = &pd;
            for (const auto& v : pd.params) names.reserve(v);
            for (const auto& br : pd.branches) reserve_heap(br);
        }
        reserve_heap(sys.query);
        query_vars = free_vars(sys.query);

        TreeNode root;
        root.id = 0;
        root.note = "query";
        root.heap = skolemize(sys.query);
        int mx = -1;
        for (const auto& c : root.heap.pure) scan_max_seq(c, mx);
        next_seq = mx + 1;
        tree.nodes.push_back(std::move(root));
    }

    void reserve_heap(const SymbolicHeap& sh) {
        for (const auto& v : sh.ex_vars) names.reserve(v);
        for (const auto& v : free_vars(sh)) names.reserve(v);
    }

    SymbolicHeap skolemize(const SymbolicHeap& sh) {
        SymbolicHeap out = freshen_existentials(sh, names);
        out.ex_vars.clear();
        return out;
    }

    bool timed_out() const {
        std::chrono::duration<double> el = std::chrono::steady_clock::now() - start;
        return el.count() > opts.timeout_seconds;
    }

    bool open_leaf(const TreeNode& n) const {
        return n.status == TreeNode::Status::Open && n.children.empty();
    }

    Sat decide_base(const SymbolicHeap& base) {
        PurePtr p = expure(base);
        return solver.decide(project(p, free_vars(p)));
    }

    // True when every access base can be judged exactly against what is
    // visible: its class is null, carries one of the cells, or is claimed
    // dangling outright. Anything else might resolve inside an occurrence's
    // footprint and must not be replayed here.
    bool bases_determined(const SymbolicHeap& h) {
        auto cs = conjuncts(h.pure);
        bool any = false;
        for (const auto& c : cs)
            if (is_access(c)) { any = true; break; }
        if (!any) return true;
        Classes cls;
        cls.absorb(h.pure);
        std::set<int> rooted;
        for (const auto* pt : cells_of(h)) rooted.insert(cls.of(pt->root));
        std::set<int> dangling;
        for (const auto& c : cs)
            if (c && c->kind == Pure::Kind::Dangling) dangling.insert(cls.of(c->var));
        for (const auto& c : cs) {
            if (!is_access(c)) continue;
            int b = cls.of(c->base);
            if (b == cls.find(cls.null_id)) continue;
            if (rooted.count(b) || dangling.count(b)) continue;
            return false;
        }
        return true;
    }

    // Over-approximation of a node: occurrences replaced by their invariant
    // instances, cells kept, the non-empty flag and the dangl guards that
    // depended on the dropped footprints weakened away. Returns nullopt when
    // an occurrence names an unknown predicate.
    std::optional<SymbolicHeap> abstract_heap(const SymbolicHeap& h) {
        SymbolicHeap oa;
        oa.label = h.label;
        for (const auto& c : h.pure) {
            auto w = weaken_guards(c, true);
            if (w && w->kind == Pure::Kind::BoolConst && w->value) continue;
            oa.pure.push_back(std::move(w));
        }
        for (const auto& a : h.spatial) {
            if (const auto* pt = std::get_if<PointsTo>(&a)) {
                oa.spatial.push_back(*pt);
                continue;
            }
            const auto& pi = std::get<PredInst>(a);
            auto it = defs.find(pi.pred);
            if (it == defs.end()) return std::nullopt;
            const PredDef* pd = it->second;
            if (pd->params.size() != pi.args.size())
                throw std::runtime_error("arity mismatch on " + pi.pred);
            if (!pd->invariant) continue;
            std::map<Var, TermPtr> m;
            for (std::size_t i = 0; i < pd->params.size(); ++i)
                m[pd->params[i]] = Term::ref(pi.args[i]);
            oa.pure.push_back(subst_pure(pd->invariant, m));
        }
        return oa;
    }

    // Closes predicate-free leaves, or reports the first satisfiable one.
    int under_approx_pass() {
        for (auto& n : tree.nodes) {
            if (!open_leaf(n) || !pred_free(n.heap)) continue;
            auto norm = normalize(n.heap);
            if (!norm) {
                n.status = TreeNode::Status::ClosedUnsat;
                n.note = "contradiction";
                continue;
            }
            if (decide_base(*norm) == Sat::Unsat) {
                n.status = TreeNode::Status::ClosedUnsat;
                n.note = "unsat";
            } else {
                n.status = TreeNode::Status::ErrorWitness;
                n.note = "satisfiable error path";
                tree.error_node = n.id;
                return n.id;
            }
        }
        return -1;
    }

    // Closes leaves whose invariant abstraction is already contradictory.
    void over_approx_pass() {
        for (auto& n : tree.nodes) {
            if (!open_leaf(n) || pred_free(n.heap)) continue;
            auto oa = abstract_heap(n.heap);
            if (!oa) continue;
            bool unsat;
            if (bases_determined(*oa)) {
                auto norm = normalize(*oa);
                unsat = !norm || decide_base(*norm) == Sat::Unsat;
            } else {
                SymbolicHeap stripped = *oa;
                stripped.pure.clear();
                for (const auto& c : conjuncts(oa->pure))
                    if (!is_access(c)) stripped.pure.push_back(c);
                auto norm = normalize(stripped);
                unsat = !norm || decide_base(*norm) == Sat::Unsat;
            }
            if (unsat) {
                n.status = TreeNode::Status::ClosedUnsat;
                n.note = "invariant-closed";
            }
        }
    }

    // Tries to close each remaining leaf by matching a proper ancestor:
    // same spatial shape, strictly deeper unfolds, and implied constraints.
    void link_pass() {
        for (auto& n : tree.nodes) {
            if (!open_leaf(n) || pred_free(n.heap)) continue;
            if (!bases_determined(n.heap)) continue;
            auto nb = normalize(n.heap);
            if (!nb) {
                n.status = TreeNode::Status::ClosedUnsat;
                n.note = "contradiction";
                continue;
            }
            for (int a = n.parent; a >= 0; a = tree.nodes[a].parent)
                if (try_link(n, *nb, tree.nodes[a])) {
                    ++back_links;
                    break;
                }
        }
    }

    bool try_link(TreeNode& bud, const SymbolicHeap& nb, const TreeNode& comp) {
        if (!bases_determined(comp.heap)) return false;
        auto nc = normalize(comp.heap);
        if (!nc) return false;
        if (nb.nonempty != nc->nonempty) return false;

        auto bud_cells = cells_of(nb);
        auto comp_cells = cells_of(*nc);
        auto bud_insts = insts_of(nb);
        auto comp_insts = insts_of(*nc);
        if (comp_insts.empty()) return false;
        if (bud_cells.size() != comp_cells.size()) return false;
        if (bud_insts.size() != comp_insts.size()) return false;

        // Progress: everything in the bud must sit strictly below the
        // shallowest companion occurrence, so the cycle always unfolds.
        int comp_min = comp_insts[0]->unfold;
        for (const auto* pi : comp_insts) comp_min = std::min(comp_min, pi->unfold);
        for (const auto* pi : bud_insts)
            if (pi->unfold <= comp_min) return false;

        Classes bud_cls;
        bud_cls.absorb(nb.pure);
        AtomMatcher m{bud_cells, bud_insts, bud_cls, {}};
        std::vector<bool> used(bud_cells.size(), false);
        if (!m.match_cells(comp_cells, comp_insts, 0, used)) return false;

        // Constraint implication over the shared frame, occurrences aside.
        SymbolicHeap nb_cells = nb;
        SymbolicHeap nc_cells = *nc;
        auto drop_insts = [](SymbolicHeap& h) {
            std::vector<HeapAtom> sp;
            for (auto& a : h.spatial)
                if (std::holds_alternative<PointsTo>(a)) sp.push_back(a);
            h.spatial = std::move(sp);
            h.nonempty = false;
        };
        drop_insts(nb_cells);
        drop_insts(nc_cells);
        PurePtr eb = expure(nb_cells);
        PurePtr ec = expure(nc_cells);
        std::map<Var, TermPtr> sub;
        for (const auto& [cv, img] : m.theta)
            if (!(cv == img.second)) sub[cv] = Term::ref(img.second);
        PurePtr ect = subst_pure(ec, sub);
        PurePtr query = mk::conj({eb, mk::negate(ect)});
        query = project(query, free_vars(query));
        if (solver.decide(query) != Sat::Unsat) return false;

        bud.status = TreeNode::Status::LinkedBack;
        bud.link_target = comp.id;
        bud.note = "repeats node " + std::to_string(comp.id);
        return true;
    }

    bool all_closed() const {
        for (const auto& n : tree.nodes)
            if (n.children.empty() && n.status == TreeNode::Status::Open) return false;
        return true;
    }

    // An error branch refuted on sight by the inherited path: a dangl claim
    // on a pointer pinned to null or carrying a still-live cell, or a null
    // claim on a pointer carrying a cell. The solver would close these too;
    // dropping them just keeps refuted twins out of the tree.
    bool refuted_error(const SymbolicHeap& h) {
        Classes cls;
        cls.absorb(h.pure);
        std::set<int> rooted;
        for (const auto* pt : cells_of(h)) rooted.insert(cls.of(pt->root));
        std::set<int> freed;
        auto cs = conjuncts(h.pure);
        for (const auto& c : cs)
            if (c && c->kind == Pure::Kind::Del) freed.insert(cls.of(c->base));
        for (const auto& c : cs) {
            if (!c) continue;
            if (c->kind == Pure::Kind::Dangling) {
                int v = cls.of(c->var);
                if (cls.is_null(c->var)) return true;
                if (rooted.count(v) && !freed.count(v)) return true;
            }
            if (c->kind == Pure::Kind::EqNull && rooted.count(cls.of(c->var))) return true;
        }
        return false;
    }

    // Expands the lowest open leaf by unfolding its least-developed
    // occurrence. Returns false when that occurrence is already at the
    // unfold bound.
    bool unfold_step() {
        int target = -1;
        for (const auto& n : tree.nodes)
            if (open_leaf(n)) {
                target = n.id;
                break;
            }
        if (target < 0) return true; // caller checks all_closed first

        auto occ = pick_occurrence(tree.nodes[target].heap);
        if (!occ) return true; // unreachable: predicate-free leaves never get here
        if (occ->inst->unfold >= opts.unfold_bound) {
            tree.nodes[target].note = "unfold bound reached";
            return false;
        }

        const SymbolicHeap parent_heap = tree.nodes[target].heap;
        const PredInst occurrence = *occ->inst;
        const int pos = occ->pos;

        auto it = defs.find(occurrence.pred);
        if (it == defs.end())
            throw std::runtime_error("unfold of unknown predicate " + occurrence.pred);
        const PredDef& pd = *it->second;
        if (pd.params.size() != occurrence.args.size())
            throw std::runtime_error("arity mismatch on " + occurrence.pred);
        std::map<Var, Var> rn;
        for (std::size_t i = 0; i < pd.params.size(); ++i)
            rn[pd.params[i]] = occurrence.args[i];

        int max_new_seq = -1;
        for (std::size_t bi = 0; bi < pd.branches.size(); ++bi) {
            SymbolicHeap br = skolemize(pd.branches[bi]);
            br = rename_heap(br, rn);

            SymbolicHeap child;
            child.nonempty = parent_heap.nonempty || br.nonempty;
            for (int i = 0; i < pos; ++i) child.spatial.push_back(parent_heap.spatial[i]);
            for (const auto& a : br.spatial) {
                if (const auto* pi = std::get_if<PredInst>(&a)) {
                    PredInst fresh = *pi;
                    fresh.unfold = occurrence.unfold + 1;
                    fresh.order = occurrence.order + pi->order;
                    child.spatial.emplace_back(std::move(fresh));
                } else {
                    child.spatial.push_back(a);
                }
            }
            for (std::size_t i = pos + 1; i < parent_heap.spatial.size(); ++i)
                child.spatial.push_back(parent_heap.spatial[i]);
            child.pure = parent_heap.pure;
            for (const auto& c : br.pure)
                child.pure.push_back(shift_seqs(c, next_seq, max_new_seq));

            BranchOrigin origin =
                bi < pd.origins.size() ? pd.origins[bi] : BranchOrigin::ProgramPath;
            int line = bi < pd.lines.size() ? pd.lines[bi] : 0;
            bool memory_twin =
                origin == BranchOrigin::NullDeref || origin == BranchOrigin::DanglingDeref ||
                origin == BranchOrigin::FreeNull || origin == BranchOrigin::DoubleFree;
            if (memory_twin && refuted_error(child)) continue;

            TreeNode node;
            node.id = static_cast<int>(tree.nodes.size());
            node.parent = target;
            node.heap = std::move(child);
            node.via = TraceStep{pd.name, pd.branches[bi].label, origin, line};
            tree.nodes[target].children.push_back(node.id);
            tree.nodes.push_back(std::move(node));
        }
        if (max_new_seq >= 0) next_seq = max_new_seq + 1;
        if (tree.nodes[target].children.empty()) {
            tree.nodes[target].status = TreeNode::Status::ClosedUnsat;
            tree.nodes[target].note = "no derivation";
        }
        return true;
    }

    // Shrinks the model search space of a normalized error leaf: a variable
    // that is not part of the query and is defined by an equality gets
    // substituted away. Spatial slots must stay variables, so a compound
    // definition is only applied to pure-only variables.
    SymbolicHeap inline_locals(SymbolicHeap h) {
        for (int round = 0; round < 100; ++round) {
            std::set<Var> slot_vars;
            for (const auto* pt : cells_of(h)) {
                slot_vars.insert(pt->root);
                for (const auto& f : pt->fields) slot_vars.insert(f.second);
            }
            for (const auto* pi : insts_of(h))
                for (const auto& a : pi->args) slot_vars.insert(a);

            auto cs = conjuncts(h.pure);
            bool changed = false;
            for (std::size_t i = 0; i < cs.size() && !changed; ++i) {
                const auto& c = cs[i];
                if (!c || c->kind != Pure::Kind::Cmp || c->op != CmpOp::Eq) continue;
                for (int side = 0; side < 2 && !changed; ++side) {
                    auto v = as_var(side ? c->rhs : c->lhs);
                    const TermPtr& t = side ? c->lhs : c->rhs;
                    if (!v || query_vars.count(*v)) continue;
                    std::set<Var> tv;
                    collect_vars(mk::eq(t, Term::constant(0)), tv);
                    if (tv.count(*v)) continue;
                    if (slot_vars.count(*v) && !as_var(t)) continue;
                    std::map<Var, TermPtr> m{{*v, t}};
                    SymbolicHeap next = h;
                    next.pure.clear();
                    for (std::size_t j = 0; j < cs.size(); ++j)
                        if (j != i) next.pure.push_back(cs[j]);
                    h = subst_heap(next, m);
                    changed = true;
                }
            }
            if (!changed) break;
        }
        return h;
    }

    std::map<std::string, std::int64_t> model_of(int leaf) {
        auto norm = normalize(tree.nodes[leaf].heap);
        if (!norm) return {};
        SymbolicHeap h = inline_locals(*norm);
        auto locs = static_cast<std::uint32_t>(cells_of(h).size()) + 1;
        for (std::uint32_t bound : {6u, 8u}) {
            std::vector<ConcreteState> ms;
            try {
                ms = enumerate_models(h, bound, locs);
            } catch (const EnumLimitError&) {
                continue;
            } catch (const EvalError&) {
                break;
            }
            if (ms.empty()) continue;
            std::map<std::string, std::int64_t> out;
            for (const auto& [var, val] : ms.front().stack)
                if (query_vars.count(var) && val.kind == Value::Kind::Int)
                    out[var.str()] = val.num;
            return out;
        }
        return {};
    }

    Verdict bug_verdict(int leaf) {
        Verdict v;
        v.outcome = Outcome::Bug;
        v.back_links = back_links;
        for (int i = leaf; i > 0; i = tree.nodes[i].parent)
            v.trace.push_back(tree.nodes[i].via);
        std::reverse(v.trace.begin(), v.trace.end());
        for (auto rit = v.trace.rbegin(); rit != v.trace.rend(); ++rit)
            if (rit->origin != BranchOrigin::ProgramPath) {
                v.bug_origin = rit->origin;
                v.bug_line = rit->line;
                break;
            }
        v.model = model_of(leaf);
        v.tree = std::move(tree);
        return v;
    }

    Verdict unknown_verdict(UnknownWhy why) {
        Verdict v;
        v.outcome = Outcome::Unknown;
        v.why = why;
        v.back_links = back_links;
        v.tree = std::move(tree);
        return v;
    }

    Verdict run() {
        try {
            for (;;) {
                if (timed_out()) return unknown_verdict(UnknownWhy::SolverLimit);
                int bug = under_approx_pass();
                if (bug >= 0) return bug_verdict(bug);
                over_approx_pass();
                link_pass();
                if (all_closed()) {
                    Verdict v;
                    v.outcome = Outcome::Safe;
                    v.back_links = back_links;
                    v.tree = std::move(tree);
                    return v;
                }
                if (!unfold_step()) return unknown_verdict(UnknownWhy::UnfoldBound);
            }
        } catch (const SolverLimitError&) {
            return unknown_verdict(UnknownWhy::SolverLimit);
        } catch (const lia::LimitError&) {
            return unknown_verdict(UnknownWhy::SolverLimit);
        }
    }
};

std::string dot_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        if (c == '\n') {
            out += "\\l";
            continue;
        }
        out.push_back(c);
    }
    return out;
}

} // namespace

Verdict solve(const CHCSystem& sys, const EngineOptions& opts) {
    Engine e(sys, opts);
    return e.run();
}

std::string tree_dot(const ExecTree& tree) {
    std::ostringstream o;
    o << "digraph proof {\n";
    o << "  node [shape=box, fontname=\"monospace\", fontsize=9];\n";
    for (const auto& n : tree.nodes) {
        std::string label = std::to_string(n.id);
        if (!n.via.pred.empty()) label += ": " + n.via.pred + " " + label_str(n.via.label);
        label += "\\n" + dot_escape(render(n.heap));
        label += "\\n[" + std::string(status_str(n.status));
        if (!n.note.empty()) label += ": " + dot_escape(n.note);
        label += "]";
        const char* color = "white";
        switch (n.status) {
        case TreeNode::Status::ClosedUnsat: color = "gray90"; break;
        case TreeNode::Status::LinkedBack: color = "lightblue"; break;
        case TreeNode::Status::ErrorWitness: color = "lightcoral"; break;
        case TreeNode::Status::Open: break;
        }
        o << "  n" << n.id << " [style=filled, fillcolor=" << color << ", label=\""
          << label << "\"];\n";
    }
    for (const auto& n : tree.nodes) {
        for (int c : n.children) o << "  n" << n.id << " -> n" << c << ";\n";
        if (n.link_target >= 0)
            o << "  n" << n.id << " -> n" << n.link_target
              << " [style=dashed, constraint=false, label=\"repeat\"];\n";
    }
    o << "}\n";
    return o.str();
}

} // namespace heapver
