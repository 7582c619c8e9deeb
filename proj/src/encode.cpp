#include "heapver/chc.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

namespace heapver {

EncodeError::EncodeError(const std::string& msg, int line_)
    : std::runtime_error(msg + " (line " + std::to_string(line_) + ")"), line(line_) {}

std::vector<Var> result_slots(std::size_t ret_count) {
    if (ret_count == 1) return {kRes};
    std::vector<Var> out;
    for (std::size_t i = 1; i <= ret_count; ++i)
        out.push_back(Var{"res", static_cast<int>(i)});
    return out;
}

namespace {

const Var kNullSentinel{"$null", 0};

// What the encoder can conclude about pointers without a solver: equality
// classes (union-find) plus per-class facts gathered from conjoined pure
// constraints and from the cells it materializes itself.
struct Closure {
    std::map<Var, Var> parent;
    std::set<Var> dangling; // roots with a dangl(...) fact
    std::set<Var> clean;    // roots with a !dangl(...) fact
    std::set<Var> freed;    // roots whose cell this path freed
    std::set<Var> nonnull;  // roots known distinct from null
    std::map<Var, std::size_t> cells; // root -> index into spatial

    Var find(Var v) {
        auto it = parent.find(v);
        if (it == parent.end()) {
            parent.emplace(v, v);
            return v;
        }
        if (it->second == v) return v;
        Var r = find(it->second);
        parent[v] = r;
        return r;
    }

    void unite(Var a, Var b) {
        Var ra = find(a), rb = find(b);
        if (ra == rb) return;
        Var keep = std::min(ra, rb), drop = std::max(ra, rb);
        parent[drop] = keep;
        auto move = [&](std::set<Var>& s) {
            if (s.erase(drop)) s.insert(keep);
        };
        move(dangling);
        move(clean);
        move(freed);
        move(nonnull);
        auto it = cells.find(drop);
        if (it != cells.end()) {
            if (!cells.count(keep)) cells.emplace(keep, it->second);
            cells.erase(it);
        }
    }

    // Absorb whatever pointer knowledge a conjoined constraint carries.
    void note(const PurePtr& p) {
        if (!p) return;
        switch (p->kind) {
        case Pure::Kind::And:
            for (const auto& c : p->sub) note(c);
            break;
        case Pure::Kind::EqNull:
            unite(p->var, kNullSentinel);
            break;
        case Pure::Kind::Dangling:
            dangling.insert(find(p->var));
            nonnull.insert(find(p->var));
            break;
        case Pure::Kind::Not: {
            const Pure& s = *p->sub[0];
            if (s.kind == Pure::Kind::EqNull) nonnull.insert(find(s.var));
            if (s.kind == Pure::Kind::Dangling) clean.insert(find(s.var));
            break;
        }
        case Pure::Kind::Cmp:
            if (p->op == CmpOp::Eq) {
                auto l = as_var(p->lhs), r = as_var(p->rhs);
                if (l && r) unite(*l, *r);
            }
            break;
        default:
            break;
        }
    }

    bool is_null(Var v) { return find(v) == find(kNullSentinel); }
    bool is_nonnull(Var v) {
        Var r = find(v);
        return nonnull.count(r) || dangling.count(r) || freed.count(r) || cells.count(r);
    }
    bool is_dangl(Var v) {
        Var r = find(v);
        return dangling.count(r) || freed.count(r);
    }
    bool is_freed(Var v) { return freed.count(find(v)); }
    bool is_clean(Var v) {
        Var r = find(v);
        return clean.count(r) || cells.count(r);
    }
    std::optional<std::size_t> cell_of(Var v) {
        auto it = cells.find(find(v));
        if (it == cells.end()) return std::nullopt;
        return it->second;
    }

    void add_cell(Var v, std::size_t idx) {
        cells[find(v)] = idx;
        nonnull.insert(find(v));
    }

    void drop_cell_at(std::size_t idx) {
        for (auto it = cells.begin(); it != cells.end();) {
            if (it->second == idx) {
                it = cells.erase(it);
            } else {
                if (it->second > idx) --it->second;
                ++it;
            }
        }
    }

    void mark_freed(Var v) {
        Var r = find(v);
        freed.insert(r);
        clean.erase(r);
        nonnull.insert(r);
    }
};

// One path through a procedure body.
struct Path {
    std::vector<HeapAtom> spatial;
    std::vector<PurePtr> pure;
    BranchLabel label;
    Closure cl;
    std::map<std::string, Var> latest; // threaded-variable name -> current version
    int next_k = 0;                    // access sequence counter
    int next_o = 0;                    // call order counter
    bool merged = false;              // result slots already threaded to a callee
};

void seed_block(const CBlock& body, FreshNames& names);

void seed_var(const Var& v, FreshNames& names) {
    if (!v.name.empty()) names.reserve(v);
}

void seed_term(const TermPtr& t, FreshNames& names) {
    if (!t) return;
    std::set<Var> vs;
    collect_vars(t, vs);
    for (const Var& v : vs) seed_var(v, names);
}

void seed_pure(const PurePtr& p, FreshNames& names) {
    if (!p) return;
    for (const Var& v : free_vars(p)) seed_var(v, names);
}

void seed_stmt(const CStmt& s, FreshNames& names) {
    seed_var(s.dst, names);
    for (const Var& v : s.dsts) seed_var(v, names);
    for (const auto& a : s.args) seed_term(a, names);
    seed_term(s.rhs, names);
    seed_var(s.base, names);
    seed_var(s.src, names);
    seed_pure(s.cond, names);
    for (const auto& r : s.rets) seed_term(r, names);
    seed_block(s.then_body, names);
    seed_block(s.else_body, names);
}

void seed_block(const CBlock& body, FreshNames& names) {
    for (const auto& s : body) seed_stmt(*s, names);
}

// ------------------------------------------------------------------ cleanup

// Variable positions that only accept variables (cell roots and field
// slots, predicate arguments, access-constraint operands): an equality
// defining such a variable by a compound term must stay.
std::set<Var> var_positions(const SymbolicHeap& sh) {
    std::set<Var> pos;
    for (const auto& a : sh.spatial) {
        if (const auto* pt = std::get_if<PointsTo>(&a)) {
            pos.insert(pt->root);
            for (const auto& [f, v] : pt->fields) pos.insert(v);
        } else {
            const auto& pi = std::get<PredInst>(a);
            pos.insert(pi.args.begin(), pi.args.end());
        }
    }
    for (const auto& c : sh.pure) {
        if (!c) continue;
        if (c->kind == Pure::Kind::Load || c->kind == Pure::Kind::Store) {
            pos.insert(c->base);
            pos.insert(c->target);
        } else if (c->kind == Pure::Kind::Del) {
            pos.insert(c->base);
        }
    }
    return pos;
}

void rename_branch(SymbolicHeap& sh, Var from, Var to) {
    std::map<Var, Var> m{{from, to}};
    sh = rename_heap(sh, m);
}

// A conjunct that mentions an otherwise-unused existential and is
// satisfiable on its own adds nothing to the branch; drop it.
bool droppable_alone(const PurePtr& c, const Var& v) {
    switch (c->kind) {
    case Pure::Kind::VarAtom:
    case Pure::Kind::EqNull:
    case Pure::Kind::Dangling:
        return true;
    case Pure::Kind::Not: {
        auto k = c->sub[0]->kind;
        return k == Pure::Kind::EqNull || k == Pure::Kind::Dangling ||
               k == Pure::Kind::VarAtom;
    }
    case Pure::Kind::Cmp: {
        auto diff = to_linear(Term::sub(c->lhs, c->rhs));
        if (!diff) return false;
        auto it = diff->coeffs.find(v);
        if (it == diff->coeffs.end() || it->second == 0) return false;
        if (c->op == CmpOp::Eq) return it->second == 1 || it->second == -1;
        return true; // inequalities and disequalities reach any residue
    }
    default:
        return false;
    }
}

void cleanup_branch(SymbolicHeap& sh, const std::set<Var>& params) {
    // Phase 1: inline equalities between variables, and defining equalities
    // whose variable never sits in a variable-only position.
    bool changed = true;
    while (changed) {
        changed = false;
        std::set<Var> pos = var_positions(sh);
        for (std::size_t i = 0; i < sh.pure.size(); ++i) {
            const PurePtr& c = sh.pure[i];
            if (!c || c->kind != Pure::Kind::Cmp || c->op != CmpOp::Eq) continue;
            auto l = as_var(c->lhs), r = as_var(c->rhs);
            if (l && r) {
                if (*l == *r) {
                    sh.pure.erase(sh.pure.begin() + i);
                    changed = true;
                    break;
                }
                bool lp = params.count(*l), rp = params.count(*r);
                if (lp && rp) continue;
                Var victim, keep;
                if (lp) {
                    victim = *r;
                    keep = *l;
                } else if (rp) {
                    victim = *l;
                    keep = *r;
                } else {
                    victim = std::max(*l, *r);
                    keep = std::min(*l, *r);
                }
                sh.pure.erase(sh.pure.begin() + i);
                rename_branch(sh, victim, keep);
                changed = true;
                break;
            }
            if (l || r) {
                Var v = l ? *l : *r;
                TermPtr t = l ? c->rhs : c->lhs;
                if (params.count(v) || pos.count(v)) continue;
                std::set<Var> tv;
                collect_vars(t, tv);
                if (tv.count(v)) continue;
                std::map<Var, TermPtr> m{{v, t}};
                sh.pure.erase(sh.pure.begin() + i);
                for (auto& other : sh.pure) other = subst_pure(other, m);
                changed = true;
                break;
            }
        }
    }

    // Phase 2: garbage-collect facts about variables nothing else mentions.
    changed = true;
    while (changed) {
        changed = false;
        std::map<Var, int> occ;
        for (const auto& a : sh.spatial) {
            if (const auto* pt = std::get_if<PointsTo>(&a)) {
                occ[pt->root] += 2;
                for (const auto& [f, v] : pt->fields) occ[v] += 2;
            } else {
                for (const Var& v : std::get<PredInst>(a).args) occ[v] += 2;
            }
        }
        for (const auto& c : sh.pure)
            for (const Var& v : free_vars(c)) occ[v] += 1;
        for (std::size_t i = 0; i < sh.pure.size(); ++i) {
            const PurePtr& c = sh.pure[i];
            if (!c) continue;
            auto k = c->kind;
            if (k == Pure::Kind::Load || k == Pure::Kind::Store ||
                k == Pure::Kind::Del)
                continue; // access history is never garbage
            bool drop = false;
            for (const Var& v : free_vars(c)) {
                if (params.count(v) || occ[v] != 1) continue;
                if (droppable_alone(c, v)) {
                    drop = true;
                    break;
                }
            }
            if (drop) {
                sh.pure.erase(sh.pure.begin() + i);
                changed = true;
                break;
            }
        }
    }

    // Existentials: everything free that is not a parameter.
    std::set<Var> fv;
    for (const auto& a : sh.spatial) {
        if (const auto* pt = std::get_if<PointsTo>(&a)) {
            fv.insert(pt->root);
            for (const auto& [f, v] : pt->fields) fv.insert(v);
        } else {
            const auto& pi = std::get<PredInst>(a);
            fv.insert(pi.args.begin(), pi.args.end());
        }
    }
    for (const auto& c : sh.pure) {
        auto cs = free_vars(c);
        fv.insert(cs.begin(), cs.end());
    }
    sh.ex_vars.clear();
    for (const Var& v : fv)
        if (!params.count(v)) sh.ex_vars.push_back(v);
}

// ------------------------------------------------------------ the encoder

struct ProcEncoder {
    const CoreProgram& prog;
    const std::map<std::string, bool>& may_fail;
    const CoreProc& proc;
    PredDef def;
    std::vector<Var> slots;
    std::set<Var> param_set;
    FreshNames names;

    ProcEncoder(const CoreProgram& prog_, const std::map<std::string, bool>& mf,
                const CoreProc& p)
        : prog(prog_), may_fail(mf), proc(p) {
        def.name = p.name;
        def.params = p.params;
        slots = result_slots(p.ret_types.size());
        def.params.insert(def.params.end(), slots.begin(), slots.end());
        def.params.push_back(kEps);
        def.invariant = mk::btrue();
        param_set.insert(def.params.begin(), def.params.end());
        for (const Var& v : p.params) names.reserve(v);
        for (const Var& v : slots) names.reserve(v);
        names.reserve(kEps);
        seed_block(p.body, names);
    }

    PredDef run() {
        Path start;
        for (std::size_t i = 0; i < proc.ret_names.size(); ++i) {
            // Threaded loop variables start out as the matching parameter.
            for (const Var& p : proc.params)
                if (p.name == proc.ret_names[i]) start.latest[p.name] = p;
        }
        walk(proc.body, 0, std::move(start));
        return std::move(def);
    }

    void conjoin(Path& st, const PurePtr& p) {
        for (const auto& c : conjuncts(p)) {
            st.pure.push_back(c);
            st.cl.note(c);
        }
    }

    void track(Path& st, const Var& dst) {
        if (std::find(proc.ret_names.begin(), proc.ret_names.end(), dst.name) !=
            proc.ret_names.end())
            st.latest[dst.name] = dst;
    }

    void emit(Path st, std::vector<PurePtr> extra, BranchOrigin origin, int line,
              bool nonempty, bool extra_digit) {
        SymbolicHeap sh;
        sh.spatial = std::move(st.spatial);
        sh.pure = std::move(st.pure);
        for (auto& e : extra) sh.pure.push_back(std::move(e));
        sh.label = std::move(st.label);
        if (extra_digit) sh.label.push_back(2);
        sh.nonempty = nonempty;
        cleanup_branch(sh, param_set);
        def.branches.push_back(std::move(sh));
        def.origins.push_back(origin);
        def.lines.push_back(line);
    }

    // An error exit: raise the status flag and pin the threaded variables so
    // the caller can observe where the loop stopped.
    void error_exit(Path st, std::vector<PurePtr> extra, BranchOrigin origin,
                    int line) {
        for (std::size_t i = 0; i < proc.ret_names.size(); ++i) {
            auto it = st.latest.find(proc.ret_names[i]);
            if (it != st.latest.end())
                extra.push_back(mk::eq_var(slots[i], it->second));
        }
        extra.push_back(mk::eq(Term::ref(kEps), Term::constant(1)));
        emit(std::move(st), std::move(extra), origin, line, false, false);
    }

    void bind_results(const std::vector<TermPtr>& rets,
                      std::vector<PurePtr>& out) {
        for (std::size_t i = 0; i < rets.size(); ++i) {
            if (!rets[i]) {
                out.push_back(mk::eq_null(slots[i]));
            } else if (auto v = as_var(rets[i])) {
                out.push_back(mk::eq_var(slots[i], *v));
            } else {
                out.push_back(mk::eq(Term::ref(slots[i]), rets[i]));
            }
        }
    }

    void return_exit(Path st, const std::vector<TermPtr>& rets, int line) {
        if (rets.size() != slots.size())
            throw EncodeError("return arity mismatch in '" + proc.name + "'", line);
        std::vector<PurePtr> extra;
        bind_results(rets, extra);
        bool leak_twin = false;
        if (proc.name == "main") {
            for (const auto& a : st.spatial)
                if (std::holds_alternative<PointsTo>(a)) leak_twin = true;
        }
        Path twin;
        if (leak_twin) twin = st;
        if (!st.merged)
            extra.push_back(mk::eq(Term::ref(kEps), Term::constant(0)));
        emit(std::move(st), std::move(extra), BranchOrigin::ProgramPath, line,
             false, false);
        if (leak_twin) {
            // Anything still allocated when the entry procedure returns is
            // lost memory: a second branch reports it as an error.
            std::vector<PurePtr> textra;
            bind_results(rets, textra);
            if (twin.merged) {
                for (auto& a : twin.spatial) {
                    auto* pi = std::get_if<PredInst>(&a);
                    if (!pi) continue;
                    for (auto& v : pi->args)
                        if (v == kEps) v = names.fresh("eps");
                }
            }
            textra.push_back(mk::eq(Term::ref(kEps), Term::constant(1)));
            emit(std::move(twin), std::move(textra), BranchOrigin::Leak, line,
                 true, true);
        }
    }

    // Name hint for a hoisted argument: the first variable of the term,
    // falling back to the callee's parameter name.
    std::string arg_base(const TermPtr& t, const std::string& fallback) {
        if (auto lt = to_linear(t); lt && !lt->coeffs.empty())
            return lt->coeffs.begin()->first.name;
        return fallback;
    }

    void do_new(Path& st, const CStmt& s) {
        const DataDef* dd = prog.data(s.type_name);
        if (!dd) throw EncodeError("unknown record type '" + s.type_name + "'", s.line);
        if (!s.args.empty() && s.args.size() != dd->fields.size())
            throw EncodeError("wrong initializer count for '" + s.type_name + "'",
                              s.line);
        PointsTo pt;
        pt.root = s.dst;
        pt.type_name = s.type_name;
        for (std::size_t j = 0; j < dd->fields.size(); ++j) {
            const auto& [ftype, fname] = dd->fields[j];
            Var slot;
            if (s.args.empty()) {
                // Bare `new T`: fields start at zero / null.
                slot = names.fresh(fname);
                conjoin(st, ftype.is_ptr()
                                ? mk::eq_null(slot)
                                : mk::eq(Term::ref(slot), Term::constant(0)));
            } else if (!s.args[j]) {
                slot = names.fresh(fname);
                conjoin(st, mk::eq_null(slot));
            } else if (auto v = as_var(s.args[j])) {
                slot = *v;
            } else {
                slot = names.fresh(fname);
                conjoin(st, mk::eq(Term::ref(slot), s.args[j]));
            }
            pt.fields.emplace_back(fname, slot);
        }
        st.spatial.push_back(std::move(pt));
        st.cl.add_cell(s.dst, st.spatial.size() - 1);
        track(st, s.dst);
    }

    // Returns true when the straight-line path survives the access.
    bool do_load(Path& st, const CStmt& s) {
        if (st.cl.is_null(s.base)) {
            error_exit(std::move(st), {}, BranchOrigin::NullDeref, s.line);
            return false;
        }
        if (st.cl.is_dangl(s.base)) {
            std::vector<PurePtr> extra;
            if (st.cl.is_freed(s.base)) extra.push_back(mk::dangl(s.base));
            error_exit(std::move(st), std::move(extra),
                       BranchOrigin::DanglingDeref, s.line);
            return false;
        }
        if (auto ci = st.cl.cell_of(s.base)) {
            auto& pt = std::get<PointsTo>(st.spatial[*ci]);
            for (const auto& [f, v] : pt.fields) {
                if (f == s.field) {
                    conjoin(st, mk::eq_var(s.dst, v));
                    track(st, s.dst);
                    return true;
                }
            }
            throw EncodeError("no field '" + s.field + "' on '" + pt.type_name + "'",
                              s.line);
        }
        split_access(st, s.base, s.line);
        conjoin(st, mk::load(s.base, s.field, s.dst, st.next_k++));
        track(st, s.dst);
        return true;
    }

    bool do_store(Path& st, const CStmt& s) {
        if (st.cl.is_null(s.base)) {
            error_exit(std::move(st), {}, BranchOrigin::NullDeref, s.line);
            return false;
        }
        if (st.cl.is_dangl(s.base)) {
            std::vector<PurePtr> extra;
            if (st.cl.is_freed(s.base)) extra.push_back(mk::dangl(s.base));
            error_exit(std::move(st), std::move(extra),
                       BranchOrigin::DanglingDeref, s.line);
            return false;
        }
        if (auto ci = st.cl.cell_of(s.base)) {
            auto& pt = std::get<PointsTo>(st.spatial[*ci]);
            for (auto& [f, v] : pt.fields) {
                if (f == s.field) {
                    v = s.src;
                    return true;
                }
            }
            throw EncodeError("no field '" + s.field + "' on '" + pt.type_name + "'",
                              s.line);
        }
        split_access(st, s.base, s.line);
        conjoin(st, mk::store(s.base, s.field, s.src, st.next_k++));
        return true;
    }

    bool do_free(Path& st, const CStmt& s) {
        if (st.cl.is_null(s.base)) {
            error_exit(std::move(st), {}, BranchOrigin::FreeNull, s.line);
            return false;
        }
        if (st.cl.is_dangl(s.base)) {
            std::vector<PurePtr> extra;
            if (st.cl.is_freed(s.base)) extra.push_back(mk::dangl(s.base));
            error_exit(std::move(st), std::move(extra), BranchOrigin::DoubleFree,
                       s.line);
            return false;
        }
        if (auto ci = st.cl.cell_of(s.base)) {
            st.spatial.erase(st.spatial.begin() + *ci);
            st.cl.drop_cell_at(*ci);
            st.cl.mark_freed(s.base);
            return true;
        }
        if (!st.cl.is_nonnull(s.base)) {
            Path err = st;
            error_exit(std::move(err), {mk::eq_null(s.base)},
                       BranchOrigin::FreeNull, s.line);
        }
        if (!st.cl.is_clean(s.base)) {
            Path err = st;
            error_exit(std::move(err), {mk::dangl(s.base)},
                       BranchOrigin::DoubleFree, s.line);
        }
        if (!st.cl.is_nonnull(s.base)) conjoin(st, mk::ne_null(s.base));
        if (!st.cl.is_clean(s.base)) conjoin(st, mk::not_dangl(s.base));
        conjoin(st, mk::del(s.base, st.next_k++));
        st.cl.mark_freed(s.base);
        return true;
    }

    // Fork the null- and dangling-pointer failures of an access whose base
    // is not materialized, then strengthen the surviving path.
    void split_access(Path& st, const Var& base, int line) {
        if (!st.cl.is_nonnull(base)) {
            Path err = st;
            error_exit(std::move(err), {mk::eq_null(base)}, BranchOrigin::NullDeref,
                       line);
        }
        if (!st.cl.is_clean(base)) {
            Path err = st;
            error_exit(std::move(err), {mk::dangl(base)},
                       BranchOrigin::DanglingDeref, line);
        }
        if (!st.cl.is_nonnull(base)) conjoin(st, mk::ne_null(base));
        if (!st.cl.is_clean(base)) conjoin(st, mk::not_dangl(base));
    }

    void do_call(Path& st, const CStmt& s, bool tail) {
        const CoreProc* callee = prog.proc(s.callee);
        if (!callee) throw EncodeError("call to unknown procedure '" + s.callee + "'",
                                       s.line);
        if (s.args.size() != callee->params.size())
            throw EncodeError("wrong argument count for '" + s.callee + "'", s.line);
        if (s.dsts.size() != callee->ret_types.size())
            throw EncodeError("wrong result count for '" + s.callee + "'", s.line);
        PredInst inst;
        inst.pred = s.callee;
        for (std::size_t j = 0; j < s.args.size(); ++j) {
            const TermPtr& a = s.args[j];
            if (!a) {
                Var v = names.fresh(callee->params[j].name);
                conjoin(st, mk::eq_null(v));
                inst.args.push_back(v);
            } else if (auto v = as_var(a)) {
                inst.args.push_back(*v);
            } else {
                Var h = names.fresh(arg_base(a, callee->params[j].name));
                conjoin(st, mk::eq(Term::ref(h), a));
                inst.args.push_back(h);
            }
        }
        inst.args.insert(inst.args.end(), s.dsts.begin(), s.dsts.end());
        inst.order = st.next_o++;
        inst.unfold = 0;
        if (tail) {
            // The callee's results are this procedure's results: thread the
            // status flag straight through and skip the separate error exit.
            inst.args.push_back(kEps);
            st.merged = true;
            st.spatial.push_back(std::move(inst));
        } else {
            Var q = names.fresh("eps");
            if (may_fail.at(s.callee)) {
                Path err = st;
                PredInst ei = inst;
                ei.args.push_back(q);
                err.spatial.push_back(std::move(ei));
                error_exit(std::move(err),
                           {mk::eq(Term::ref(q), Term::constant(1))},
                           BranchOrigin::ProgramPath, s.line);
                conjoin(st, mk::eq(Term::ref(q), Term::constant(0)));
            }
            inst.args.push_back(q);
            st.spatial.push_back(std::move(inst));
        }
        for (const Var& d : s.dsts) track(st, d);
    }

    // A call whose continuation only shuffles values into the return cannot
    // change the outcome anymore: thread the caller's status flag straight
    // through instead of adding a separate failure exit.
    bool tail_position(const std::vector<CStmtPtr>& cont, std::size_t i) {
        for (std::size_t j = i + 1; j < cont.size(); ++j) {
            switch (cont[j]->kind) {
            case CStmt::Kind::Assign:
            case CStmt::Kind::New:
            case CStmt::Kind::Return:
                continue;
            default:
                return false;
            }
        }
        return !cont.empty() && cont.back()->kind == CStmt::Kind::Return;
    }

    void walk(std::vector<CStmtPtr> cont, std::size_t i, Path st) {
        for (; i < cont.size(); ++i) {
            const CStmt& s = *cont[i];
            switch (s.kind) {
            case CStmt::Kind::New:
                do_new(st, s);
                break;
            case CStmt::Kind::Assign:
                if (!s.rhs) {
                    conjoin(st, mk::eq_null(s.dst));
                } else if (auto v = as_var(s.rhs)) {
                    conjoin(st, mk::eq_var(s.dst, *v));
                } else {
                    conjoin(st, mk::eq(Term::ref(s.dst), s.rhs));
                }
                track(st, s.dst);
                break;
            case CStmt::Kind::Load:
                if (!do_load(st, s)) return;
                break;
            case CStmt::Kind::Store:
                if (!do_store(st, s)) return;
                break;
            case CStmt::Kind::Free:
                if (!do_free(st, s)) return;
                break;
            case CStmt::Kind::Call:
                do_call(st, s, tail_position(cont, i));
                break;
            case CStmt::Kind::Assume:
                conjoin(st, s.cond);
                break;
            case CStmt::Kind::Fail:
                error_exit(std::move(st), {}, BranchOrigin::Assertion, s.line);
                return;
            case CStmt::Kind::If: {
                std::vector<CStmtPtr> rest(cont.begin() + i + 1, cont.end());
                PurePtr neg = mk::negate(s.cond);
                Path then_st = st;
                then_st.label.push_back(1);
                conjoin(then_st, s.cond);
                std::vector<CStmtPtr> then_cont = s.then_body;
                then_cont.insert(then_cont.end(), rest.begin(), rest.end());
                walk(std::move(then_cont), 0, std::move(then_st));
                Path else_st = std::move(st);
                else_st.label.push_back(2);
                conjoin(else_st, neg);
                std::vector<CStmtPtr> else_cont = s.else_body;
                else_cont.insert(else_cont.end(), rest.begin(), rest.end());
                walk(std::move(else_cont), 0, std::move(else_st));
                return;
            }
            case CStmt::Kind::Return:
                return_exit(std::move(st), s.rets, s.line);
                return;
            }
        }
        throw EncodeError("control reaches the end of '" + proc.name +
                              "' without returning",
                          proc.line);
    }
};

// A procedure can fail if some branch raises the status flag directly or
// threads it through a callee that can fail.
std::map<std::string, bool> failure_map(const CHCSystem& sys) {
    std::map<std::string, bool> f;
    for (const auto& pd : sys.preds) f[pd.name] = false;
    auto raises = [](const PurePtr& c) {
        if (!c || c->kind != Pure::Kind::Cmp || c->op != CmpOp::Eq) return false;
        auto l = as_var(c->lhs), r = as_var(c->rhs);
        auto lc = to_linear(c->lhs), rc = to_linear(c->rhs);
        if (l && *l == kEps && rc && rc->is_constant() && rc->constant == 1)
            return true;
        if (r && *r == kEps && lc && lc->is_constant() && lc->constant == 1)
            return true;
        return false;
    };
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& pd : sys.preds) {
            if (f[pd.name]) continue;
            bool can = false;
            for (const auto& br : pd.branches) {
                for (const auto& c : br.pure)
                    if (raises(c)) can = true;
                for (const auto& a : br.spatial) {
                    const auto* pi = std::get_if<PredInst>(&a);
                    if (pi && !pi->args.empty() && pi->args.back() == kEps &&
                        f.count(pi->pred) && f[pi->pred])
                        can = true;
                }
                if (can) break;
            }
            if (can) {
                f[pd.name] = true;
                changed = true;
            }
        }
    }
    return f;
}

// Definitions go callees-first so a reader (and the invariant pass) meets a
// predicate before its uses; the entry procedure goes last.
std::vector<const CoreProc*> definition_order(const CoreProgram& prog) {
    std::vector<const CoreProc*> order;
    std::set<std::string> placed;
    std::map<std::string, std::set<std::string>> callees;
    std::function<void(const CBlock&, std::set<std::string>&)> scan =
        [&](const CBlock& b, std::set<std::string>& out) {
            for (const auto& s : b) {
                if (s->kind == CStmt::Kind::Call) out.insert(s->callee);
                scan(s->then_body, out);
                scan(s->else_body, out);
            }
        };
    for (const auto& p : prog.procs) scan(p.body, callees[p.name]);
    auto ready = [&](const CoreProc& p) {
        for (const auto& c : callees[p.name])
            if (c != p.name && !placed.count(c) && prog.proc(c)) return false;
        return true;
    };
    while (order.size() < prog.procs.size()) {
        bool progress = false;
        for (const auto& p : prog.procs) {
            if (placed.count(p.name)) continue;
            if (p.name == "main" && order.size() + 1 < prog.procs.size()) continue;
            if (ready(p)) {
                order.push_back(&p);
                placed.insert(p.name);
                progress = true;
            }
        }
        if (!progress) {
            // Mutual recursion: take the first remaining in program order.
            for (const auto& p : prog.procs) {
                if (!placed.count(p.name)) {
                    order.push_back(&p);
                    placed.insert(p.name);
                    break;
                }
            }
        }
    }
    return order;
}

CHCSystem encode_with(const CoreProgram& prog,
                      const std::vector<const CoreProc*>& order,
                      const std::map<std::string, bool>& may_fail) {
    CHCSystem sys;
    for (const CoreProc* p : order)
        sys.preds.push_back(ProcEncoder(prog, may_fail, *p).run());
    const CoreProc* mn = prog.proc("main");
    PredInst query_inst;
    query_inst.pred = "main";
    query_inst.args = mn->params;
    std::vector<Var> slots = result_slots(mn->ret_types.size());
    query_inst.args.insert(query_inst.args.end(), slots.begin(), slots.end());
    query_inst.args.push_back(kEps);
    query_inst.order = 0;
    query_inst.unfold = 0;
    sys.query.spatial.push_back(std::move(query_inst));
    sys.query.pure.push_back(mk::eq(Term::ref(kEps), Term::constant(1)));
    return sys;
}

} // namespace

CHCSystem encode_program(const CoreProgram& prog) {
    if (!prog.proc("main"))
        throw EncodeError("program has no 'main' procedure", 1);
    auto order = definition_order(prog);
    // Start from "every callee may fail" and shrink to the least fixpoint:
    // procedures whose failure branches all disappear stop spawning error
    // exits at their call sites.
    std::map<std::string, bool> assume;
    for (const auto& p : prog.procs) assume[p.name] = true;
    CHCSystem sys = encode_with(prog, order, assume);
    for (int round = 0; round < 5; ++round) {
        auto actual = failure_map(sys);
        if (actual == assume) return sys;
        assume = actual;
        sys = encode_with(prog, order, assume);
    }
    return sys;
}

} // namespace heapver
