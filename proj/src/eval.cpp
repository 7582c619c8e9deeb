#include "heapver/state.hpp"

#include <algorithm>
#include <functional>

#include "heapver/render.hpp"

namespace heapver {

std::string Value::str() const {
    switch (kind) {
    case Kind::Int: return std::to_string(num);
    case Kind::Loc: return "l" + std::to_string(loc);
    case Kind::Null: return "null";
    }
    return "?";
}

Value* HeapCell::find(const std::string& field) {
    for (auto& [f, v] : fields)
        if (f == field) return &v;
    return nullptr;
}

const Value* HeapCell::find(const std::string& field) const {
    for (const auto& [f, v] : fields)
        if (f == field) return &v;
    return nullptr;
}

std::string ConcreteState::str() const {
    std::string s = "{";
    bool first = true;
    for (const auto& [v, val] : stack) {
        if (!first) s += ", ";
        first = false;
        s += v.str() + "=" + val.str();
    }
    s += " | ";
    first = true;
    for (const auto& [loc, cell] : heap) {
        if (!first) s += ", ";
        first = false;
        s += "l" + std::to_string(loc) + ":" + cell.type_name + "{";
        for (size_t i = 0; i < cell.fields.size(); ++i) {
            if (i) s += ",";
            s += cell.fields[i].first + "=" + cell.fields[i].second.str();
        }
        s += "}";
    }
    return s + "}";
}

namespace {

const Value& lookup(const ConcreteState& st, const Var& v) {
    auto it = st.stack.find(v);
    if (it == st.stack.end()) throw EvalError("unassigned variable " + v.str());
    return it->second;
}

std::int64_t as_int(const Value& v, const char* what) {
    if (v.kind != Value::Kind::Int) throw EvalError(std::string("expected integer in ") + what);
    return v.num;
}

Value eval_term(const ConcreteState& st, const TermPtr& t) {
    switch (t->kind) {
    case Term::Kind::Const: return Value::of_int(t->num);
    case Term::Kind::VarRef: return lookup(st, t->var);
    case Term::Kind::Neg: return Value::of_int(-as_int(eval_term(st, t->a), "negation"));
    case Term::Kind::Scale:
        return Value::of_int(t->num * as_int(eval_term(st, t->a), "product"));
    case Term::Kind::Add:
        return Value::of_int(as_int(eval_term(st, t->a), "sum") +
                             as_int(eval_term(st, t->b), "sum"));
    case Term::Kind::Min:
        return Value::of_int(std::min(as_int(eval_term(st, t->a), "min"),
                                      as_int(eval_term(st, t->b), "min")));
    case Term::Kind::Max:
        return Value::of_int(std::max(as_int(eval_term(st, t->a), "max"),
                                      as_int(eval_term(st, t->b), "max")));
    }
    throw EvalError("bad term");
}

bool is_pointer(const Value& v) { return v.kind != Value::Kind::Int; }

// Truth of a pure formula with no access atoms inside. Dangling claims are
// timed: a positive occurrence speaks about the heap after the access replay
// (`post`), a negated one is a guard about the heap at branch entry
// (`entry`); `positive` tracks the polarity of the current position.
bool eval_pure(const ConcreteState& st, const std::map<std::uint32_t, HeapCell>& entry,
               const std::map<std::uint32_t, HeapCell>& post, const PurePtr& p,
               bool positive) {
    switch (p->kind) {
    case Pure::Kind::BoolConst: return p->value;
    case Pure::Kind::VarAtom: {
        std::int64_t b = as_int(lookup(st, p->var), "boolean atom");
        if (b != 0 && b != 1) throw EvalError("boolean atom out of range: " + p->var.str());
        return b == 1;
    }
    case Pure::Kind::Cmp: {
        Value l = eval_term(st, p->lhs);
        Value r = eval_term(st, p->rhs);
        if (p->op == CmpOp::Eq || p->op == CmpOp::Ne) {
            if (is_pointer(l) != is_pointer(r))
                throw EvalError("pointer compared against integer");
            bool eq = l == r;
            return p->op == CmpOp::Eq ? eq : !eq;
        }
        std::int64_t a = as_int(l, "comparison");
        std::int64_t b = as_int(r, "comparison");
        switch (p->op) {
        case CmpOp::Le: return a <= b;
        case CmpOp::Lt: return a < b;
        case CmpOp::Ge: return a >= b;
        case CmpOp::Gt: return a > b;
        default: return false; // unreachable
        }
    }
    case Pure::Kind::EqNull: {
        const Value& v = lookup(st, p->var);
        if (v.kind == Value::Kind::Int) throw EvalError("null test on integer");
        return v.kind == Value::Kind::Null;
    }
    case Pure::Kind::Dangling: {
        const Value& v = lookup(st, p->var);
        if (v.kind == Value::Kind::Int) throw EvalError("dangl on integer");
        const auto& heap = positive ? post : entry;
        return v.kind == Value::Kind::Loc && !heap.count(v.loc);
    }
    case Pure::Kind::Load:
    case Pure::Kind::Store:
    case Pure::Kind::Del:
        throw EvalError("access atom in nested position");
    case Pure::Kind::Not: return !eval_pure(st, entry, post, p->sub[0], !positive);
    case Pure::Kind::And:
        for (const auto& s : p->sub)
            if (!eval_pure(st, entry, post, s, positive)) return false;
        return true;
    case Pure::Kind::Or:
        for (const auto& s : p->sub)
            if (eval_pure(st, entry, post, s, positive)) return true;
        return false;
    case Pure::Kind::Exists: throw EvalError("quantifier in evaluated position");
    }
    throw EvalError("bad pure kind");
}

} // namespace

bool eval_base(const ConcreteState& state, const SymbolicHeap& sh) {
    // Spatial part: the heap must consist of exactly these cells.
    std::set<std::uint32_t> roots;
    for (const auto& a : sh.spatial) {
        const auto* pt = std::get_if<PointsTo>(&a);
        if (!pt) throw EvalError("eval_base on a non-base disjunct");
        const Value& rv = lookup(state, pt->root);
        if (rv.kind != Value::Kind::Loc) return false;
        if (!roots.insert(rv.loc).second) return false; // cells must be disjoint
        auto it = state.heap.find(rv.loc);
        if (it == state.heap.end()) return false;
        const HeapCell& cell = it->second;
        if (cell.type_name != pt->type_name) return false;
        if (cell.fields.size() != pt->fields.size()) return false;
        for (const auto& [fname, fvar] : pt->fields) {
            const Value* actual = cell.find(fname);
            if (!actual) return false;
            if (*actual != lookup(state, fvar)) return false;
        }
    }
    if (roots.size() != state.heap.size()) return false; // no stray cells

    // Split the top-level conjuncts into access atoms and the rest.
    std::vector<PurePtr> accesses;
    std::vector<PurePtr> rest;
    for (const auto& p : conjuncts(sh.pure)) {
        if (p->kind == Pure::Kind::Load || p->kind == Pure::Kind::Store ||
            p->kind == Pure::Kind::Del)
            accesses.push_back(p);
        else
            rest.push_back(p);
    }
    std::stable_sort(accesses.begin(), accesses.end(),
                     [](const PurePtr& a, const PurePtr& b) { return a->seq < b->seq; });

    // Replay the accesses against a copy of the heap; each one must be legal
    // at its point in the sequence, and loads must agree with the then
    // current contents.
    auto heap = state.heap;
    for (const auto& a : accesses) {
        const Value& bv = lookup(state, a->base);
        if (bv.kind == Value::Kind::Int) throw EvalError("access through integer");
        if (bv.kind != Value::Kind::Loc) return false;
        auto it = heap.find(bv.loc);
        if (it == heap.end()) return false;
        if (a->kind == Pure::Kind::Del) {
            heap.erase(it);
            continue;
        }
        Value* slot = it->second.find(a->field);
        if (!slot) return false;
        const Value& tv = lookup(state, a->target);
        if (a->kind == Pure::Kind::Load) {
            if (*slot != tv) return false;
        } else {
            *slot = tv;
        }
    }

    for (const auto& p : rest)
        if (!eval_pure(state, state.heap, heap, p, true)) return false;
    if (sh.nonempty && heap.empty()) return false;
    return true;
}

namespace {

enum class VarClass { Unknown, Int, Ptr };

// Classifies every variable as integer- or pointer-valued from how the
// disjunct uses it: roots, access bases, null tests and dangl are pointer
// seeds; arithmetic contexts are integer seeds; = and != between variables
// propagate, as do field positions sharing a field name.
std::map<Var, VarClass> classify(const SymbolicHeap& sh) {
    std::map<Var, VarClass> cls;
    std::set<Var> all;
    for (const auto& a : sh.spatial) {
        const auto& pt = std::get<PointsTo>(a);
        all.insert(pt.root);
        for (const auto& [f, v] : pt.fields) {
            (void)f;
            all.insert(v);
        }
    }
    for (const auto& p : sh.pure) collect_vars(p, all);
    for (const auto& v : all) cls[v] = VarClass::Unknown;

    auto seed = [&cls](const Var& v, VarClass c) {
        auto& slot = cls[v];
        if (slot == VarClass::Unknown) slot = c;
        else if (slot != c)
            throw EvalError("variable used as both pointer and integer: " + v.str());
    };

    std::vector<std::pair<Var, Var>> edges;           // equality/disequality links
    std::map<std::string, std::vector<Var>> by_field; // field-position vars

    std::function<void(const TermPtr&, bool)> scan_term = [&](const TermPtr& t, bool arith) {
        if (!t) return;
        if (t->kind == Term::Kind::VarRef) {
            if (arith) seed(t->var, VarClass::Int);
            return;
        }
        scan_term(t->a, true);
        scan_term(t->b, true);
    };
    std::function<void(const PurePtr&)> scan = [&](const PurePtr& p) {
        switch (p->kind) {
        case Pure::Kind::BoolConst: return;
        case Pure::Kind::VarAtom: seed(p->var, VarClass::Int); return;
        case Pure::Kind::EqNull:
        case Pure::Kind::Dangling: seed(p->var, VarClass::Ptr); return;
        case Pure::Kind::Load:
        case Pure::Kind::Store:
            seed(p->base, VarClass::Ptr);
            by_field[p->field].push_back(p->target);
            return;
        case Pure::Kind::Del: seed(p->base, VarClass::Ptr); return;
        case Pure::Kind::Cmp: {
            bool ordered = p->op != CmpOp::Eq && p->op != CmpOp::Ne;
            auto lv = as_var(p->lhs);
            auto rv = as_var(p->rhs);
            if (!ordered && lv && rv) {
                edges.emplace_back(*lv, *rv);
                return;
            }
            // any other comparison shape is arithmetic
            scan_term(p->lhs, true);
            scan_term(p->rhs, true);
            return;
        }
        case Pure::Kind::Not:
        case Pure::Kind::And:
        case Pure::Kind::Or:
        case Pure::Kind::Exists:
            for (const auto& s : p->sub) scan(s);
            return;
        }
    };

    for (const auto& a : sh.spatial) {
        const auto& pt = std::get<PointsTo>(a);
        seed(pt.root, VarClass::Ptr);
        for (const auto& [f, v] : pt.fields) by_field[f].push_back(v);
    }
    for (const auto& p : sh.pure) scan(p);

    // propagate over equality edges and shared field names to a fixpoint
    bool changed = true;
    while (changed) {
        changed = false;
        auto push = [&](const Var& a, const Var& b) {
            if (cls[a] != VarClass::Unknown && cls[b] == VarClass::Unknown) {
                cls[b] = cls[a];
                changed = true;
            } else if (cls[a] != VarClass::Unknown && cls[b] != cls[a]) {
                throw EvalError("variable used as both pointer and integer: " + b.str());
            }
        };
        for (const auto& [a, b] : edges) {
            push(a, b);
            push(b, a);
        }
        for (const auto& [f, vs] : by_field) {
            (void)f;
            for (size_t i = 0; i + 1 < vs.size(); ++i) {
                push(vs[i], vs[i + 1]);
                push(vs[i + 1], vs[i]);
            }
        }
    }
    for (auto& [v, c] : cls) {
        (void)v;
        if (c == VarClass::Unknown) c = VarClass::Int;
    }
    return cls;
}

} // namespace

std::vector<ConcreteState> enumerate_models(const SymbolicHeap& sh, std::int64_t int_bound,
                                            std::uint32_t heap_locs, std::uint64_t max_space) {
    for (const auto& a : sh.spatial)
        if (!std::holds_alternative<PointsTo>(a))
            throw EvalError("enumerate_models on a non-base disjunct");

    auto cls = classify(sh);
    std::vector<Var> vars;
    std::vector<std::vector<Value>> domains;
    std::uint64_t space = 1;
    for (const auto& [v, c] : cls) {
        vars.push_back(v);
        std::vector<Value> dom;
        if (c == VarClass::Ptr) {
            dom.push_back(Value::null());
            for (std::uint32_t l = 1; l <= heap_locs; ++l) dom.push_back(Value::of_loc(l));
        } else {
            for (std::int64_t k = -int_bound; k <= int_bound; ++k) dom.push_back(Value::of_int(k));
        }
        space *= dom.size();
        if (space > max_space) throw EnumLimitError("assignment space too large");
        domains.push_back(std::move(dom));
    }

    std::vector<ConcreteState> out;
    std::vector<size_t> idx(vars.size(), 0);
    bool more = true;
    while (more) {
        ConcreteState st;
        for (size_t i = 0; i < vars.size(); ++i) st.stack[vars[i]] = domains[i][idx[i]];
        // materialize the heap the spatial part describes, then verify
        bool feasible = true;
        for (const auto& a : sh.spatial) {
            const auto& pt = std::get<PointsTo>(a);
            const Value& rv = st.stack[pt.root];
            if (rv.kind != Value::Kind::Loc || st.heap.count(rv.loc)) {
                feasible = false;
                break;
            }
            HeapCell cell;
            cell.type_name = pt.type_name;
            for (const auto& [f, fv] : pt.fields) cell.fields.emplace_back(f, st.stack[fv]);
            st.heap.emplace(rv.loc, std::move(cell));
        }
        if (feasible && eval_base(st, sh)) out.push_back(std::move(st));
        // odometer
        size_t i = 0;
        for (; i < idx.size(); ++i) {
            if (++idx[i] < domains[i].size()) break;
            idx[i] = 0;
        }
        if (i == idx.size()) more = false;
    }
    return out;
}

} // namespace heapver
