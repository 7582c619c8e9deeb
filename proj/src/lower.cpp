#include <algorithm>
#include <set>

#include "heapver/program.hpp"

namespace heapver {

namespace {

// --------------------------------------------------------- loop extraction

// First-occurrence-ordered view of which enclosing variables a loop touches.
struct VarUse {
    std::vector<std::string> order;
    std::set<std::string> seen, modified, locals;

    void note(const std::string& n) {
        if (locals.count(n) || seen.count(n)) return;
        seen.insert(n);
        order.push_back(n);
    }
    void write(const std::string& n) {
        note(n);
        if (!locals.count(n)) modified.insert(n);
    }
};

void collect_locals(const SBlock& b, std::set<std::string>& out) {
    for (const auto& s : b) {
        if (s->kind == SStmt::Kind::Decl) out.insert(s->name);
        collect_locals(s->then_body, out);
        collect_locals(s->else_body, out);
    }
}

void scan_expr(const SExprPtr& e, VarUse& u) {
    if (!e) return;
    if (e->kind == SExpr::Kind::VarRef) u.note(e->name);
    scan_expr(e->a, u);
    scan_expr(e->b, u);
    for (const auto& a : e->args) scan_expr(a, u);
}

void scan_cond(const SCondPtr& c, VarUse& u) {
    if (!c) return;
    scan_expr(c->lhs, u);
    scan_expr(c->rhs, u);
    scan_cond(c->sub, u);
}

void scan_block(const SBlock& b, VarUse& u) {
    for (const auto& s : b) {
        switch (s->kind) {
        case SStmt::Kind::Decl: scan_expr(s->expr, u); break;
        case SStmt::Kind::Assign:
            scan_expr(s->expr, u);
            u.write(s->name);
            break;
        case SStmt::Kind::FieldWrite:
            u.note(s->name);
            scan_expr(s->expr, u);
            break;
        case SStmt::Kind::If:
        case SStmt::Kind::While:
            scan_cond(s->cond, u);
            scan_block(s->then_body, u);
            scan_block(s->else_body, u);
            break;
        case SStmt::Kind::Return:
            for (const auto& r : s->rets) scan_expr(r, u);
            break;
        case SStmt::Kind::Free: u.note(s->name); break;
        case SStmt::Kind::Fail: break;
        case SStmt::Kind::Assert:
        case SStmt::Kind::Assume: scan_cond(s->cond, u); break;
        case SStmt::Kind::CallMulti:
            for (const auto& a : s->args) scan_expr(a, u);
            for (const auto& d : s->dsts) u.write(d);
            break;
        }
    }
}

struct Extractor {
    SurfaceProgram& prog;
    std::set<std::string> proc_names;
    bool found = false;

    explicit Extractor(SurfaceProgram& p) : prog(p) {
        for (const auto& pr : p.procs) proc_names.insert(pr.name);
    }

    std::string unique_loop_name(int line) {
        std::string base = "loop_" + std::to_string(line);
        std::string name = base;
        char suffix = 'a';
        while (proc_names.count(name)) name = base + "_" + std::string(1, suffix++);
        proc_names.insert(name);
        return name;
    }

    SBlock walk(const SBlock& b, std::map<std::string, SrcType> scope) {
        SBlock out;
        for (const auto& s : b) {
            if (found) {
                out.push_back(s);
                continue;
            }
            if (s->kind == SStmt::Kind::Decl) {
                scope[s->name] = s->type;
                out.push_back(s);
                continue;
            }
            if (s->kind == SStmt::Kind::While) {
                out.push_back(extract(*s, scope));
                found = true;
                continue;
            }
            if (s->kind == SStmt::Kind::If) {
                SStmt copy = *s;
                copy.then_body = walk(s->then_body, scope);
                if (!found) copy.else_body = walk(s->else_body, scope);
                out.push_back(std::make_shared<SStmt>(std::move(copy)));
                continue;
            }
            out.push_back(s);
        }
        return out;
    }

    // Turn one while into a tail-recursive procedure and return the call
    // that replaces it. Parameters are the enclosing variables the loop
    // reads or writes, in first-use order; the written ones come back as a
    // tuple.
    SStmtPtr extract(const SStmt& w, const std::map<std::string, SrcType>& scope) {
        VarUse u;
        collect_locals(w.then_body, u.locals);
        scan_cond(w.cond, u);
        scan_block(w.then_body, u);

        std::vector<std::string> ins, outs;
        for (const auto& n : u.order) {
            if (!scope.count(n)) continue; // a callee name, not a variable
            ins.push_back(n);
            if (u.modified.count(n)) outs.push_back(n);
        }

        auto var_ref = [&](const std::string& n) {
            SExpr e;
            e.kind = SExpr::Kind::VarRef;
            e.name = n;
            e.line = w.line;
            return std::make_shared<SExpr>(std::move(e));
        };

        SProc loop;
        loop.name = unique_loop_name(w.line);
        loop.line = w.line;
        for (const auto& n : ins) loop.params.emplace_back(scope.at(n), n);
        for (const auto& n : outs) loop.rets.push_back(scope.at(n));
        loop.ret_names = outs;

        SStmt tail;
        tail.kind = SStmt::Kind::CallMulti;
        tail.line = w.line;
        tail.callee = loop.name;
        tail.dsts = outs;
        for (const auto& n : ins) tail.args.push_back(var_ref(n));

        SStmt ret;
        ret.kind = SStmt::Kind::Return;
        ret.line = w.line;
        for (const auto& n : outs) ret.rets.push_back(var_ref(n));

        SStmt branch;
        branch.kind = SStmt::Kind::If;
        branch.line = w.line;
        branch.cond = w.cond;
        branch.then_body = w.then_body;
        branch.then_body.push_back(std::make_shared<SStmt>(tail));
        branch.then_body.push_back(std::make_shared<SStmt>(ret));
        branch.else_body.push_back(std::make_shared<SStmt>(ret));
        loop.body.push_back(std::make_shared<SStmt>(std::move(branch)));

        prog.procs.push_back(std::move(loop));
        return std::make_shared<SStmt>(std::move(tail));
    }
};

} // namespace

SurfaceProgram extract_loops(SurfaceProgram prog) {
    while (true) {
        Extractor ex(prog);
        bool any = false;
        for (size_t i = 0; i < prog.procs.size(); ++i) {
            ex.found = false;
            std::map<std::string, SrcType> scope;
            for (const auto& [t, n] : prog.procs[i].params) scope[n] = t;
            SBlock body = ex.walk(prog.procs[i].body, std::move(scope));
            if (ex.found) {
                prog.procs[i].body = std::move(body);
                any = true;
            }
        }
        if (!any) return prog;
    }
}

// -------------------------------------------------------------- core lowering

namespace {

struct Signature {
    std::vector<SrcType> params;
    std::vector<SrcType> rets;
};

struct Lowerer {
    const SurfaceProgram& prog;
    std::map<std::string, Signature> sigs;
    std::map<std::string, const DataDef*> datas;

    // per-procedure state
    FreshNames names;
    std::map<std::string, Var> cur;
    std::map<Var, SrcType> var_types;
    std::set<std::string> declared;
    std::set<std::string> uninit_scalars;
    const SProc* proc = nullptr;

    explicit Lowerer(const SurfaceProgram& p) : prog(p) {
        for (const auto& d : p.datas) datas[d.name] = &d;
        for (const auto& pr : p.procs) {
            Signature s;
            for (const auto& [t, n] : pr.params) {
                (void)n;
                s.params.push_back(t);
            }
            s.rets = pr.rets;
            sigs[pr.name] = s;
        }
    }

    [[noreturn]] void fail(const std::string& msg, int line) const {
        throw FrontendError(msg, line);
    }

    const DataDef& data_of(const SrcType& t, int line) const {
        auto it = datas.find(t.data_name);
        if (!t.is_ptr() || it == datas.end()) fail("expected a pointer type", line);
        return *it->second;
    }

    SrcType field_type(const SrcType& base, const std::string& field, int line) const {
        for (const auto& [t, n] : data_of(base, line).fields)
            if (n == field) return t;
        fail("no field '" + field + "' in " + base.data_name, line);
    }

    Var lookup(const std::string& n, int line, bool reading = true) {
        auto it = cur.find(n);
        if (it == cur.end()) fail("undeclared variable '" + n + "'", line);
        if (reading && uninit_scalars.count(n))
            fail("variable '" + n + "' read before assignment", line);
        return it->second;
    }

    SrcType type_of_var(const Var& v, int line) const {
        auto it = var_types.find(v);
        if (it == var_types.end()) fail("internal: untyped variable " + v.str(), line);
        return it->second;
    }

    Var bind(const std::string& n, SrcType t) {
        Var v = cur.count(n) ? names.fresh(n) : Var{n, 0};
        names.reserve(v);
        cur[n] = v;
        var_types[v] = std::move(t);
        uninit_scalars.erase(n);
        return v;
    }

    Var temp(const std::string& base, SrcType t) {
        Var v = names.fresh(base);
        var_types[v] = std::move(t);
        return v;
    }

    // Surface-level typing, used before lowering commits any statements.
    // Null has no type of its own: nullopt.
    std::optional<SrcType> type_of_expr(const SExprPtr& e) {
        switch (e->kind) {
        case SExpr::Kind::IntLit: return SrcType{SrcType::Kind::Int, ""};
        case SExpr::Kind::BoolLit: return SrcType{SrcType::Kind::Bool, ""};
        case SExpr::Kind::Null: return std::nullopt;
        case SExpr::Kind::VarRef: {
            auto it = cur.find(e->name);
            if (it == cur.end()) fail("undeclared variable '" + e->name + "'", e->line);
            return type_of_var(it->second, e->line);
        }
        case SExpr::Kind::FieldRead: {
            auto bt = type_of_expr(e->a);
            if (!bt) fail("field access on null", e->line);
            return field_type(*bt, e->name, e->line);
        }
        case SExpr::Kind::BinOp: return SrcType{SrcType::Kind::Int, ""};
        case SExpr::Kind::Call: {
            auto it = sigs.find(e->name);
            if (it == sigs.end()) fail("call to unknown procedure '" + e->name + "'", e->line);
            if (it->second.rets.size() != 1)
                fail("procedure '" + e->name + "' is not single-valued here", e->line);
            return it->second.rets[0];
        }
        case SExpr::Kind::New: {
            if (!datas.count(e->name)) fail("new of unknown type '" + e->name + "'", e->line);
            return SrcType{SrcType::Kind::Ptr, e->name};
        }
        }
        fail("internal: bad expression", e->line);
    }

    static bool compatible(const std::optional<SrcType>& val, const SrcType& slot) {
        if (!val) return slot.is_ptr(); // null literal
        return *val == slot;
    }

    CStmtPtr stmt(CStmt s) { return std::make_shared<CStmt>(std::move(s)); }

    // Lower an expression to a term, emitting loads, calls and allocations
    // into `out` first. A null result is the null-pointer literal.
    TermPtr lower_expr(const SExprPtr& e, CBlock& out) {
        switch (e->kind) {
        case SExpr::Kind::IntLit: return Term::constant(e->num);
        case SExpr::Kind::BoolLit: return Term::constant(e->bval ? 1 : 0);
        case SExpr::Kind::Null: return nullptr;
        case SExpr::Kind::VarRef: return Term::ref(lookup(e->name, e->line));
        case SExpr::Kind::BinOp: {
            auto at = type_of_expr(e->a);
            auto bt = type_of_expr(e->b);
            if (!at || !bt || at->kind != SrcType::Kind::Int || bt->kind != SrcType::Kind::Int)
                fail("arithmetic needs integer operands", e->line);
            TermPtr a = lower_expr(e->a, out);
            TermPtr b = lower_expr(e->b, out);
            switch (e->op) {
            case '+': return Term::add(a, b);
            case '-': return Term::sub(a, b);
            case '*':
                if (a->kind == Term::Kind::Const) return Term::scale(a->num, b);
                if (b->kind == Term::Kind::Const) return Term::scale(b->num, a);
                fail("nonlinear product", e->line);
            }
            fail("internal: bad operator", e->line);
        }
        case SExpr::Kind::FieldRead: {
            auto bt = type_of_expr(e->a);
            if (!bt) fail("field access on null", e->line);
            TermPtr base = lower_expr(e->a, out);
            auto bv = as_var(base);
            if (!bv) fail("internal: field base is not a variable", e->line);
            Var dst = temp("v", field_type(*bt, e->name, e->line));
            CStmt s;
            s.kind = CStmt::Kind::Load;
            s.dst = dst;
            s.base = *bv;
            s.field = e->name;
            s.line = e->line;
            out.push_back(stmt(std::move(s)));
            return Term::ref(dst);
        }
        case SExpr::Kind::Call: {
            Var dst = temp("r", *type_of_expr(e));
            lower_call({dst}, e->name, e->args, e->line, out);
            return Term::ref(dst);
        }
        case SExpr::Kind::New: {
            CStmt s = prep_new(e, out);
            s.dst = temp("r", *type_of_expr(e));
            TermPtr r = Term::ref(s.dst);
            out.push_back(stmt(std::move(s)));
            return r;
        }
        }
        fail("internal: bad expression", e->line);
    }

    // Builds the allocation with its arguments lowered; the caller picks the
    // destination, so bindings can evaluate arguments before rebinding.
    CStmt prep_new(const SExprPtr& e, CBlock& out) {
        const DataDef& d = *datas.at(e->name);
        if (!e->args.empty() && e->args.size() != d.fields.size())
            fail("new " + e->name + " takes 0 or " + std::to_string(d.fields.size()) +
                     " arguments",
                 e->line);
        CStmt s;
        s.kind = CStmt::Kind::New;
        s.type_name = e->name;
        s.line = e->line;
        for (size_t i = 0; i < e->args.size(); ++i) {
            if (!compatible(type_of_expr(e->args[i]), d.fields[i].first))
                fail("argument " + std::to_string(i + 1) + " of new " + e->name +
                         " has the wrong type",
                     e->line);
            s.args.push_back(lower_expr(e->args[i], out));
        }
        return s;
    }

    void lower_call(std::vector<Var> dsts, const std::string& callee,
                    const std::vector<SExprPtr>& args, int line, CBlock& out) {
        auto it = sigs.find(callee);
        if (it == sigs.end()) fail("call to unknown procedure '" + callee + "'", line);
        const Signature& sig = it->second;
        if (args.size() != sig.params.size())
            fail("'" + callee + "' expects " + std::to_string(sig.params.size()) + " arguments",
                 line);
        CStmt s;
        s.kind = CStmt::Kind::Call;
        s.callee = callee;
        s.dsts = std::move(dsts);
        s.line = line;
        for (size_t i = 0; i < args.size(); ++i) {
            if (!compatible(type_of_expr(args[i]), sig.params[i]))
                fail("argument " + std::to_string(i + 1) + " of '" + callee +
                         "' has the wrong type",
                     line);
            s.args.push_back(lower_expr(args[i], out));
        }
        out.push_back(stmt(std::move(s)));
    }

    // Store sources and formula slots hold bare variables.
    Var as_slot_var(const SExprPtr& e, const SrcType& expected, CBlock& out) {
        if (e->kind == SExpr::Kind::VarRef) {
            Var v = lookup(e->name, e->line);
            if (!compatible(type_of_var(v, e->line), expected))
                fail("value has the wrong type", e->line);
            return v;
        }
        if (!compatible(type_of_expr(e), expected)) fail("value has the wrong type", e->line);
        Var t = temp("v", expected);
        TermPtr rhs = lower_expr(e, out);
        CStmt s;
        s.kind = CStmt::Kind::Assign;
        s.dst = t;
        s.rhs = std::move(rhs); // null keeps the null-literal convention
        s.line = e->line;
        out.push_back(stmt(std::move(s)));
        return t;
    }

    PurePtr lower_cond(const SCondPtr& c, CBlock& out) {
        switch (c->kind) {
        case SCond::Kind::Not: return mk::negate(lower_cond(c->sub, out));
        case SCond::Kind::Truthy: {
            auto t = type_of_expr(c->lhs);
            if (!t || t->kind != SrcType::Kind::Bool)
                fail("a bare condition must be boolean; compare pointers and integers"
                     " explicitly",
                     c->line);
            TermPtr e = lower_expr(c->lhs, out);
            auto v = as_var(e);
            if (v) return mk::var_atom(*v);
            return mk::eq(e, Term::constant(1));
        }
        case SCond::Kind::Cmp: {
            auto lt = type_of_expr(c->lhs);
            auto rt = type_of_expr(c->rhs);
            bool l_null = !lt, r_null = !rt;
            if (l_null && r_null) return mk::bconst(c->op == CmpOp::Eq);
            if (l_null || r_null) {
                if (c->op != CmpOp::Eq && c->op != CmpOp::Ne)
                    fail("null only supports == and !=", c->line);
                const SExprPtr& side = l_null ? c->rhs : c->lhs;
                auto st = l_null ? rt : lt;
                if (!st->is_ptr()) fail("null compared against a non-pointer", c->line);
                TermPtr e = lower_expr(side, out);
                auto v = as_var(e);
                if (!v) fail("internal: pointer expression is not a variable", c->line);
                return c->op == CmpOp::Eq ? mk::eq_null(*v) : mk::ne_null(*v);
            }
            if (lt->is_ptr() != rt->is_ptr()) fail("pointer compared against integer", c->line);
            if (lt->is_ptr() && c->op != CmpOp::Eq && c->op != CmpOp::Ne)
                fail("pointers only support == and !=", c->line);
            TermPtr a = lower_expr(c->lhs, out);
            TermPtr b = lower_expr(c->rhs, out);
            return mk::cmp(c->op, a, b);
        }
        }
        fail("internal: bad condition", c->line);
    }

    // Lower a block; returns false when every path through it returned or
    // failed (nothing falls through).
    bool lower_block(const SBlock& b, CBlock& out) {
        for (size_t si = 0; si < b.size(); ++si) {
            const SStmt& s = *b[si];
            switch (s.kind) {
            case SStmt::Kind::Decl: {
                if (declared.count(s.name)) fail("redeclaration of '" + s.name + "'", s.line);
                declared.insert(s.name);
                if (s.expr) {
                    lower_binding(s.name, s.type, s.expr, s.line, out);
                } else {
                    Var v = bind(s.name, s.type);
                    if (s.type.is_ptr()) {
                        // an uninitialized pointer points at nothing in
                        // particular: record that it dangles
                        CStmt a;
                        a.kind = CStmt::Kind::Assume;
                        a.cond = mk::dangl(v);
                        a.line = s.line;
                        out.push_back(stmt(std::move(a)));
                    } else {
                        uninit_scalars.insert(s.name);
                    }
                }
                break;
            }
            case SStmt::Kind::Assign: {
                Var old = lookup(s.name, s.line, false);
                lower_binding(s.name, type_of_var(old, s.line), s.expr, s.line, out);
                break;
            }
            case SStmt::Kind::FieldWrite: {
                Var base = lookup(s.name, s.line);
                SrcType bt = type_of_var(base, s.line);
                SrcType ft = field_type(bt, s.field, s.line);
                Var src = as_slot_var(s.expr, ft, out);
                CStmt st;
                st.kind = CStmt::Kind::Store;
                st.base = base;
                st.field = s.field;
                st.src = src;
                st.line = s.line;
                out.push_back(stmt(std::move(st)));
                break;
            }
            case SStmt::Kind::If: {
                PurePtr cond = lower_cond(s.cond, out);
                auto snapshot_cur = cur;
                auto snapshot_uninit = uninit_scalars;

                CStmt st;
                st.kind = CStmt::Kind::If;
                st.cond = cond;
                st.line = s.line;

                bool then_falls = lower_block(s.then_body, st.then_body);
                auto then_cur = cur;
                auto then_uninit = uninit_scalars;

                cur = snapshot_cur;
                uninit_scalars = snapshot_uninit;
                bool else_falls = lower_block(s.else_body, st.else_body);
                auto else_cur = cur;
                auto else_uninit = uninit_scalars;

                if (then_falls && else_falls) {
                    cur = snapshot_cur;
                    uninit_scalars.clear();
                    for (const auto& [n, v] : snapshot_cur) {
                        Var tv = then_cur.at(n);
                        Var ev = else_cur.at(n);
                        if (tv == ev) {
                            cur[n] = tv;
                        } else {
                            Var j = bind(n, type_of_var(v, s.line));
                            CStmt ct;
                            ct.kind = CStmt::Kind::Assign;
                            ct.dst = j;
                            ct.rhs = Term::ref(tv);
                            ct.line = s.line;
                            st.then_body.push_back(stmt(std::move(ct)));
                            CStmt ce;
                            ce.kind = CStmt::Kind::Assign;
                            ce.dst = j;
                            ce.rhs = Term::ref(ev);
                            ce.line = s.line;
                            st.else_body.push_back(stmt(std::move(ce)));
                        }
                        if (then_uninit.count(n) || else_uninit.count(n))
                            uninit_scalars.insert(n);
                    }
                } else if (then_falls) {
                    cur = restrict_to(then_cur, snapshot_cur);
                    uninit_scalars = then_uninit;
                } else if (else_falls) {
                    cur = restrict_to(else_cur, snapshot_cur);
                    uninit_scalars = else_uninit;
                }
                out.push_back(stmt(std::move(st)));
                if (!then_falls && !else_falls) {
                    if (si + 1 != b.size())
                        fail("unreachable statements after this branch", s.line);
                    return false;
                }
                break;
            }
            case SStmt::Kind::While:
                fail("internal: loop survived extraction", s.line);
            case SStmt::Kind::Return: {
                if (s.rets.size() != proc->rets.size())
                    fail("return arity does not match the procedure", s.line);
                CStmt st;
                st.kind = CStmt::Kind::Return;
                st.line = s.line;
                for (size_t i = 0; i < s.rets.size(); ++i) {
                    if (!compatible(type_of_expr(s.rets[i]), proc->rets[i]))
                        fail("returned value has the wrong type", s.line);
                    st.rets.push_back(lower_expr(s.rets[i], out));
                }
                out.push_back(stmt(std::move(st)));
                if (si + 1 != b.size()) fail("unreachable statements after return", s.line);
                return false;
            }
            case SStmt::Kind::Free: {
                Var v = lookup(s.name, s.line);
                if (!type_of_var(v, s.line).is_ptr()) fail("free of a non-pointer", s.line);
                CStmt st;
                st.kind = CStmt::Kind::Free;
                st.base = v;
                st.line = s.line;
                out.push_back(stmt(std::move(st)));
                break;
            }
            case SStmt::Kind::Fail: {
                CStmt st;
                st.kind = CStmt::Kind::Fail;
                st.line = s.line;
                out.push_back(stmt(std::move(st)));
                if (si + 1 != b.size()) fail("unreachable statements after ERROR()", s.line);
                return false;
            }
            case SStmt::Kind::Assert: {
                // assert(c) is an if with an empty happy path
                SStmt branch;
                branch.kind = SStmt::Kind::If;
                branch.line = s.line;
                branch.cond = s.cond;
                SStmt failure;
                failure.kind = SStmt::Kind::Fail;
                failure.line = s.line;
                branch.else_body.push_back(std::make_shared<SStmt>(std::move(failure)));
                SBlock wrapped{std::make_shared<SStmt>(std::move(branch))};
                lower_block(wrapped, out);
                break;
            }
            case SStmt::Kind::Assume: {
                CStmt st;
                st.kind = CStmt::Kind::Assume;
                st.cond = lower_cond(s.cond, out);
                st.line = s.line;
                out.push_back(stmt(std::move(st)));
                break;
            }
            case SStmt::Kind::CallMulti: {
                auto it = sigs.find(s.callee);
                if (it == sigs.end()) fail("call to unknown procedure", s.line);
                CBlock arg_code;
                CStmt st;
                st.kind = CStmt::Kind::Call;
                st.callee = s.callee;
                st.line = s.line;
                for (size_t i = 0; i < s.args.size(); ++i) {
                    if (!compatible(type_of_expr(s.args[i]), it->second.params[i]))
                        fail("argument has the wrong type", s.line);
                    st.args.push_back(lower_expr(s.args[i], arg_code));
                }
                for (size_t i = 0; i < s.dsts.size(); ++i) {
                    Var old = lookup(s.dsts[i], s.line, false);
                    st.dsts.push_back(bind(s.dsts[i], type_of_var(old, s.line)));
                }
                out.insert(out.end(), arg_code.begin(), arg_code.end());
                out.push_back(stmt(std::move(st)));
                break;
            }
            }
        }
        return true;
    }

    // x = expr / type x = expr, with allocation and calls binding directly
    void lower_binding(const std::string& name, const SrcType& type, const SExprPtr& e, int line,
                       CBlock& out) {
        if (!compatible(type_of_expr(e), type)) fail("assigned value has the wrong type", line);
        if (e->kind == SExpr::Kind::New) {
            CStmt s = prep_new(e, out); // arguments use the old binding
            s.dst = bind(name, type);
            out.push_back(stmt(std::move(s)));
            return;
        }
        if (e->kind == SExpr::Kind::Call) {
            auto it = sigs.find(e->name);
            if (it == sigs.end()) fail("call to unknown procedure '" + e->name + "'", line);
            CStmt st;
            st.kind = CStmt::Kind::Call;
            st.callee = e->name;
            st.line = line;
            if (e->args.size() != it->second.params.size())
                fail("'" + e->name + "' expects " + std::to_string(it->second.params.size()) +
                         " arguments",
                     line);
            for (size_t i = 0; i < e->args.size(); ++i) {
                if (!compatible(type_of_expr(e->args[i]), it->second.params[i]))
                    fail("argument has the wrong type", line);
                st.args.push_back(lower_expr(e->args[i], out));
            }
            st.dsts.push_back(bind(name, type));
            out.push_back(stmt(std::move(st)));
            return;
        }
        TermPtr rhs = lower_expr(e, out);
        Var dst = bind(name, type);
        CStmt st;
        st.kind = CStmt::Kind::Assign;
        st.dst = dst;
        st.rhs = std::move(rhs);
        st.line = line;
        out.push_back(stmt(std::move(st)));
    }

    static std::map<std::string, Var> restrict_to(const std::map<std::string, Var>& env,
                                                  const std::map<std::string, Var>& keys) {
        std::map<std::string, Var> out;
        for (const auto& [n, v] : keys) {
            (void)v;
            out.emplace(n, env.at(n));
        }
        return out;
    }

    CoreProc lower_proc(const SProc& p) {
        names = FreshNames{};
        cur.clear();
        var_types.clear();
        declared.clear();
        uninit_scalars.clear();
        proc = &p;

        CoreProc out;
        out.name = p.name;
        out.line = p.line;
        out.ret_types = p.rets;
        out.ret_names = p.ret_names;
        for (const auto& [t, n] : p.params) {
            if (declared.count(n)) fail("duplicate parameter '" + n + "'", p.line);
            declared.insert(n);
            Var v = bind(n, t);
            out.params.push_back(v);
            out.param_types.push_back(t);
        }
        bool falls = lower_block(p.body, out.body);
        if (falls) fail("procedure '" + p.name + "' can fall off the end", p.line);
        return out;
    }
};

} // namespace

CoreProgram to_core(const SurfaceProgram& prog_in) {
    SurfaceProgram prog = extract_loops(prog_in);
    Lowerer low(prog);
    CoreProgram out;
    out.datas = prog.datas;
    out.filename = prog.filename;
    for (const auto& p : prog.procs) {
        if (p.name == "main" && p.rets != std::vector<SrcType>{SrcType{SrcType::Kind::Int, ""}})
            throw FrontendError("main must return int", p.line);
        out.procs.push_back(low.lower_proc(p));
    }
    return out;
}

} // namespace heapver
