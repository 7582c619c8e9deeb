#include <optional>
#include <stdexcept>

#include "heapver/interp.hpp"
#include "heapver/state.hpp"

namespace heapver {

std::string RunOutcome::str() const {
    switch (kind) {
    case Kind::Ok: return "ok(" + std::to_string(value) + ")";
    case Kind::AssertError: return "assert_error@" + std::to_string(line);
    case Kind::MemError: {
        std::string what;
        switch (mem) {
        case Mem::None: what = "none"; break;
        case Mem::NullDeref: what = "null_deref"; break;
        case Mem::DanglingDeref: what = "dangling_deref"; break;
        case Mem::FreeNull: what = "free_null"; break;
        case Mem::DoubleFree: what = "double_free"; break;
        }
        return "mem_error(" + what + ")@" + std::to_string(line);
    }
    case Kind::Leak: return "leak";
    case Kind::Bound: return "bound";
    }
    return "?";
}

namespace {

// Thrown to end the run from any depth: errors, exhausted budget, or a
// failed assume (which surfaces as Ok(0)).
struct Stop {
    RunOutcome out;
};

struct Machine {
    const CoreProgram& prog;
    std::map<std::uint32_t, HeapCell> heap;
    std::uint32_t next_loc = 1;
    std::uint64_t steps = 0;
    std::uint64_t step_bound;
    int depth_cap;

    using Env = std::map<Var, Value>;

    void tick() {
        if (++steps > step_bound) throw Stop{{RunOutcome::Kind::Bound, 0, RunOutcome::Mem::None, 0}};
    }

    [[noreturn]] static void mem_fault(RunOutcome::Mem m, int line) {
        throw Stop{{RunOutcome::Kind::MemError, 0, m, line}};
    }

    Value eval(const TermPtr& t, const Env& env) const {
        if (!t) return Value::null();
        switch (t->kind) {
        case Term::Kind::Const: return Value::of_int(t->num);
        case Term::Kind::VarRef: {
            auto it = env.find(t->var);
            if (it == env.end()) throw std::logic_error("unbound " + t->var.str());
            return it->second;
        }
        default: break;
        }
        auto num = [&](const TermPtr& s) {
            Value v = eval(s, env);
            if (v.kind != Value::Kind::Int) throw std::logic_error("pointer in arithmetic");
            return v.num;
        };
        switch (t->kind) {
        case Term::Kind::Add: return Value::of_int(num(t->a) + num(t->b));
        case Term::Kind::Neg: return Value::of_int(-num(t->a));
        case Term::Kind::Scale: return Value::of_int(t->num * num(t->a));
        case Term::Kind::Min: return Value::of_int(std::min(num(t->a), num(t->b)));
        case Term::Kind::Max: return Value::of_int(std::max(num(t->a), num(t->b)));
        default: throw std::logic_error("bad term");
        }
    }

    bool truth(const PurePtr& p, const Env& env) const {
        switch (p->kind) {
        case Pure::Kind::BoolConst: return p->value;
        case Pure::Kind::VarAtom: {
            Value v = eval(Term::ref(p->var), env);
            if (v.kind != Value::Kind::Int) throw std::logic_error("pointer as condition");
            return v.num != 0;
        }
        case Pure::Kind::Cmp: {
            Value a = eval(p->lhs, env);
            Value b = eval(p->rhs, env);
            if (a.kind != Value::Kind::Int || b.kind != Value::Kind::Int) {
                if (p->op == CmpOp::Eq) return a == b;
                if (p->op == CmpOp::Ne) return !(a == b);
                throw std::logic_error("ordered pointer comparison");
            }
            switch (p->op) {
            case CmpOp::Eq: return a.num == b.num;
            case CmpOp::Ne: return a.num != b.num;
            case CmpOp::Le: return a.num <= b.num;
            case CmpOp::Lt: return a.num < b.num;
            case CmpOp::Ge: return a.num >= b.num;
            case CmpOp::Gt: return a.num > b.num;
            }
            return false;
        }
        case Pure::Kind::EqNull: return eval(Term::ref(p->var), env).kind == Value::Kind::Null;
        case Pure::Kind::Dangling: {
            Value v = eval(Term::ref(p->var), env);
            return v.kind == Value::Kind::Loc && !heap.count(v.loc);
        }
        case Pure::Kind::Not: return !truth(p->sub[0], env);
        case Pure::Kind::And:
            for (const auto& c : p->sub)
                if (!truth(c, env)) return false;
            return true;
        case Pure::Kind::Or:
            for (const auto& c : p->sub)
                if (truth(c, env)) return true;
            return false;
        default: throw std::logic_error("condition kind not runnable");
        }
    }

    HeapCell& cell_at(const Var& base, const Env& env, int line) {
        Value v = env.at(base);
        if (v.kind == Value::Kind::Null) mem_fault(RunOutcome::Mem::NullDeref, line);
        if (v.kind != Value::Kind::Loc) throw std::logic_error("integer dereference");
        auto it = heap.find(v.loc);
        if (it == heap.end()) mem_fault(RunOutcome::Mem::DanglingDeref, line);
        return it->second;
    }

    std::vector<Value> call(const CoreProc& p, std::vector<Value> args, int depth) {
        if (depth > depth_cap) throw Stop{{RunOutcome::Kind::Bound, 0, RunOutcome::Mem::None, 0}};
        if (args.size() != p.params.size()) throw std::logic_error("arity mismatch");
        Env env;
        for (size_t i = 0; i < args.size(); ++i) env[p.params[i]] = args[i];
        auto ret = exec(p.body, env, depth);
        if (!ret) throw std::logic_error("procedure fell off the end");
        return *ret;
    }

    std::optional<std::vector<Value>> exec(const CBlock& b, Env& env, int depth) {
        for (const auto& sp : b) {
            const CStmt& s = *sp;
            tick();
            switch (s.kind) {
            case CStmt::Kind::New: {
                const DataDef* d = prog.data(s.type_name);
                if (!d) throw std::logic_error("unknown data type " + s.type_name);
                HeapCell cell;
                cell.type_name = s.type_name;
                for (size_t i = 0; i < d->fields.size(); ++i) {
                    Value init = d->fields[i].first.is_ptr() ? Value::null() : Value::of_int(0);
                    if (!s.args.empty()) init = eval(s.args[i], env);
                    cell.fields.emplace_back(d->fields[i].second, init);
                }
                heap.emplace(next_loc, std::move(cell));
                env[s.dst] = Value::of_loc(next_loc++);
                break;
            }
            case CStmt::Kind::Call: {
                const CoreProc* callee = prog.proc(s.callee);
                if (!callee) throw std::logic_error("unknown procedure " + s.callee);
                std::vector<Value> args;
                for (const auto& a : s.args) args.push_back(eval(a, env));
                std::vector<Value> rets = call(*callee, std::move(args), depth + 1);
                if (rets.size() != s.dsts.size()) throw std::logic_error("return arity");
                for (size_t i = 0; i < rets.size(); ++i) env[s.dsts[i]] = rets[i];
                break;
            }
            case CStmt::Kind::Assign: env[s.dst] = eval(s.rhs, env); break;
            case CStmt::Kind::Load: {
                HeapCell& c = cell_at(s.base, env, s.line);
                const Value* f = c.find(s.field);
                if (!f) throw std::logic_error("missing field " + s.field);
                env[s.dst] = *f;
                break;
            }
            case CStmt::Kind::Store: {
                HeapCell& c = cell_at(s.base, env, s.line);
                Value* f = c.find(s.field);
                if (!f) throw std::logic_error("missing field " + s.field);
                *f = env.at(s.src);
                break;
            }
            case CStmt::Kind::Free: {
                Value v = env.at(s.base);
                if (v.kind == Value::Kind::Null) mem_fault(RunOutcome::Mem::FreeNull, s.line);
                if (v.kind != Value::Kind::Loc) throw std::logic_error("free of integer");
                if (!heap.erase(v.loc)) mem_fault(RunOutcome::Mem::DoubleFree, s.line);
                break;
            }
            case CStmt::Kind::Assume:
                // the dangling assumption is how lowering introduces an
                // uninitialized pointer: bind it to a location that was
                // never allocated
                if (s.cond->kind == Pure::Kind::Dangling && !env.count(s.cond->var))
                    env[s.cond->var] = Value::of_loc(next_loc++);
                if (!truth(s.cond, env))
                    throw Stop{{RunOutcome::Kind::Ok, 0, RunOutcome::Mem::None, 0}};
                break;
            case CStmt::Kind::Fail:
                throw Stop{{RunOutcome::Kind::AssertError, 0, RunOutcome::Mem::None, s.line}};
            case CStmt::Kind::If: {
                const CBlock& branch = truth(s.cond, env) ? s.then_body : s.else_body;
                if (auto r = exec(branch, env, depth)) return r;
                break;
            }
            case CStmt::Kind::Return: {
                std::vector<Value> vals;
                for (const auto& r : s.rets) vals.push_back(eval(r, env));
                return vals;
            }
            }
        }
        return std::nullopt;
    }
};

} // namespace

RunOutcome interpret_bounded(const CoreProgram& prog,
                             const std::map<std::string, std::int64_t>& inputs,
                             std::uint64_t step_bound, int depth_cap) {
    const CoreProc* main_proc = prog.proc("main");
    if (!main_proc) throw std::logic_error("program has no main");
    Machine m{prog, {}, 1, 0, step_bound, depth_cap};
    std::vector<Value> args;
    for (const auto& p : main_proc->params) {
        auto it = inputs.find(p.name);
        args.push_back(Value::of_int(it == inputs.end() ? 0 : it->second));
    }
    try {
        std::vector<Value> rets = m.call(*main_proc, std::move(args), 1);
        if (rets.size() != 1 || rets[0].kind != Value::Kind::Int)
            throw std::logic_error("main must produce one integer");
        if (!m.heap.empty()) return {RunOutcome::Kind::Leak, rets[0].num, RunOutcome::Mem::None, 0};
        return {RunOutcome::Kind::Ok, rets[0].num, RunOutcome::Mem::None, 0};
    } catch (const Stop& stop) {
        return stop.out;
    }
}

} // namespace heapver
