#include <array>
#include <cstdio>
#include <functional>

#include "heapver/lia.hpp"
#include "heapver/render.hpp"
#include "heapver/solver.hpp"

namespace heapver {

namespace {

constexpr size_t kDnfCap = 4096;

// negation normal form over integer atoms; heap atoms must be gone by now
PurePtr nnf(const PurePtr& p, bool positive) {
    switch (p->kind) {
    case Pure::Kind::BoolConst: return mk::bconst(p->value == positive);
    case Pure::Kind::VarAtom:
        // boolean variables follow the 0/1 discipline
        return mk::eq(Term::ref(p->var), Term::constant(positive ? 1 : 0));
    case Pure::Kind::Cmp:
        return positive ? p : mk::cmp(negate(p->op), p->lhs, p->rhs);
    case Pure::Kind::EqNull: {
        auto z = mk::cmp(positive ? CmpOp::Eq : CmpOp::Ne, Term::ref(p->var),
                         Term::constant(0));
        return z;
    }
    case Pure::Kind::Dangling:
    case Pure::Kind::Load:
    case Pure::Kind::Store:
    case Pure::Kind::Del:
        throw std::logic_error("heap atom reached the arithmetic solver");
    case Pure::Kind::Not: return nnf(p->sub[0], !positive);
    case Pure::Kind::And:
    case Pure::Kind::Or: {
        bool conj = (p->kind == Pure::Kind::And) == positive;
        std::vector<PurePtr> parts;
        for (const auto& s : p->sub) parts.push_back(nnf(s, positive));
        return conj ? mk::conj(std::move(parts)) : mk::disj(std::move(parts));
    }
    case Pure::Kind::Exists:
        // satisfiability treats every variable as existential
        return nnf(p->sub[0], positive);
    }
    throw std::logic_error("nnf: bad kind");
}

using Cube = std::vector<PurePtr>;

void dnf(const PurePtr& p, std::vector<Cube>& out) {
    switch (p->kind) {
    case Pure::Kind::Or: {
        for (const auto& s : p->sub) dnf(s, out);
        return;
    }
    case Pure::Kind::And: {
        std::vector<Cube> acc{{}};
        for (const auto& s : p->sub) {
            std::vector<Cube> sub;
            dnf(s, sub);
            std::vector<Cube> next;
            for (const auto& a : acc)
                for (const auto& b : sub) {
                    Cube c = a;
                    c.insert(c.end(), b.begin(), b.end());
                    next.push_back(std::move(c));
                    if (next.size() > kDnfCap)
                        throw SolverLimitError("formula too disjunctive to expand");
                }
            acc = std::move(next);
        }
        out.insert(out.end(), acc.begin(), acc.end());
        if (out.size() > kDnfCap) throw SolverLimitError("formula too disjunctive to expand");
        return;
    }
    default: out.push_back({p});
    }
}

// find a min/max node anywhere under a term
TermPtr find_minmax(const TermPtr& t) {
    if (!t) return nullptr;
    if (t->kind == Term::Kind::Min || t->kind == Term::Kind::Max) return t;
    if (auto f = find_minmax(t->a)) return f;
    return find_minmax(t->b);
}

TermPtr replace_term(const TermPtr& t, const TermPtr& from, const TermPtr& to) {
    if (!t) return t;
    if (term_equal(t, from)) return to;
    switch (t->kind) {
    case Term::Kind::Const:
    case Term::Kind::VarRef: return t;
    case Term::Kind::Neg: return Term::neg(replace_term(t->a, from, to));
    case Term::Kind::Scale: return Term::scale(t->num, replace_term(t->a, from, to));
    case Term::Kind::Add:
        return Term::add(replace_term(t->a, from, to), replace_term(t->b, from, to));
    case Term::Kind::Min:
        return Term::min(replace_term(t->a, from, to), replace_term(t->b, from, to));
    case Term::Kind::Max:
        return Term::max(replace_term(t->a, from, to), replace_term(t->b, from, to));
    }
    throw std::logic_error("replace_term: bad kind");
}

// expand one cube into cubes free of min/max, splitting on which side wins
void expand_minmax(Cube cube, std::vector<Cube>& out) {
    for (size_t i = 0; i < cube.size(); ++i) {
        const auto& atom = cube[i];
        if (atom->kind != Pure::Kind::Cmp) continue;
        TermPtr mm = find_minmax(atom->lhs);
        if (!mm) mm = find_minmax(atom->rhs);
        if (!mm) continue;
        bool is_min = mm->kind == Term::Kind::Min;
        for (int side = 0; side < 2; ++side) {
            TermPtr winner = side == 0 ? mm->a : mm->b;
            TermPtr loser = side == 0 ? mm->b : mm->a;
            Cube next;
            for (const auto& c : cube) {
                if (c->kind == Pure::Kind::Cmp)
                    next.push_back(mk::cmp(c->op, replace_term(c->lhs, mm, winner),
                                           replace_term(c->rhs, mm, winner)));
                else
                    next.push_back(c);
            }
            next.push_back(is_min ? mk::cmp(CmpOp::Le, winner, loser)
                                  : mk::cmp(CmpOp::Ge, winner, loser));
            expand_minmax(std::move(next), out);
            if (out.size() > kDnfCap) throw SolverLimitError("min/max expansion too large");
        }
        return;
    }
    out.push_back(std::move(cube));
}

bool cube_sat(const Cube& cube) {
    std::vector<lia::Constraint> cs;
    for (const auto& atom : cube) {
        if (atom->kind == Pure::Kind::BoolConst) {
            if (!atom->value) return false;
            continue;
        }
        if (atom->kind != Pure::Kind::Cmp)
            throw std::logic_error("non-arithmetic atom in a solver cube");
        auto l = to_linear(atom->lhs);
        auto r = to_linear(atom->rhs);
        if (!l || !r) throw std::logic_error("nonlinear atom in a solver cube");
        LinTerm diff = *l;
        LinTerm neg = *r;
        neg *= -1;
        diff += neg; // lhs - rhs
        lia::Constraint c;
        switch (atom->op) {
        case CmpOp::Eq:
            c.kind = lia::Constraint::Kind::Eq0;
            c.expr = diff;
            break;
        case CmpOp::Ne:
            c.kind = lia::Constraint::Kind::Ne0;
            c.expr = diff;
            break;
        case CmpOp::Ge:
            c.kind = lia::Constraint::Kind::Ge0;
            c.expr = diff;
            break;
        case CmpOp::Gt:
            c.kind = lia::Constraint::Kind::Ge0;
            c.expr = diff;
            c.expr.constant -= 1;
            break;
        case CmpOp::Le:
            c.kind = lia::Constraint::Kind::Ge0;
            diff *= -1;
            c.expr = diff;
            break;
        case CmpOp::Lt:
            c.kind = lia::Constraint::Kind::Ge0;
            diff *= -1;
            c.expr = diff;
            c.expr.constant -= 1;
            break;
        }
        cs.push_back(std::move(c));
    }
    return lia::sat(cs);
}

Sat smt_decide(const std::string& command, const PurePtr& p);

} // namespace

BaseSolver::BaseSolver(SolverOptions opts) : opts_(std::move(opts)) {}

Sat BaseSolver::decide(const PurePtr& p) {
    std::string key = render(p);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    ++decided_;
    Sat result;
    if (!opts_.smt_command.empty()) {
        result = smt_decide(opts_.smt_command, p);
    } else {
        std::vector<Cube> cubes;
        dnf(nnf(p, true), cubes);
        result = Sat::Unsat;
        for (const auto& raw : cubes) {
            std::vector<Cube> expanded;
            expand_minmax(raw, expanded);
            for (const auto& cube : expanded) {
                if (cube_sat(cube)) {
                    result = Sat::Sat;
                    break;
                }
            }
            if (result == Sat::Sat) break;
        }
    }
    memo_.emplace(std::move(key), result);
    return result;
}

bool BaseSolver::heap_sat(const SymbolicHeap& sh) {
    auto norm = normalize(sh);
    if (!norm) return false;
    PurePtr p = expure(*norm);
    std::set<Var> ex(norm->ex_vars.begin(), norm->ex_vars.end());
    return decide(project(p, ex)) == Sat::Sat;
}

// ----------------------------------------------------------- external route

namespace {

void smt_term(std::string& out, const TermPtr& t) {
    switch (t->kind) {
    case Term::Kind::Const:
        if (t->num < 0)
            out += "(- " + std::to_string(-t->num) + ")";
        else
            out += std::to_string(t->num);
        return;
    case Term::Kind::VarRef: out += t->var.str(); return;
    case Term::Kind::Neg:
        out += "(- ";
        smt_term(out, t->a);
        out += ")";
        return;
    case Term::Kind::Scale:
        out += "(* ";
        if (t->num < 0)
            out += "(- " + std::to_string(-t->num) + ")";
        else
            out += std::to_string(t->num);
        out += " ";
        smt_term(out, t->a);
        out += ")";
        return;
    case Term::Kind::Add:
        out += "(+ ";
        smt_term(out, t->a);
        out += " ";
        smt_term(out, t->b);
        out += ")";
        return;
    case Term::Kind::Min:
    case Term::Kind::Max: {
        const char* op = t->kind == Term::Kind::Min ? "<=" : ">=";
        out += "(ite (" + std::string(op) + " ";
        smt_term(out, t->a);
        out += " ";
        smt_term(out, t->b);
        out += ") ";
        smt_term(out, t->a);
        out += " ";
        smt_term(out, t->b);
        out += ")";
        return;
    }
    }
}

void smt_pure(std::string& out, const PurePtr& p) {
    switch (p->kind) {
    case Pure::Kind::BoolConst: out += p->value ? "true" : "false"; return;
    case Pure::Kind::VarAtom: out += "(= " + p->var.str() + " 1)"; return;
    case Pure::Kind::Cmp: {
        const char* op = nullptr;
        bool negated = false;
        switch (p->op) {
        case CmpOp::Eq: op = "="; break;
        case CmpOp::Ne:
            op = "=";
            negated = true;
            break;
        case CmpOp::Le: op = "<="; break;
        case CmpOp::Lt: op = "<"; break;
        case CmpOp::Ge: op = ">="; break;
        case CmpOp::Gt: op = ">"; break;
        }
        if (negated) out += "(not ";
        out += "(" + std::string(op) + " ";
        smt_term(out, p->lhs);
        out += " ";
        smt_term(out, p->rhs);
        out += ")";
        if (negated) out += ")";
        return;
    }
    case Pure::Kind::EqNull: out += "(= " + p->var.str() + " 0)"; return;
    case Pure::Kind::Dangling:
    case Pure::Kind::Load:
    case Pure::Kind::Store:
    case Pure::Kind::Del:
        throw std::logic_error("heap atom in SMT serialization");
    case Pure::Kind::Not:
        out += "(not ";
        smt_pure(out, p->sub[0]);
        out += ")";
        return;
    case Pure::Kind::And:
    case Pure::Kind::Or: {
        out += p->kind == Pure::Kind::And ? "(and" : "(or";
        for (const auto& s : p->sub) {
            out += " ";
            smt_pure(out, s);
        }
        out += ")";
        return;
    }
    case Pure::Kind::Exists: {
        out += "(exists ((" + p->var.str() + " Int)) ";
        smt_pure(out, p->sub[0]);
        out += ")";
        return;
    }
    }
}

Sat smt_decide(const std::string& command, const PurePtr& p) {
    std::string script = to_smt2(p);
    char path[] = "/tmp/heapver-XXXXXX";
    int fd = mkstemp(path);
    if (fd < 0) throw std::runtime_error("cannot create solver scratch file");
    FILE* f = fdopen(fd, "w");
    fputs(script.c_str(), f);
    fclose(f);
    std::string cmd = command + " " + path + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) {
        std::remove(path);
        throw std::runtime_error("cannot run external solver");
    }
    std::array<char, 256> buf{};
    std::string answer;
    while (fgets(buf.data(), buf.size(), pipe)) answer += buf.data();
    int rc = pclose(pipe);
    std::remove(path);
    (void)rc;
    if (answer.rfind("unsat", 0) == 0) return Sat::Unsat;
    if (answer.rfind("sat", 0) == 0) return Sat::Sat;
    throw std::runtime_error("external solver answered: " + answer);
}

} // namespace

std::string to_smt2(const PurePtr& p) {
    std::set<Var> vars = free_vars(p);
    std::string out = "(set-logic LIA)\n";
    for (const auto& v : vars) out += "(declare-const " + v.str() + " Int)\n";
    out += "(assert ";
    smt_pure(out, p);
    out += ")\n(check-sat)\n";
    return out;
}

} // namespace heapver
