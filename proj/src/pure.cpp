#include "heapver/pure.hpp"

#include <algorithm>
#include <stdexcept>

namespace heapver {

CmpOp negate(CmpOp op) {
    switch (op) {
    case CmpOp::Eq: return CmpOp::Ne;
    case CmpOp::Ne: return CmpOp::Eq;
    case CmpOp::Le: return CmpOp::Gt;
    case CmpOp::Lt: return CmpOp::Ge;
    case CmpOp::Ge: return CmpOp::Lt;
    case CmpOp::Gt: return CmpOp::Le;
    }
    throw std::logic_error("negate: bad op");
}

const char* cmp_str(CmpOp op) {
    switch (op) {
    case CmpOp::Eq: return "=";
    case CmpOp::Ne: return "!=";
    case CmpOp::Le: return "<=";
    case CmpOp::Lt: return "<";
    case CmpOp::Ge: return ">=";
    case CmpOp::Gt: return ">";
    }
    throw std::logic_error("cmp_str: bad op");
}

namespace mk {

static std::shared_ptr<Pure> node(Pure::Kind k) {
    auto p = std::make_shared<Pure>();
    p->kind = k;
    return p;
}

PurePtr btrue() {
    static const PurePtr t = bconst(true);
    return t;
}

PurePtr bfalse() {
    static const PurePtr f = bconst(false);
    return f;
}

PurePtr bconst(bool v) {
    auto p = node(Pure::Kind::BoolConst);
    p->value = v;
    return p;
}

PurePtr var_atom(Var v) {
    auto p = node(Pure::Kind::VarAtom);
    p->var = std::move(v);
    return p;
}

PurePtr cmp(CmpOp op, TermPtr l, TermPtr r) {
    auto p = node(Pure::Kind::Cmp);
    p->op = op;
    p->lhs = std::move(l);
    p->rhs = std::move(r);
    return p;
}

PurePtr eq(TermPtr l, TermPtr r) { return cmp(CmpOp::Eq, std::move(l), std::move(r)); }
PurePtr ne(TermPtr l, TermPtr r) { return cmp(CmpOp::Ne, std::move(l), std::move(r)); }
PurePtr eq_var(Var a, Var b) { return eq(Term::ref(std::move(a)), Term::ref(std::move(b))); }
PurePtr ne_var(Var a, Var b) { return ne(Term::ref(std::move(a)), Term::ref(std::move(b))); }

PurePtr eq_null(Var v) {
    auto p = node(Pure::Kind::EqNull);
    p->var = std::move(v);
    return p;
}

PurePtr ne_null(Var v) { return negate(eq_null(std::move(v))); }

PurePtr dangl(Var v) {
    auto p = node(Pure::Kind::Dangling);
    p->var = std::move(v);
    return p;
}

PurePtr not_dangl(Var v) { return negate(dangl(std::move(v))); }

PurePtr load(Var base, std::string field, Var target, int seq) {
    auto p = node(Pure::Kind::Load);
    p->base = std::move(base);
    p->field = std::move(field);
    p->target = std::move(target);
    p->seq = seq;
    return p;
}

PurePtr store(Var base, std::string field, Var source, int seq) {
    auto p = node(Pure::Kind::Store);
    p->base = std::move(base);
    p->field = std::move(field);
    p->target = std::move(source);
    p->seq = seq;
    return p;
}

PurePtr del(Var base, int seq) {
    auto p = node(Pure::Kind::Del);
    p->base = std::move(base);
    p->seq = seq;
    return p;
}

PurePtr negate(PurePtr q) {
    if (q->kind == Pure::Kind::BoolConst) return bconst(!q->value);
    if (q->kind == Pure::Kind::Not) return q->sub[0];
    if (q->kind == Pure::Kind::Cmp) return cmp(heapver::negate(q->op), q->lhs, q->rhs);
    auto p = node(Pure::Kind::Not);
    p->sub.push_back(std::move(q));
    return p;
}

PurePtr conj(std::vector<PurePtr> ps) {
    std::vector<PurePtr> flat;
    for (auto& p : ps) {
        if (!p || (p->kind == Pure::Kind::BoolConst && p->value)) continue;
        if (p->kind == Pure::Kind::BoolConst) return bfalse();
        if (p->kind == Pure::Kind::And) {
            flat.insert(flat.end(), p->sub.begin(), p->sub.end());
        } else {
            flat.push_back(std::move(p));
        }
    }
    if (flat.empty()) return btrue();
    if (flat.size() == 1) return flat[0];
    auto p = node(Pure::Kind::And);
    p->sub = std::move(flat);
    return p;
}

PurePtr disj(std::vector<PurePtr> ps) {
    std::vector<PurePtr> flat;
    for (auto& p : ps) {
        if (!p || (p->kind == Pure::Kind::BoolConst && !p->value)) continue;
        if (p->kind == Pure::Kind::BoolConst) return btrue();
        if (p->kind == Pure::Kind::Or) {
            flat.insert(flat.end(), p->sub.begin(), p->sub.end());
        } else {
            flat.push_back(std::move(p));
        }
    }
    if (flat.empty()) return bfalse();
    if (flat.size() == 1) return flat[0];
    auto p = node(Pure::Kind::Or);
    p->sub = std::move(flat);
    return p;
}

PurePtr exists(Var binder, PurePtr body) {
    auto p = node(Pure::Kind::Exists);
    p->var = std::move(binder);
    p->sub.push_back(std::move(body));
    return p;
}

} // namespace mk

bool pure_equal(const PurePtr& x, const PurePtr& y) {
    if (x == y) return true;
    if (!x || !y || x->kind != y->kind) return false;
    switch (x->kind) {
    case Pure::Kind::BoolConst: return x->value == y->value;
    case Pure::Kind::VarAtom:
    case Pure::Kind::EqNull:
    case Pure::Kind::Dangling: return x->var == y->var;
    case Pure::Kind::Cmp:
        return x->op == y->op && term_equal(x->lhs, y->lhs) && term_equal(x->rhs, y->rhs);
    case Pure::Kind::Load:
    case Pure::Kind::Store:
        return x->base == y->base && x->field == y->field && x->target == y->target &&
               x->seq == y->seq;
    case Pure::Kind::Del: return x->base == y->base && x->seq == y->seq;
    case Pure::Kind::Exists:
        return x->var == y->var && pure_equal(x->sub[0], y->sub[0]);
    case Pure::Kind::Not:
    case Pure::Kind::And:
    case Pure::Kind::Or:
        if (x->sub.size() != y->sub.size()) return false;
        for (size_t i = 0; i < x->sub.size(); ++i)
            if (!pure_equal(x->sub[i], y->sub[i])) return false;
        return true;
    }
    return false;
}

void collect_vars(const PurePtr& p, std::set<Var>& out) {
    if (!p) return;
    switch (p->kind) {
    case Pure::Kind::BoolConst: return;
    case Pure::Kind::VarAtom:
    case Pure::Kind::EqNull:
    case Pure::Kind::Dangling: out.insert(p->var); return;
    case Pure::Kind::Cmp:
        collect_vars(p->lhs, out);
        collect_vars(p->rhs, out);
        return;
    case Pure::Kind::Load:
    case Pure::Kind::Store:
        out.insert(p->base);
        out.insert(p->target);
        return;
    case Pure::Kind::Del: out.insert(p->base); return;
    case Pure::Kind::Exists: {
        std::set<Var> body;
        collect_vars(p->sub[0], body);
        body.erase(p->var);
        out.insert(body.begin(), body.end());
        return;
    }
    case Pure::Kind::Not:
    case Pure::Kind::And:
    case Pure::Kind::Or:
        for (const auto& s : p->sub) collect_vars(s, out);
        return;
    }
}

std::set<Var> free_vars(const PurePtr& p) {
    std::set<Var> out;
    collect_vars(p, out);
    return out;
}

// Looks up `v` in `m` and insists the image is again a variable; positions
// that syntactically hold a variable cannot absorb a compound term.
static Var subst_var_strict(const Var& v, const std::map<Var, TermPtr>& m) {
    auto it = m.find(v);
    if (it == m.end()) return v;
    if (auto w = as_var(it->second)) return *w;
    throw std::logic_error("substitution maps variable-only position to a compound term: " +
                           v.str());
}

PurePtr subst_pure(const PurePtr& p, const std::map<Var, TermPtr>& m) {
    if (!p || m.empty()) return p;
    switch (p->kind) {
    case Pure::Kind::BoolConst: return p;
    case Pure::Kind::VarAtom: return mk::var_atom(subst_var_strict(p->var, m));
    case Pure::Kind::Cmp: return mk::cmp(p->op, subst_term(p->lhs, m), subst_term(p->rhs, m));
    case Pure::Kind::EqNull: return mk::eq_null(subst_var_strict(p->var, m));
    case Pure::Kind::Dangling: return mk::dangl(subst_var_strict(p->var, m));
    case Pure::Kind::Load:
        return mk::load(subst_var_strict(p->base, m), p->field,
                        subst_var_strict(p->target, m), p->seq);
    case Pure::Kind::Store:
        return mk::store(subst_var_strict(p->base, m), p->field,
                         subst_var_strict(p->target, m), p->seq);
    case Pure::Kind::Del: return mk::del(subst_var_strict(p->base, m), p->seq);
    case Pure::Kind::Not: return mk::negate(subst_pure(p->sub[0], m));
    case Pure::Kind::And: {
        std::vector<PurePtr> subbed;
        subbed.reserve(p->sub.size());
        for (const auto& s : p->sub) subbed.push_back(subst_pure(s, m));
        return mk::conj(std::move(subbed));
    }
    case Pure::Kind::Or: {
        std::vector<PurePtr> subbed;
        subbed.reserve(p->sub.size());
        for (const auto& s : p->sub) subbed.push_back(subst_pure(s, m));
        return mk::disj(std::move(subbed));
    }
    case Pure::Kind::Exists: {
        auto inner = m;
        inner.erase(p->var); // binder shadows outer substitution
        for (const auto& [from, to] : inner) {
            (void)from;
            std::set<Var> range_vars;
            collect_vars(to, range_vars);
            if (range_vars.count(p->var))
                throw std::logic_error("substitution would capture binder " + p->var.str());
        }
        return mk::exists(p->var, subst_pure(p->sub[0], inner));
    }
    }
    throw std::logic_error("subst_pure: bad kind");
}

PurePtr rename_pure(const PurePtr& p, const std::map<Var, Var>& m) {
    if (!p || m.empty()) return p;
    auto ren = [&m](const Var& v) {
        auto it = m.find(v);
        return it == m.end() ? v : it->second;
    };
    std::map<Var, TermPtr> tm;
    for (const auto& [from, to] : m) tm.emplace(from, Term::ref(to));
    switch (p->kind) {
    case Pure::Kind::BoolConst: return p;
    case Pure::Kind::VarAtom: return mk::var_atom(ren(p->var));
    case Pure::Kind::Cmp: return mk::cmp(p->op, subst_term(p->lhs, tm), subst_term(p->rhs, tm));
    case Pure::Kind::EqNull: return mk::eq_null(ren(p->var));
    case Pure::Kind::Dangling: return mk::dangl(ren(p->var));
    case Pure::Kind::Load: return mk::load(ren(p->base), p->field, ren(p->target), p->seq);
    case Pure::Kind::Store: return mk::store(ren(p->base), p->field, ren(p->target), p->seq);
    case Pure::Kind::Del: return mk::del(ren(p->base), p->seq);
    case Pure::Kind::Not: return mk::negate(rename_pure(p->sub[0], m));
    case Pure::Kind::And: {
        std::vector<PurePtr> subbed;
        for (const auto& s : p->sub) subbed.push_back(rename_pure(s, m));
        return mk::conj(std::move(subbed));
    }
    case Pure::Kind::Or: {
        std::vector<PurePtr> subbed;
        for (const auto& s : p->sub) subbed.push_back(rename_pure(s, m));
        return mk::disj(std::move(subbed));
    }
    case Pure::Kind::Exists: return mk::exists(ren(p->var), rename_pure(p->sub[0], m));
    }
    throw std::logic_error("rename_pure: bad kind");
}

std::vector<PurePtr> conjuncts(const PurePtr& p) {
    std::vector<PurePtr> out;
    if (!p) return out;
    if (p->kind == Pure::Kind::And) {
        for (const auto& s : p->sub) {
            auto inner = conjuncts(s);
            out.insert(out.end(), inner.begin(), inner.end());
        }
    } else if (p->kind != Pure::Kind::BoolConst || !p->value) {
        out.push_back(p);
    }
    return out;
}

std::vector<PurePtr> conjuncts(const std::vector<PurePtr>& ps) {
    std::vector<PurePtr> out;
    for (const auto& p : ps) {
        auto inner = conjuncts(p);
        out.insert(out.end(), inner.begin(), inner.end());
    }
    return out;
}

} // namespace heapver
