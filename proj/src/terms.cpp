#include "heapver/terms.hpp"

#include <stdexcept>

namespace heapver {

TermPtr Term::constant(std::int64_t v) {
    auto t = std::make_shared<Term>();
    t->kind = Kind::Const;
    t->num = v;
    return t;
}

TermPtr Term::ref(Var v) {
    auto t = std::make_shared<Term>();
    t->kind = Kind::VarRef;
    t->var = std::move(v);
    return t;
}

TermPtr Term::add(TermPtr x, TermPtr y) {
    auto t = std::make_shared<Term>();
    t->kind = Kind::Add;
    t->a = std::move(x);
    t->b = std::move(y);
    return t;
}

TermPtr Term::sub(TermPtr x, TermPtr y) { return add(std::move(x), neg(std::move(y))); }

TermPtr Term::neg(TermPtr x) {
    auto t = std::make_shared<Term>();
    t->kind = Kind::Neg;
    t->a = std::move(x);
    return t;
}

TermPtr Term::scale(std::int64_t c, TermPtr x) {
    auto t = std::make_shared<Term>();
    t->kind = Kind::Scale;
    t->num = c;
    t->a = std::move(x);
    return t;
}

TermPtr Term::min(TermPtr x, TermPtr y) {
    auto t = std::make_shared<Term>();
    t->kind = Kind::Min;
    t->a = std::move(x);
    t->b = std::move(y);
    return t;
}

TermPtr Term::max(TermPtr x, TermPtr y) {
    auto t = std::make_shared<Term>();
    t->kind = Kind::Max;
    t->a = std::move(x);
    t->b = std::move(y);
    return t;
}

bool term_equal(const TermPtr& x, const TermPtr& y) {
    if (x == y) return true;
    if (!x || !y || x->kind != y->kind) return false;
    switch (x->kind) {
    case Term::Kind::Const: return x->num == y->num;
    case Term::Kind::VarRef: return x->var == y->var;
    case Term::Kind::Neg: return term_equal(x->a, y->a);
    case Term::Kind::Scale: return x->num == y->num && term_equal(x->a, y->a);
    case Term::Kind::Add:
    case Term::Kind::Min:
    case Term::Kind::Max: return term_equal(x->a, y->a) && term_equal(x->b, y->b);
    }
    return false;
}

void collect_vars(const TermPtr& t, std::set<Var>& out) {
    if (!t) return;
    if (t->kind == Term::Kind::VarRef) out.insert(t->var);
    collect_vars(t->a, out);
    collect_vars(t->b, out);
}

TermPtr subst_term(const TermPtr& t, const std::map<Var, TermPtr>& m) {
    if (!t) return t;
    switch (t->kind) {
    case Term::Kind::Const: return t;
    case Term::Kind::VarRef: {
        auto it = m.find(t->var);
        return it == m.end() ? t : it->second;
    }
    case Term::Kind::Neg: return Term::neg(subst_term(t->a, m));
    case Term::Kind::Scale: return Term::scale(t->num, subst_term(t->a, m));
    case Term::Kind::Add: return Term::add(subst_term(t->a, m), subst_term(t->b, m));
    case Term::Kind::Min: return Term::min(subst_term(t->a, m), subst_term(t->b, m));
    case Term::Kind::Max: return Term::max(subst_term(t->a, m), subst_term(t->b, m));
    }
    throw std::logic_error("subst_term: bad kind");
}

std::optional<Var> as_var(const TermPtr& t) {
    if (t && t->kind == Term::Kind::VarRef) return t->var;
    return std::nullopt;
}

LinTerm& LinTerm::operator+=(const LinTerm& o) {
    constant += o.constant;
    for (const auto& [v, c] : o.coeffs) {
        auto it = coeffs.find(v);
        if (it == coeffs.end()) {
            if (c != 0) coeffs.emplace(v, c);
        } else {
            it->second += c;
            if (it->second == 0) coeffs.erase(it);
        }
    }
    return *this;
}

LinTerm& LinTerm::operator*=(std::int64_t c) {
    if (c == 0) {
        coeffs.clear();
        constant = 0;
        return *this;
    }
    constant *= c;
    for (auto& [v, k] : coeffs) k *= c;
    return *this;
}

std::optional<LinTerm> to_linear(const TermPtr& t) {
    if (!t) return std::nullopt;
    LinTerm out;
    switch (t->kind) {
    case Term::Kind::Const: out.constant = t->num; return out;
    case Term::Kind::VarRef: out.coeffs[t->var] = 1; return out;
    case Term::Kind::Neg: {
        auto sub = to_linear(t->a);
        if (!sub) return std::nullopt;
        *sub *= -1;
        return sub;
    }
    case Term::Kind::Scale: {
        auto sub = to_linear(t->a);
        if (!sub) return std::nullopt;
        *sub *= t->num;
        return sub;
    }
    case Term::Kind::Add: {
        auto l = to_linear(t->a);
        auto r = to_linear(t->b);
        if (!l || !r) return std::nullopt;
        *l += *r;
        return l;
    }
    case Term::Kind::Min:
    case Term::Kind::Max: return std::nullopt;
    }
    return std::nullopt;
}

TermPtr from_linear(const LinTerm& lt) {
    TermPtr acc;
    auto append = [&acc](TermPtr piece) {
        acc = acc ? Term::add(std::move(acc), std::move(piece)) : std::move(piece);
    };
    for (const auto& [v, c] : lt.coeffs) {
        if (c == 0) continue;
        if (c == 1)
            append(Term::ref(v));
        else
            append(Term::scale(c, Term::ref(v)));
    }
    if (lt.constant != 0 || !acc) append(Term::constant(lt.constant));
    return acc;
}

} // namespace heapver
