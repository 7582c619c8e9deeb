#include "heapver/render.hpp"

#include <cctype>
#include <sstream>
#include <stdexcept>

namespace heapver {

ParseError::ParseError(const std::string& msg, int line, int col)
    : std::runtime_error(msg + " at " + std::to_string(line) + ":" + std::to_string(col)),
      line(line),
      col(col) {}

// ---------------------------------------------------------------- rendering

namespace {

// true: wrap in parens when the term is not atomic
std::string render_term(const TermPtr& t, bool tight);

std::string render_atomic(const TermPtr& t) { return render_term(t, true); }

std::string render_term(const TermPtr& t, bool tight) {
    if (!t) throw std::logic_error("render: null term");
    switch (t->kind) {
    case Term::Kind::Const: return std::to_string(t->num);
    case Term::Kind::VarRef: return t->var.str();
    case Term::Kind::Neg: {
        std::string s = "-" + render_atomic(t->a);
        return tight ? "(" + s + ")" : s;
    }
    case Term::Kind::Scale: {
        std::string s = std::to_string(t->num) + "*" + render_atomic(t->a);
        return s;
    }
    case Term::Kind::Add: {
        std::string lhs = render_term(t->a, false);
        std::string rhs;
        // print x + (-y) and x + (-3) subtractively
        if (t->b->kind == Term::Kind::Neg) {
            rhs = " - " + render_atomic(t->b->a);
        } else if (t->b->kind == Term::Kind::Const && t->b->num < 0) {
            rhs = " - " + std::to_string(-t->b->num);
        } else if (t->b->kind == Term::Kind::Add) {
            rhs = " + (" + render_term(t->b, false) + ")";
        } else {
            rhs = " + " + render_term(t->b, true);
        }
        std::string s = lhs + rhs;
        return tight ? "(" + s + ")" : s;
    }
    case Term::Kind::Min:
        return "min(" + render_term(t->a, false) + ", " + render_term(t->b, false) + ")";
    case Term::Kind::Max:
        return "max(" + render_term(t->a, false) + ", " + render_term(t->b, false) + ")";
    }
    throw std::logic_error("render: bad term kind");
}

// `atom_pos` asks for parens around anything looser than a negation.
std::string render_pure(const PurePtr& p, bool atom_pos) {
    if (!p) throw std::logic_error("render: null pure");
    switch (p->kind) {
    case Pure::Kind::BoolConst: return p->value ? "true" : "false";
    case Pure::Kind::VarAtom: return p->var.str();
    case Pure::Kind::Cmp: {
        // pointer null tests keep their dedicated kind; everything that
        // renders "x = null" parses back to EqNull
        return render_term(p->lhs, false) + " " + cmp_str(p->op) + " " +
               render_term(p->rhs, false);
    }
    case Pure::Kind::EqNull: return p->var.str() + " = null";
    case Pure::Kind::Dangling: return "dangl(" + p->var.str() + ")";
    case Pure::Kind::Load:
        return "LD(" + p->base.str() + ", " + p->field + ", " + p->target.str() + ", " +
               std::to_string(p->seq) + ")";
    case Pure::Kind::Store:
        return "ST(" + p->base.str() + ", " + p->field + ", " + p->target.str() + ", " +
               std::to_string(p->seq) + ")";
    case Pure::Kind::Del:
        return "DEL(" + p->base.str() + ", " + std::to_string(p->seq) + ")";
    case Pure::Kind::Not: {
        const auto& inner = p->sub[0];
        if (inner->kind == Pure::Kind::EqNull) return inner->var.str() + " != null";
        return "!" + render_pure(inner, true);
    }
    case Pure::Kind::And: {
        std::string s;
        for (size_t i = 0; i < p->sub.size(); ++i) {
            if (i) s += " & ";
            s += render_pure(p->sub[i], true);
        }
        return atom_pos ? "(" + s + ")" : s;
    }
    case Pure::Kind::Or: {
        std::string s;
        for (size_t i = 0; i < p->sub.size(); ++i) {
            if (i) s += " | ";
            s += render_pure(p->sub[i], true);
        }
        return "(" + s + ")"; // always fenced off from disjunct-level "|"
    }
    case Pure::Kind::Exists:
        return "(exists " + p->var.str() + ". " + render_pure(p->sub[0], false) + ")";
    }
    throw std::logic_error("render: bad pure kind");
}

} // namespace

std::string render(const TermPtr& t) { return render_term(t, false); }
std::string render(const PurePtr& p) { return render_pure(p, false); }

std::string render(const HeapAtom& a) {
    if (const auto* pt = std::get_if<PointsTo>(&a)) {
        std::string s = pt->root.str() + "->" + pt->type_name + "{";
        for (size_t i = 0; i < pt->fields.size(); ++i) {
            if (i) s += ", ";
            s += pt->fields[i].first + ": " + pt->fields[i].second.str();
        }
        return s + "}";
    }
    const auto& pi = std::get<PredInst>(a);
    std::string s = pi.pred + "(";
    for (size_t i = 0; i < pi.args.size(); ++i) {
        if (i) s += ", ";
        s += pi.args[i].str();
    }
    s += ")^o:" + std::to_string(pi.order) + ",u:" + std::to_string(pi.unfold);
    return s;
}

std::string render(const SymbolicHeap& sh) {
    std::string s;
    if (!sh.ex_vars.empty()) {
        s += "exists ";
        for (size_t i = 0; i < sh.ex_vars.size(); ++i) {
            if (i) s += ", ";
            s += sh.ex_vars[i].str();
        }
        s += ". ";
    }
    if (sh.spatial.empty()) {
        s += "emp";
    } else {
        for (size_t i = 0; i < sh.spatial.size(); ++i) {
            if (i) s += " * ";
            s += render(sh.spatial[i]);
        }
    }
    for (const auto& p : sh.pure) s += " & " + render_pure(p, true);
    if (sh.nonempty) s += " @NE";
    if (!sh.label.empty()) s += " : " + label_str(sh.label);
    return s;
}

std::string render(const Formula& f) {
    std::string s;
    for (size_t i = 0; i < f.disjuncts.size(); ++i) {
        if (i) s += " | ";
        s += render(f.disjuncts[i]);
    }
    return s;
}

const char* origin_str(BranchOrigin o) {
    switch (o) {
    case BranchOrigin::ProgramPath: return "path";
    case BranchOrigin::Assertion: return "assert";
    case BranchOrigin::NullDeref: return "null-deref";
    case BranchOrigin::DanglingDeref: return "dangling-deref";
    case BranchOrigin::FreeNull: return "free-null";
    case BranchOrigin::DoubleFree: return "double-free";
    case BranchOrigin::Leak: return "leak";
    }
    return "?";
}

std::string render(const CHCSystem& sys) {
    std::ostringstream out;
    for (const auto& pd : sys.preds) {
        out << "pred " << pd.name << "(";
        for (size_t i = 0; i < pd.params.size(); ++i) {
            if (i) out << ", ";
            out << pd.params[i].str();
        }
        out << ") :=\n";
        for (const auto& br : pd.branches) out << "  | " << render(br) << "\n";
        if (pd.invariant && !(pd.invariant->kind == Pure::Kind::BoolConst && pd.invariant->value))
            out << "  inv " << render(pd.invariant) << "\n";
        out << "  ;\n\n";
    }
    out << "query " << render(sys.query) << "\n";
    return out.str();
}

// ------------------------------------------------------------------ parsing

namespace {

struct Token {
    enum class Kind { Ident, Int, Sym, End };
    Kind kind;
    std::string text;
    std::int64_t num = 0;
    int line = 1, col = 1;
};

std::vector<Token> tokenize(const std::string& text) {
    std::vector<Token> out;
    int line = 1, col = 1;
    size_t i = 0;
    auto advance = [&](size_t n) {
        for (size_t k = 0; k < n; ++k) {
            if (text[i + k] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        i += n;
    };
    while (i < text.size()) {
        char c = text[i];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            advance(1);
            continue;
        }
        if (c == '#') {
            while (i < text.size() && text[i] != '\n') advance(1);
            continue;
        }
        Token t;
        t.line = line;
        t.col = col;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t j = i;
            while (j < text.size() &&
                   (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_'))
                ++j;
            t.kind = Token::Kind::Ident;
            t.text = text.substr(i, j - i);
            advance(j - i);
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            size_t j = i;
            while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
            t.kind = Token::Kind::Int;
            t.text = text.substr(i, j - i);
            t.num = std::stoll(t.text);
            advance(j - i);
        } else {
            t.kind = Token::Kind::Sym;
            auto two = text.substr(i, 2);
            if (two == "->" || two == "!=" || two == "<=" || two == ">=" || two == ":=") {
                t.text = two;
                advance(2);
            } else if (c == '@' && text.substr(i, 3) == "@NE") {
                t.text = "@NE";
                advance(3);
            } else {
                t.text = std::string(1, c);
                advance(1);
            }
        }
        out.push_back(std::move(t));
    }
    Token end;
    end.kind = Token::Kind::End;
    end.line = line;
    end.col = col;
    out.push_back(end);
    return out;
}

struct Parser {
    std::vector<Token> toks;
    size_t pos = 0;

    const Token& peek(size_t ahead = 0) const {
        size_t k = pos + ahead;
        return k < toks.size() ? toks[k] : toks.back();
    }
    const Token& next() {
        const Token& t = peek();
        if (t.kind != Token::Kind::End) ++pos;
        return t;
    }
    [[noreturn]] void fail(const std::string& msg) const {
        const Token& t = peek();
        throw ParseError(msg + " (got '" + (t.kind == Token::Kind::End ? "<end>" : t.text) + "')",
                         t.line, t.col);
    }
    bool at_sym(const std::string& s) const {
        return peek().kind == Token::Kind::Sym && peek().text == s;
    }
    bool at_ident(const std::string& s) const {
        return peek().kind == Token::Kind::Ident && peek().text == s;
    }
    bool eat_sym(const std::string& s) {
        if (!at_sym(s)) return false;
        ++pos;
        return true;
    }
    void expect_sym(const std::string& s) {
        if (!eat_sym(s)) fail("expected '" + s + "'");
    }
    std::string expect_ident() {
        if (peek().kind != Token::Kind::Ident) fail("expected identifier");
        return next().text;
    }
    std::int64_t expect_int() {
        bool negative = eat_sym("-");
        if (peek().kind != Token::Kind::Int) fail("expected integer");
        std::int64_t v = next().num;
        return negative ? -v : v;
    }

    // An identifier ending in digits denotes a versioned variable.
    Var expect_var() {
        std::string name = expect_ident();
        size_t cut = name.size();
        while (cut > 0 && std::isdigit(static_cast<unsigned char>(name[cut - 1]))) --cut;
        if (cut == 0 || cut == name.size()) return Var{name, 0};
        return Var{name.substr(0, cut), std::stoi(name.substr(cut))};
    }

    TermPtr term() {
        TermPtr acc = term_unary();
        while (at_sym("+") || at_sym("-")) {
            bool plus = next().text == "+";
            TermPtr rhs = term_unary();
            acc = plus ? Term::add(acc, rhs) : Term::sub(acc, rhs);
        }
        return acc;
    }

    TermPtr term_unary() {
        if (eat_sym("-")) return Term::neg(term_unary());
        return term_mul();
    }

    TermPtr term_mul() {
        TermPtr acc = term_primary();
        while (at_sym("*")) {
            ++pos;
            TermPtr rhs = term_primary();
            if (acc->kind == Term::Kind::Const)
                acc = Term::scale(acc->num, rhs);
            else if (rhs->kind == Term::Kind::Const)
                acc = Term::scale(rhs->num, acc);
            else
                fail("nonlinear product");
        }
        return acc;
    }

    TermPtr term_primary() {
        if (peek().kind == Token::Kind::Int) return Term::constant(next().num);
        if (eat_sym("(")) {
            TermPtr t = term();
            expect_sym(")");
            return t;
        }
        if (at_ident("min") || at_ident("max")) {
            bool is_min = next().text == "min";
            expect_sym("(");
            TermPtr a = term();
            expect_sym(",");
            TermPtr b = term();
            expect_sym(")");
            return is_min ? Term::min(a, b) : Term::max(a, b);
        }
        if (peek().kind == Token::Kind::Ident) return Term::ref(expect_var());
        fail("expected term");
    }

    PurePtr pure_or() {
        std::vector<PurePtr> parts{pure_and()};
        while (at_sym("|")) {
            ++pos;
            parts.push_back(pure_and());
        }
        return parts.size() == 1 ? parts[0] : mk::disj(std::move(parts));
    }

    PurePtr pure_and() {
        std::vector<PurePtr> parts{pure_not()};
        while (at_sym("&")) {
            ++pos;
            parts.push_back(pure_not());
        }
        return parts.size() == 1 ? parts[0] : mk::conj(std::move(parts));
    }

    PurePtr pure_not() {
        if (eat_sym("!")) return mk::negate(pure_not());
        return pure_atom();
    }

    PurePtr pure_atom() {
        if (at_ident("true")) {
            ++pos;
            return mk::btrue();
        }
        if (at_ident("false")) {
            ++pos;
            return mk::bfalse();
        }
        if (at_ident("dangl")) {
            ++pos;
            expect_sym("(");
            Var v = expect_var();
            expect_sym(")");
            return mk::dangl(v);
        }
        if (at_ident("LD") || at_ident("ST")) {
            bool is_load = next().text == "LD";
            expect_sym("(");
            Var base = expect_var();
            expect_sym(",");
            std::string field = expect_ident();
            expect_sym(",");
            Var tgt = expect_var();
            expect_sym(",");
            int seq = static_cast<int>(expect_int());
            expect_sym(")");
            return is_load ? mk::load(base, field, tgt, seq) : mk::store(base, field, tgt, seq);
        }
        if (at_ident("DEL")) {
            ++pos;
            expect_sym("(");
            Var base = expect_var();
            expect_sym(",");
            int seq = static_cast<int>(expect_int());
            expect_sym(")");
            return mk::del(base, seq);
        }
        if (at_sym("(")) {
            ++pos;
            PurePtr p;
            if (at_ident("exists")) {
                ++pos;
                Var binder = expect_var();
                expect_sym(".");
                p = mk::exists(binder, pure_or());
            } else {
                p = pure_or();
            }
            expect_sym(")");
            return p;
        }
        // term [op term] ; a bare variable is a boolean atom
        TermPtr lhs = term();
        for (const char* ops : {"=", "!=", "<=", "<", ">=", ">"}) {
            if (!at_sym(ops)) continue;
            std::string op = next().text;
            if (at_ident("null")) {
                ++pos;
                auto v = as_var(lhs);
                if (!v) fail("null comparison needs a variable on the left");
                if (op == "=") return mk::eq_null(*v);
                if (op == "!=") return mk::ne_null(*v);
                fail("null only supports = and !=");
            }
            TermPtr rhs = term();
            CmpOp c = op == "=" ? CmpOp::Eq
                      : op == "!=" ? CmpOp::Ne
                      : op == "<=" ? CmpOp::Le
                      : op == "<" ? CmpOp::Lt
                      : op == ">=" ? CmpOp::Ge
                                   : CmpOp::Gt;
            return mk::cmp(c, lhs, rhs);
        }
        if (auto v = as_var(lhs)) return mk::var_atom(*v);
        fail("expected comparison");
    }

    HeapAtom heap_atom() {
        Var head = expect_var();
        if (eat_sym("->")) {
            PointsTo pt;
            pt.root = head;
            pt.type_name = expect_ident();
            expect_sym("{");
            if (!at_sym("}")) {
                do {
                    std::string field = expect_ident();
                    expect_sym(":");
                    pt.fields.emplace_back(field, expect_var());
                } while (eat_sym(","));
            }
            expect_sym("}");
            return pt;
        }
        PredInst pi;
        pi.pred = head.str();
        expect_sym("(");
        if (!at_sym(")")) {
            do pi.args.push_back(expect_var());
            while (eat_sym(","));
        }
        expect_sym(")");
        expect_sym("^");
        if (expect_ident() != "o") fail("expected 'o' marker");
        expect_sym(":");
        pi.order = static_cast<int>(expect_int());
        expect_sym(",");
        if (expect_ident() != "u") fail("expected 'u' marker");
        expect_sym(":");
        pi.unfold = static_cast<int>(expect_int());
        return pi;
    }

    SymbolicHeap disjunct() {
        SymbolicHeap sh;
        if (at_ident("exists")) {
            ++pos;
            do sh.ex_vars.push_back(expect_var());
            while (eat_sym(","));
            expect_sym(".");
        }
        if (at_ident("emp")) {
            ++pos;
        } else {
            sh.spatial.push_back(heap_atom());
            while (eat_sym("*")) sh.spatial.push_back(heap_atom());
        }
        while (at_sym("&")) {
            ++pos;
            sh.pure.push_back(pure_not());
        }
        if (eat_sym("@NE")) sh.nonempty = true;
        if (at_sym(":")) {
            ++pos;
            expect_sym("[");
            if (!at_sym("]")) {
                do sh.label.push_back(static_cast<int>(expect_int()));
                while (eat_sym(";"));
            }
            expect_sym("]");
        }
        return sh;
    }

    Formula formula() {
        Formula f;
        f.disjuncts.push_back(disjunct());
        while (eat_sym("|")) f.disjuncts.push_back(disjunct());
        return f;
    }

    CHCSystem system() {
        CHCSystem sys;
        while (at_ident("pred")) {
            ++pos;
            PredDef pd;
            pd.name = expect_ident();
            expect_sym("(");
            if (!at_sym(")")) {
                do pd.params.push_back(expect_var());
                while (eat_sym(","));
            }
            expect_sym(")");
            expect_sym(":=");
            while (at_sym("|")) {
                ++pos;
                pd.branches.push_back(disjunct());
                pd.origins.push_back(BranchOrigin::ProgramPath);
            }
            if (at_ident("inv")) {
                ++pos;
                pd.invariant = pure_and();
            } else {
                pd.invariant = mk::btrue();
            }
            expect_sym(";");
            sys.preds.push_back(std::move(pd));
        }
        if (!at_ident("query")) fail("expected 'query'");
        ++pos;
        sys.query = disjunct();
        return sys;
    }

    void expect_end() {
        if (peek().kind != Token::Kind::End) fail("trailing input");
    }
};

} // namespace

TermPtr parse_term(const std::string& text) {
    Parser p{tokenize(text)};
    TermPtr t = p.term();
    p.expect_end();
    return t;
}

PurePtr parse_pure(const std::string& text) {
    Parser p{tokenize(text)};
    PurePtr q = p.pure_or();
    p.expect_end();
    return q;
}

SymbolicHeap parse_heap(const std::string& text) {
    Parser p{tokenize(text)};
    SymbolicHeap sh = p.disjunct();
    p.expect_end();
    return sh;
}

Formula parse_formula(const std::string& text) {
    Parser p{tokenize(text)};
    Formula f = p.formula();
    p.expect_end();
    return f;
}

CHCSystem parse_system(const std::string& text) {
    Parser p{tokenize(text)};
    CHCSystem sys = p.system();
    p.expect_end();
    return sys;
}

bool alpha_equal(const CHCSystem& a, const CHCSystem& b) {
    if (a.preds.size() != b.preds.size()) return false;
    for (size_t i = 0; i < a.preds.size(); ++i) {
        const auto& pa = a.preds[i];
        const auto& pb = b.preds[i];
        if (pa.name != pb.name || pa.params != pb.params) return false;
        if (pa.branches.size() != pb.branches.size()) return false;
        for (size_t j = 0; j < pa.branches.size(); ++j)
            if (!alpha_equal(pa.branches[j], pb.branches[j])) return false;
        auto inv_a = pa.invariant ? render(pa.invariant) : std::string("true");
        auto inv_b = pb.invariant ? render(pb.invariant) : std::string("true");
        if (inv_a != inv_b) return false;
    }
    return alpha_equal(a.query, b.query);
}

} // namespace heapver
