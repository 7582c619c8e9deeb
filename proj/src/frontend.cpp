#include <cctype>

#include "heapver/program.hpp"

namespace heapver {

std::string SrcType::str() const {
    switch (kind) {
    case Kind::Int: return "int";
    case Kind::Bool: return "bool";
    case Kind::Ptr: return data_name + "*";
    }
    return "?";
}

FrontendError::FrontendError(const std::string& msg, int line)
    : std::runtime_error(msg + " (line " + std::to_string(line) + ")"), line(line) {}

const DataDef* CoreProgram::data(const std::string& name) const {
    for (const auto& d : datas)
        if (d.name == name) return &d;
    return nullptr;
}

const CoreProc* CoreProgram::proc(const std::string& name) const {
    for (const auto& p : procs)
        if (p.name == name) return &p;
    return nullptr;
}

namespace {

struct Tok {
    enum class Kind { Ident, Int, Sym, End };
    Kind kind;
    std::string text;
    std::int64_t num = 0;
    int line = 1;
};

std::vector<Tok> lex(const std::string& src) {
    std::vector<Tok> out;
    int line = 1;
    size_t i = 0;
    while (i < src.size()) {
        char c = src[i];
        if (c == '\n') {
            ++line;
            ++i;
            continue;
        }
        if (c == ' ' || c == '\t' || c == '\r') {
            ++i;
            continue;
        }
        if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
            while (i < src.size() && src[i] != '\n') ++i;
            continue;
        }
        if (c == '/' && i + 1 < src.size() && src[i + 1] == '*') {
            i += 2;
            while (i + 1 < src.size() && !(src[i] == '*' && src[i + 1] == '/')) {
                if (src[i] == '\n') ++line;
                ++i;
            }
            i += 2;
            continue;
        }
        Tok t;
        t.line = line;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t j = i;
            while (j < src.size() &&
                   (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_'))
                ++j;
            t.kind = Tok::Kind::Ident;
            t.text = src.substr(i, j - i);
            i = j;
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            size_t j = i;
            while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            t.kind = Tok::Kind::Int;
            t.text = src.substr(i, j - i);
            t.num = std::stoll(t.text);
            i = j;
        } else {
            t.kind = Tok::Kind::Sym;
            auto two = src.substr(i, 2);
            if (two == "->" || two == "==" || two == "!=" || two == "<=" || two == ">=") {
                t.text = two;
                i += 2;
            } else {
                t.text = std::string(1, c);
                i += 1;
            }
        }
        out.push_back(std::move(t));
    }
    out.push_back(Tok{Tok::Kind::End, "", 0, line});
    return out;
}

struct ProgParser {
    std::vector<Tok> toks;
    size_t pos = 0;
    SurfaceProgram prog;

    const Tok& peek(size_t k = 0) const {
        return pos + k < toks.size() ? toks[pos + k] : toks.back();
    }
    const Tok& next() {
        const Tok& t = peek();
        if (t.kind != Tok::Kind::End) ++pos;
        return t;
    }
    [[noreturn]] void fail(const std::string& msg) const {
        throw FrontendError(msg + " (got '" +
                                (peek().kind == Tok::Kind::End ? "<end>" : peek().text) + "')",
                            peek().line);
    }
    bool at_sym(const std::string& s) const {
        return peek().kind == Tok::Kind::Sym && peek().text == s;
    }
    bool at_kw(const std::string& s) const {
        return peek().kind == Tok::Kind::Ident && peek().text == s;
    }
    bool eat_sym(const std::string& s) {
        if (!at_sym(s)) return false;
        ++pos;
        return true;
    }
    void expect_sym(const std::string& s) {
        if (!eat_sym(s)) fail("expected '" + s + "'");
    }

    // user identifiers must not end in a digit so SSA suffixes stay readable
    std::string expect_name() {
        if (peek().kind != Tok::Kind::Ident) fail("expected identifier");
        const Tok& t = next();
        if (std::isdigit(static_cast<unsigned char>(t.text.back())))
            throw FrontendError("identifier '" + t.text + "' must not end in a digit", t.line);
        if (t.text == "eps" || t.text == "res" || t.text == "null")
            throw FrontendError("'" + t.text + "' is reserved", t.line);
        return t.text;
    }

    bool at_type() const {
        if (peek().kind != Tok::Kind::Ident) return false;
        const std::string& w = peek().text;
        if (w == "int" || w == "bool") return true;
        // a data name followed by '*'
        for (const auto& d : prog.datas)
            if (d.name == w) return peek(1).kind == Tok::Kind::Sym && peek(1).text == "*";
        return false;
    }

    SrcType parse_type() {
        const Tok& t = next();
        if (t.text == "int") return {SrcType::Kind::Int, ""};
        if (t.text == "bool") return {SrcType::Kind::Bool, ""};
        for (const auto& d : prog.datas)
            if (d.name == t.text) {
                expect_sym("*");
                return {SrcType::Kind::Ptr, t.text};
            }
        throw FrontendError("unknown type '" + t.text + "'", t.line);
    }

    SExprPtr mk_expr(SExpr e) { return std::make_shared<SExpr>(std::move(e)); }

    SExprPtr expr() {
        if (at_kw("new")) {
            int line = next().line;
            SExpr e;
            e.kind = SExpr::Kind::New;
            e.line = line;
            if (peek().kind != Tok::Kind::Ident) fail("expected type after new");
            e.name = next().text;
            expect_sym("(");
            if (!at_sym(")")) {
                do e.args.push_back(arith());
                while (eat_sym(","));
            }
            expect_sym(")");
            return mk_expr(std::move(e));
        }
        return arith();
    }

    SExprPtr arith() {
        SExprPtr acc = arith_mul();
        while (at_sym("+") || at_sym("-")) {
            SExpr e;
            e.kind = SExpr::Kind::BinOp;
            e.line = peek().line;
            e.op = next().text[0];
            e.a = acc;
            e.b = arith_mul();
            acc = mk_expr(std::move(e));
        }
        return acc;
    }

    SExprPtr arith_mul() {
        SExprPtr acc = postfix();
        while (at_sym("*")) {
            SExpr e;
            e.kind = SExpr::Kind::BinOp;
            e.line = peek().line;
            e.op = next().text[0];
            e.a = acc;
            e.b = postfix();
            acc = mk_expr(std::move(e));
        }
        return acc;
    }

    SExprPtr postfix() {
        SExprPtr acc = primary();
        while (at_sym("->")) {
            int line = next().line;
            SExpr e;
            e.kind = SExpr::Kind::FieldRead;
            e.line = line;
            if (peek().kind != Tok::Kind::Ident) fail("expected field name");
            e.name = next().text;
            e.a = acc;
            acc = mk_expr(std::move(e));
        }
        return acc;
    }

    SExprPtr primary() {
        const Tok& t = peek();
        if (t.kind == Tok::Kind::Int) {
            next();
            SExpr e;
            e.kind = SExpr::Kind::IntLit;
            e.num = t.num;
            e.line = t.line;
            return mk_expr(std::move(e));
        }
        if (eat_sym("-")) {
            SExpr e;
            e.kind = SExpr::Kind::BinOp;
            e.op = '-';
            e.line = t.line;
            SExpr zero;
            zero.kind = SExpr::Kind::IntLit;
            zero.num = 0;
            zero.line = t.line;
            e.a = mk_expr(std::move(zero));
            e.b = primary();
            return mk_expr(std::move(e));
        }
        if (eat_sym("(")) {
            SExprPtr inner = expr();
            expect_sym(")");
            return inner;
        }
        if (t.kind == Tok::Kind::Ident) {
            if (t.text == "null") {
                next();
                SExpr e;
                e.kind = SExpr::Kind::Null;
                e.line = t.line;
                return mk_expr(std::move(e));
            }
            if (t.text == "true" || t.text == "false") {
                next();
                SExpr e;
                e.kind = SExpr::Kind::BoolLit;
                e.bval = t.text == "true";
                e.line = t.line;
                return mk_expr(std::move(e));
            }
            // call or variable
            if (peek(1).kind == Tok::Kind::Sym && peek(1).text == "(") {
                next();
                next();
                SExpr e;
                e.kind = SExpr::Kind::Call;
                e.name = t.text;
                e.line = t.line;
                if (!at_sym(")")) {
                    do e.args.push_back(arith());
                    while (eat_sym(","));
                }
                expect_sym(")");
                return mk_expr(std::move(e));
            }
            next();
            SExpr e;
            e.kind = SExpr::Kind::VarRef;
            e.name = t.text;
            e.line = t.line;
            return mk_expr(std::move(e));
        }
        fail("expected expression");
    }

    SCondPtr cond() {
        if (eat_sym("!")) {
            SCond c;
            c.kind = SCond::Kind::Not;
            c.line = peek().line;
            if (eat_sym("(")) {
                c.sub = cond();
                expect_sym(")");
            } else {
                c.sub = cond();
            }
            return std::make_shared<SCond>(std::move(c));
        }
        SExprPtr lhs = expr();
        for (const char* ops : {"==", "!=", "<=", "<", ">=", ">"}) {
            if (peek().kind != Tok::Kind::Sym || peek().text != ops) continue;
            std::string op = next().text;
            SCond c;
            c.kind = SCond::Kind::Cmp;
            c.line = lhs->line;
            c.op = op == "==" ? CmpOp::Eq
                   : op == "!=" ? CmpOp::Ne
                   : op == "<=" ? CmpOp::Le
                   : op == "<" ? CmpOp::Lt
                   : op == ">=" ? CmpOp::Ge
                                : CmpOp::Gt;
            c.lhs = lhs;
            c.rhs = expr();
            return std::make_shared<SCond>(std::move(c));
        }
        SCond c;
        c.kind = SCond::Kind::Truthy;
        c.line = lhs->line;
        c.lhs = lhs;
        return std::make_shared<SCond>(std::move(c));
    }

    SStmtPtr mk_stmt(SStmt s) { return std::make_shared<SStmt>(std::move(s)); }

    SBlock block() {
        expect_sym("{");
        SBlock out;
        while (!at_sym("}")) out.push_back(stmt());
        expect_sym("}");
        return out;
    }

    SStmtPtr stmt() {
        int line = peek().line;
        if (at_kw("if")) {
            next();
            expect_sym("(");
            SStmt s;
            s.kind = SStmt::Kind::If;
            s.line = line;
            s.cond = cond();
            expect_sym(")");
            s.then_body = block();
            if (at_kw("else")) {
                next();
                s.else_body = block();
            }
            return mk_stmt(std::move(s));
        }
        if (at_kw("while")) {
            next();
            expect_sym("(");
            SStmt s;
            s.kind = SStmt::Kind::While;
            s.line = line;
            s.cond = cond();
            expect_sym(")");
            s.then_body = block();
            return mk_stmt(std::move(s));
        }
        if (at_kw("return")) {
            next();
            SStmt s;
            s.kind = SStmt::Kind::Return;
            s.line = line;
            s.rets.push_back(expr());
            expect_sym(";");
            return mk_stmt(std::move(s));
        }
        if (at_kw("free")) {
            next();
            expect_sym("(");
            SStmt s;
            s.kind = SStmt::Kind::Free;
            s.line = line;
            s.name = expect_name();
            expect_sym(")");
            expect_sym(";");
            return mk_stmt(std::move(s));
        }
        if (at_kw("ERROR")) {
            next();
            expect_sym("(");
            expect_sym(")");
            expect_sym(";");
            SStmt s;
            s.kind = SStmt::Kind::Fail;
            s.line = line;
            return mk_stmt(std::move(s));
        }
        if (at_kw("assert") || at_kw("assume")) {
            bool is_assert = next().text == "assert";
            expect_sym("(");
            SStmt s;
            s.kind = is_assert ? SStmt::Kind::Assert : SStmt::Kind::Assume;
            s.line = line;
            s.cond = cond();
            expect_sym(")");
            expect_sym(";");
            return mk_stmt(std::move(s));
        }
        if (at_type()) {
            SStmt s;
            s.kind = SStmt::Kind::Decl;
            s.line = line;
            s.type = parse_type();
            s.name = expect_name();
            if (eat_sym("=")) s.expr = expr();
            expect_sym(";");
            return mk_stmt(std::move(s));
        }
        // assignment or field write
        if (peek().kind == Tok::Kind::Ident) {
            std::string name = expect_name();
            if (eat_sym("->")) {
                SStmt s;
                s.kind = SStmt::Kind::FieldWrite;
                s.line = line;
                s.name = name;
                if (peek().kind != Tok::Kind::Ident) fail("expected field name");
                s.field = next().text;
                expect_sym("=");
                s.expr = expr();
                expect_sym(";");
                return mk_stmt(std::move(s));
            }
            expect_sym("=");
            SStmt s;
            s.kind = SStmt::Kind::Assign;
            s.line = line;
            s.name = name;
            s.expr = expr();
            expect_sym(";");
            return mk_stmt(std::move(s));
        }
        fail("expected statement");
    }

    void datadef() {
        int line = next().line; // 'data'
        DataDef d;
        d.line = line;
        d.name = expect_name();
        expect_sym("{");
        while (!at_sym("}")) {
            SrcType t = parse_type_allowing(d.name);
            std::string fname = expect_name();
            d.fields.emplace_back(t, fname);
            expect_sym(";");
        }
        expect_sym("}");
        eat_sym(";");
        prog.datas.push_back(std::move(d));
    }

    // field types may refer to the data type being defined
    SrcType parse_type_allowing(const std::string& self) {
        const Tok& t = peek();
        if (t.kind == Tok::Kind::Ident && t.text == self) {
            next();
            expect_sym("*");
            return {SrcType::Kind::Ptr, self};
        }
        return parse_type();
    }

    void proc() {
        SProc p;
        p.rets.push_back(parse_type());
        p.line = peek().line;
        p.name = expect_name();
        expect_sym("(");
        if (!at_sym(")")) {
            do {
                SrcType t = parse_type();
                std::string n = expect_name();
                p.params.emplace_back(t, n);
            } while (eat_sym(","));
        }
        expect_sym(")");
        p.body = block();
        prog.procs.push_back(std::move(p));
    }

    SurfaceProgram run() {
        while (peek().kind != Tok::Kind::End) {
            if (at_kw("data"))
                datadef();
            else
                proc();
        }
        return std::move(prog);
    }
};

} // namespace

SurfaceProgram parse_program(const std::string& source, const std::string& filename) {
    ProgParser p;
    p.toks = lex(source);
    SurfaceProgram prog = p.run();
    prog.filename = filename;

    // whole-program checks that do not need lowering
    std::map<std::string, const SProc*> procs;
    for (const auto& pr : prog.procs) {
        if (procs.count(pr.name)) throw FrontendError("duplicate procedure " + pr.name, pr.line);
        procs[pr.name] = &pr;
    }
    auto main_it = procs.find("main");
    if (main_it == procs.end()) throw FrontendError("program has no main", 1);
    for (const auto& [t, n] : main_it->second->params) {
        (void)n;
        if (t.kind != SrcType::Kind::Int)
            throw FrontendError("main parameters must be integers", main_it->second->line);
    }
    std::map<std::string, const DataDef*> datas;
    for (const auto& d : prog.datas) {
        if (datas.count(d.name)) throw FrontendError("duplicate data type " + d.name, d.line);
        datas[d.name] = &d;
    }
    return prog;
}

} // namespace heapver
