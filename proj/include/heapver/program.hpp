#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "heapver/pure.hpp"

namespace heapver {

struct SrcType {
    enum class Kind { Int, Bool, Ptr };
    Kind kind = Kind::Int;
    std::string data_name; // for Ptr

    bool operator==(const SrcType&) const = default;
    bool is_ptr() const { return kind == Kind::Ptr; }
    std::string str() const;
};

struct DataDef {
    std::string name;
    std::vector<std::pair<SrcType, std::string>> fields;
    int line = 0;
};

// ------------------------------------------------------------ surface forms

struct SExpr;
using SExprPtr = std::shared_ptr<const SExpr>;

struct SExpr {
    enum class Kind { IntLit, BoolLit, Null, VarRef, FieldRead, BinOp, Call, New };
    Kind kind;
    std::int64_t num = 0;       // IntLit
    bool bval = false;          // BoolLit
    std::string name;           // VarRef, FieldRead field, Call callee, New type
    char op = 0;                // BinOp: + - *
    SExprPtr a, b;              // BinOp operands; FieldRead base in a
    std::vector<SExprPtr> args; // Call, New
    int line = 0;
};

struct SCond;
using SCondPtr = std::shared_ptr<const SCond>;

struct SCond {
    enum class Kind { Cmp, Truthy, Not };
    Kind kind;
    CmpOp op = CmpOp::Eq; // Cmp
    SExprPtr lhs, rhs;    // Cmp; Truthy expression in lhs
    SCondPtr sub;         // Not
    int line = 0;
};

struct SStmt;
using SStmtPtr = std::shared_ptr<const SStmt>;
using SBlock = std::vector<SStmtPtr>;

struct SStmt {
    enum class Kind {
        Decl,      // type name [= init]
        Assign,    // name = expr
        FieldWrite // base->field = expr
        ,
        If,
        While,
        Return, // single expression in programs; a tuple after loop extraction
        Free,
        Fail,   // ERROR()
        Assert, // sugar: assert(c) is if (c) {} else { ERROR() }
        Assume,
        CallMulti, // (d1, ..., dk) = callee(args); introduced by loop extraction
    };
    Kind kind;
    SrcType type;                   // Decl
    std::string name;               // Decl/Assign target, FieldWrite base, Free var
    std::string field;              // FieldWrite
    SExprPtr expr;                  // Decl init, Assign/FieldWrite rhs
    SCondPtr cond;                  // If/While/Assert/Assume
    SBlock then_body, else_body;    // If; While body in then_body
    std::vector<SExprPtr> rets;     // Return
    std::vector<std::string> dsts;  // CallMulti
    std::string callee;             // CallMulti
    std::vector<SExprPtr> args;     // CallMulti
    int line = 0;
};

struct SProc {
    std::string name;
    std::vector<std::pair<SrcType, std::string>> params;
    std::vector<SrcType> rets;          // one entry for user procedures
    std::vector<std::string> ret_names; // loop procedures: the threaded variables
    SBlock body;
    int line = 0;
};

struct SurfaceProgram {
    std::vector<DataDef> datas;
    std::vector<SProc> procs;
    std::string filename;
};

struct FrontendError : std::runtime_error {
    int line;
    FrontendError(const std::string& msg, int line);
};

SurfaceProgram parse_program(const std::string& source, const std::string& filename = "");

// --------------------------------------------------------------- core forms

struct CStmt;
using CStmtPtr = std::shared_ptr<const CStmt>;
using CBlock = std::vector<CStmtPtr>;

// Loop-free, SSA-named statements: every variable is assigned once per path,
// conditions are primitive, and memory operations sit in dedicated forms.
struct CStmt {
    enum class Kind {
        New,    // dst = new type(args)
        Call,   // (dsts) = callee(args)
        Assign, // dst = rhs
        Load,   // dst = base->field
        Store,  // base->field = src
        Free,   // free(v)
        Assume, // assume(cond): paths violating it fall away silently
        Fail,   // reached ERROR()
        If,
        Return,
    };
    Kind kind;
    Var dst;                    // New/Assign/Load
    std::vector<Var> dsts;      // Call
    std::string callee;         // Call
    std::string type_name;      // New
    std::vector<TermPtr> args;  // New/Call
    TermPtr rhs;                // Assign
    Var base, src;              // Load/Store/Free (Free uses base)
    std::string field;          // Load/Store
    PurePtr cond;               // Assume/If
    CBlock then_body, else_body;
    std::vector<TermPtr> rets; // Return
    int line = 0;
};

struct CoreProc {
    std::string name;
    std::vector<Var> params;
    std::vector<SrcType> param_types;
    std::vector<SrcType> ret_types;
    std::vector<std::string> ret_names; // loop procedures: the threaded variables
    CBlock body;
    int line = 0;
};

struct CoreProgram {
    std::vector<DataDef> datas;
    std::vector<CoreProc> procs;
    std::string filename;

    const DataDef* data(const std::string& name) const;
    const CoreProc* proc(const std::string& name) const;
};

// Rewrites every loop into a tail-recursive procedure named after the line
// of its head; the loop becomes a call that threads the modified variables.
SurfaceProgram extract_loops(SurfaceProgram prog);

// Full lowering: loop extraction, SSA renaming with join copies, and
// flattening of compound expressions into primitive statements.
CoreProgram to_core(const SurfaceProgram& prog);

} // namespace heapver
