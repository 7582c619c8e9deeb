#include <doctest.h>

#include <fstream>
#include <sstream>

#include "heapver/chc.hpp"
#include "heapver/invariants.hpp"
#include "heapver/program.hpp"
#include "heapver/render.hpp"
#include "heapver/solver.hpp"

using namespace heapver;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CHCSystem encode_file(const std::string& name) {
    std::string path = std::string(HEAPVER_CORPUS_DIR) + "/" + name;
    auto core = to_core(parse_program(slurp(path), path));
    return encode_program(core);
}

// Encode, infer invariants, prune; the shape every consumer runs.
CHCSystem pipeline(const std::string& name, PruneReport* rep = nullptr) {
    CHCSystem sys = encode_file(name);
    BaseSolver solver;
    PruneReport r = prune_system(sys, solver);
    if (rep) *rep = r;
    return sys;
}

const PredDef& pred_of(const CHCSystem& sys, const std::string& name) {
    for (const auto& pd : sys.preds)
        if (pd.name == name) return pd;
    REQUIRE(false);
    static PredDef dummy;
    return dummy;
}

// True when `inv` implies `goal` for every assignment (the negation is
// unsatisfiable). Both formulas range over the predicate's parameters.
bool implies(const PurePtr& inv, PurePtr goal) {
    BaseSolver solver;
    auto q = mk::conj({inv, mk::negate(std::move(goal))});
    return solver.decide(q) == Sat::Unsat;
}

bool consistent_with(const PurePtr& inv, PurePtr extra) {
    BaseSolver solver;
    auto q = mk::conj({inv, std::move(extra)});
    return solver.decide(q) == Sat::Sat;
}

TermPtr v(const char* n) { return Term::ref(Var{n, 0}); }
TermPtr k(long long c) { return Term::constant(c); }

} // namespace

TEST_CASE("reference program: inferred facts entail the documented bounds") {
    CHCSystem sys = pipeline("fig2a.hc");

    const auto& sll = pred_of(sys, "sll");
    CHECK(implies(sll.invariant, mk::cmp(CmpOp::Ge, v("i"), k(0))));
    CHECK(implies(sll.invariant, mk::eq(v("eps"), k(0))));

    const auto& loop = pred_of(sys, "loop_11");
    CHECK(implies(loop.invariant, mk::cmp(CmpOp::Ge, v("eps"), k(0))));
    CHECK(implies(loop.invariant, mk::cmp(CmpOp::Le, v("eps"), k(1))));

    const auto& mn = pred_of(sys, "main");
    CHECK(implies(mn.invariant, mk::cmp(CmpOp::Ge, v("res"), k(0))));
    CHECK(implies(mn.invariant, mk::cmp(CmpOp::Le, v("res"), k(1))));
}

TEST_CASE("reference program: pruning keeps every branch and matches golden") {
    PruneReport rep;
    CHCSystem sys = pipeline("fig2a.hc", &rep);
    CHECK(rep.removed.empty());
    CHECK(rep.converged);

    auto golden = parse_system(slurp(std::string(HEAPVER_GOLDEN_DIR) + "/fig2a_inv.chc"));
    CHECK(alpha_equal(sys, golden));
    CHECK(alpha_equal(golden, sys));
}

TEST_CASE("error branches disproved by callee facts are removed") {
    PruneReport rep;
    CHCSystem sys = pipeline("rec_arith.hc", &rep);

    // count never returns a negative value, so the failed-check branch of
    // main is unreachable and gets dropped.
    const auto& cnt = pred_of(sys, "count");
    CHECK(implies(cnt.invariant, mk::cmp(CmpOp::Ge, v("res"), k(0))));
    CHECK(implies(cnt.invariant, mk::eq(v("eps"), k(0))));

    REQUIRE(rep.removed.size() == 1);
    CHECK(rep.removed[0].pred == "main");
    CHECK(rep.removed[0].label == BranchLabel{2});
    CHECK(!rep.removed[0].reason.empty());
    CHECK(rep.converged);

    for (const auto& o : pred_of(sys, "main").origins)
        CHECK(o == BranchOrigin::ProgramPath);
}

TEST_CASE("loop summaries propagate through result threading") {
    PruneReport rep;
    CHCSystem sys = pipeline("count_up.hc", &rep);

    const auto& loop = pred_of(sys, "loop_3");
    CHECK(implies(loop.invariant, mk::cmp(CmpOp::Ge, v("res"), k(10))));
    CHECK(implies(loop.invariant, mk::eq(v("eps"), k(0))));

    REQUIRE(rep.removed.size() == 1);
    CHECK(rep.removed[0].pred == "main");
}

TEST_CASE("cell-returning helper is known non-null") {
    PruneReport rep;
    CHCSystem sys = pipeline("store_roundtrip.hc", &rep);

    const auto& mk_ = pred_of(sys, "mk");
    BaseSolver solver;
    auto contra = mk::conj({mk_.invariant, mk::eq_null(Var{"res", 0})});
    CHECK(solver.decide(contra) == Sat::Unsat);

    // The null-access error branch of main is disproved by that fact.
    REQUIRE(rep.removed.size() == 1);
    CHECK(rep.removed[0].pred == "main");
    for (const auto& o : pred_of(sys, "main").origins)
        CHECK(o != BranchOrigin::NullDeref);
}

TEST_CASE("interval facts stay interval-shaped: no relational content") {
    CHCSystem sys = pipeline("bound_exhaust.hc");
    // f computes the identity on naturals, but the summary must not say so;
    // otherwise the failed-check branch would be disproved statically and
    // the deep-recursion budget path could never be exercised.
    const auto& f = pred_of(sys, "f");
    CHECK(consistent_with(f.invariant,
                          mk::conj({mk::eq(v("n"), k(3)), mk::eq(v("res"), k(5))})));
    const auto& mn = pred_of(sys, "main");
    CHECK(mn.branches.size() == 2); // nothing pruned in main
}

TEST_CASE("pure contradictions in checked branches are pruned") {
    PruneReport rep;
    CHCSystem sys = pipeline("assert_ok.hc", &rep);
    REQUIRE(rep.removed.size() == 2);
    CHECK(rep.removed[0].label == BranchLabel{1, 2});
    CHECK(rep.removed[1].label == BranchLabel{2, 2});
    CHECK(pred_of(sys, "main").branches.size() == 2);
    CHECK(implies(pred_of(sys, "main").invariant,
                  mk::cmp(CmpOp::Ge, v("res"), k(0))));
}

TEST_CASE("reachable failure branches are never pruned") {
    for (const char* name :
         {"fig2a_mutant.hc", "null_deref.hc", "use_after_free.hc", "double_free.hc",
          "free_null.hc", "leak.hc", "cond_leak.hc", "uninit_deref.hc"}) {
        CAPTURE(name);
        PruneReport rep;
        CHCSystem before = encode_file(name);
        CHCSystem after = pipeline(name, &rep);
        CHECK(rep.removed.empty());
        for (std::size_t i = 0; i < before.preds.size(); ++i)
            CHECK(before.preds[i].branches.size() == after.preds[i].branches.size());
    }
}

TEST_CASE("always-failing procedure gets an exact failure-flag summary") {
    CHCSystem sys = pipeline("use_after_free.hc");
    const auto& mn = pred_of(sys, "main");
    CHECK(implies(mn.invariant, mk::eq(v("eps"), k(1))));
}

TEST_CASE("hand-written system: branch disproved by callee summary") {
    auto sys = parse_system(
        "pred q(a, res, eps) :=\n"
        "  | emp & a >= 0 & res = a & eps = 0 : [1]\n"
        "  ;\n"
        "pred p(n, res, eps) :=\n"
        "  | exists r. q(n, r, eps)^o:0,u:0 & r < 0 & res = r : [1]\n"
        "  | exists r. q(n, r, eps)^o:0,u:0 & r >= 0 & res = r : [2]\n"
        "  ;\n"
        "query p(n, res, eps)^o:0,u:0 & eps = 1\n");
    BaseSolver solver;
    PruneReport rep = prune_system(sys, solver);

    REQUIRE(rep.removed.size() == 1);
    CHECK(rep.removed[0].pred == "p");
    CHECK(rep.removed[0].label == BranchLabel{1});
    bool mentions_guard = false;
    for (const auto& s : rep.removed[0].reason)
        if (s == "r < 0") mentions_guard = true;
    CHECK(mentions_guard);
    CHECK(pred_of(sys, "p").branches.size() == 1);

    CHECK(implies(pred_of(sys, "q").invariant,
                  mk::cmp(CmpOp::Ge, v("res"), k(0))));
    CHECK(implies(pred_of(sys, "p").invariant,
                  mk::cmp(CmpOp::Ge, v("res"), k(0))));
}

TEST_CASE("underivable predicate collapses to the empty summary") {
    auto sys = parse_system(
        "pred w(a, res, eps) :=\n"
        "  | exists b. w(b, res, eps)^o:0,u:0 & a = b + 1 : [1]\n"
        "  ;\n"
        "pred main(n, res, eps) :=\n"
        "  | emp & res = 0 & eps = 0 : [1]\n"
        "  ;\n"
        "query main(n, res, eps)^o:0,u:0 & eps = 1\n");
    BaseSolver solver;
    PruneReport rep = prune_system(sys, solver);

    CHECK(pred_of(sys, "w").branches.empty());
    const auto& winv = pred_of(sys, "w").invariant;
    REQUIRE(winv);
    CHECK(winv->kind == Pure::Kind::BoolConst);
    CHECK(!winv->value);
    CHECK(rep.removed.size() == 1);
    CHECK(pred_of(sys, "main").branches.size() == 1);
}

TEST_CASE("negated stale-pointer claims are weakened before the drop test") {
    // The middle branches of the loop predicate assert that the walked
    // pointer is a live cell; the cell lives in the caller's footprint, so
    // the claim must not be read against the branch's own (empty) heap.
    PruneReport rep;
    CHCSystem sys = pipeline("fig2a.hc", &rep);
    const auto& loop = pred_of(sys, "loop_11");
    REQUIRE(loop.branches.size() == 4);
    CHECK(loop.branches[1].label == BranchLabel{1, 1});
    CHECK(loop.branches[2].label == BranchLabel{1, 2});
}

TEST_CASE("inference is deterministic") {
    for (const char* name : {"fig2a.hc", "nested_loop.hc", "dispose_list.hc"}) {
        CAPTURE(name);
        CHCSystem a = pipeline(name);
        CHCSystem b = pipeline(name);
        CHECK(render(a) == render(b));
    }
}

TEST_CASE("inference converges on the whole corpus") {
    for (const char* name :
         {"fig2a.hc", "fig2a_mutant.hc", "null_deref.hc", "use_after_free.hc",
          "double_free.hc", "free_null.hc", "leak.hc", "cond_leak.hc",
          "uninit_deref.hc", "rec_arith.hc", "count_up.hc", "nested_loop.hc",
          "dispose_list.hc", "store_roundtrip.hc", "assert_ok.hc",
          "bound_exhaust.hc"}) {
        CAPTURE(name);
        CHCSystem sys = encode_file(name);
        CHECK(infer_invariants(sys));
        BaseSolver solver;
        PruneReport rep = prune_system(sys, solver);
        CHECK(rep.converged);
    }
}
