#include <doctest.h>

#include <fstream>
#include <sstream>

#include "heapver/chc.hpp"
#include "heapver/program.hpp"

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

const PredDef& pred_of(const CHCSystem& sys, const std::string& name) {
    for (const auto& pd : sys.preds)
        if (pd.name == name) return pd;
    REQUIRE(false);
    static PredDef dummy;
    return dummy;
}

// Access-history conjuncts of a branch, in syntactic order.
std::vector<const Pure*> access_atoms(const SymbolicHeap& sh) {
    std::vector<const Pure*> out;
    for (const auto& c : sh.pure) {
        if (c->kind == Pure::Kind::Load || c->kind == Pure::Kind::Store ||
            c->kind == Pure::Kind::Del)
            out.push_back(c.get());
    }
    return out;
}

} // namespace

TEST_CASE("result slots: one unnumbered, several numbered") {
    auto one = result_slots(1);
    REQUIRE(one.size() == 1);
    CHECK(one[0] == kRes);
    auto three = result_slots(3);
    REQUIRE(three.size() == 3);
    CHECK(three[0].str() == "res1");
    CHECK(three[1].str() == "res2");
    CHECK(three[2].str() == "res3");
}

TEST_CASE("reference program matches the frozen system") {
    CHCSystem sys = encode_file("fig2a.hc");
    CHCSystem golden = parse_system(slurp(std::string(HEAPVER_GOLDEN_DIR) + "/fig2a.chc"));
    CHECK(alpha_equal(sys, golden));
    CHECK(alpha_equal(golden, sys));
}

TEST_CASE("reference program: structure of the definitions") {
    CHCSystem sys = encode_file("fig2a.hc");
    REQUIRE(sys.preds.size() == 3);
    CHECK(sys.preds[0].name == "sll");     // callees first
    CHECK(sys.preds[1].name == "loop_11"); // loop named after its source line
    CHECK(sys.preds[2].name == "main");    // entry last

    const PredDef& sll = pred_of(sys, "sll");
    REQUIRE(sll.branches.size() == 2);
    REQUIRE(sll.params.size() == 3); // i, res, eps
    CHECK(sll.params[2] == kEps);
    CHECK(sll.branches[0].label == BranchLabel{1});
    CHECK(sll.branches[1].label == BranchLabel{2});

    const PredDef& loop = pred_of(sys, "loop_11");
    REQUIRE(loop.branches.size() == 4);
    CHECK(loop.branches[0].label == BranchLabel{1});
    CHECK(loop.branches[1].label == (BranchLabel{1, 1}));
    CHECK(loop.branches[2].label == (BranchLabel{1, 2}));
    CHECK(loop.branches[3].label == BranchLabel{2});
    CHECK(loop.origins[0] == BranchOrigin::DanglingDeref);
    CHECK(loop.origins[1] == BranchOrigin::Assertion);
    CHECK(loop.origins[2] == BranchOrigin::ProgramPath);
    CHECK(loop.origins[3] == BranchOrigin::ProgramPath);
    // The null-dereference case is ruled out by the loop guard, so no such
    // branch may appear at all.
    for (auto o : loop.origins) CHECK(o != BranchOrigin::NullDeref);

    const PredDef& mn = pred_of(sys, "main");
    REQUIRE(mn.branches.size() == 2);
    CHECK(mn.origins[0] == BranchOrigin::ProgramPath);
    CHECK(mn.origins[1] == BranchOrigin::ProgramPath);

    // Query: one occurrence of main over free variables, error flag raised.
    REQUIRE(sys.query.spatial.size() == 1);
    const auto& qi = std::get<PredInst>(sys.query.spatial[0]);
    CHECK(qi.pred == "main");
    CHECK(qi.args.size() == 3);
    CHECK(qi.args.back() == kEps);
    CHECK(qi.order == 0);
    CHECK(qi.unfold == 0);
    CHECK(sys.query.ex_vars.empty());
    REQUIRE(sys.query.pure.size() == 1);
    CHECK(render(sys.query.pure[0]) == "eps = 1");
}

TEST_CASE("access sequence numbers grow along each branch") {
    for (const char* name : {"fig2a.hc", "store_roundtrip.hc", "dispose_list.hc"}) {
        CHCSystem sys = encode_file(name);
        for (const auto& pd : sys.preds) {
            for (const auto& br : pd.branches) {
                auto atoms = access_atoms(br);
                for (std::size_t i = 1; i < atoms.size(); ++i)
                    CHECK(atoms[i - 1]->seq < atoms[i]->seq);
            }
        }
    }
}

TEST_CASE("call order numbers are distinct within a branch") {
    CHCSystem sys = encode_file("fig2a.hc");
    const PredDef& mn = pred_of(sys, "main");
    const auto& br = mn.branches[1];
    std::vector<int> orders;
    for (const auto& a : br.spatial)
        orders.push_back(std::get<PredInst>(a).order);
    REQUIRE(orders.size() == 2);
    CHECK(orders[0] == 0);
    CHECK(orders[1] == 1);
}

TEST_CASE("encoding is deterministic") {
    std::string a = render(encode_file("fig2a.hc"));
    std::string b = render(encode_file("fig2a.hc"));
    CHECK(a == b);
    std::string c = render(encode_file("nested_loop.hc"));
    std::string d = render(encode_file("nested_loop.hc"));
    CHECK(c == d);
}

TEST_CASE("lost memory at exit produces a twin error branch") {
    CHCSystem sys = encode_file("leak.hc");
    const PredDef& mn = pred_of(sys, "main");
    REQUIRE(mn.branches.size() == 2);
    CHECK_FALSE(mn.branches[0].nonempty);
    CHECK(mn.branches[1].nonempty);
    CHECK(mn.origins[1] == BranchOrigin::Leak);
    CHECK(mn.branches[1].label == BranchLabel{2});
    // Both keep the allocated cell; only the twin raises the flag.
    CHECK(mn.branches[0].spatial.size() == 1);
    CHECK(mn.branches[1].spatial.size() == 1);
    bool raised = false;
    for (const auto& c : mn.branches[1].pure)
        if (render(c) == "eps = 1") raised = true;
    CHECK(raised);
}

TEST_CASE("twin appears only on paths that still hold memory") {
    CHCSystem sys = encode_file("cond_leak.hc");
    const PredDef& mn = pred_of(sys, "main");
    REQUIRE(mn.branches.size() == 3);
    CHECK(mn.origins[0] == BranchOrigin::ProgramPath);
    CHECK(mn.origins[1] == BranchOrigin::Leak);
    CHECK(mn.branches[1].label == (BranchLabel{1, 2}));
    CHECK(mn.origins[2] == BranchOrigin::ProgramPath); // freed path, no twin
    CHECK(mn.branches[2].spatial.empty());
}

TEST_CASE("accesses on materialized cells are resolved in place") {
    CHCSystem sys = encode_file("use_after_free.hc");
    const PredDef& mn = pred_of(sys, "main");
    REQUIRE(mn.branches.size() == 1); // every run faults
    CHECK(mn.origins[0] == BranchOrigin::DanglingDeref);
    CHECK(mn.branches[0].spatial.empty());
    CHECK(access_atoms(mn.branches[0]).empty());
    CHECK(alpha_equal(sys, parse_system("pred main(n, res, eps) :=\n"
                                        "  | emp & eps = 1\n  ;\n"
                                        "query main(n, res, eps)^o:0,u:0 & eps = 1\n")));
}

TEST_CASE("dropped facts about unused locals") {
    CHCSystem sys = encode_file("uninit_deref.hc");
    const PredDef& mn = pred_of(sys, "main");
    REQUIRE(mn.branches.size() == 2);
    // The dangling marker for the uninitialized pointer carries no
    // information once the variable is existential and unused.
    CHECK(render(mn.branches[1]) == "emp & n >= 3 & eps = 1 : [2]");
    CHECK(mn.origins[1] == BranchOrigin::DanglingDeref);
}

TEST_CASE("unresolved accesses split into failure and success branches") {
    CHCSystem sys = encode_file("store_roundtrip.hc");
    const PredDef& mn = pred_of(sys, "main");
    REQUIRE(mn.branches.size() == 4);
    CHECK(mn.origins[0] == BranchOrigin::NullDeref);
    CHECK(mn.origins[1] == BranchOrigin::DanglingDeref);
    CHECK(mn.origins[2] == BranchOrigin::ProgramPath);
    CHECK(mn.origins[3] == BranchOrigin::Assertion);
    // The success branch carries the full access history exactly once.
    auto atoms = access_atoms(mn.branches[2]);
    REQUIRE(atoms.size() == 3);
    CHECK(atoms[0]->kind == Pure::Kind::Store);
    CHECK(atoms[1]->kind == Pure::Kind::Load);
    CHECK(atoms[2]->kind == Pure::Kind::Del);
    // Failure branches stop at the fault: no history after the split.
    CHECK(access_atoms(mn.branches[0]).empty());
    CHECK(access_atoms(mn.branches[1]).empty());
}

TEST_CASE("calls whose continuation only returns thread the status flag") {
    CHCSystem sys = encode_file("rec_arith.hc");
    const PredDef& cnt = pred_of(sys, "count");
    REQUIRE(cnt.branches.size() == 2);
    const auto& rec = cnt.branches[1];
    REQUIRE(rec.spatial.size() == 1);
    const auto& pi = std::get<PredInst>(rec.spatial[0]);
    CHECK(pi.args.back() == kEps); // threaded, not a fresh flag
    // No separate failure exit for the recursive call.
    for (auto o : cnt.origins) CHECK(o == BranchOrigin::ProgramPath);
}

TEST_CASE("calls to procedures that cannot fail get no failure exit") {
    CHCSystem sys = encode_file("bound_exhaust.hc");
    const PredDef& mn = pred_of(sys, "main");
    REQUIRE(mn.branches.size() == 2); // ok + failed assertion, nothing else
    CHECK(mn.origins[0] == BranchOrigin::ProgramPath);
    CHECK(mn.origins[1] == BranchOrigin::Assertion);
}

TEST_CASE("loops with several threaded variables get numbered result slots") {
    CHCSystem sys = encode_file("nested_loop.hc");
    REQUIRE(sys.preds.size() == 3);
    const PredDef& inner = sys.preds[0];
    CHECK(inner.params.size() == 6); // j, i, s, res1, res2, eps
    CHECK(inner.params[3].str() == "res1");
    CHECK(inner.params[4].str() == "res2");
    CHECK(inner.params[5] == kEps);
}

TEST_CASE("error exits pin the threaded variables") {
    CHCSystem sys = encode_file("fig2a.hc");
    const PredDef& loop = pred_of(sys, "loop_11");
    // Both failure branches fix res to the loop variable at fault time.
    for (std::size_t i : {std::size_t{0}, std::size_t{1}}) {
        bool pinned = false;
        for (const auto& c : loop.branches[i].pure)
            if (render(c) == "res = x") pinned = true;
        CHECK(pinned);
    }
}

TEST_CASE("a program without an entry procedure is rejected") {
    CoreProgram empty;
    CHECK_THROWS_AS(encode_program(empty), EncodeError);
}
