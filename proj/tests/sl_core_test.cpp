#include <doctest.h>

#include "heapver/render.hpp"
#include "heapver/state.hpp"

using namespace heapver;

TEST_CASE("variable rendering and parsing") {
    CHECK(Var{"i", 0}.str() == "i");
    CHECK(Var{"i", 3}.str() == "i3");
    CHECK(Var{"loop_", 11}.str() == "loop_11");
    auto t = parse_term("i1");
    REQUIRE(as_var(t).has_value());
    CHECK(*as_var(t) == Var{"i", 1});
}

TEST_CASE("term round trip and linear view") {
    auto t = parse_term("2*x + y - 3");
    CHECK(render(t) == "2*x + y - 3");
    auto lin = to_linear(t);
    REQUIRE(lin.has_value());
    CHECK(lin->coeffs.at(Var{"x", 0}) == 2);
    CHECK(lin->coeffs.at(Var{"y", 0}) == 1);
    CHECK(lin->constant == -3);
    CHECK(render(from_linear(*lin)) == "2*x + y - 3");

    auto m = parse_term("min(x, y + 1)");
    CHECK(render(m) == "min(x, y + 1)");
    CHECK(!to_linear(m).has_value());
}

TEST_CASE("disjunct round trip matches the documented shape") {
    const std::string text =
        "exists v1, v2. x->node{val: v1, next: v2} * P(v1, r)^o:0,u:1 & v1 >= 0 : [2;1]";
    SymbolicHeap sh = parse_heap(text);
    CHECK(sh.ex_vars.size() == 2);
    CHECK(sh.spatial.size() == 2);
    CHECK(sh.label == BranchLabel{2, 1});
    CHECK(render(sh) == text);
}

TEST_CASE("nonempty marker and emp round trip") {
    SymbolicHeap sh = parse_heap("emp & eps = 1 @NE : [2]");
    CHECK(sh.nonempty);
    CHECK(sh.spatial.empty());
    CHECK(render(sh) == "emp & eps = 1 @NE : [2]");
}

TEST_CASE("substitution shields bound variables") {
    // exists x. x = y, substituting x elsewhere must not touch the body
    auto p = mk::exists(Var{"x", 0}, mk::eq_var(Var{"x", 0}, Var{"y", 0}));
    auto q = subst_pure(p, {{Var{"x", 0}, Term::ref(Var{"z", 0})}});
    CHECK(pure_equal(p, q));

    // substituting into a disjunct skips entries on its existentials
    SymbolicHeap sh = parse_heap("exists r. x->node{val: i, next: r} & i != 0");
    SymbolicHeap out = subst_heap(sh, {{Var{"r", 0}, Term::ref(Var{"q", 0})},
                                       {Var{"i", 0}, Term::ref(Var{"j", 0})}});
    CHECK(render(out) == "exists r. x->node{val: j, next: r} & j != 0");

    // spatial positions hold variables, never compound terms
    CHECK_THROWS_AS(subst_heap(sh, {{Var{"i", 0}, Term::constant(7)}}), std::logic_error);

    // a replacement that would capture an existential is rejected
    CHECK_THROWS_AS(subst_heap(sh, {{Var{"x", 0}, Term::ref(Var{"r", 0})}}), std::logic_error);
}

TEST_CASE("free variables of a recursive branch") {
    SymbolicHeap sh = parse_heap(
        "exists i1, r. res->node{val: i, next: r} * sll(i1, r, eps)^o:0,u:1"
        " & i != 0 & i1 = i - 1 : [2]");
    auto fv = free_vars(sh);
    CHECK(fv == std::set<Var>{Var{"i", 0}, Var{"res", 0}, Var{"eps", 0}});
}

TEST_CASE("alpha equality ignores existential names only") {
    SymbolicHeap a = parse_heap("exists r. x->node{val: i, next: r} & i > 0");
    SymbolicHeap b = parse_heap("exists s. x->node{val: i, next: s} & i > 0");
    SymbolicHeap c = parse_heap("exists r. x->node{val: j, next: r} & j > 0");
    CHECK(alpha_equal(a, b));
    CHECK(!alpha_equal(a, c)); // j is free, not bound

    SymbolicHeap d = parse_heap("exists r. x->node{val: i, next: r} & i >= 0");
    CHECK(!alpha_equal(a, d));
}

TEST_CASE("freshening existentials avoids captured names") {
    SymbolicHeap sh = parse_heap("exists r. x->node{val: i, next: r} & r != null");
    FreshNames names;
    names.reserve(Var{"r", 0});
    SymbolicHeap out = freshen_existentials(sh, names);
    CHECK(out.ex_vars == std::vector<Var>{Var{"r", 1}});
    CHECK(render(out) == "exists r1. x->node{val: i, next: r1} & r1 != null");
    CHECK(alpha_equal(sh, out));
}

TEST_CASE("separating conjunction requires disjoint cells") {
    SymbolicHeap sh = parse_heap("x->node{val: a, next: b} * y->node{val: a, next: b}");
    ConcreteState st;
    st.stack[Var{"x", 0}] = Value::of_loc(1);
    st.stack[Var{"y", 0}] = Value::of_loc(1);
    st.stack[Var{"a", 0}] = Value::of_int(0);
    st.stack[Var{"b", 0}] = Value::null();
    st.heap[1] = HeapCell{"node", {{"val", Value::of_int(0)}, {"next", Value::null()}}};
    CHECK(!eval_base(st, sh));

    st.stack[Var{"y", 0}] = Value::of_loc(2);
    st.heap[2] = HeapCell{"node", {{"val", Value::of_int(0)}, {"next", Value::null()}}};
    CHECK(eval_base(st, sh));
}

TEST_CASE("access atoms replay in sequence order") {
    // load observes the original value, the store then overwrites it, and
    // the delete leaves the pointer dangling
    SymbolicHeap sh = parse_heap(
        "x->node{val: a, next: b} & LD(x, val, a, 0) & ST(x, val, c, 1) & DEL(x, 2)"
        " & dangl(x)");
    ConcreteState st;
    st.stack[Var{"x", 0}] = Value::of_loc(1);
    st.stack[Var{"a", 0}] = Value::of_int(5);
    st.stack[Var{"b", 0}] = Value::null();
    st.stack[Var{"c", 0}] = Value::of_int(9);
    st.heap[1] = HeapCell{"node", {{"val", Value::of_int(5)}, {"next", Value::null()}}};
    CHECK(eval_base(st, sh));

    // a load that disagrees with the cell contents fails
    st.stack[Var{"a", 0}] = Value::of_int(6);
    CHECK(!eval_base(st, sh));
}

TEST_CASE("deleted cells stop satisfying the nonempty marker") {
    SymbolicHeap sh = parse_heap("x->node{val: a, next: b} & DEL(x, 0) @NE");
    ConcreteState st;
    st.stack[Var{"x", 0}] = Value::of_loc(1);
    st.stack[Var{"a", 0}] = Value::of_int(0);
    st.stack[Var{"b", 0}] = Value::null();
    st.heap[1] = HeapCell{"node", {{"val", Value::of_int(0)}, {"next", Value::null()}}};
    CHECK(!eval_base(st, sh));

    SymbolicHeap keep = parse_heap("x->node{val: a, next: b} @NE");
    CHECK(eval_base(st, keep));
}

TEST_CASE("enumerate finds exactly the null assignment") {
    SymbolicHeap sh = parse_heap("emp & x = null");
    auto models = enumerate_models(sh, 2, 2);
    REQUIRE(models.size() == 1);
    CHECK(models[0].stack.at(Var{"x", 0}) == Value::null());
}

TEST_CASE("enumerate respects integer bounds and heap shape") {
    SymbolicHeap sh = parse_heap("x->node{val: v, next: n} & v >= 1 & n = null");
    auto models = enumerate_models(sh, 2, 2);
    // x in {l1, l2}, v in {1, 2}: four models
    CHECK(models.size() == 4);
    for (const auto& st : models) {
        CHECK(st.heap.size() == 1);
        CHECK(st.stack.at(Var{"n", 0}) == Value::null());
        CHECK(st.stack.at(Var{"v", 0}).num >= 1);
    }
}

TEST_CASE("enumerate handles dangling constraints") {
    // dangl(y) wants y allocated nowhere: y must be a location outside the
    // one cell, or the formula fails; null never dangles
    SymbolicHeap sh = parse_heap("x->node{val: v, next: n} & dangl(n) & v = 0");
    auto models = enumerate_models(sh, 0, 2);
    // x in {l1, l2}, n must be the other location
    CHECK(models.size() == 2);
    for (const auto& st : models) {
        auto x = st.stack.at(Var{"x", 0});
        auto n = st.stack.at(Var{"n", 0});
        CHECK(n.kind == Value::Kind::Loc);
        CHECK(n.loc != x.loc);
    }
}

TEST_CASE("enumerate rejects oversized spaces") {
    SymbolicHeap sh = parse_heap("emp & a + b + c + d = 0");
    CHECK_THROWS_AS(enumerate_models(sh, 100, 0, 1000), EnumLimitError);
}

TEST_CASE("system render and parse round trip") {
    const std::string text =
        "pred sll(i, res, eps) :=\n"
        "  | emp & res = null & i = 0 & eps = 0 : [1]\n"
        "  | exists i1, r. res->node{val: i, next: r} * sll(i1, r, eps)^o:0,u:1"
        " & i != 0 & i1 = i - 1 : [2]\n"
        "  inv i >= 0 & eps = 0\n"
        "  ;\n"
        "\n"
        "query sll(n, r, eps)^o:0,u:0 & eps = 1\n";
    CHCSystem sys = parse_system(text);
    REQUIRE(sys.preds.size() == 1);
    CHECK(sys.preds[0].branches.size() == 2);
    CHECK(render(sys) == text);
    CHECK(alpha_equal(sys, parse_system(render(sys))));

    // renaming an existential keeps systems alpha-equal
    CHCSystem other = parse_system(text);
    auto& branch = other.preds[0].branches[1];
    FreshNames names;
    names.reserve(Var{"i", 1});
    names.reserve(Var{"r", 0});
    branch = freshen_existentials(branch, names);
    CHECK(alpha_equal(sys, other));
}

TEST_CASE("negated dangl is an entry guard, positive dangl an exit fact") {
    // x is live at entry, loaded, then freed: the guard about entry-time
    // validity and the fact about exit-time staleness hold simultaneously
    SymbolicHeap sh = parse_heap(
        "x->node{val: a, next: b} & !dangl(x) & LD(x, val, a, 0) & DEL(x, 1)"
        " & dangl(x)");
    ConcreteState st;
    st.stack[Var{"x", 0}] = Value::of_loc(1);
    st.stack[Var{"a", 0}] = Value::of_int(5);
    st.stack[Var{"b", 0}] = Value::null();
    st.heap[1] = HeapCell{"node", {{"val", Value::of_int(5)}, {"next", Value::null()}}};
    CHECK(eval_base(st, sh));

    // an entry-dangling pointer fails the guard even without any replay
    SymbolicHeap guard = parse_heap("y->node{val: a, next: b} & !dangl(z)");
    st.stack[Var{"y", 0}] = Value::of_loc(1);
    st.stack[Var{"z", 0}] = Value::of_loc(7);
    CHECK(!eval_base(st, guard));
    st.stack[Var{"z", 0}] = Value::of_loc(1); // aliases the live cell: valid
    CHECK(eval_base(st, guard));
}
