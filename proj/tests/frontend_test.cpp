#include <doctest.h>

#include "heapver/interp.hpp"
#include "heapver/program.hpp"

using namespace heapver;

namespace {

const char* kListWalk = R"(
data node { int val; node* next; }

node* sll(int n) {
  if (n <= 0) {
    return null;
  } else {
    node* t = sll(n - 1);
    node* c = new node(n, t);
    return c;
  }
}

int main(int n) {
  node* x = sll(n);
  while (x != null) {
    node* tmp = x;
    x = x->next;
    free(tmp);
  }
  return 0;
}
)";

CoreProgram core_of(const char* src) { return to_core(parse_program(src, "test.hc")); }

const CoreProc& proc_named(const CoreProgram& p, const std::string& name) {
    const CoreProc* pr = p.proc(name);
    REQUIRE(pr != nullptr);
    return *pr;
}

RunOutcome run(const char* src, std::map<std::string, std::int64_t> inputs) {
    return interpret_bounded(core_of(src), inputs);
}

} // namespace

TEST_CASE("parser round-trips a list walker") {
    SurfaceProgram p = parse_program(kListWalk, "walk.hc");
    CHECK(p.datas.size() == 1);
    CHECK(p.datas[0].fields.size() == 2);
    CHECK(p.procs.size() == 2);
    CHECK(p.procs[1].name == "main");
    CHECK(p.procs[1].params.size() == 1);
}

TEST_CASE("parser rejects malformed programs") {
    CHECK_THROWS_AS(parse_program("int main() { return 0 }"), FrontendError);
    // no main
    CHECK_THROWS_AS(parse_program("int f() { return 0; }"), FrontendError);
    // main must take integers
    CHECK_THROWS_AS(parse_program("data n { int v; }\nint main(n* p) { return 0; }"),
                    FrontendError);
    // identifiers may not end in a digit (versions would collide)
    CHECK_THROWS_AS(parse_program("int main(int x1) { return x1; }"), FrontendError);
    CHECK_THROWS_AS(parse_program("int main(int res) { return res; }"), FrontendError);
    CHECK_THROWS_AS(parse_program("int main(int eps) { return eps; }"), FrontendError);
}

TEST_CASE("loops become tail-recursive procedures named by line") {
    SurfaceProgram p = extract_loops(parse_program(kListWalk, "walk.hc"));
    REQUIRE(p.procs.size() == 3);
    const SProc& loop = p.procs[2];
    CHECK(loop.name == "loop_16"); // the while sits on line 16 of the source
    // x is read by the condition and written in the body: in and out
    REQUIRE(loop.params.size() == 1);
    CHECK(loop.params[0].second == "x");
    REQUIRE(loop.rets.size() == 1);
    CHECK(loop.rets[0].is_ptr());
    // body: if (cond) { body; tail call; return } else { return }
    REQUIRE(loop.body.size() == 1);
    const SStmt& branch = *loop.body[0];
    CHECK(branch.kind == SStmt::Kind::If);
    CHECK(branch.then_body.back()->kind == SStmt::Kind::Return);
    CHECK(branch.then_body[branch.then_body.size() - 2]->kind == SStmt::Kind::CallMulti);
    REQUIRE(branch.else_body.size() == 1);
    CHECK(branch.else_body[0]->kind == SStmt::Kind::Return);

    // the call site threads x through the loop procedure
    const SProc& main_proc = p.procs[1];
    bool saw_call = false;
    for (const auto& s : main_proc.body)
        if (s->kind == SStmt::Kind::CallMulti && s->callee == "loop_16") saw_call = true;
    CHECK(saw_call);
}

TEST_CASE("lowering produces deterministic single-assignment names") {
    CoreProgram p = core_of(R"(
int main(int n) {
  int i = n;
  if (i < 0) {
    i = 0 - i;
  } else {
    i = i + 1;
  }
  return i;
}
)");
    const CoreProc& m = proc_named(p, "main");
    REQUIRE(m.params.size() == 1);
    CHECK(m.params[0].str() == "n");
    // i enters at version 0, each branch binds its own version, and the
    // join introduces a copy target shared by both branches
    REQUIRE(m.body.size() >= 2);
    const CStmt& branch = *m.body[1];
    REQUIRE(branch.kind == CStmt::Kind::If);
    REQUIRE(branch.then_body.size() == 2);
    CHECK(branch.then_body[0]->dst.str() == "i1");
    CHECK(branch.then_body[1]->dst.str() == "i3");
    CHECK(branch.else_body[0]->dst.str() == "i2");
    CHECK(branch.else_body[1]->dst.str() == "i3");
    const CStmt& ret = *m.body[2];
    REQUIRE(ret.kind == CStmt::Kind::Return);
    REQUIRE(ret.rets.size() == 1);
    CHECK(as_var(ret.rets[0]).has_value());
    CHECK(as_var(ret.rets[0])->str() == "i3");
}

TEST_CASE("field reads hoist into load statements before the branch") {
    CoreProgram p = core_of(R"(
data node { int val; node* next; }
int main(int n) {
  node* x = new node(n, null);
  if (x->val < 0) {
    free(x);
    return 1;
  } else {
    free(x);
    return 0;
  }
}
)");
    const CoreProc& m = proc_named(p, "main");
    // new, load, if
    REQUIRE(m.body.size() == 3);
    CHECK(m.body[0]->kind == CStmt::Kind::New);
    CHECK(m.body[1]->kind == CStmt::Kind::Load);
    CHECK(m.body[1]->dst.str() == "v1");
    CHECK(m.body[2]->kind == CStmt::Kind::If);
}

TEST_CASE("lowering rejects bad reads and shapes") {
    // read of an uninitialized integer
    CHECK_THROWS_AS(core_of("int main(int n) { int v; return v; }"), FrontendError);
    // fall off the end
    CHECK_THROWS_AS(core_of("int main(int n) { int v = 0; }"), FrontendError);
    // redeclaration
    CHECK_THROWS_AS(core_of("int main(int n) { int v = 0; int v = 1; return v; }"),
                    FrontendError);
    // nonlinear arithmetic
    CHECK_THROWS_AS(core_of("int main(int n) { return n * n; }"), FrontendError);
    // pointer arithmetic
    CHECK_THROWS_AS(core_of(R"(
data node { int val; node* next; }
int main(int n) { node* x = new node(n, null); return x + 1; }
)"),
                    FrontendError);
    // statements after return
    CHECK_THROWS_AS(core_of("int main(int n) { return 0; return 1; }"), FrontendError);
}

TEST_CASE("interpreter runs arithmetic and branches") {
    const char* src = R"(
int main(int n) {
  int i = n;
  if (i < 0) {
    i = 0 - i;
  } else {
    i = i + 1;
  }
  return i;
}
)";
    CHECK(run(src, {{"n", -3}}) == RunOutcome{RunOutcome::Kind::Ok, 3, RunOutcome::Mem::None, 0});
    CHECK(run(src, {{"n", 4}}) == RunOutcome{RunOutcome::Kind::Ok, 5, RunOutcome::Mem::None, 0});
}

TEST_CASE("interpreter covers the memory fault kinds") {
    CHECK(run(R"(
data node { int val; node* next; }
int main(int n) {
  node* x = null;
  int v = x->val;
  return v;
}
)",
              {})
              .mem == RunOutcome::Mem::NullDeref);

    CHECK(run(R"(
data node { int val; node* next; }
int main(int n) {
  node* x = new node(1, null);
  free(x);
  int v = x->val;
  return v;
}
)",
              {})
              .mem == RunOutcome::Mem::DanglingDeref);

    CHECK(run(R"(
data node { int val; node* next; }
int main(int n) {
  node* x = null;
  free(x);
  return 0;
}
)",
              {})
              .mem == RunOutcome::Mem::FreeNull);

    CHECK(run(R"(
data node { int val; node* next; }
int main(int n) {
  node* x = new node(1, null);
  free(x);
  free(x);
  return 0;
}
)",
              {})
              .mem == RunOutcome::Mem::DoubleFree);

    // an uninitialized pointer dangles at runtime too
    CHECK(run(R"(
data node { int val; node* next; }
int main(int n) {
  node* x;
  int v = x->val;
  return v;
}
)",
              {})
              .mem == RunOutcome::Mem::DanglingDeref);
}

TEST_CASE("interpreter reports leaks, assertion failures and assume stops") {
    CHECK(run(R"(
data node { int val; node* next; }
int main(int n) {
  node* x = new node(n, null);
  return 0;
}
)",
              {{"n", 1}})
              .kind == RunOutcome::Kind::Leak);

    RunOutcome bad = run("int main(int n) { assert(n < 5); return n; }", {{"n", 9}});
    CHECK(bad.kind == RunOutcome::Kind::AssertError);
    CHECK(run("int main(int n) { assert(n < 5); return n; }", {{"n", 2}}).value == 2);

    RunOutcome stopped = run("int main(int n) { assume(n < 0); return 7; }", {{"n", 3}});
    CHECK(stopped == RunOutcome{RunOutcome::Kind::Ok, 0, RunOutcome::Mem::None, 0});
}

TEST_CASE("interpreter walks and frees a built list") {
    CHECK(run(kListWalk, {{"n", 5}}) ==
          RunOutcome{RunOutcome::Kind::Ok, 0, RunOutcome::Mem::None, 0});
    CHECK(run(kListWalk, {{"n", 0}}) ==
          RunOutcome{RunOutcome::Kind::Ok, 0, RunOutcome::Mem::None, 0});
    CHECK(run(kListWalk, {{"n", -2}}) ==
          RunOutcome{RunOutcome::Kind::Ok, 0, RunOutcome::Mem::None, 0});
}

TEST_CASE("interpreter stops at the step bound") {
    // infinite loop: n never changes
    RunOutcome r = run(R"(
int main(int n) {
  int i = 0;
  while (n == n) {
    i = i + 1;
  }
  return i;
}
)",
                       {{"n", 0}});
    CHECK(r.kind == RunOutcome::Kind::Bound);
}

TEST_CASE("zero-argument allocation zero-initializes") {
    RunOutcome r = run(R"(
data node { int val; node* next; }
int main(int n) {
  node* x = new node();
  int v = x->val;
  node* t = x->next;
  free(x);
  if (t == null) {
    return v;
  } else {
    return 9;
  }
}
)",
                       {});
    CHECK(r == RunOutcome{RunOutcome::Kind::Ok, 0, RunOutcome::Mem::None, 0});
}

TEST_CASE("nested loops extract inner procedures too") {
    const char* src = R"(
int main(int n) {
  int total = 0;
  int i = 0;
  while (i < n) {
    int j = 0;
    while (j < i) {
      total = total + 1;
      j = j + 1;
    }
    i = i + 1;
  }
  return total;
}
)";
    CoreProgram p = core_of(src);
    // main, outer loop, inner loop
    CHECK(p.procs.size() == 3);
    CHECK(run(src, {{"n", 4}}).value == 6); // 0 + 1 + 2 + 3
}

TEST_CASE("conditions on loads evaluate against the hoisted temporary") {
    const char* src = R"(
data node { int val; node* next; }
int main(int n) {
  node* x = new node(n, null);
  int out = 0;
  if (x->val == 3) {
    out = 1;
  }
  free(x);
  return out;
}
)";
    CHECK(run(src, {{"n", 3}}).value == 1);
    CHECK(run(src, {{"n", 2}}).value == 0);
}
