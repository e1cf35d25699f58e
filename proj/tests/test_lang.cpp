#include <catch2/catch_amalgamated.hpp>

#include "oracle.hpp"
#include "tmlab/corpus.hpp"
#include "tmlab/explore.hpp"
#include "tmlab/lang.hpp"

using namespace tmlab;
using namespace tmlab::lang;

namespace {

Program parse_corpus(const std::string& name) {
  return parse_program(corpus::lookup(name));
}

bool all_finals(const ExploreResult& r, const Program& p,
                const std::function<bool(Env&)>& pred) {
  for (const FinalState& f : r.finals) {
    Env env = f.locals;
    for (const auto& [x, v] : f.regs) env[x] = v;
    if (!pred(env)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("parser handles the privatization program") {
  Program p = parse_corpus("privatization");
  REQUIRE(p.threads.size() == 2);
  CHECK(p.threads[0].name == "t1");
  CHECK(p.threads[1].name == "t2");
  CHECK(p.init.at("priv") == 0);
  CHECK(p.init.at("x") == 0);
  CHECK(p.regs == std::set<std::string>{"priv", "x"});
  REQUIRE(p.post.has_value());
  CHECK(p.local_thread.at("l1") == 0);
  CHECK(p.local_thread.at("l2") == 1);
  CHECK(p.local_thread.at("l3") == 1);

  // The whole corpus parses.
  for (const auto& [name, src] : corpus::programs()) {
    Program q = parse_program(src);
    CHECK(!q.threads.empty());
    CHECK(q.post.has_value());
  }
}

TEST_CASE("parser rejects malformed programs") {
  CHECK_THROWS_AS(
      parse_program("thread t { l = atomic { k = atomic { x.write(1); }; }; }"),
      SyntaxError);
  CHECK_THROWS_AS(
      parse_program("thread a { l = 1; } thread b { m = l + 1; }"),
      SyntaxError);
  CHECK_THROWS_AS(parse_program("init x = 0; thread a { x = 1; }"),
                  SyntaxError);
  CHECK_THROWS_AS(parse_program("thread a { l = x; }  init x = 0;"),
                  SyntaxError);
  CHECK_THROWS_AS(parse_program("garbage"), SyntaxError);
}

TEST_CASE("expression evaluation and precedence") {
  Program p = parse_program(
      "thread t { a = -3 + 2 * 2; b = !(a == 1); c = 1 < 2 && 2 <= 2; }");
  ExploreResult r = explore_atomic(p, Bounds{});
  REQUIRE(r.finals.size() == 1);
  const FinalState& f = *r.finals.begin();
  CHECK(f.locals.at("a") == 1);
  CHECK(f.locals.at("b") == 0);
  CHECK(f.locals.at("c") == 1);
}

TEST_CASE("atomic exploration of a single block") {
  Program p =
      parse_program("init x = 0; thread t { l = atomic { x.write(1); }; }");
  ExploreResult r = explore_atomic(p, Bounds{});
  CHECK_FALSE(r.partial);
  // Commit and the three abort points (begin, the write, trycommit).
  CHECK(r.traces.size() == 4);
  REQUIRE(r.finals.size() == 2);
  CHECK(all_finals(r, p, [](Env& e) {
    return (e["l"] == kCommittedValue && e["x"] == 1) ||
           (e["l"] == kAbortedValue && e["x"] == 0);
  }));
}

TEST_CASE("aborted blocks roll back locals") {
  Program p = parse_program(
      "init x = 0; thread t { a = 5; l = atomic { a = 7; x.write(1); }; }");
  ExploreResult r = explore_atomic(p, Bounds{});
  CHECK(all_finals(r, p, [](Env& e) {
    return (e["l"] == kCommittedValue && e["a"] == 7 && e["x"] == 1) ||
           (e["l"] == kAbortedValue && e["a"] == 5 && e["x"] == 0);
  }));
}

TEST_CASE("strongly atomic postconditions hold for the corpus") {
  for (const auto& [name, src] : corpus::programs()) {
    INFO(name);
    Program p = parse_program(src);
    ExploreResult r = explore_atomic(p, Bounds{});
    PostcondResult pc = check_postcondition(r, p);
    CHECK(pc.ok);
  }
}

TEST_CASE("transactional race detection on programs") {
  CHECK(tdrf_program(parse_corpus("privatization"), Bounds{}).ok);
  CHECK(tdrf_program(parse_corpus("publication"), Bounds{}).ok);
  CHECK(tdrf_program(parse_corpus("agreement"), Bounds{}).ok);
  CHECK(tdrf_program(parse_corpus("proxy"), Bounds{}).ok);
  CHECK(tdrf_program(parse_corpus("privatization-read"), Bounds{}).ok);

  TdrfProgramResult rr = tdrf_program(parse_corpus("race"), Bounds{});
  CHECK_FALSE(rr.ok);
  REQUIRE(rr.racy.has_value());
  CHECK_FALSE(tdrf(*rr.racy).ok);
}

TEST_CASE("machine exploration: torn transactional writes under plain tl2") {
  Program p = parse_corpus("race");
  ExploreResult atom = explore_atomic(p, Bounds{});
  CHECK(check_postcondition(atom, p).ok);

  ExploreResult torn = explore(p, Alg::PlainTl2, Bounds{});
  PostcondResult pc = check_postcondition(torn, p);
  CHECK_FALSE(pc.ok);
  REQUIRE(pc.failing.has_value());
  CHECK(pc.failing->locals.at("l1") == 1);
  CHECK(pc.failing->locals.at("l2") == 0);

  // The single-step commit of the global-lock machine cannot tear.
  ExploreResult gl = explore(p, Alg::GlobalLock, Bounds{});
  CHECK(check_postcondition(gl, p).ok);
}

TEST_CASE("machine exploration: privatization idiom") {
  Program p = parse_corpus("privatization");
  CHECK_FALSE(check_postcondition(explore(p, Alg::PlainTl2, Bounds{}), p).ok);
  CHECK(check_postcondition(explore(p, Alg::FencedTl2, Bounds{}), p).ok);
  CHECK(check_postcondition(explore(p, Alg::TwoPl, Bounds{}), p).ok);
  CHECK(check_postcondition(explore(p, Alg::GlobalLock, Bounds{}), p).ok);
}

TEST_CASE("machine exploration: privatization with a direct read") {
  Program p = parse_corpus("privatization-read");
  CHECK_FALSE(check_postcondition(explore(p, Alg::PlainTl2, Bounds{}), p).ok);
  CHECK(check_postcondition(explore(p, Alg::FencedTl2, Bounds{}), p).ok);
}

TEST_CASE("machine exploration: publication idiom") {
  Program p = parse_corpus("publication");
  CHECK(check_postcondition(explore(p, Alg::FencedTl2, Bounds{}), p).ok);
  CHECK(check_postcondition(explore(p, Alg::TwoPl, Bounds{}), p).ok);
}

TEST_CASE("operational traces refine the strongly atomic semantics") {
  for (const char* name : {"privatization", "publication"}) {
    INFO(name);
    Program p = parse_corpus(name);
    ExploreResult atom = explore_atomic(p, Bounds{});
    ExploreResult mech = explore(p, Alg::FencedTl2, Bounds{});
    RefinesResult rr = refines(mech.traces, atom.traces);
    CHECK(rr.ok);
  }
  // A strongly atomic machine refines even on the racy program.
  Program p = parse_corpus("race");
  RefinesResult rr = refines(explore(p, Alg::GlobalLock, Bounds{}).traces,
                             explore_atomic(p, Bounds{}).traces);
  CHECK(rr.ok);
  // ...while plain TL2 does not: the torn trace has no atomic counterpart.
  RefinesResult bad = refines(explore(p, Alg::PlainTl2, Bounds{}).traces,
                              explore_atomic(p, Bounds{}).traces);
  CHECK_FALSE(bad.ok);
  CHECK(bad.unmatched.has_value());
}

TEST_CASE("observational equivalence keys") {
  auto act = [](ActionId id, ThreadId t, Kind k, std::string reg = "",
                Value v = 0) {
    Action a;
    a.id = id;
    a.thread = t;
    a.kind = k;
    a.reg = std::move(reg);
    a.value = v;
    return a;
  };
  // Direct accesses by different threads: order is observable.
  Trace a, b;
  a.actions = {act(1, 1, Kind::Write, "x", 1), act(2, 1, Kind::RetUnit),
               act(3, 2, Kind::Write, "y", 2), act(4, 2, Kind::RetUnit)};
  b.actions = {act(1, 2, Kind::Write, "y", 2), act(2, 2, Kind::RetUnit),
               act(3, 1, Kind::Write, "x", 1), act(4, 1, Kind::RetUnit)};
  CHECK(obs_equiv(a, a));
  CHECK_FALSE(obs_equiv(a, b));

  // Swapping whole transactions of different threads is not observable.
  Trace c, d;
  c.actions = {act(1, 1, Kind::BeginTx), act(2, 1, Kind::Ok),
               act(3, 1, Kind::Write, "x", 1), act(4, 1, Kind::RetUnit),
               act(5, 1, Kind::TryCommit), act(6, 1, Kind::Committed),
               act(7, 2, Kind::BeginTx), act(8, 2, Kind::Ok),
               act(9, 2, Kind::Write, "y", 2), act(10, 2, Kind::RetUnit),
               act(11, 2, Kind::TryCommit), act(12, 2, Kind::Committed)};
  d.actions = {act(1, 2, Kind::BeginTx), act(2, 2, Kind::Ok),
               act(3, 2, Kind::Write, "y", 2), act(4, 2, Kind::RetUnit),
               act(5, 2, Kind::TryCommit), act(6, 2, Kind::Committed),
               act(7, 1, Kind::BeginTx), act(8, 1, Kind::Ok),
               act(9, 1, Kind::Write, "x", 1), act(10, 1, Kind::RetUnit),
               act(11, 1, Kind::TryCommit), act(12, 1, Kind::Committed)};
  CHECK(obs_equiv(c, d));

  // Write-backs are internal and invisible to the key.
  Trace e = c;
  Action wb = act(13, 1, Kind::Wb, "x", 1);
  e.actions.insert(e.actions.begin() + 5, wb);
  CHECK(obs_equiv(c, e));
}

TEST_CASE("generate-and-filter oracle agrees with atomic exploration") {
  const char* micro[] = {
      "init x = 0;"
      "thread a { l = atomic { x.write(1); }; }"
      "thread b { k = x.read(); }",

      "init x = 0;"
      "thread a { l = atomic { x.write(1); }; }"
      "thread b { k = atomic { x.write(2); m = x.read(); }; }",

      "init x = 0; init y = 0;"
      "thread a { x.write(1); }"
      "thread b { r = x.read(); if (r == 1) { y.write(5); } }",

      "init x = 3;"
      "thread a { l = atomic { u = x.read(); x.write(7); }; }"
      "thread b { k = x.read(); x.write(9); }",
  };
  for (const char* src : micro) {
    INFO(src);
    Program p = parse_program(src);
    ExploreResult r = explore_atomic(p, Bounds{});
    REQUIRE_FALSE(r.partial);
    test::OracleResult o = test::oracle_atomic(p);
    std::set<std::string> keys;
    for (const Trace& t : r.traces) keys.insert(obs_key(t));
    CHECK(keys == o.trace_keys);
    CHECK(r.finals == o.finals);
    CHECK(o.candidates > 0);
  }
}
