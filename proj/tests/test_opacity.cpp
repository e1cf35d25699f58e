#include <catch2/catch_amalgamated.hpp>

#include "tmlab/opacity.hpp"
#include "util.hpp"

using namespace tmlab;
using tmlab::test::HB;

namespace {

std::vector<OpacityGraph> all_graphs(const History& h) {
  std::vector<OpacityGraph> out;
  enumerate_graphs(h, [&](const OpacityGraph& g) {
    out.push_back(g);
    return true;
  });
  return out;
}

History store_buffer_weak(Value rx, Value ry) {
  HB b;
  b.begintx(1).ok(1).write(1, "x", 1).retu(1);
  b.ntx_read(2, "x", rx).ntx_read(2, "y", ry);
  b.write(1, "y", 2).retu(1).trycommit(1).committed(1);
  return b.h;
}

History privatization_atomic() {
  HB b;
  b.begintx(2).ok(2).read(2, "priv").ret(2, 0).write(2, "x", 42).retu(2);
  b.trycommit(2).committed(2);
  b.begintx(1).ok(1).write(1, "priv", 1).retu(1).trycommit(1).committed(1);
  b.ntx_write(1, "x", 1);
  return b.h;
}

}  // namespace

TEST_CASE("consistency") {
  // Local read must see the transaction's own most recent write.
  HB loc;
  loc.begintx(1).ok(1).write(1, "x", 3).retu(1).read(1, "x").ret(1, 3);
  loc.trycommit(1).committed(1);
  CHECK(cons(loc.h).ok);
  loc.h.actions[5].value = 4;
  CHECK_FALSE(cons(loc.h).ok);

  HB init;
  init.ntx_read(1, "x", 0);
  CHECK(cons(init.h).ok);

  // Value written only inside a live foreign transaction is unreadable.
  HB live;
  live.begintx(1).ok(1).write(1, "x", 9).retu(1);
  live.ntx_read(2, "x", 9);
  CHECK_FALSE(cons(live.h).ok);

  // Only a transaction's last write to a register can be read from.
  HB twice;
  twice.begintx(1).ok(1).write(1, "x", 5).retu(1).write(1, "x", 7).retu(1);
  twice.trycommit(1).committed(1);
  twice.ntx_read(2, "x", 5);
  CHECK_FALSE(cons(twice.h).ok);
  twice.h.actions[9].value = 7;
  CHECK(cons(twice.h).ok);
}

TEST_CASE("graph enumeration choice points") {
  // One committed writer, one reader of its value: a single graph.
  HB one;
  one.begintx(1).ok(1).write(1, "x", 5).retu(1).trycommit(1).committed(1);
  one.ntx_read(2, "x", 5);
  auto gs = all_graphs(one.h);
  REQUIRE(gs.size() == 1);
  REQUIRE(gs[0].wr.size() == 1);
  CHECK(gs[0].verts[gs[0].wr[0].src].is_tx);
  CHECK(gs[0].ww.empty());  // singleton writer: no order pairs

  // One commit-pending writer, no readers: two visibility choices.
  HB cp;
  cp.begintx(1).ok(1).write(1, "x", 5).retu(1).trycommit(1);
  CHECK(all_graphs(cp.h).size() == 2);

  // Two visible writers of x: the two total orders.
  HB ww;
  ww.begintx(1).ok(1).write(1, "x", 1).retu(1).trycommit(1).committed(1);
  ww.begintx(2).ok(2).write(2, "x", 2).retu(2).trycommit(2).committed(2);
  CHECK(all_graphs(ww.h).size() == 2);

  CHECK_THROWS_AS(enumerate_graphs(store_buffer_weak(9, 9),
                                   [](const OpacityGraph&) { return true; }),
                  Error);
}

TEST_CASE("anti-dependency derivation") {
  // Reader of the initial value gets an RW edge into the visible writer.
  HB h;
  h.ntx_read(1, "x", 0);
  h.begintx(2).ok(2).write(2, "x", 1).retu(2).trycommit(2).committed(2);
  auto gs = all_graphs(h.h);
  REQUIRE(gs.size() == 1);
  REQUIRE(gs[0].rw.size() == 1);
  CHECK_FALSE(gs[0].verts[gs[0].rw[0].src].is_tx);
  CHECK(gs[0].verts[gs[0].rw[0].dst].is_tx);

  // No writers at all: no anti-dependencies.
  HB lone;
  lone.ntx_read(1, "x", 0);
  auto gs2 = all_graphs(lone.h);
  REQUIRE(gs2.size() == 1);
  CHECK(gs2[0].rw.empty());

  // w1 -WW-> w2 and w1 -WR-> r imply r -RW-> w2.
  HB chain;
  chain.begintx(1).ok(1).write(1, "x", 1).retu(1).trycommit(1).committed(1);
  chain.ntx_read(3, "x", 1);
  chain.begintx(2).ok(2).write(2, "x", 2).retu(2).trycommit(2).committed(2);
  bool found = false;
  for (const auto& g : all_graphs(chain.h)) {
    // Look for the order w1 before w2 with the read attributed to w1.
    for (const auto& rw : g.rw)
      if (!g.verts[rw.src].is_tx && g.verts[rw.dst].is_tx) found = true;
  }
  CHECK(found);
}

TEST_CASE("acyclicity and linearizations") {
  HB solo;
  solo.begintx(1).ok(1).trycommit(1).committed(1);
  auto gs = all_graphs(solo.h);
  REQUIRE(gs.size() == 1);
  CHECK(is_acyclic(gs[0]));
  std::size_t lins = 0;
  linearizations(gs[0], 0, [&](const History& s) {
    ++lins;
    CHECK(is_atomic(s));
    return true;
  });
  CHECK(lins == 1);

  // A hand-built WW cycle is detected.
  OpacityGraph cyc;
  History dummy;
  cyc.h = &dummy;
  cyc.verts.resize(2);
  cyc.vis = {1, 1};
  cyc.ww.push_back({0, 1, "x"});
  cyc.ww.push_back({1, 0, "x"});
  CHECK_FALSE(is_acyclic(cyc));
  CHECK_THROWS_AS(linearizations(cyc, 0, [](const History&) { return true; }),
                  Error);

  // Three mutually unordered committed txs: six linearizations.
  HB three;
  for (ThreadId t = 1; t <= 3; ++t)
    three.begintx(t).ok(t).trycommit(t).committed(t);
  // Interleave them so no RT edges arise? RT is excluded from DEP anyway.
  auto gs3 = all_graphs(three.h);
  REQUIRE(gs3.size() == 1);
  std::size_t count = 0;
  linearizations(gs3[0], 0, [&](const History&) {
    ++count;
    return true;
  });
  CHECK(count == 6);
}

TEST_CASE("graph-based opacity check") {
  CHECK(check_opaque_graph(History{}).witness.has_value());
  CHECK(check_opaque_graph(privatization_atomic()).witness.has_value());

  // The mid-transaction observation x=1, y=0 forces a dependency cycle.
  auto r = check_opaque_graph(store_buffer_weak(1, 0));
  CHECK(r.consistent);
  CHECK_FALSE(r.witness.has_value());
}

TEST_CASE("direct opacity check") {
  History f1 = privatization_atomic();
  auto s = check_opaque_direct(f1, 12);
  REQUIRE(s);
  CHECK(is_atomic(*s));
  REQUIRE(corresponds(f1, *s).has_value());

  CHECK_FALSE(check_opaque_direct(store_buffer_weak(1, 0), 12).has_value());
}

TEST_CASE("graph-based cdrf") {
  HB nofl;
  nofl.ntx_read(1, "x", 0);
  CHECK(cdrf_graph(nofl.h));

  CHECK(cdrf_graph(privatization_atomic()));

  // Racy store-buffering variant where the reads land after the commit:
  // a matching serialization exists but the conflicts are unordered.
  CHECK_FALSE(cdrf_graph(store_buffer_weak(1, 2)));

  // The cyclic-only variant is vacuously CDRF (no acyclic graph, and no
  // matching serialization either).
  CHECK(cdrf_graph(store_buffer_weak(1, 0)));
  CHECK(cdrf(store_buffer_weak(1, 0), 12).ok);
}

TEST_CASE("path reductions on the privatization graph") {
  History h = privatization_atomic();
  auto r = check_opaque_graph(h);
  REQUIRE(r.witness);
  CHECK(assert_path_reductions(*r.witness, h).empty());
}

TEST_CASE("hb factoring on atomic TDRF histories") {
  CHECK(check_hb_factoring(privatization_atomic()).empty());
}

TEST_CASE("graph serialization") {
  auto r = check_opaque_graph(privatization_atomic());
  REQUIRE(r.witness);
  std::string text = serialize_graph(*r.witness);
  CHECK(text.find("PO") != std::string::npos);
  CHECK(text.find("RW priv") != std::string::npos);
}
