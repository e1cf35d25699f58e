#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tmlab/atomic_tm.hpp"
#include "tmlab/history.hpp"
#include "tmlab/race.hpp"

namespace tmlab {

// ---------------------------------------------------------------------------
// Consistency
// ---------------------------------------------------------------------------

struct ConsResult {
  bool ok = true;
  std::vector<std::size_t> bad_reads;  // indices of inconsistent responses
};

// A write request inside a transaction is "non-local" when it is the
// transaction's last write to that register; only those may be read from
// by other vertices. Non-transactional writes are always non-local.
inline ConsResult cons(const History& h, const InitMem& init = {}) {
  Structure st = analyze(h);
  ConsResult res;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (h[i].kind != Kind::Ret) continue;
    // Locate the request.
    std::size_t req = i;
    while (req > 0 && h[--req].thread != h[i].thread) {
    }
    if (h[req].kind != Kind::Read) continue;
    const std::string& x = h[req].reg;
    const Value v = h[i].value;
    std::size_t rtx = st.tx_of[req];
    // Local read: the most recent preceding same-transaction write decides.
    if (rtx != Structure::npos) {
      std::optional<Value> lastown;
      for (std::size_t k : st.txs[rtx].span) {
        if (k >= req) break;
        if (h[k].kind == Kind::Write && h[k].reg == x) lastown = h[k].value;
      }
      if (lastown) {
        if (*lastown != v) {
          res.ok = false;
          res.bad_reads.push_back(i);
        }
        continue;
      }
    }
    // Non-local read: some eligible non-local write of v, or the initial
    // value.
    bool found = false;
    for (std::size_t j = 0; j < h.size() && !found; ++j) {
      if (h[j].kind != Kind::Write || h[j].reg != x || h[j].value != v)
        continue;
      std::size_t wtx = st.tx_of[j];
      if (wtx != Structure::npos) {
        const TransactionView& wt = st.txs[wtx];
        if (wt.status == TxStatus::Aborted || wt.status == TxStatus::Live)
          continue;
        // Must be the transaction's last write to x.
        bool last = true;
        for (std::size_t k : wt.span)
          if (k > j && h[k].kind == Kind::Write && h[k].reg == x) last = false;
        if (!last) continue;
      }
      found = true;
    }
    if (!found && v != init_value(init, x)) {
      res.ok = false;
      res.bad_reads.push_back(i);
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Opacity graphs
// ---------------------------------------------------------------------------

struct Vertex {
  bool is_tx = false;
  std::size_t ref = 0;  // index into Structure::txs or ::ntxs
  ThreadId thread = 0;
  std::size_t first = 0;  // first action index (history order)
  std::vector<std::size_t> actions;
  // Register -> value of the vertex's last write to it (its readable write).
  std::map<std::string, Value> last_writes;
};

struct Edge {
  std::size_t src = 0;
  std::size_t dst = 0;
  std::string reg;  // empty for PO/CL/RT
};

struct OpacityGraph {
  const History* h = nullptr;
  std::vector<Vertex> verts;
  std::vector<char> vis;
  std::vector<Edge> wr, ww, rw, po, cl, rt;
  // Per vertex/register: the vertex performed a non-local read of x that is
  // attributed to no writer (it observed the initial value).
  std::set<std::pair<std::size_t, std::string>> reads_initial;

  std::size_t size() const { return verts.size(); }
};

namespace detail {

struct VertexData {
  std::vector<Vertex> verts;
  Structure st;
  // Vertex index of each transaction / non-tx access.
  std::vector<std::size_t> tx_vertex, ntx_vertex;
  // Per vertex: register -> value its non-local reads return (must agree).
  std::vector<std::map<std::string, Value>> nonlocal_read;
  bool unattributable = false;  // a vertex reads two different values
};

inline VertexData build_vertices(const History& h) {
  VertexData d;
  d.st = analyze(h);
  if (!d.st.fences.empty())
    throw Error("opacity graphs are defined for fence-free histories");
  d.tx_vertex.assign(d.st.txs.size(), Structure::npos);
  d.ntx_vertex.assign(d.st.ntxs.size(), Structure::npos);
  for (std::size_t k = 0; k < d.st.txs.size(); ++k) {
    const TransactionView& t = d.st.txs[k];
    d.verts.push_back(Vertex{true, k, t.thread, t.first(), t.span});
  }
  for (std::size_t k = 0; k < d.st.ntxs.size(); ++k) {
    const NontxAccess& n = d.st.ntxs[k];
    d.verts.push_back(
        Vertex{false, k, n.thread, n.request, {n.request, n.response}});
  }
  std::sort(d.verts.begin(), d.verts.end(),
            [](const Vertex& a, const Vertex& b) { return a.first < b.first; });
  for (std::size_t v = 0; v < d.verts.size(); ++v) {
    if (d.verts[v].is_tx)
      d.tx_vertex[d.verts[v].ref] = v;
    else
      d.ntx_vertex[d.verts[v].ref] = v;
  }
  d.nonlocal_read.resize(d.verts.size());
  for (std::size_t v = 0; v < d.verts.size(); ++v) {
    std::map<std::string, Value> own_written;
    for (std::size_t i : d.verts[v].actions) {
      const Action& a = h[i];
      if (a.kind == Kind::Write) {
        d.verts[v].last_writes[a.reg] = a.value;
        own_written[a.reg] = a.value;
      } else if (a.kind == Kind::Ret) {
        std::size_t req = i;
        while (req > 0 && h[--req].thread != a.thread) {
        }
        if (h[req].kind != Kind::Read) continue;
        if (own_written.count(h[req].reg)) continue;  // local read
        auto [it, fresh] =
            d.nonlocal_read[v].emplace(h[req].reg, a.value);
        if (!fresh && it->second != a.value) d.unattributable = true;
      }
    }
  }
  return d;
}

}  // namespace detail

// Recomputes RW from (vis, WR, WW) per the anti-dependency rule:
// v ->RW_x v' iff v != v' and either some v'' ->WW_x v' also ->WR_x v, or
// v' is a visible x-writer and v read the initial value of x.
inline std::vector<Edge> derive_rw(const OpacityGraph& g) {
  std::vector<Edge> rw;
  std::set<std::tuple<std::size_t, std::size_t, std::string>> seen;
  auto emit = [&](std::size_t a, std::size_t b, const std::string& x) {
    if (a == b) return;
    if (seen.emplace(a, b, x).second) rw.push_back({a, b, x});
  };
  for (const Edge& ww : g.ww)
    for (const Edge& wrr : g.wr)
      if (ww.src == wrr.src && ww.reg == wrr.reg)
        emit(wrr.dst, ww.dst, ww.reg);
  for (const auto& [v, x] : g.reads_initial)
    for (std::size_t w = 0; w < g.size(); ++w)
      if (g.vis[w] && g.verts[w].last_writes.count(x)) emit(v, w, x);
  return rw;
}

namespace detail {

// Enumerates Graph(h): every visibility choice for commit-pending
// transactions, every value-legal WR attribution, every WW total order per
// register; RW derived, PO/CL/RT lifted. visit returns false to stop.
inline void enumerate_graphs_impl(
    const History& h, const std::function<bool(const OpacityGraph&)>& visit,
    const InitMem& init = {}) {
  VertexData d = build_vertices(h);
  if (d.unattributable) return;
  const std::size_t n = d.verts.size();

  // Fixed structural relations.
  std::vector<Edge> po, cl, rt;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      if (a == b) continue;
      const Vertex &va = d.verts[a], &vb = d.verts[b];
      if (va.first >= vb.first) continue;
      if (va.thread == vb.thread) po.push_back({a, b, ""});
      if (!va.is_tx && !vb.is_tx) cl.push_back({a, b, ""});
      if (va.is_tx && vb.is_tx) {
        const TransactionView& ta = d.st.txs[va.ref];
        const TransactionView& tb = d.st.txs[vb.ref];
        if (ta.completed() && ta.last() < tb.first()) rt.push_back({a, b, ""});
      }
    }

  std::vector<std::size_t> pending;  // commit-pending tx vertices
  for (std::size_t v = 0; v < n; ++v)
    if (d.verts[v].is_tx &&
        d.st.txs[d.verts[v].ref].status == TxStatus::CommitPending)
      pending.push_back(v);

  bool go = true;
  for (std::size_t mask = 0; go && mask < (std::size_t{1} << pending.size());
       ++mask) {
    OpacityGraph g;
    g.h = &h;
    g.verts = d.verts;
    g.po = po;
    g.cl = cl;
    g.rt = rt;
    g.vis.assign(n, 0);
    for (std::size_t v = 0; v < n; ++v) {
      if (!d.verts[v].is_tx) {
        g.vis[v] = 1;
      } else {
        TxStatus s = d.st.txs[d.verts[v].ref].status;
        g.vis[v] = s == TxStatus::Committed ? 1 : 0;
      }
    }
    for (std::size_t k = 0; k < pending.size(); ++k)
      g.vis[pending[k]] = (mask >> k) & 1;

    // WR candidates per (reader vertex, register).
    struct ReadSlot {
      std::size_t vert;
      std::string reg;
      std::vector<std::size_t> sources;  // candidate writer vertices
      bool allow_initial;
    };
    std::vector<ReadSlot> slots;
    bool dead = false;
    for (std::size_t v = 0; v < n && !dead; ++v)
      for (const auto& [x, val] : d.nonlocal_read[v]) {
        ReadSlot s{v, x, {}, val == init_value(init, x)};
        for (std::size_t w = 0; w < n; ++w) {
          if (w == v || !g.vis[w]) continue;
          auto it = d.verts[w].last_writes.find(x);
          if (it != d.verts[w].last_writes.end() && it->second == val)
            s.sources.push_back(w);
        }
        if (s.sources.empty() && !s.allow_initial) {
          dead = true;
          break;
        }
        slots.push_back(std::move(s));
      }
    if (dead) continue;

    // Visible writers per register (for WW orders).
    std::map<std::string, std::vector<std::size_t>> writers;
    for (std::size_t w = 0; w < n; ++w) {
      if (!g.vis[w]) continue;
      for (const auto& [x, val] : d.verts[w].last_writes)
        writers[x].push_back(w);
    }

    // Recursive choice over read attributions, then WW permutations.
    std::vector<std::optional<std::size_t>> choice(slots.size());
    auto emit_graphs = [&](auto&& self, std::size_t si) -> void {
      if (!go) return;
      if (si < slots.size()) {
        for (std::size_t w : slots[si].sources) {
          choice[si] = w;
          self(self, si + 1);
          if (!go) return;
        }
        if (slots[si].allow_initial) {
          choice[si] = std::nullopt;
          self(self, si + 1);
        }
        return;
      }
      g.wr.clear();
      g.reads_initial.clear();
      for (std::size_t k = 0; k < slots.size(); ++k) {
        if (choice[k])
          g.wr.push_back({*choice[k], slots[k].vert, slots[k].reg});
        else
          g.reads_initial.emplace(slots[k].vert, slots[k].reg);
      }
      // Enumerate WW as a product of per-register permutations.
      std::vector<std::pair<std::string, std::vector<std::size_t>>> regs(
          writers.begin(), writers.end());
      for (auto& [x, ws] : regs) std::sort(ws.begin(), ws.end());
      auto perm_rec = [&](auto&& pself, std::size_t ri) -> void {
        if (!go) return;
        if (ri == regs.size()) {
          g.ww.clear();
          for (const auto& [x, ws] : regs)
            for (std::size_t i = 0; i + 1 < ws.size(); ++i)
              for (std::size_t j = i + 1; j < ws.size(); ++j)
                g.ww.push_back({ws[i], ws[j], x});
          g.rw = derive_rw(g);
          go = visit(g);
          return;
        }
        auto& ws = regs[ri].second;
        std::sort(ws.begin(), ws.end());
        do {
          pself(pself, ri + 1);
          if (!go) return;
        } while (std::next_permutation(ws.begin(), ws.end()));
      };
      perm_rec(perm_rec, 0);
    };
    emit_graphs(emit_graphs, 0);
  }
}

}  // namespace detail

inline void enumerate_graphs(
    const History& h, const std::function<bool(const OpacityGraph&)>& visit,
    const InitMem& init = {}) {
  if (!cons(h, init).ok) throw Error("enumerate_graphs: inconsistent history");
  detail::enumerate_graphs_impl(h, visit, init);
}

// Dependency edges (RT optional) as an adjacency list.
inline std::vector<std::vector<std::size_t>> dep_adjacency(
    const OpacityGraph& g, bool with_rt) {
  std::vector<std::vector<std::size_t>> adj(g.size());
  auto addall = [&](const std::vector<Edge>& es) {
    for (const Edge& e : es) adj[e.src].push_back(e.dst);
  };
  addall(g.wr);
  addall(g.ww);
  addall(g.rw);
  addall(g.po);
  addall(g.cl);
  if (with_rt) addall(g.rt);
  return adj;
}

inline bool is_acyclic(const OpacityGraph& g, bool with_rt = false) {
  auto adj = dep_adjacency(g, with_rt);
  std::vector<int> state(g.size(), 0);
  auto dfs = [&](auto&& self, std::size_t v) -> bool {
    state[v] = 1;
    for (std::size_t w : adj[v]) {
      if (state[w] == 1) return false;
      if (state[w] == 0 && !self(self, w)) return false;
    }
    state[v] = 2;
    return true;
  };
  for (std::size_t v = 0; v < g.size(); ++v)
    if (state[v] == 0 && !dfs(dfs, v)) return false;
  return true;
}

// All topological sorts of DEP, rendered as non-interleaved histories by
// emitting each vertex's actions as a contiguous block. Stops after `cap`
// linearizations (0 = no cap) or when visit returns false.
inline void linearizations(const OpacityGraph& g, std::size_t cap,
                           const std::function<bool(const History&)>& visit) {
  if (!is_acyclic(g)) throw Error("linearizations: graph has a cycle");
  auto adj = dep_adjacency(g, false);
  std::vector<std::size_t> indeg(g.size(), 0);
  std::vector<std::set<std::size_t>> succ(g.size());
  for (std::size_t v = 0; v < g.size(); ++v)
    for (std::size_t w : adj[v])
      if (succ[v].insert(w).second) ++indeg[w];
  std::vector<std::size_t> order;
  std::size_t count = 0;
  bool go = true;
  auto rec = [&](auto&& self) -> void {
    if (!go) return;
    if (order.size() == g.size()) {
      History s;
      for (std::size_t v : order)
        for (std::size_t i : g.verts[v].actions)
          s.actions.push_back((*g.h)[i]);
      go = visit(s);
      if (cap && ++count >= cap) go = false;
      return;
    }
    for (std::size_t v = 0; v < g.size() && go; ++v) {
      if (indeg[v] != 0) continue;
      bool placed = false;
      for (std::size_t p : order)
        if (p == v) placed = true;
      if (placed) continue;
      indeg[v] = static_cast<std::size_t>(-1);  // mark placed
      order.push_back(v);
      for (std::size_t w : succ[v]) --indeg[w];
      self(self);
      for (std::size_t w : succ[v]) ++indeg[w];
      order.pop_back();
      indeg[v] = 0;
    }
  };
  rec(rec);
}

struct OpaqueGraphResult {
  std::optional<OpacityGraph> witness;
  bool consistent = true;
};

// Graph-based opacity check: consistent and some acyclic dependency graph.
inline OpaqueGraphResult check_opaque_graph(const History& h,
                                            const InitMem& init = {}) {
  OpaqueGraphResult res;
  if (!cons(h, init).ok) {
    res.consistent = false;
    return res;
  }
  detail::enumerate_graphs_impl(
      h,
      [&](const OpacityGraph& g) {
        if (is_acyclic(g)) {
          res.witness = g;
          return false;
        }
        return true;
      },
      init);
  return res;
}

// Direct privatization-safe-opacity check: some matching atomic history.
inline std::optional<History> check_opaque_direct(const History& h,
                                                  std::size_t unit_cap,
                                                  const InitMem& init = {}) {
  std::optional<History> out;
  enumerate_atomic_matches(
      h, unit_cap,
      [&](const History& s) {
        out = s;
        return false;
      },
      init);
  return out;
}

namespace detail {

inline std::vector<std::vector<char>> reach(
    std::size_t n, const std::vector<std::vector<std::size_t>>& adj) {
  std::vector<std::vector<char>> r(n, std::vector<char>(n, 0));
  for (std::size_t v = 0; v < n; ++v) {
    // BFS from v.
    std::vector<std::size_t> stack{v};
    while (!stack.empty()) {
      std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t w : adj[u])
        if (!r[v][w]) {
          r[v][w] = 1;
          stack.push_back(w);
        }
    }
  }
  return r;
}

}  // namespace detail

// Graph-criterion CDRF: in every acyclic G in Graph(h), every pair of
// vertices containing conflicting actions is connected by a path over
// PO, CL, transaction-to-transaction DEP edges, and RT.
inline bool cdrf_graph(const History& h, const InitMem& init = {}) {
  if (!cons(h, init).ok) throw Error("cdrf_graph: inconsistent history");
  auto confl = conflicts(h);
  if (confl.empty()) return true;
  Structure st = analyze(h);
  bool ok = true;
  auto visit = [&](const OpacityGraph& g) {
    if (!is_acyclic(g)) return true;
    // Map action indices to vertices of this graph.
    std::vector<std::size_t> vert_of(h.size(), Structure::npos);
    for (std::size_t v = 0; v < g.size(); ++v)
      for (std::size_t i : g.verts[v].actions) vert_of[i] = v;
    // Allowed edges: PO, CL, RT, and DEP edges between two transactions.
    std::vector<std::vector<std::size_t>> adj(g.size());
    auto add = [&](const std::vector<Edge>& es, bool tx_only) {
      for (const Edge& e : es) {
        if (tx_only && (!g.verts[e.src].is_tx || !g.verts[e.dst].is_tx))
          continue;
        adj[e.src].push_back(e.dst);
      }
    };
    add(g.po, false);
    add(g.cl, false);
    add(g.rt, false);
    add(g.wr, true);
    add(g.ww, true);
    add(g.rw, true);
    auto r = detail::reach(g.size(), adj);
    for (const ConflictPair& c : confl) {
      std::size_t a = vert_of[c.nontx_request];
      std::size_t b = vert_of[c.tx_request];
      if (a == b) continue;
      if (!r[a][b] && !r[b][a]) {
        ok = false;
        return false;
      }
    }
    return true;
  };
  detail::enumerate_graphs_impl(h, visit, init);
  return ok;
}

// Path-reduction sanity checks on an acyclic graph of a consistent, CDRF
// history:
//  - any DEP(+RT) path between transactions reduces to an RT/txDEP path;
//  - any DEP(+RT) path from a transaction T to a non-tx access n factors as
//    T (RT|txDEP)* T' PO n' CL* n, and mirrored for n to T.
inline std::vector<std::string> assert_path_reductions(const OpacityGraph& g,
                                                       const History& h) {
  std::vector<std::string> bad;
  const std::size_t n = g.size();
  auto dep = detail::reach(n, dep_adjacency(g, /*with_rt=*/true));
  // txDEP U RT reachability (reflexive below where needed).
  std::vector<std::vector<std::size_t>> txadj(n);
  auto addtx = [&](const std::vector<Edge>& es) {
    for (const Edge& e : es)
      if (g.verts[e.src].is_tx && g.verts[e.dst].is_tx)
        txadj[e.src].push_back(e.dst);
  };
  addtx(g.wr);
  addtx(g.ww);
  addtx(g.rw);
  addtx(g.po);
  addtx(g.rt);
  auto txreach = detail::reach(n, txadj);
  // CL reachability.
  std::vector<std::vector<std::size_t>> cladj(n);
  for (const Edge& e : g.cl) cladj[e.src].push_back(e.dst);
  auto clreach = detail::reach(n, cladj);
  // Direct PO edges.
  std::vector<std::vector<char>> po(n, std::vector<char>(n, 0));
  for (const Edge& e : g.po) po[e.src][e.dst] = 1;

  auto vname = [&](std::size_t v) {
    return std::string(g.verts[v].is_tx ? "T" : "n") + std::to_string(v);
  };
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      if (a == b || !dep[a][b]) continue;
      if (g.verts[a].is_tx && g.verts[b].is_tx) {
        if (!txreach[a][b])
          bad.push_back("no RT/txDEP path " + vname(a) + " -> " + vname(b));
      } else if (g.verts[a].is_tx && !g.verts[b].is_tx) {
        bool found = false;
        for (std::size_t t2 = 0; t2 < n && !found; ++t2) {
          if (!g.verts[t2].is_tx || !(t2 == a || txreach[a][t2])) continue;
          for (std::size_t n2 = 0; n2 < n && !found; ++n2)
            if (po[t2][n2] && !g.verts[n2].is_tx &&
                (n2 == b || clreach[n2][b]))
              found = true;
        }
        if (!found)
          bad.push_back("no (RT|txDEP)*;PO;CL* factoring " + vname(a) +
                        " -> " + vname(b));
      } else if (!g.verts[a].is_tx && g.verts[b].is_tx) {
        bool found = false;
        for (std::size_t n2 = 0; n2 < n && !found; ++n2) {
          if (g.verts[n2].is_tx || !(n2 == a || clreach[a][n2])) continue;
          for (std::size_t t2 = 0; t2 < n && !found; ++t2)
            if (po[n2][t2] && g.verts[t2].is_tx &&
                (t2 == b || txreach[t2][b]))
              found = true;
        }
        if (!found)
          bad.push_back("no CL*;PO;(RT|txDEP)* factoring " + vname(a) +
                        " -> " + vname(b));
      }
    }
  return bad;
}

// Vertex-level happens-before factoring on atomic TDRF histories: whenever
// a transaction reaches a non-tx access through (PO|CL|EF)+, the path can
// be taken as EF*;PO;CL*.
inline std::vector<std::string> check_hb_factoring(const History& h) {
  if (!is_atomic(h)) throw Error("check_hb_factoring: non-atomic history");
  if (!tdrf(h).ok) throw Error("check_hb_factoring: history has a race");
  detail::VertexData d = detail::build_vertices(h);
  const std::size_t n = d.verts.size();
  std::vector<std::vector<std::size_t>> adj(n), ef(n), cladj(n);
  std::vector<std::vector<char>> po(n, std::vector<char>(n, 0));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      if (a == b || d.verts[a].first >= d.verts[b].first) continue;
      if (d.verts[a].thread == d.verts[b].thread) {
        adj[a].push_back(b);
        po[a][b] = 1;
      }
      if (d.verts[a].is_tx && d.verts[b].is_tx) {
        adj[a].push_back(b);
        ef[a].push_back(b);
      }
      if (!d.verts[a].is_tx && !d.verts[b].is_tx) {
        adj[a].push_back(b);
        cladj[a].push_back(b);
      }
    }
  auto hbreach = detail::reach(n, adj);
  auto efreach = detail::reach(n, ef);
  auto clreach = detail::reach(n, cladj);
  std::vector<std::string> bad;
  for (std::size_t t = 0; t < n; ++t) {
    if (!d.verts[t].is_tx) continue;
    for (std::size_t m = 0; m < n; ++m) {
      if (d.verts[m].is_tx || !hbreach[t][m]) continue;
      bool found = false;
      for (std::size_t t2 = 0; t2 < n && !found; ++t2) {
        if (!d.verts[t2].is_tx || !(t2 == t || efreach[t][t2])) continue;
        for (std::size_t n2 = 0; n2 < n && !found; ++n2)
          if (!d.verts[n2].is_tx && po[t2][n2] && (n2 == m || clreach[n2][m]))
            found = true;
      }
      if (!found)
        bad.push_back("hb path T" + std::to_string(t) + " -> n" +
                      std::to_string(m) + " does not factor as EF*;PO;CL*");
    }
  }
  return bad;
}

// ---------------------------------------------------------------------------
// Graph text format: one line per edge `<src> <kind> [<reg>] <dst>` with
// vertex names T<k> / n<k> numbered in history order.
// ---------------------------------------------------------------------------

inline std::string serialize_graph(const OpacityGraph& g) {
  // Number transactions and accesses separately, in history order.
  std::vector<std::string> names(g.size());
  std::size_t tk = 0, nk = 0;
  for (std::size_t v = 0; v < g.size(); ++v)
    names[v] = g.verts[v].is_tx ? "T" + std::to_string(tk++)
                                : "n" + std::to_string(nk++);
  std::string out;
  auto dump = [&](const std::vector<Edge>& es, const char* kind, bool reg) {
    for (const Edge& e : es) {
      out += names[e.src];
      out += ' ';
      out += kind;
      if (reg) {
        out += ' ';
        out += e.reg;
      }
      out += ' ';
      out += names[e.dst];
      out += '\n';
    }
  };
  dump(g.wr, "WR", true);
  dump(g.ww, "WW", true);
  dump(g.rw, "RW", true);
  dump(g.po, "PO", false);
  dump(g.cl, "CL", false);
  dump(g.rt, "RT", false);
  return out;
}

}  // namespace tmlab
