#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tmlab/action.hpp"
#include "tmlab/history.hpp"
#include "tmlab/opacity.hpp"
#include "tmlab/stm.hpp"

namespace tmlab {

// Online opacity-graph construction: the execution is replayed and the graph
// is extended at algorithm-specific points (transaction start, read response,
// write-set publication, non-transactional accesses). After every update the
// report records whether the dependency graph stayed acyclic, whether the
// transaction-only dependencies plus real-time order stayed acyclic (INV1),
// whether the algorithm's isolation invariant held (INV2), and whether read
// updates ever introduced outgoing anti-dependencies.
struct WitnessReport {
  std::shared_ptr<History> hist;
  OpacityGraph graph;
  bool acyclic = true;
  bool inv1 = true;
  bool inv2 = true;
  bool reads_add_no_rw = true;
  std::vector<std::string> violations;

  bool ok() const {
    return acyclic && inv1 && inv2 && reads_add_no_rw;
  }
};

namespace detail {

inline bool acyclic_adj(const std::vector<std::vector<std::size_t>>& adj) {
  std::vector<int> state(adj.size(), 0);
  auto dfs = [&](auto&& self, std::size_t v) -> bool {
    state[v] = 1;
    for (std::size_t w : adj[v]) {
      if (state[w] == 1) return false;
      if (state[w] == 0 && !self(self, w)) return false;
    }
    state[v] = 2;
    return true;
  };
  for (std::size_t v = 0; v < adj.size(); ++v)
    if (state[v] == 0 && !dfs(dfs, v)) return false;
  return true;
}

// Dependency edges with both endpoints transactional.
inline std::vector<std::vector<std::size_t>> txdep_adjacency(
    const OpacityGraph& g) {
  std::vector<std::vector<std::size_t>> adj(g.size());
  auto add = [&](const std::vector<Edge>& es) {
    for (const Edge& e : es)
      if (g.verts[e.src].is_tx && g.verts[e.dst].is_tx)
        adj[e.src].push_back(e.dst);
  };
  add(g.wr);
  add(g.ww);
  add(g.rw);
  add(g.po);
  add(g.cl);
  return adj;
}

}  // namespace detail

inline WitnessReport witness_graph(const Trace& exec, Alg alg,
                                   const InitMem& init = {}) {
  WitnessReport rep;
  rep.hist = std::make_shared<History>(history_of(exec));
  OpacityGraph& g = rep.graph;
  g.h = rep.hist.get();

  const bool publish_at_commit_request = alg == Alg::TwoPl;

  struct TState {
    std::optional<std::size_t> vert;     // open transaction's vertex
    std::set<std::string> own_written;   // registers written in the open tx
    std::map<std::string, Value> writes; // last written value per register
    bool published = false;              // write-set publication applied
    std::optional<Kind> pending;
    std::string pending_reg;
    Value pending_value = 0;
    std::size_t pending_hist = 0;        // history index of the open request
    std::optional<std::size_t> last_vert;  // PO chain predecessor
    bool last_was_response = false;
  };
  std::map<ThreadId, TState> ts;
  std::vector<char> completed;              // per tx vertex
  std::map<std::string, std::vector<std::size_t>> ww_order;
  std::optional<std::size_t> last_client_vert;  // CL chain predecessor
  std::size_t tx_count = 0, ntx_count = 0;

  auto note = [&](bool& flag, const std::string& msg) {
    if (flag) rep.violations.push_back(msg);
    flag = false;
  };

  // Runs all invariant checks after a graph update named `upd` applied to
  // vertex v (for the read/anti-dependency property).
  auto check = [&](const std::string& upd, std::size_t v, bool is_read) {
    g.rw = derive_rw(g);
    if (!is_acyclic(g))
      note(rep.acyclic, "cycle in dependency graph after " + upd);
    auto txadj = detail::txdep_adjacency(g);
    {
      auto with_rt = txadj;
      for (const Edge& e : g.rt) with_rt[e.src].push_back(e.dst);
      if (!detail::acyclic_adj(with_rt))
        note(rep.inv1, "INV1: tx-dependency/real-time cycle after " + upd);
    }
    if (is_read) {
      for (const Edge& e : g.rw)
        if (e.src == v)
          note(rep.reads_add_no_rw,
               upd + " introduced an outgoing anti-dependency");
    }
    // INV2, in the form matching the algorithm's isolation mechanism.
    auto reach_from = [&](std::size_t s) {
      std::vector<char> seen(g.size(), 0);
      std::vector<std::size_t> stack{s};
      seen[s] = 1;
      while (!stack.empty()) {
        std::size_t v2 = stack.back();
        stack.pop_back();
        for (std::size_t w : txadj[v2])
          if (!seen[w]) {
            seen[w] = 1;
            stack.push_back(w);
          }
      }
      return seen;
    };
    std::vector<char> has_po_out(g.size(), 0);
    for (const Edge& e : g.po) has_po_out[e.src] = 1;
    for (const auto& [t2, s2] : ts) {
      if (!s2.vert) continue;  // only uncompleted transactions constrain
      std::size_t u = *s2.vert;
      if (publish_at_commit_request) {
        // Lock-based isolation: while an uncompleted transaction rests at a
        // response, nothing may depend on it yet.
        if (s2.last_was_response && !txadj[u].empty())
          note(rep.inv2, "INV2: dependency out of a quiescent open transaction"
                         " after " + upd);
      } else {
        // Fence-based isolation: no thread advances past a transaction that
        // still depends on an uncompleted one.
        auto seen = reach_from(u);
        for (std::size_t w = 0; w < g.size(); ++w)
          if (seen[w] && has_po_out[w])
            note(rep.inv2, "INV2: thread advanced past a transaction"
                           " depending on an uncompleted one, after " + upd);
      }
    }
  };

  // Attributes a non-local read of x returning v: a read dependency from the
  // writer of that value, or a record that the initial value was observed.
  auto attribute = [&](std::size_t vert, const std::string& x, Value v) {
    const auto& order = ww_order[x];
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      auto lw = g.verts[*it].last_writes.find(x);
      if (lw != g.verts[*it].last_writes.end() && lw->second == v) {
        g.wr.push_back({*it, vert, x});
        return;
      }
    }
    if (v == init_value(init, x)) {
      g.reads_initial.emplace(vert, x);
      return;
    }
    rep.violations.push_back("read of " + x + " returned " +
                             std::to_string(v) + ", written by no one");
    rep.acyclic = false;
  };

  auto new_vertex = [&](bool is_tx, ThreadId t, std::size_t first) {
    Vertex v;
    v.is_tx = is_tx;
    v.ref = is_tx ? tx_count++ : ntx_count++;
    v.thread = t;
    v.first = first;
    g.verts.push_back(std::move(v));
    g.vis.push_back(0);
    completed.push_back(0);
    std::size_t id = g.verts.size() - 1;
    TState& s = ts[t];
    if (s.last_vert) g.po.push_back({*s.last_vert, id, ""});
    s.last_vert = id;
    return id;
  };

  // Publishes T's write-set: write dependencies from the previous writer of
  // each register, visibility, and the writer order.
  auto publish = [&](TState& s) {
    std::size_t u = *s.vert;
    g.vis[u] = 1;
    for (const auto& [x, v] : s.writes) {
      g.verts[u].last_writes[x] = v;
      auto& order = ww_order[x];
      if (!order.empty()) g.ww.push_back({order.back(), u, x});
      order.push_back(u);
    }
    s.published = true;
  };

  std::size_t hist_idx = 0;
  for (const Action& a : exec.actions) {
    if (a.kind == Kind::FBegin || a.kind == Kind::FEnd)
      throw Error("witness_graph: fence actions are not supported");
    TState& s = ts[a.thread];
    const bool interface = a.kind != Kind::Wb && a.kind != Kind::Prim;
    const std::size_t hi = interface ? hist_idx++ : 0;

    switch (a.kind) {
      case Kind::BeginTx: {
        std::size_t v = new_vertex(true, a.thread, hi);
        g.verts[v].actions.push_back(hi);
        for (std::size_t w = 0; w < g.size(); ++w)
          if (g.verts[w].is_tx && completed[w]) g.rt.push_back({w, v, ""});
        s.vert = v;
        s.own_written.clear();
        s.writes.clear();
        s.published = false;
        s.pending = a.kind;
        s.last_was_response = false;
        check("transaction start", v, false);
        break;
      }
      case Kind::Read:
      case Kind::Write:
      case Kind::TryCommit:
        s.pending = a.kind;
        s.pending_reg = a.reg;
        s.pending_value = a.value;
        s.pending_hist = hi;
        s.last_was_response = false;
        if (s.vert) {
          g.verts[*s.vert].actions.push_back(hi);
          if (a.kind == Kind::Write) {
            s.own_written.insert(a.reg);
            s.writes[a.reg] = a.value;
          }
          if (a.kind == Kind::TryCommit && publish_at_commit_request &&
              !s.writes.empty()) {
            publish(s);
            check("write-set publication", *s.vert, false);
          }
        }
        break;
      case Kind::Ok:
        s.pending.reset();
        s.last_was_response = true;
        if (s.vert) g.verts[*s.vert].actions.push_back(hi);
        break;
      case Kind::Ret:
      case Kind::RetUnit: {
        bool was_read = s.pending == Kind::Read;
        std::string reg = s.pending_reg;
        Value wval = s.pending_value;
        std::size_t req_hi = s.pending_hist;
        s.pending.reset();
        s.last_was_response = true;
        if (s.vert) {
          g.verts[*s.vert].actions.push_back(hi);
          if (was_read && !s.own_written.count(reg)) {
            attribute(*s.vert, reg, a.value);
            check("transactional read", *s.vert, true);
          }
        } else {
          std::size_t v = new_vertex(false, a.thread, req_hi);
          g.verts[v].actions = {req_hi, hi};
          g.vis[v] = 1;
          if (last_client_vert) g.cl.push_back({*last_client_vert, v, ""});
          last_client_vert = v;
          if (was_read) {
            attribute(v, reg, a.value);
            check("non-transactional read", v, true);
          } else {
            g.verts[v].last_writes[reg] = wval;
            auto& order = ww_order[reg];
            if (!order.empty()) g.ww.push_back({order.back(), v, reg});
            order.push_back(v);
            check("non-transactional write", v, false);
          }
        }
        break;
      }
      case Kind::Committed:
      case Kind::Aborted:
        s.pending.reset();
        s.last_was_response = true;
        if (s.vert) {
          g.verts[*s.vert].actions.push_back(hi);
          completed[*s.vert] = 1;
          s.vert.reset();
        }
        break;
      case Kind::Wb:
        // Write-backs are internal. For buffered algorithms the first
        // write-back of a commit marks the end of validation and publishes
        // the write-set; eager and rollback write-backs change the graph
        // not at all.
        if (!publish_at_commit_request && s.vert &&
            s.pending == Kind::TryCommit && !s.published) {
          publish(s);
          check("write-set publication", *s.vert, false);
        }
        break;
      case Kind::Prim:
        break;
      default:
        throw Error("witness_graph: unexpected action kind");
    }
  }

  if (!cons(*rep.hist, init).ok) note(rep.inv1, "INV1: history is inconsistent");
  g.rw = derive_rw(g);
  return rep;
}

}  // namespace tmlab
