#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tmlab/history.hpp"

namespace tmlab {

inline constexpr Value kVInit = 0;

// Initial register values; registers not listed start at kVInit.
using InitMem = std::map<std::string, Value>;

inline Value init_value(const InitMem& init, const std::string& reg) {
  auto it = init.find(reg);
  return it == init.end() ? kVInit : it->second;
}

// True iff no transaction's span contains actions of another transaction,
// of a non-transactional access, or of a fence.
inline bool is_non_interleaved(const History& h) {
  Structure st = analyze(h);
  for (std::size_t k = 0; k < st.txs.size(); ++k) {
    const TransactionView& t = st.txs[k];
    for (std::size_t i = t.first() + 1; i < t.last(); ++i)
      if (st.tx_of[i] != k) return false;
  }
  return true;
}

struct Completion {
  History full;                       // base with markers inserted
  std::vector<std::size_t> inserted;  // indices (into full) of the markers
};

// All 2^k completions of a non-interleaved history with k commit-pending
// transactions; each terminal marker goes immediately after the trycommit.
inline std::vector<Completion> completions(const History& h) {
  if (!is_non_interleaved(h))
    throw Error("completions: history is not non-interleaved");
  Structure st = analyze(h);
  std::vector<const TransactionView*> pending;
  for (const auto& t : st.txs)
    if (t.status == TxStatus::CommitPending) pending.push_back(&t);
  std::vector<Completion> out;
  ActionId next_id = max_id(h.actions) + 1;
  for (std::size_t mask = 0; mask < (std::size_t{1} << pending.size());
       ++mask) {
    // Decide a marker per pending transaction, then rebuild in one pass.
    std::vector<std::pair<std::size_t, Action>> inserts;  // after index
    ActionId id = next_id;
    for (std::size_t k = 0; k < pending.size(); ++k) {
      Action m;
      m.id = id++;
      m.thread = pending[k]->thread;
      m.kind = (mask >> k) & 1 ? Kind::Committed : Kind::Aborted;
      inserts.emplace_back(pending[k]->last(), m);
    }
    Completion c;
    for (std::size_t i = 0; i < h.actions.size(); ++i) {
      c.full.actions.push_back(h.actions[i]);
      for (const auto& [after, m] : inserts)
        if (after == i) {
          c.inserted.push_back(c.full.actions.size());
          c.full.actions.push_back(m);
        }
    }
    out.push_back(std::move(c));
  }
  return out;
}

// Value the read response at `resp_idx` must return under the atomic
// read-value rule: the last preceding write(x,v) not located in an aborted
// or live transaction different from the reader's own; v_init otherwise.
inline Value atomic_read_value(const History& h, std::size_t resp_idx,
                               const InitMem& init = {}) {
  const Structure st = analyze(h);
  if (resp_idx >= h.size() || h[resp_idx].kind != Kind::Ret)
    throw Error("atomic_read_value: index is not a read response");
  // The matching request is the thread's immediately preceding action.
  std::size_t req = resp_idx;
  while (req > 0) {
    --req;
    if (h[req].thread == h[resp_idx].thread) break;
  }
  if (h[req].kind != Kind::Read)
    throw Error("atomic_read_value: response has no matching read request");
  const std::string& reg = h[req].reg;
  std::size_t reader_tx = st.tx_of[req];
  for (std::size_t i = req; i-- > 0;) {
    const Action& a = h[i];
    if (a.kind != Kind::Write || a.reg != reg) continue;
    std::size_t wtx = st.tx_of[i];
    if (wtx != Structure::npos && wtx != reader_tx) {
      TxStatus s = st.txs[wtx].status;
      if (s == TxStatus::Aborted || s == TxStatus::Live) continue;
    }
    return a.value;
  }
  return init_value(init, reg);
}

// Does every read response of h return exactly the rule's value? (h is
// expected to have no commit-pending transactions when used as an oracle.)
inline bool reads_legal(const History& h, const InitMem& init = {}) {
  for (std::size_t i = 0; i < h.size(); ++i)
    if (h[i].kind == Kind::Ret && h[i].value != atomic_read_value(h, i, init))
      return false;
  return true;
}

inline bool is_atomic(const History& h, const InitMem& init = {}) {
  if (!validate_wellformed(h).empty()) return false;
  if (!is_non_interleaved(h)) return false;
  for (const Completion& c : completions(h))
    if (reads_legal(c.full, init)) return true;
  return false;
}

// --- matching-serialization enumeration -----------------------------------
//
// A candidate serialization S with h correspondence-below S must be
// non-interleaved and preserve per-thread and client order. Transactions and
// non-transactional accesses therefore move as contiguous blocks; fence
// actions move as singletons ordered with the other client actions. S is an
// arbitrary linear extension of that block partial order.

struct Unit {
  enum Type { Tx, Ntx, Fence } type;
  std::vector<std::size_t> actions;  // indices into h, in order
  ThreadId thread;
  bool client;  // participates in the client (cl) total order
};

inline std::vector<Unit> decompose_units(const History& h) {
  Structure st = analyze(h);
  std::vector<Unit> units;
  std::vector<char> used(h.size(), 0);
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (used[i]) continue;
    if (st.tx_of[i] != Structure::npos) {
      const TransactionView& t = st.txs[st.tx_of[i]];
      Unit u{Unit::Tx, t.span, t.thread, false};
      for (std::size_t k : t.span) used[k] = 1;
      units.push_back(std::move(u));
    } else if (st.ntx_of[i] != Structure::npos) {
      const NontxAccess& n = st.ntxs[st.ntx_of[i]];
      Unit u{Unit::Ntx, {n.request, n.response}, n.thread, true};
      used[n.request] = used[n.response] = 1;
      units.push_back(std::move(u));
    } else {
      // Fence action (or stray interface action outside any pair).
      units.push_back(Unit{Unit::Fence, {i}, h[i].thread, true});
      used[i] = 1;
    }
  }
  return units;
}

// Calls visit(S) for every non-interleaved history S corresponding to h;
// stops early when visit returns false. Does not filter by atomicity.
inline void enumerate_correspondents(
    const History& h, std::size_t unit_cap,
    const std::function<bool(const History&)>& visit) {
  std::vector<Unit> units = decompose_units(h);
  if (units.size() > unit_cap)
    throw CapExceeded("serialization enumeration: " +
                      std::to_string(units.size()) +
                      " reorderable units exceed the cap of " +
                      std::to_string(unit_cap) +
                      "; use the graph-based checks instead");
  const std::size_t n = units.size();
  // pred[j] holds the units that must precede unit j.
  std::vector<std::vector<std::size_t>> pred(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      bool constrained = units[i].thread == units[j].thread ||
                         (units[i].client && units[j].client);
      if (constrained && units[i].actions.front() < units[j].actions.front())
        pred[j].push_back(i);
    }
  std::vector<char> placed(n, 0);
  std::vector<std::size_t> order;
  order.reserve(n);
  bool go = true;
  auto rec = [&](auto&& self) -> void {
    if (!go) return;
    if (order.size() == n) {
      History s;
      for (std::size_t u : order)
        for (std::size_t k : units[u].actions) s.actions.push_back(h[k]);
      go = visit(s);
      return;
    }
    for (std::size_t j = 0; j < n && go; ++j) {
      if (placed[j]) continue;
      bool ready = true;
      for (std::size_t p : pred[j])
        if (!placed[p]) {
          ready = false;
          break;
        }
      if (!ready) continue;
      placed[j] = 1;
      order.push_back(j);
      self(self);
      order.pop_back();
      placed[j] = 0;
    }
  };
  rec(rec);
}

// Every S in H_atomic with h correspondence-below S.
inline void enumerate_atomic_matches(
    const History& h, std::size_t unit_cap,
    const std::function<bool(const History&)>& visit,
    const InitMem& init = {}) {
  enumerate_correspondents(h, unit_cap, [&](const History& s) {
    if (!is_atomic(s, init)) return true;
    return visit(s);
  });
}

inline std::vector<History> atomic_matches(const History& h,
                                           std::size_t unit_cap,
                                           const InitMem& init = {}) {
  std::vector<History> out;
  enumerate_atomic_matches(
      h, unit_cap,
      [&](const History& s) {
        out.push_back(s);
        return true;
      },
      init);
  return out;
}

}  // namespace tmlab
