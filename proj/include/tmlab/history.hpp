#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "tmlab/action.hpp"

namespace tmlab {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when an enumeration would exceed the configured permutation cap.
struct CapExceeded : Error {
  using Error::Error;
};

enum class TxStatus { Committed, Aborted, CommitPending, Live };

inline std::string status_name(TxStatus s) {
  switch (s) {
    case TxStatus::Committed: return "committed";
    case TxStatus::Aborted: return "aborted";
    case TxStatus::CommitPending: return "commit-pending";
    case TxStatus::Live: return "live";
  }
  return "?";
}

// A transaction as a view into an owning action sequence: the indices of its
// actions (all by one thread, starting with begintx).
struct TransactionView {
  ThreadId thread = 0;
  std::vector<std::size_t> span;
  TxStatus status = TxStatus::Live;

  std::size_t first() const { return span.front(); }
  std::size_t last() const { return span.back(); }
  bool completed() const {
    return status == TxStatus::Committed || status == TxStatus::Aborted;
  }
};

struct NontxAccess {
  std::size_t request = 0;
  std::size_t response = 0;
  ThreadId thread = 0;
  std::string reg;
  bool is_write = false;
  Value value = 0;  // written value for writes, returned value for reads
};

struct Violation {
  int condition = 0;  // 1..7
  std::size_t index = 0;
  std::string message;
};

// Structural breakdown of an action sequence: which transaction (if any) each
// action belongs to, the non-transactional access pairs, and fence pairs.
struct Structure {
  std::vector<TransactionView> txs;
  std::vector<NontxAccess> ntxs;
  std::vector<std::pair<std::size_t, std::size_t>> fences;  // fbegin, fend
  // Per action: index into txs, or npos when non-transactional.
  std::vector<std::size_t> tx_of;
  // Per action: index into ntxs, or npos.
  std::vector<std::size_t> ntx_of;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

namespace detail {

// Walks a sequence and assigns every action to a transaction, a non-tx
// access, or a fence. Tolerates malformed sequences (used by the validator).
inline Structure analyze(const std::vector<Action>& seq) {
  Structure st;
  st.tx_of.assign(seq.size(), Structure::npos);
  st.ntx_of.assign(seq.size(), Structure::npos);
  std::map<ThreadId, std::size_t> open_tx;          // thread -> txs index
  std::map<ThreadId, std::size_t> open_ntx_req;     // thread -> request idx
  std::map<ThreadId, std::size_t> open_fence;       // thread -> fbegin idx
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const Action& a = seq[i];
    if (a.kind == Kind::Prim) {
      // Primitive actions inside an open transaction belong to it.
      if (auto it = open_tx.find(a.thread); it != open_tx.end()) {
        st.txs[it->second].span.push_back(i);
        st.tx_of[i] = it->second;
      }
      continue;
    }
    auto in_tx = open_tx.find(a.thread);
    if (a.kind == Kind::BeginTx && in_tx == open_tx.end()) {
      st.txs.push_back(TransactionView{a.thread, {i}, TxStatus::Live});
      st.tx_of[i] = st.txs.size() - 1;
      open_tx[a.thread] = st.txs.size() - 1;
      continue;
    }
    if (in_tx != open_tx.end()) {
      TransactionView& t = st.txs[in_tx->second];
      t.span.push_back(i);
      st.tx_of[i] = in_tx->second;
      if (a.kind == Kind::Committed) {
        t.status = TxStatus::Committed;
        open_tx.erase(in_tx);
      } else if (a.kind == Kind::Aborted) {
        t.status = TxStatus::Aborted;
        open_tx.erase(in_tx);
      }
      continue;
    }
    // Non-transactional interface action.
    if (a.kind == Kind::FBegin) {
      open_fence[a.thread] = i;
    } else if (a.kind == Kind::FEnd) {
      if (auto it = open_fence.find(a.thread); it != open_fence.end()) {
        st.fences.emplace_back(it->second, i);
        open_fence.erase(it);
      }
    } else if (a.kind == Kind::Read || a.kind == Kind::Write) {
      open_ntx_req[a.thread] = i;
    } else if (is_response(a.kind)) {
      if (auto it = open_ntx_req.find(a.thread); it != open_ntx_req.end()) {
        const Action& req = seq[it->second];
        NontxAccess n;
        n.request = it->second;
        n.response = i;
        n.thread = a.thread;
        n.reg = req.reg;
        n.is_write = req.kind == Kind::Write;
        n.value = n.is_write ? req.value : a.value;
        st.ntx_of[n.request] = st.ntxs.size();
        st.ntx_of[i] = st.ntxs.size();
        st.ntxs.push_back(n);
        open_ntx_req.erase(it);
      }
    }
  }
  // Finalize statuses of still-open transactions.
  for (auto& [t, k] : open_tx) {
    TransactionView& tx = st.txs[k];
    const Action& lastact = seq[tx.span.back()];
    tx.status = lastact.kind == Kind::TryCommit ? TxStatus::CommitPending
                                                : TxStatus::Live;
  }
  return st;
}

}  // namespace detail

inline Structure analyze(const Trace& tr) { return detail::analyze(tr.actions); }
inline Structure analyze(const History& h) { return detail::analyze(h.actions); }

// Checks the seven well-formedness conditions and reports every violation.
inline std::vector<Violation> validate_wellformed(
    const std::vector<Action>& seq) {
  std::vector<Violation> out;
  // 1. Unique identifiers.
  {
    std::map<ActionId, std::size_t> seen;
    for (std::size_t i = 0; i < seq.size(); ++i) {
      auto [it, fresh] = seen.emplace(seq[i].id, i);
      if (!fresh)
        out.push_back({1, i,
                       "duplicate action id " + std::to_string(seq[i].id) +
                           " (first at index " + std::to_string(it->second) +
                           ")"});
    }
  }
  // Per-thread projections for conditions 3-5.
  std::map<ThreadId, std::vector<std::size_t>> per_thread;
  for (std::size_t i = 0; i < seq.size(); ++i)
    per_thread[seq[i].thread].push_back(i);

  for (const auto& [t, idxs] : per_thread) {
    // 3. After a request, the thread stays under TM control: the next action
    // of the thread must be a response (a write-back is also TM-side work).
    for (std::size_t k = 0; k + 1 < idxs.size(); ++k) {
      const Action& a = seq[idxs[k]];
      const Action& b = seq[idxs[k + 1]];
      if (is_request(a.kind) && !is_response(b.kind) && b.kind != Kind::Wb)
        out.push_back({3, idxs[k + 1],
                       "thread " + std::to_string(t) +
                           " performs a non-response action while a request "
                           "is pending"});
    }
    // 4. Interface actions alternate request/response with matching kinds.
    std::optional<Kind> pending;
    std::size_t pending_idx = 0;
    for (std::size_t i : idxs) {
      const Action& a = seq[i];
      if (!is_interface(a.kind)) continue;
      if (!pending) {
        if (is_response(a.kind)) {
          out.push_back({4, i, "response without a pending request"});
        } else {
          pending = a.kind;
          pending_idx = i;
        }
      } else {
        if (is_request(a.kind)) {
          out.push_back({4, i, "request while another request is pending"});
          pending = a.kind;  // resynchronize
          pending_idx = i;
        } else if (!matches_request(*pending, a.kind)) {
          out.push_back({4, i,
                         kind_name(a.kind) + " does not answer pending " +
                             kind_name(*pending) + " at index " +
                             std::to_string(pending_idx)});
          pending.reset();
        } else {
          pending.reset();
        }
      }
    }
    // 5. begintx alternates with committed/aborted, starting with begintx.
    bool open = false;
    for (std::size_t i : idxs) {
      const Action& a = seq[i];
      if (a.kind == Kind::BeginTx) {
        if (open) out.push_back({5, i, "begintx inside an open transaction"});
        open = true;
      } else if (a.kind == Kind::Committed) {
        if (!open)
          out.push_back({5, i, "committed without an open transaction"});
        open = false;
      } else if (a.kind == Kind::Aborted) {
        // An aborted answering a non-tx request is condition 7's business;
        // here it only closes a transaction if one is open.
        if (open) open = false;
      }
    }
  }
  // Conditions 6 and 7 need transaction membership.
  Structure st = detail::analyze(seq);
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const Action& a = seq[i];
    bool transactional = st.tx_of[i] != Structure::npos;
    if (transactional) continue;
    if ((a.kind == Kind::Read || a.kind == Kind::Write)) {
      // 6. A non-transactional access is answered immediately.
      if (i + 1 >= seq.size() || seq[i + 1].thread != a.thread ||
          !is_response(seq[i + 1].kind) ||
          !matches_request(a.kind, seq[i + 1].kind))
        out.push_back({6, i,
                       "non-transactional " + kind_name(a.kind) +
                           " is not immediately followed by its response"});
    }
    // 7. Non-transactional requests never fail.
    if (a.kind == Kind::Aborted)
      out.push_back({7, i, "aborted response outside a transaction"});
  }
  return out;
}

inline std::vector<Violation> validate_wellformed(const Trace& tr) {
  return validate_wellformed(tr.actions);
}
inline std::vector<Violation> validate_wellformed(const History& h) {
  return validate_wellformed(h.actions);
}

inline bool is_wellformed(const History& h) {
  return validate_wellformed(h).empty();
}
inline bool is_wellformed(const Trace& t) {
  return validate_wellformed(t).empty();
}

inline History history_of(const Trace& tr) {
  History h;
  for (const auto& a : tr.actions)
    if (is_interface(a.kind)) h.actions.push_back(a);
  return h;
}

inline std::vector<TransactionView> transactions_of(const History& h) {
  return analyze(h).txs;
}

inline std::vector<NontxAccess> nontx_accesses(const History& h) {
  return analyze(h).ntxs;
}

struct ByThread {
  ThreadId thread;
};
struct NontxSelector {};

inline Trace project(const Trace& tr, ByThread sel) {
  Trace out;
  for (const auto& a : tr.actions)
    if (a.thread == sel.thread) out.actions.push_back(a);
  return out;
}

// Keeps exactly the actions belonging to non-transactional access pairs.
inline Trace project(const Trace& tr, NontxSelector) {
  Structure st = analyze(tr);
  Trace out;
  for (std::size_t i = 0; i < tr.actions.size(); ++i)
    if (st.ntx_of[i] != Structure::npos) out.actions.push_back(tr.actions[i]);
  return out;
}

inline ActionId max_id(const std::vector<Action>& seq) {
  ActionId m = 0;
  for (const auto& a : seq) m = std::max(m, a.id);
  return m;
}

}  // namespace tmlab
