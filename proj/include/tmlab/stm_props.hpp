#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tmlab/action.hpp"
#include "tmlab/stm.hpp"

namespace tmlab {

struct PropResult {
  bool ok = true;
  Trace witness;     // execution prefix leading to the stuck request
  ThreadId thread = 0;
  std::string note;
};

namespace detail {

// Steps thread t alone until it emits a response to its pending request.
// Fails on a blocked machine, an exhausted step budget, or (when
// forbid_abort) an aborted response.
template <class M>
bool drive_to_response(M& m, ThreadId t, Trace& exec, ActionId& next_id,
                       bool forbid_abort) {
  StepCtx ctx{&exec, &next_id};
  std::size_t scan = exec.actions.size();
  for (int i = 0; i < 64; ++i) {
    StepStatus st = m.step(t, ctx);
    if (st == StepStatus::Blocked) return false;
    for (; scan < exec.actions.size(); ++scan) {
      const Action& a = exec.actions[scan];
      if (a.thread == t && is_response(a.kind))
        return !(forbid_abort && a.kind == Kind::Aborted);
    }
    if (st == StepStatus::Idle) return false;
  }
  return false;
}

inline Action make_request(ActionId& next_id, ThreadId t,
                           const PendingReq& req) {
  Action a;
  a.id = next_id++;
  a.thread = t;
  a.kind = req.kind;
  a.reg = req.reg;
  a.value = req.value;
  return a;
}

}  // namespace detail

// Bounded check of solo progress: in every reachable execution (up to
// `depth` actions) with at most one uncompleted transaction whose last
// interface action is a request, the requesting thread alone can reach a
// matching response.
template <class M>
PropResult check_progressive_bounded(const M& proto, int depth) {
  PropResult res;
  const std::vector<ThreadId> threads{1, 2};
  // State -> largest remaining budget it was explored with; a revisit with
  // more budget re-expands, so coverage up to the bound is complete.
  std::map<std::string, int> seen;

  using Pend = std::map<ThreadId, PendingReq>;
  std::function<bool(const M&, const Pend&, const Trace&, ActionId)> dfs =
      [&](const M& m, const Pend& pend, const Trace& exec,
          ActionId next_id) -> bool {
    int budget = depth - (int)exec.actions.size();
    auto [it, fresh] = seen.emplace(m.key(), budget);
    if (!fresh) {
      if (it->second >= budget) return true;
      it->second = budget;
    }

    // The solo-completion obligation at this state.
    for (const auto& [t, req] : pend) {
      bool tx_shape =
          (req.kind == Kind::BeginTx && !m.in_tx(t) &&
           m.uncompleted_count() == 0) ||
          (m.in_tx(t) && m.uncompleted_count() == 1);
      if (!tx_shape) continue;
      M clone = m;
      Trace solo = exec;
      ActionId id = next_id;
      if (!detail::drive_to_response(clone, t, solo, id, false)) {
        res.ok = false;
        res.witness = solo;
        res.thread = t;
        res.note = "request by thread " + std::to_string(t) +
                   " cannot complete solo";
        return false;
      }
    }
    if ((int)exec.actions.size() >= depth) return true;

    for (ThreadId t : threads) {
      if (m.runnable(t)) {
        M clone = m;
        Trace e2 = exec;
        ActionId id = next_id;
        StepCtx ctx{&e2, &id};
        StepStatus st = clone.step(t, ctx);
        Pend p2 = pend;
        for (std::size_t i = exec.actions.size(); i < e2.actions.size(); ++i)
          if (e2.actions[i].thread == t && is_response(e2.actions[i].kind))
            p2.erase(t);
        if (st != StepStatus::Idle && !dfs(clone, p2, e2, id)) return false;
      }
      if (!pend.count(t) && m.idle(t)) {
        std::vector<PendingReq> menu;
        if (m.in_tx(t)) {
          menu.push_back({Kind::Read, "x", 0});
          menu.push_back({Kind::Read, "y", 0});
          menu.push_back({Kind::Write, "x", 1});
          menu.push_back({Kind::Write, "y", 1});
          menu.push_back({Kind::TryCommit, "", 0});
        } else {
          menu.push_back({Kind::BeginTx, "", 0});
          menu.push_back({Kind::Read, "x", 0});
          menu.push_back({Kind::Write, "x", 1});
        }
        for (const PendingReq& req : menu) {
          M clone = m;
          Trace e2 = exec;
          ActionId id = next_id;
          e2.actions.push_back(detail::make_request(id, t, req));
          clone.submit(t, req);
          Pend p2 = pend;
          p2[t] = req;
          if (!dfs(clone, p2, e2, id)) return false;
        }
      }
    }
    return true;
  };

  dfs(proto, {}, Trace{}, 1);
  return res;
}

// Bounded check of invisible reads: after a transaction T has performed
// only reads, a second transaction T' whose operations conflict only with
// those reads must be able to finish each of its requests solo without
// aborting.
template <class M>
PropResult check_invisible_reads_bounded(const M& proto, int /*depth*/) {
  const ThreadId reader = 1, other = 2;
  std::vector<std::vector<std::string>> read_sets = {{"x"}, {"x", "y"}};
  // Scripts for T': registers it touches were only read by T.
  std::vector<std::vector<PendingReq>> scripts = {
      {{Kind::BeginTx, "", 0}, {Kind::Write, "x", 7}, {Kind::TryCommit, "", 0}},
      {{Kind::BeginTx, "", 0}, {Kind::Read, "x", 0}, {Kind::TryCommit, "", 0}},
      {{Kind::BeginTx, "", 0},
       {Kind::Read, "x", 0},
       {Kind::Write, "x", 7},
       {Kind::TryCommit, "", 0}}};

  for (const auto& rs : read_sets) {
    for (const auto& script : scripts) {
      M m = proto;
      Trace exec;
      ActionId id = 1;
      // T opens a transaction and reads; it stays uncompleted.
      std::vector<PendingReq> tops{{Kind::BeginTx, "", 0}};
      for (const auto& x : rs) tops.push_back({Kind::Read, x, 0});
      bool setup_ok = true;
      for (const PendingReq& req : tops) {
        exec.actions.push_back(detail::make_request(id, reader, req));
        m.submit(reader, req);
        if (!detail::drive_to_response(m, reader, exec, id, true)) {
          setup_ok = false;  // reader could not even set up; skip scenario
          break;
        }
      }
      if (!setup_ok) continue;
      for (const PendingReq& req : script) {
        exec.actions.push_back(detail::make_request(id, other, req));
        m.submit(other, req);
        if (!detail::drive_to_response(m, other, exec, id, true)) {
          PropResult res;
          res.ok = false;
          res.witness = exec;
          res.thread = other;
          res.note = "request conflicting only with reads cannot finish"
                     " without aborting";
          return res;
        }
      }
    }
  }
  return PropResult{};
}

inline PropResult check_progressive_bounded(Alg alg, int depth) {
  switch (alg) {
    case Alg::FencedTl2: return check_progressive_bounded(Tl2Tm(true), depth);
    case Alg::PlainTl2: return check_progressive_bounded(Tl2Tm(false), depth);
    case Alg::TwoPl: return check_progressive_bounded(TwoPlTm{}, depth);
    case Alg::GlobalLock:
      return check_progressive_bounded(GlobalLockTm{}, depth);
  }
  throw Error("unknown algorithm");
}

inline PropResult check_invisible_reads_bounded(Alg alg, int depth) {
  switch (alg) {
    case Alg::FencedTl2:
      return check_invisible_reads_bounded(Tl2Tm(true), depth);
    case Alg::PlainTl2:
      return check_invisible_reads_bounded(Tl2Tm(false), depth);
    case Alg::TwoPl: return check_invisible_reads_bounded(TwoPlTm{}, depth);
    case Alg::GlobalLock:
      return check_invisible_reads_bounded(GlobalLockTm{}, depth);
  }
  throw Error("unknown algorithm");
}

}  // namespace tmlab
