#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tmlab/action.hpp"
#include "tmlab/atomic_tm.hpp"
#include "tmlab/history.hpp"
#include "tmlab/lang.hpp"
#include "tmlab/race.hpp"
#include "tmlab/stm.hpp"

namespace tmlab::lang {

struct Bounds {
  int loop = 3;                    // loop unrolling bound per site
  std::size_t max_actions = 400;   // per-trace action budget
  std::size_t max_states = 500000; // exploration budget
};

using Regs = std::map<std::string, Value>;

struct FinalState {
  Env locals;
  Regs regs;
  bool operator<(const FinalState& o) const {
    return locals != o.locals ? locals < o.locals : regs < o.regs;
  }
  bool operator==(const FinalState& o) const {
    return locals == o.locals && regs == o.regs;
  }
};

struct ExploreResult {
  std::vector<Trace> traces;       // maximal traces, deduplicated
  std::set<FinalState> finals;
  std::map<FinalState, Trace> exemplars;  // one trace per final state
  bool partial = false;            // some branch hit a bound
  std::size_t states = 0;
  std::vector<std::string> diagnostics;
};

// ---------------------------------------------------------------------------
// Observational equivalence and refinement
// ---------------------------------------------------------------------------

namespace detail {

inline std::string obs_token(const Action& a) {
  std::string s = kind_name(a.kind);
  if (!a.reg.empty()) s += "," + a.reg;
  if (a.kind == Kind::Write || a.kind == Kind::Ret || a.kind == Kind::Wb)
    s += "," + std::to_string(a.value);
  s += ";";
  return s;
}

}  // namespace detail

// Canonical key of a trace's observable behaviour: the per-thread
// projections and the subsequence of non-transactional accesses (with the
// threads performing them). Ids and internal actions are ignored.
inline std::string obs_key(const Trace& tr) {
  History h = history_of(tr);
  std::map<ThreadId, std::string> per;
  for (const Action& a : h.actions) per[a.thread] += detail::obs_token(a);
  Structure st = analyze(h);
  std::string out;
  for (const auto& [t, s] : per)
    out += "t" + std::to_string(t) + "{" + s + "}";
  out += "ntx{";
  for (std::size_t i = 0; i < h.actions.size(); ++i)
    if (st.ntx_of[i] != Structure::npos)
      out += "t" + std::to_string(h.actions[i].thread) + ":" +
             detail::obs_token(h.actions[i]);
  out += "}";
  return out;
}

inline bool obs_equiv(const Trace& a, const Trace& b) {
  return obs_key(a) == obs_key(b);
}

struct RefinesResult {
  bool ok = true;
  std::optional<Trace> unmatched;
};

inline RefinesResult refines(const std::vector<Trace>& a,
                             const std::vector<Trace>& b) {
  std::set<std::string> keys;
  for (const Trace& t : b) keys.insert(obs_key(t));
  for (const Trace& t : a)
    if (!keys.count(obs_key(t))) return {false, t};
  return {};
}

// ---------------------------------------------------------------------------
// Shared interpreter plumbing
// ---------------------------------------------------------------------------

namespace detail {

struct ThreadPos {
  std::size_t pc = 0;
  std::map<int, int> loop_cnt;
};

// Executes local computation up to the next shared-memory instruction
// (ReadReg/WriteReg/Begin/End) or thread completion. Returns false when a
// loop exceeds its unrolling bound: the branch must be abandoned.
inline bool advance_locals(const std::vector<Instr>& code, ThreadPos& tp,
                           Env& env, int loop_bound) {
  for (;;) {
    if (tp.pc >= code.size()) return true;
    const Instr& I = code[tp.pc];
    switch (I.op) {
      case Instr::LocalAssign:
        env[I.target] = eval_expr(I.expr, env);
        ++tp.pc;
        break;
      case Instr::Jmp:
        tp.pc = I.a;
        break;
      case Instr::Jz:
        if (eval_expr(I.expr, env) == 0) {
          if (I.b >= 0) tp.loop_cnt[I.b] = 0;
          tp.pc = I.a;
        } else {
          if (I.b >= 0 && tp.loop_cnt[I.b]++ >= loop_bound) return false;
          ++tp.pc;
        }
        break;
      case Instr::Back:
        tp.pc = I.a;
        break;
      case Instr::JnzBack:
        if (eval_expr(I.expr, env) != 0) {
          if (tp.loop_cnt[I.b]++ >= loop_bound) return false;
          tp.pc = I.a;
        } else {
          tp.loop_cnt[I.b] = 0;
          ++tp.pc;
        }
        break;
      default:
        return true;
    }
  }
}

inline Action mk(ActionId& id, ThreadId t, Kind k, std::string reg = "",
                 Value v = 0) {
  Action a;
  a.id = id++;
  a.thread = t;
  a.kind = k;
  a.reg = std::move(reg);
  a.value = v;
  return a;
}

inline Regs complete_regs(const Program& p, const Regs& regs) {
  Regs out;
  for (const auto& x : p.regs) {
    auto it = regs.find(x);
    if (it != regs.end()) {
      out[x] = it->second;
    } else {
      auto in = p.init.find(x);
      out[x] = in != p.init.end() ? in->second : 0;
    }
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Strongly atomic exploration: atomic blocks and non-transactional accesses
// are indivisible units; blocks may nondeterministically abort at the block
// start, at any operation request, or at the commit request.
// ---------------------------------------------------------------------------

inline ExploreResult explore_atomic(const Program& p, const Bounds& bounds) {
  Compiled c = compile(p);
  ExploreResult res;
  std::set<std::string> seen_traces;

  struct State {
    std::vector<detail::ThreadPos> pos;
    Env env;
    Regs regs;
    History h;
    ActionId id = 1;
  };

  State init;
  init.pos.resize(c.code.size());
  for (const auto& [x, v] : p.init) init.regs[x] = v;

  auto record = [&](const State& st) {
    Trace tr;
    tr.actions = st.h.actions;
    FinalState f{st.env, detail::complete_regs(p, st.regs)};
    if (res.finals.insert(f).second) res.exemplars.emplace(std::move(f), tr);
    if (seen_traces.insert(obs_key(tr) + "|" + serialize_history(st.h))
            .second)
      res.traces.push_back(std::move(tr));
  };

  auto dfs = [&](auto&& self, State st) -> void {
    if (++res.states > bounds.max_states ||
        st.h.actions.size() > bounds.max_actions) {
      res.partial = true;
      return;
    }
    // Run every thread's local computation to its next unit.
    for (std::size_t t = 0; t < c.code.size(); ++t)
      if (!detail::advance_locals(c.code[t], st.pos[t], st.env,
                                  bounds.loop)) {
        res.partial = true;
        return;
      }
    bool any = false;
    for (std::size_t ti = 0; ti < c.code.size(); ++ti) {
      if (st.pos[ti].pc >= c.code[ti].size()) continue;
      any = true;
      const ThreadId t = (ThreadId)(ti + 1);
      const Instr& I = c.code[ti][st.pos[ti].pc];
      if (I.op == Instr::ReadReg) {
        State nx = st;
        Value v = nx.regs.count(I.reg) ? nx.regs[I.reg] : 0;
        nx.h.actions.push_back(detail::mk(nx.id, t, Kind::Read, I.reg));
        nx.h.actions.push_back(detail::mk(nx.id, t, Kind::Ret, "", v));
        nx.env[I.target] = v;
        ++nx.pos[ti].pc;
        self(self, std::move(nx));
      } else if (I.op == Instr::WriteReg) {
        State nx = st;
        Value v = eval_expr(I.expr, nx.env);
        nx.h.actions.push_back(detail::mk(nx.id, t, Kind::Write, I.reg, v));
        nx.h.actions.push_back(detail::mk(nx.id, t, Kind::RetUnit));
        nx.regs[I.reg] = v;
        ++nx.pos[ti].pc;
        self(self, std::move(nx));
      } else if (I.op == Instr::Begin) {
        // Deterministically simulate the block body on working copies,
        // collecting its operation actions.
        const std::size_t end_pc = I.a;
        Env env2 = st.env;
        Regs regs2 = st.regs;
        detail::ThreadPos tp2 = st.pos[ti];
        ++tp2.pc;
        std::vector<std::pair<Action, Action>> ops;  // request/response
        ActionId dummy = 1;
        bool can_commit = true;
        for (;;) {
          if (!detail::advance_locals(c.code[ti], tp2, env2, bounds.loop)) {
            res.partial = true;
            can_commit = false;  // the body diverges at the bound
            break;
          }
          const Instr& J = c.code[ti][tp2.pc];
          if (J.op == Instr::End) break;
          if (J.op == Instr::ReadReg) {
            Value v = regs2.count(J.reg) ? regs2[J.reg] : 0;
            ops.emplace_back(detail::mk(dummy, t, Kind::Read, J.reg),
                             detail::mk(dummy, t, Kind::Ret, "", v));
            env2[J.target] = v;
          } else {  // WriteReg
            Value v = eval_expr(J.expr, env2);
            ops.emplace_back(detail::mk(dummy, t, Kind::Write, J.reg, v),
                             detail::mk(dummy, t, Kind::RetUnit));
            regs2[J.reg] = v;
          }
          ++tp2.pc;
        }
        auto branch = [&](std::size_t upto, bool commit, bool with_commit_req) {
          State nx = st;
          nx.h.actions.push_back(detail::mk(nx.id, t, Kind::BeginTx));
          if (upto == 0 && !commit && !with_commit_req) {
            // abort answered straight at the block start
          } else {
            nx.h.actions.push_back(detail::mk(nx.id, t, Kind::Ok));
          }
          for (std::size_t k = 0; k + 1 < upto; ++k) {
            Action rq = ops[k].first, rs = ops[k].second;
            rq.id = nx.id++;
            rs.id = nx.id++;
            nx.h.actions.push_back(rq);
            nx.h.actions.push_back(rs);
          }
          if (upto > 0) {  // the aborted request itself
            Action rq = ops[upto - 1].first;
            rq.id = nx.id++;
            nx.h.actions.push_back(rq);
            if (commit || with_commit_req) {
              Action rs = ops[upto - 1].second;
              rs.id = nx.id++;
              nx.h.actions.push_back(rs);
            }
          }
          if (with_commit_req)
            nx.h.actions.push_back(detail::mk(nx.id, t, Kind::TryCommit));
          nx.h.actions.push_back(detail::mk(
              nx.id, t, commit ? Kind::Committed : Kind::Aborted));
          if (commit) {
            nx.env = env2;
            nx.regs = regs2;
            nx.env[I.target] = kCommittedValue;
            nx.pos[ti].loop_cnt = tp2.loop_cnt;
          } else {
            nx.env[I.target] = kAbortedValue;  // loop counters roll back too
          }
          nx.pos[ti].pc = end_pc + 1;
          self(self, std::move(nx));
        };
        branch(0, false, false);  // begintx answered by aborted
        for (std::size_t k = 1; k <= ops.size(); ++k)
          branch(k, false, false);  // abort at the k-th operation request
        if (can_commit) {
          // upto = ops.size() with full responses, then trycommit.
          {
            State nx = st;
            nx.h.actions.push_back(detail::mk(nx.id, t, Kind::BeginTx));
            nx.h.actions.push_back(detail::mk(nx.id, t, Kind::Ok));
            for (auto& [rq0, rs0] : ops) {
              Action rq = rq0, rs = rs0;
              rq.id = nx.id++;
              rs.id = nx.id++;
              nx.h.actions.push_back(rq);
              nx.h.actions.push_back(rs);
            }
            nx.h.actions.push_back(detail::mk(nx.id, t, Kind::TryCommit));
            nx.h.actions.push_back(detail::mk(nx.id, t, Kind::Aborted));
            nx.env[I.target] = kAbortedValue;
            nx.pos[ti].pc = end_pc + 1;
            self(self, std::move(nx));
          }
          {
            State nx = st;
            nx.h.actions.push_back(detail::mk(nx.id, t, Kind::BeginTx));
            nx.h.actions.push_back(detail::mk(nx.id, t, Kind::Ok));
            for (auto& [rq0, rs0] : ops) {
              Action rq = rq0, rs = rs0;
              rq.id = nx.id++;
              rs.id = nx.id++;
              nx.h.actions.push_back(rq);
              nx.h.actions.push_back(rs);
            }
            nx.h.actions.push_back(detail::mk(nx.id, t, Kind::TryCommit));
            nx.h.actions.push_back(detail::mk(nx.id, t, Kind::Committed));
            nx.env = env2;
            nx.regs = regs2;
            nx.env[I.target] = kCommittedValue;
            nx.pos[ti].loop_cnt = tp2.loop_cnt;
            nx.pos[ti].pc = end_pc + 1;
            self(self, std::move(nx));
          }
        }
      }
    }
    if (!any) record(st);
  };

  dfs(dfs, std::move(init));
  return res;
}

// ---------------------------------------------------------------------------
// Machine-driven exploration: program threads submit requests to a TM
// step-machine; the scheduler interleaves machine micro-steps. States are
// deduplicated up to observational equivalence of the trace prefix.
// ---------------------------------------------------------------------------

template <class M>
ExploreResult explore(const Program& p, const M& proto, const Bounds& bounds) {
  Compiled c = compile(p);
  ExploreResult res;
  std::set<std::string> seen_traces, memo;

  struct MT {
    detail::ThreadPos pos;
    bool await = false;
    bool in_atomic = false;
    std::string atomic_lv;
    std::size_t end_pc = 0;
    Env saved;  // own locals at block entry
  };

  struct State {
    M m;
    std::vector<MT> th;
    Env env;
    Trace exec;
    ActionId id = 1;
  };

  State init{proto, {}, {}, {}, 1};
  init.th.resize(c.code.size());
  for (const auto& [x, v] : p.init) init.m.mem[x] = v;

  auto state_key = [&](const State& st) {
    std::string k = st.m.key() + "#";
    for (const MT& mt : st.th) {
      k += std::to_string(mt.pos.pc) + "," + std::to_string(mt.await) + "," +
           std::to_string(mt.in_atomic) + ";";
      for (const auto& [s2, n] : mt.pos.loop_cnt)
        k += std::to_string(s2) + ":" + std::to_string(n) + ",";
    }
    k += "#";
    for (const auto& [l, v] : st.env) k += l + "=" + std::to_string(v) + ",";
    k += "#" + obs_key(st.exec);
    return k;
  };

  // Applies the response a thread just received and resumes its local code.
  // Returns false when the branch must be abandoned (loop bound).
  auto apply_response = [&](State& st, std::size_t ti, const Action& a) {
    MT& mt = st.th[ti];
    const Instr& I = c.code[ti][mt.pos.pc];
    mt.await = false;
    switch (a.kind) {
      case Kind::Ok:
        mt.in_atomic = true;
        mt.atomic_lv = I.target;
        mt.end_pc = I.a;
        mt.saved.clear();
        for (const auto& l : c.own_locals[ti]) {
          auto it = st.env.find(l);
          if (it != st.env.end()) mt.saved[l] = it->second;
        }
        ++mt.pos.pc;
        break;
      case Kind::Ret:
        st.env[I.target] = a.value;
        ++mt.pos.pc;
        break;
      case Kind::RetUnit:
        ++mt.pos.pc;
        break;
      case Kind::Committed:
        st.env[mt.atomic_lv] = kCommittedValue;
        mt.in_atomic = false;
        ++mt.pos.pc;  // past End
        break;
      case Kind::Aborted: {
        std::string lv;
        std::size_t end;
        if (mt.in_atomic) {
          lv = mt.atomic_lv;
          end = mt.end_pc;
          for (const auto& l : c.own_locals[ti]) {
            auto it = mt.saved.find(l);
            if (it != mt.saved.end())
              st.env[l] = it->second;
            else
              st.env.erase(l);
          }
        } else {  // abort answered the begin request itself
          lv = I.target;
          end = I.a;
        }
        st.env[lv] = kAbortedValue;
        mt.in_atomic = false;
        mt.pos.pc = end + 1;
        break;
      }
      default:
        throw Error("explore: unexpected response kind");
    }
    return detail::advance_locals(c.code[ti], mt.pos, st.env, bounds.loop);
  };

  // One machine step for thread t; processes any response it emits.
  auto step_thread = [&](State& st, std::size_t ti) -> std::optional<bool> {
    const ThreadId t = (ThreadId)(ti + 1);
    std::size_t before = st.exec.actions.size();
    StepCtx ctx{&st.exec, &st.id};
    StepStatus s = st.m.step(t, ctx);
    if (s == StepStatus::Blocked) return std::nullopt;  // no state change
    for (std::size_t i = before; i < st.exec.actions.size(); ++i) {
      const Action& a = st.exec.actions[i];
      if (a.thread == t && is_response(a.kind))
        return apply_response(st, ti, a);
    }
    return true;  // silent progress (validation, fence, write-back)
  };

  auto record = [&](State& st) {
    if (seen_traces.insert(serialize_execution(st.exec)).second)
      res.traces.push_back(st.exec);
    Regs regs;
    for (const auto& [x, v] : st.m.mem) regs[x] = v;
    FinalState f{st.env, detail::complete_regs(p, regs)};
    if (res.finals.insert(f).second)
      res.exemplars.emplace(std::move(f), st.exec);
  };

  auto dfs = [&](auto&& self, State st) -> void {
    if (++res.states > bounds.max_states ||
        st.exec.actions.size() > bounds.max_actions) {
      res.partial = true;
      return;
    }
    if (!memo.insert(state_key(st)).second) return;
    bool all_done = true, any_move = false;
    for (std::size_t ti = 0; ti < c.code.size(); ++ti) {
      const ThreadId t = (ThreadId)(ti + 1);
      MT& mt = st.th[ti];
      bool done = !mt.await && mt.pos.pc >= c.code[ti].size();
      if (!done) all_done = false;
      if (mt.await) {
        if (st.m.runnable(t)) {
          any_move = true;
          State nx = st;
          auto r = step_thread(nx, ti);
          if (r) {
            if (*r)
              self(self, std::move(nx));
            else
              res.partial = true;
          }
        }
        continue;
      }
      if (done) continue;
      if (!st.m.idle(t)) {
        // A post-transaction fence is pending; stepping clears it.
        if (st.m.runnable(t)) {
          any_move = true;
          State nx = st;
          auto r = step_thread(nx, ti);
          if (r) self(self, std::move(nx));
        }
        continue;
      }
      const Instr& I = c.code[ti][mt.pos.pc];
      any_move = true;
      State nx = st;
      MT& nmt = nx.th[ti];
      switch (I.op) {
        case Instr::ReadReg:
        case Instr::WriteReg: {
          Kind k = I.op == Instr::ReadReg ? Kind::Read : Kind::Write;
          Value v =
              I.op == Instr::WriteReg ? eval_expr(I.expr, nx.env) : 0;
          nx.exec.actions.push_back(detail::mk(nx.id, t, k, I.reg, v));
          nx.m.submit(t, PendingReq{k, I.reg, v});
          if (nmt.in_atomic) {
            nmt.await = true;
            self(self, std::move(nx));
          } else {
            // Non-transactional accesses are answered immediately: drive
            // this thread to the response before any interleaving.
            nmt.await = true;
            bool ok = true;
            for (int g = 0; nmt.await; ++g) {
              if (g > 8) throw Error("non-transactional access not immediate");
              auto r = step_thread(nx, ti);
              if (!r) throw Error("non-transactional access blocked");
              if (!*r) {
                ok = false;
                break;
              }
            }
            if (ok)
              self(self, std::move(nx));
            else
              res.partial = true;
          }
          break;
        }
        case Instr::Begin:
          nx.exec.actions.push_back(detail::mk(nx.id, t, Kind::BeginTx));
          nx.m.submit(t, PendingReq{Kind::BeginTx, "", 0});
          nmt.await = true;
          self(self, std::move(nx));
          break;
        case Instr::End:
          nx.exec.actions.push_back(detail::mk(nx.id, t, Kind::TryCommit));
          nx.m.submit(t, PendingReq{Kind::TryCommit, "", 0});
          nmt.await = true;
          self(self, std::move(nx));
          break;
        default:
          throw Error("explore: unexpected instruction at a unit boundary");
      }
    }
    if (all_done) {
      record(st);
    } else if (!any_move) {
      res.diagnostics.push_back("stuck state: no runnable thread");
    }
  };

  {
    // Initial local computation.
    State st = std::move(init);
    bool ok = true;
    for (std::size_t ti = 0; ti < c.code.size(); ++ti)
      if (!detail::advance_locals(c.code[ti], st.th[ti].pos, st.env,
                                  bounds.loop))
        ok = false;
    if (ok)
      dfs(dfs, std::move(st));
    else
      res.partial = true;
  }
  return res;
}

inline ExploreResult explore(const Program& p, Alg alg, const Bounds& bounds) {
  switch (alg) {
    case Alg::FencedTl2: return explore(p, Tl2Tm(true), bounds);
    case Alg::PlainTl2: return explore(p, Tl2Tm(false), bounds);
    case Alg::TwoPl: return explore(p, TwoPlTm{}, bounds);
    case Alg::GlobalLock: return explore(p, GlobalLockTm{}, bounds);
  }
  throw Error("unknown algorithm");
}

// ---------------------------------------------------------------------------
// Program-level verdicts
// ---------------------------------------------------------------------------

struct TdrfProgramResult {
  bool ok = true;
  bool partial = false;
  std::optional<History> racy;
};

inline TdrfProgramResult tdrf_program(const Program& p, const Bounds& bounds) {
  ExploreResult r = explore_atomic(p, bounds);
  TdrfProgramResult out;
  out.partial = r.partial;
  std::set<std::string> seen;
  for (const Trace& tr : r.traces) {
    History h = history_of(tr);
    if (!seen.insert(serialize_history(h)).second) continue;
    if (!tdrf(h, p.init).ok) {
      out.ok = false;
      out.racy = std::move(h);
      return out;
    }
  }
  return out;
}

struct PostcondResult {
  bool ok = true;
  bool partial = false;
  std::optional<FinalState> failing;
};

inline PostcondResult check_postcondition(const ExploreResult& r,
                                          const Program& p) {
  PostcondResult out;
  out.partial = r.partial;
  if (!p.post) return out;
  for (const FinalState& f : r.finals) {
    Env env = f.locals;
    for (const auto& [x, v] : f.regs) env[x] = v;
    if (eval_expr(*p.post, env) == 0) {
      out.ok = false;
      out.failing = f;
      return out;
    }
  }
  return out;
}

}  // namespace tmlab::lang
