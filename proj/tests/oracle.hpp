#pragma once

// Literal "generate and filter" reference semantics for loop-free micro
// programs with constant register writes: every thread behaviour is
// enumerated with arbitrary read values and arbitrary abort points, all
// interleavings are formed, and a candidate survives iff its history is
// atomic. The operational explorer must produce exactly the same trace set.

#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "tmlab/atomic_tm.hpp"
#include "tmlab/explore.hpp"
#include "tmlab/lang.hpp"

namespace tmlab::test {

struct OracleBehavior {
  std::vector<Action> actions;  // ids are placeholders
  lang::Env env;
};

struct OracleResult {
  std::set<std::string> trace_keys;
  std::set<lang::FinalState> finals;
  std::size_t candidates = 0;
};

namespace oracle_detail {

inline std::vector<Value> value_domain(const lang::Program& p) {
  std::set<Value> vals{0};
  for (const auto& [x, v] : p.init) vals.insert(v);
  std::function<void(const lang::Expr&)> ex = [&](const lang::Expr& e) {
    if (e.kind == lang::Expr::Int && e.lit != kCommittedValue &&
        e.lit != kAbortedValue)
      vals.insert(e.lit);
    for (const auto& a : e.args) ex(a);
  };
  std::function<void(const std::vector<lang::Stmt>&)> st =
      [&](const std::vector<lang::Stmt>& body) {
        for (const auto& s : body) {
          if (s.kind == lang::Stmt::WriteReg || s.kind == lang::Stmt::Assign)
            ex(s.expr);
          st(s.body);
          st(s.els);
        }
      };
  for (const auto& t : p.threads) st(t.body);
  return {vals.begin(), vals.end()};
}

struct ThreadEnum {
  const std::vector<lang::Instr>& code;
  ThreadId t;
  std::vector<Value> domain;
  std::vector<OracleBehavior> out;

  void mk(std::vector<Action>& acts, Kind k, std::string reg = "",
          Value v = 0) {
    Action a;
    a.id = 0;
    a.thread = t;
    a.kind = k;
    a.reg = std::move(reg);
    a.value = v;
    acts.push_back(std::move(a));
  }

  // Enumerates from pc with current env/actions. in_atomic carries the
  // rollback snapshot and result local.
  void run(std::size_t pc, lang::Env env, std::vector<Action> acts) {
    for (;;) {
      if (pc >= code.size()) {
        out.push_back(OracleBehavior{std::move(acts), std::move(env)});
        return;
      }
      const lang::Instr& I = code[pc];
      switch (I.op) {
        case lang::Instr::LocalAssign:
          env[I.target] = lang::eval_expr(I.expr, env);
          ++pc;
          break;
        case lang::Instr::Jmp:
          pc = I.a;
          break;
        case lang::Instr::Jz:
          pc = lang::eval_expr(I.expr, env) == 0 ? I.a : pc + 1;
          break;
        case lang::Instr::ReadReg:
          for (Value v : domain) {
            lang::Env e2 = env;
            std::vector<Action> a2 = acts;
            mk(a2, Kind::Read, I.reg);
            mk(a2, Kind::Ret, "", v);
            e2[I.target] = v;
            run(pc + 1, std::move(e2), std::move(a2));
          }
          return;
        case lang::Instr::WriteReg: {
          Value v = lang::eval_expr(I.expr, env);
          mk(acts, Kind::Write, I.reg, v);
          mk(acts, Kind::RetUnit);
          ++pc;
          break;
        }
        case lang::Instr::Begin: {
          // Abort at the begin request.
          {
            lang::Env e2 = env;
            std::vector<Action> a2 = acts;
            mk(a2, Kind::BeginTx);
            mk(a2, Kind::Aborted);
            e2[I.target] = kAbortedValue;
            run(I.a + 1, std::move(e2), std::move(a2));
          }
          {
            std::vector<Action> a2 = acts;
            mk(a2, Kind::BeginTx);
            mk(a2, Kind::Ok);
            block(pc, pc + 1, env, env, std::move(a2));
          }
          return;
        }
        default:
          throw Error("oracle: unexpected instruction");
      }
    }
  }

  // Inside the block opened at begin_pc: body_env mutates, outer_env is the
  // rollback state.
  void block(std::size_t begin_pc, std::size_t pc, lang::Env outer_env,
             lang::Env body_env, std::vector<Action> acts) {
    const lang::Instr& B = code[begin_pc];
    const std::size_t end_pc = B.a;
    for (;;) {
      const lang::Instr& I = code[pc];
      if (pc == end_pc) {
        // trycommit answered either way.
        {
          lang::Env e2 = outer_env;
          std::vector<Action> a2 = acts;
          mk(a2, Kind::TryCommit);
          mk(a2, Kind::Aborted);
          e2[B.target] = kAbortedValue;
          run(end_pc + 1, std::move(e2), std::move(a2));
        }
        {
          lang::Env e2 = body_env;
          std::vector<Action> a2 = acts;
          mk(a2, Kind::TryCommit);
          mk(a2, Kind::Committed);
          e2[B.target] = kCommittedValue;
          run(end_pc + 1, std::move(e2), std::move(a2));
        }
        return;
      }
      switch (I.op) {
        case lang::Instr::LocalAssign:
          body_env[I.target] = lang::eval_expr(I.expr, body_env);
          ++pc;
          break;
        case lang::Instr::Jmp:
          pc = I.a;
          break;
        case lang::Instr::Jz:
          pc = lang::eval_expr(I.expr, body_env) == 0 ? I.a : pc + 1;
          break;
        case lang::Instr::ReadReg: {
          // Abort answering the read request.
          {
            lang::Env e2 = outer_env;
            std::vector<Action> a2 = acts;
            mk(a2, Kind::Read, I.reg);
            mk(a2, Kind::Aborted);
            e2[B.target] = kAbortedValue;
            run(end_pc + 1, std::move(e2), std::move(a2));
          }
          for (Value v : domain) {
            lang::Env e2 = body_env;
            std::vector<Action> a2 = acts;
            mk(a2, Kind::Read, I.reg);
            mk(a2, Kind::Ret, "", v);
            e2[I.target] = v;
            block(begin_pc, pc + 1, outer_env, std::move(e2), std::move(a2));
          }
          return;
        }
        case lang::Instr::WriteReg: {
          Value v = lang::eval_expr(I.expr, body_env);
          {
            lang::Env e2 = outer_env;
            std::vector<Action> a2 = acts;
            mk(a2, Kind::Write, I.reg, v);
            mk(a2, Kind::Aborted);
            e2[B.target] = kAbortedValue;
            run(end_pc + 1, std::move(e2), std::move(a2));
          }
          mk(acts, Kind::Write, I.reg, v);
          mk(acts, Kind::RetUnit);
          ++pc;
          break;
        }
        default:
          throw Error("oracle: unexpected instruction in block");
      }
    }
  }
};

// Final register values of a complete non-interleaved atomic history.
inline lang::Regs replay_regs(const lang::Program& p, const History& h) {
  lang::Regs regs;
  for (const auto& [x, v] : p.init) regs[x] = v;
  std::map<ThreadId, std::map<std::string, Value>> buf;
  std::map<ThreadId, bool> in_tx;
  for (const Action& a : h.actions) {
    switch (a.kind) {
      case Kind::BeginTx: in_tx[a.thread] = true; break;
      case Kind::Write:
        if (in_tx[a.thread])
          buf[a.thread][a.reg] = a.value;
        else
          regs[a.reg] = a.value;
        break;
      case Kind::Committed:
        for (const auto& [x, v] : buf[a.thread]) regs[x] = v;
        [[fallthrough]];
      case Kind::Aborted:
        buf[a.thread].clear();
        in_tx[a.thread] = false;
        break;
      default: break;
    }
  }
  return lang::detail::complete_regs(p, regs);
}

inline void merge(const std::vector<std::vector<Action>*>& seqs,
                  std::vector<std::size_t>& idx, std::vector<Action>& cur,
                  const std::function<void(const std::vector<Action>&)>& sink) {
  bool done = true;
  for (std::size_t k = 0; k < seqs.size(); ++k) {
    if (idx[k] < seqs[k]->size()) {
      done = false;
      cur.push_back((*seqs[k])[idx[k]]);
      ++idx[k];
      merge(seqs, idx, cur, sink);
      --idx[k];
      cur.pop_back();
    }
  }
  if (done) sink(cur);
}

}  // namespace oracle_detail

inline OracleResult oracle_atomic(const lang::Program& p) {
  lang::Compiled c = lang::compile(p);
  auto domain = oracle_detail::value_domain(p);
  std::vector<std::vector<OracleBehavior>> behaviors;
  for (std::size_t ti = 0; ti < c.code.size(); ++ti) {
    oracle_detail::ThreadEnum en{c.code[ti], (ThreadId)(ti + 1), domain, {}};
    en.run(0, {}, {});
    behaviors.push_back(std::move(en.out));
  }
  OracleResult res;

  std::vector<std::size_t> pick(behaviors.size(), 0);
  std::function<void(std::size_t)> combos = [&](std::size_t k) {
    if (k == behaviors.size()) {
      std::vector<std::vector<Action>*> seqs;
      lang::Env env;
      for (std::size_t i = 0; i < behaviors.size(); ++i) {
        seqs.push_back(&behaviors[i][pick[i]].actions);
        for (const auto& [l, v] : behaviors[i][pick[i]].env) env[l] = v;
      }
      std::vector<std::size_t> idx(seqs.size(), 0);
      std::vector<Action> cur;
      oracle_detail::merge(seqs, idx, cur, [&](const std::vector<Action>& as) {
        ++res.candidates;
        History h;
        h.actions = as;
        for (std::size_t i = 0; i < h.actions.size(); ++i)
          h.actions[i].id = (ActionId)(i + 1);
        if (!is_atomic(h, p.init)) return;
        Trace tr;
        tr.actions = h.actions;
        res.trace_keys.insert(lang::obs_key(tr));
        res.finals.insert(
            lang::FinalState{env, oracle_detail::replay_regs(p, h)});
      });
      return;
    }
    for (pick[k] = 0; pick[k] < behaviors[k].size(); ++pick[k]) combos(k + 1);
  };
  combos(0);
  return res;
}

}  // namespace tmlab::test
