#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tmlab/action.hpp"
#include "tmlab/history.hpp"

namespace tmlab {

enum class Alg { FencedTl2, PlainTl2, TwoPl, GlobalLock };

inline std::optional<Alg> parse_alg(const std::string& s) {
  if (s == "fencedtl2") return Alg::FencedTl2;
  if (s == "tl2") return Alg::PlainTl2;
  if (s == "2pl") return Alg::TwoPl;
  if (s == "globallock") return Alg::GlobalLock;
  return std::nullopt;
}

inline std::string alg_name(Alg a) {
  switch (a) {
    case Alg::FencedTl2: return "fencedtl2";
    case Alg::PlainTl2: return "tl2";
    case Alg::TwoPl: return "2pl";
    case Alg::GlobalLock: return "globallock";
  }
  return "?";
}

// Shared context handed to machine steps: the recorded execution and the
// id counter for emitted actions.
struct StepCtx {
  Trace* exec = nullptr;
  ActionId* next_id = nullptr;

  Action& emit(ThreadId t, Kind k, std::string reg = "", Value v = 0) {
    Action a;
    a.id = (*next_id)++;
    a.thread = t;
    a.kind = k;
    a.reg = std::move(reg);
    a.value = v;
    exec->actions.push_back(std::move(a));
    return exec->actions.back();
  }
};

enum class StepStatus { Progress, Blocked, Idle };

struct PendingReq {
  Kind kind = Kind::BeginTx;
  std::string reg;
  Value value = 0;
};

// ---------------------------------------------------------------------------
// GlobalLock: one lock guards every transaction; writes are buffered and
// flushed in a single commit step, so non-transactional readers never see a
// half-applied transaction.
// ---------------------------------------------------------------------------

class GlobalLockTm {
 public:
  std::map<std::string, Value> mem;

  void submit(ThreadId t, const PendingReq& req) { th(t).pending = req; }

  bool idle(ThreadId t) const {
    auto it = threads_.find(t);
    return it == threads_.end() || !it->second.pending;
  }

  bool in_tx(ThreadId t) const {
    auto it = threads_.find(t);
    return it != threads_.end() && it->second.active;
  }

  std::size_t uncompleted_count() const {
    std::size_t n = 0;
    for (const auto& [t, st] : threads_) n += st.active ? 1 : 0;
    return n;
  }

  bool runnable(ThreadId t) const {
    auto it = threads_.find(t);
    if (it == threads_.end() || !it->second.pending) return false;
    if (it->second.pending->kind == Kind::BeginTx)
      return !owner_ || *owner_ == t;
    return true;
  }

  StepStatus step(ThreadId t, StepCtx& ctx) {
    Thread& s = th(t);
    if (!s.pending) return StepStatus::Idle;
    const PendingReq req = *s.pending;
    switch (req.kind) {
      case Kind::BeginTx:
        if (owner_ && *owner_ != t) return StepStatus::Blocked;
        owner_ = t;
        s.active = true;
        s.pending.reset();
        ctx.emit(t, Kind::Ok);
        return StepStatus::Progress;
      case Kind::Read: {
        auto b = s.buf.find(req.reg);
        Value v = s.active && b != s.buf.end() ? b->second : mem[req.reg];
        s.pending.reset();
        ctx.emit(t, Kind::Ret, "", v);
        return StepStatus::Progress;
      }
      case Kind::Write:
        if (s.active)
          s.buf[req.reg] = req.value;
        else
          mem[req.reg] = req.value;  // non-transactional: straight to memory
        s.pending.reset();
        ctx.emit(t, Kind::RetUnit);
        return StepStatus::Progress;
      case Kind::TryCommit:
        // Flush the whole buffer in one indivisible step.
        for (const auto& [x, v] : s.buf) {
          mem[x] = v;
          ctx.emit(t, Kind::Wb, x, v);
        }
        s.buf.clear();
        s.active = false;
        owner_.reset();
        s.pending.reset();
        ctx.emit(t, Kind::Committed);
        return StepStatus::Progress;
      default:
        throw Error("globallock: unexpected request kind");
    }
  }

  std::string key() const {
    std::ostringstream os;
    os << "GL;" << (owner_ ? std::to_string(*owner_) : "-") << ';';
    for (const auto& [x, v] : mem) os << x << '=' << v << ',';
    for (const auto& [t, s] : threads_) {
      os << '|' << t << ':' << s.active;
      if (s.pending)
        os << kind_name(s.pending->kind) << s.pending->reg << s.pending->value;
      for (const auto& [x, v] : s.buf) os << x << '=' << v << ',';
    }
    return os.str();
  }

 private:
  struct Thread {
    std::optional<PendingReq> pending;
    bool active = false;
    std::map<std::string, Value> buf;
  };
  Thread& th(ThreadId t) { return threads_[t]; }

  std::optional<ThreadId> owner_;
  std::map<ThreadId, Thread> threads_;
};

// ---------------------------------------------------------------------------
// TL2 (plain and fenced): global version clock, per-register versioned
// try-locks, lazy write buffering, validation at read time and at commit.
// The fenced variant waits after every transaction end until all
// transactions active at that moment have completed.
// ---------------------------------------------------------------------------

class Tl2Tm {
 public:
  explicit Tl2Tm(bool fenced = false) : fenced_(fenced) {}

  std::map<std::string, Value> mem;

  void submit(ThreadId t, const PendingReq& req) { th(t).pending = req; }

  bool idle(ThreadId t) const {
    auto it = threads_.find(t);
    if (it == threads_.end()) return true;
    return !it->second.pending && it->second.fence.empty();
  }

  bool in_tx(ThreadId t) const {
    auto it = threads_.find(t);
    return it != threads_.end() && it->second.active;
  }

  std::size_t uncompleted_count() const {
    std::size_t n = 0;
    for (const auto& [t, st] : threads_) n += st.active ? 1 : 0;
    return n;
  }

  bool runnable(ThreadId t) const {
    auto it = threads_.find(t);
    if (it == threads_.end()) return false;
    const Thread& s = it->second;
    if (!s.fence.empty()) return fence_cleared(s);
    return s.pending.has_value();  // every pending step makes progress
  }

  StepStatus step(ThreadId t, StepCtx& ctx) {
    Thread& s = th(t);
    if (!s.fence.empty()) {  // the fence gates everything after a commit/abort
      if (!fence_cleared(s)) return StepStatus::Blocked;
      s.fence.clear();
      return StepStatus::Progress;
    }
    if (!s.pending) return StepStatus::Idle;
    const PendingReq req = *s.pending;
    switch (req.kind) {
      case Kind::BeginTx:
        s.rv = gv_;
        s.active = true;
        s.tx_seq = ++seq_;
        s.pending.reset();
        ctx.emit(t, Kind::Ok);
        return StepStatus::Progress;
      case Kind::Read: {
        if (!s.active) {  // non-transactional: uninstrumented memory read
          s.pending.reset();
          ctx.emit(t, Kind::Ret, "", mem[req.reg]);
          return StepStatus::Progress;
        }
        auto b = s.wbuf.find(req.reg);
        if (b != s.wbuf.end()) {
          s.pending.reset();
          ctx.emit(t, Kind::Ret, "", b->second);
          return StepStatus::Progress;
        }
        Reg& r = reg(req.reg);
        if ((r.lock && *r.lock != t) || r.version > s.rv) {
          end_tx(s);
          s.pending.reset();
          ctx.emit(t, Kind::Aborted);
          return StepStatus::Progress;
        }
        s.read_set.push_back(req.reg);
        s.pending.reset();
        ctx.emit(t, Kind::Ret, "", mem[req.reg]);
        return StepStatus::Progress;
      }
      case Kind::Write:
        if (s.active)
          s.wbuf[req.reg] = req.value;
        else
          mem[req.reg] = req.value;  // non-transactional: straight to memory
        s.pending.reset();
        ctx.emit(t, Kind::RetUnit);
        return StepStatus::Progress;
      case Kind::TryCommit:
        return commit_step(t, s, ctx);
      default:
        throw Error("tl2: unexpected request kind");
    }
  }

  std::string key() const {
    std::ostringstream os;
    os << (fenced_ ? "FT;" : "T;") << gv_ << ';' << seq_ << ';';
    for (const auto& [x, v] : mem) os << x << '=' << v << ',';
    for (const auto& [x, r] : regs_)
      os << x << ':' << r.version << (r.lock ? std::to_string(*r.lock) : "-");
    for (const auto& [t, s] : threads_) {
      os << '|' << t << ':' << s.active << s.rv << ',' << s.phase << ','
         << s.wb_next << ',' << s.retried << ',' << s.tx_seq;
      if (s.pending)
        os << kind_name(s.pending->kind) << s.pending->reg << s.pending->value;
      for (const auto& x : s.read_set) os << 'r' << x;
      for (const auto& [x, v] : s.wbuf) os << 'w' << x << '=' << v;
      for (const auto& [ft, fs] : s.fence) os << 'f' << ft << '.' << fs;
    }
    return os.str();
  }

 private:
  struct Reg {
    std::uint64_t version = 0;
    std::optional<ThreadId> lock;
  };
  struct Thread {
    std::optional<PendingReq> pending;
    bool active = false;
    std::uint64_t rv = 0;
    std::uint64_t tx_seq = 0;
    std::vector<std::string> read_set;
    std::map<std::string, Value> wbuf;
    // Commit machinery: phase 0 = lock/bump/validate, 1 = write-back,
    // 2 = report commit. wb_next indexes the sorted write set.
    int phase = 0;
    std::size_t wb_next = 0;
    std::uint64_t wv = 0;
    bool retried = false;
    std::map<ThreadId, std::uint64_t> fence;  // registry snapshot
  };

  Thread& th(ThreadId t) { return threads_[t]; }
  Reg& reg(const std::string& x) { return regs_[x]; }

  bool fence_cleared(const Thread& s) const {
    for (const auto& [t2, seq] : s.fence) {
      auto it = threads_.find(t2);
      if (it != threads_.end() && it->second.active &&
          it->second.tx_seq == seq)
        return false;
    }
    return true;
  }

  void end_tx(Thread& s) {
    // Identify the owner thread for the fence snapshot.
    s.active = false;
    s.read_set.clear();
    s.wbuf.clear();
    s.phase = 0;
    s.wb_next = 0;
    s.retried = false;
    if (fenced_) {
      s.fence.clear();
      for (const auto& [t2, s2] : threads_)
        if (&s2 != &s && s2.active) s.fence[t2] = s2.tx_seq;
    }
  }

  StepStatus commit_step(ThreadId t, Thread& s, StepCtx& ctx) {
    if (s.phase == 0) {
      // Acquire write locks in register order.
      std::vector<std::string> ws;
      for (const auto& [x, v] : s.wbuf) ws.push_back(x);
      for (const auto& x : ws) {
        Reg& r = reg(x);
        if (r.lock && *r.lock != t) {
          if (!s.retried) {
            // One bounded retry: yield and try again on the next step.
            s.retried = true;
            return StepStatus::Progress;
          }
          for (const auto& y : ws)
            if (reg(y).lock && *reg(y).lock == t) reg(y).lock.reset();
          end_tx(s);
          s.pending.reset();
          ctx.emit(t, Kind::Aborted);
          return StepStatus::Progress;
        }
        r.lock = t;
      }
      if (!s.wbuf.empty()) s.wv = ++gv_;
      // Validate the read set against the snapshot version.
      for (const auto& x : s.read_set) {
        Reg& r = reg(x);
        if (r.version > s.rv || (r.lock && *r.lock != t)) {
          for (const auto& y : ws) reg(y).lock.reset();
          end_tx(s);
          s.pending.reset();
          ctx.emit(t, Kind::Aborted);
          return StepStatus::Progress;
        }
      }
      if (s.wbuf.empty()) {
        end_tx(s);
        s.pending.reset();
        ctx.emit(t, Kind::Committed);
        return StepStatus::Progress;
      }
      // Validated; write-backs happen one per subsequent step so that other
      // threads may interleave here.
      s.phase = 1;
      s.wb_next = 0;
      return StepStatus::Progress;
    }
    if (s.phase == 1) {
      auto it = s.wbuf.begin();
      std::advance(it, s.wb_next);
      Reg& r = reg(it->first);
      mem[it->first] = it->second;
      r.version = s.wv;
      r.lock.reset();
      ctx.emit(t, Kind::Wb, it->first, it->second);
      if (++s.wb_next >= s.wbuf.size()) s.phase = 2;
      return StepStatus::Progress;
    }
    end_tx(s);
    s.pending.reset();
    ctx.emit(t, Kind::Committed);
    return StepStatus::Progress;
  }

  bool fenced_;
  std::uint64_t gv_ = 0;
  std::uint64_t seq_ = 0;
  std::map<std::string, Reg> regs_;
  std::map<ThreadId, Thread> threads_;
};

// ---------------------------------------------------------------------------
// Two-phase locking: eager in-place writes under per-register try-locks,
// an undo log, and a deadlock detector that aborts the youngest transaction
// in a wait cycle.
// ---------------------------------------------------------------------------

class TwoPlTm {
 public:
  std::map<std::string, Value> mem;

  void submit(ThreadId t, const PendingReq& req) { th(t).pending = req; }

  bool idle(ThreadId t) const {
    auto it = threads_.find(t);
    return it == threads_.end() || !it->second.pending;
  }

  bool in_tx(ThreadId t) const {
    auto it = threads_.find(t);
    return it != threads_.end() && it->second.active;
  }

  std::size_t uncompleted_count() const {
    std::size_t n = 0;
    for (const auto& [t, st] : threads_) n += st.active ? 1 : 0;
    return n;
  }

  bool runnable(ThreadId t) const {
    auto it = threads_.find(t);
    if (it == threads_.end() || !it->second.pending) return false;
    const Thread& s = it->second;
    if (s.aborting) return true;
    const PendingReq& req = *s.pending;
    if (req.kind == Kind::Read || req.kind == Kind::Write) {
      if (!s.active) return true;  // non-transactional accesses never block
      if (s.wset.count(req.reg)) return true;
      if (req.kind == Kind::Read && s.rset.count(req.reg)) return true;
      auto l = locks_.find(req.reg);
      if (l == locks_.end() || !l->second || *l->second == t) return true;
      return self_is_deadlock_victim(t, req.reg);
    }
    return true;
  }

  StepStatus step(ThreadId t, StepCtx& ctx) {
    Thread& s = th(t);
    if (!s.pending) return StepStatus::Idle;
    if (s.aborting) return abort_step(t, s, ctx);
    const PendingReq req = *s.pending;
    switch (req.kind) {
      case Kind::BeginTx:
        s.active = true;
        s.age = ++seq_;
        s.pending.reset();
        ctx.emit(t, Kind::Ok);
        return StepStatus::Progress;
      case Kind::Read: {
        if (!s.active) {  // non-transactional: uninstrumented memory read
          s.pending.reset();
          ctx.emit(t, Kind::Ret, "", mem[req.reg]);
          return StepStatus::Progress;
        }
        if (!s.wset.count(req.reg) && !s.rset.count(req.reg)) {
          if (!try_lock(t, s, req.reg, ctx)) {
            if (s.aborting) return StepStatus::Progress;
            return StepStatus::Blocked;
          }
        }
        s.rset.insert(req.reg);
        s.pending.reset();
        ctx.emit(t, Kind::Ret, "", mem[req.reg]);
        return StepStatus::Progress;
      }
      case Kind::Write: {
        if (!s.active) {  // non-transactional: straight to memory, no lock
          mem[req.reg] = req.value;
          s.pending.reset();
          ctx.emit(t, Kind::RetUnit);
          return StepStatus::Progress;
        }
        if (!s.wset.count(req.reg)) {
          if (!s.rset.count(req.reg) || !holds(t, req.reg)) {
            if (!try_lock(t, s, req.reg, ctx)) {
              if (s.aborting) return StepStatus::Progress;
              return StepStatus::Blocked;
            }
          }
          s.wset.emplace(req.reg, mem[req.reg]);  // undo value
        }
        mem[req.reg] = req.value;
        ctx.emit(t, Kind::Wb, req.reg, req.value);
        s.pending.reset();
        ctx.emit(t, Kind::RetUnit);
        return StepStatus::Progress;
      }
      case Kind::TryCommit:
        release_all(t);
        s.active = false;
        s.rset.clear();
        s.wset.clear();
        s.pending.reset();
        ctx.emit(t, Kind::Committed);
        return StepStatus::Progress;
      default:
        throw Error("2pl: unexpected request kind");
    }
  }

  std::string key() const {
    std::ostringstream os;
    os << "2P;" << seq_ << ';';
    for (const auto& [x, v] : mem) os << x << '=' << v << ',';
    for (const auto& [x, o] : locks_)
      os << x << ':' << (o ? std::to_string(*o) : "-");
    for (const auto& [t, s] : threads_) {
      os << '|' << t << ':' << s.active << s.age << s.aborting;
      if (s.pending)
        os << kind_name(s.pending->kind) << s.pending->reg << s.pending->value;
      for (const auto& x : s.rset) os << 'r' << x;
      for (const auto& [x, v] : s.wset) os << 'w' << x << '=' << v;
    }
    return os.str();
  }

 private:
  struct Thread {
    std::optional<PendingReq> pending;
    bool active = false;
    std::uint64_t age = 0;
    std::set<std::string> rset;
    std::map<std::string, Value> wset;  // register -> undo value
    bool aborting = false;
    std::vector<std::pair<std::string, Value>> undo_left;
  };

  Thread& th(ThreadId t) { return threads_[t]; }

  bool holds(ThreadId t, const std::string& x) const {
    auto it = locks_.find(x);
    return it != locks_.end() && it->second && *it->second == t;
  }

  void release_all(ThreadId t) {
    for (auto& [x, o] : locks_)
      if (o && *o == t) o.reset();
  }

  // Who does thread t wait for, if anyone (the owner of the lock it wants)?
  std::optional<ThreadId> waits_for(ThreadId t) const {
    auto it = threads_.find(t);
    if (it == threads_.end() || !it->second.pending || it->second.aborting ||
        !it->second.active)
      return std::nullopt;
    const PendingReq& req = *it->second.pending;
    if (req.kind != Kind::Read && req.kind != Kind::Write)
      return std::nullopt;
    if (it->second.wset.count(req.reg)) return std::nullopt;
    if (req.kind == Kind::Read && it->second.rset.count(req.reg))
      return std::nullopt;
    auto l = locks_.find(req.reg);
    if (l != locks_.end() && l->second && *l->second != t) return *l->second;
    return std::nullopt;
  }

  // True when t sits on a wait cycle in which its transaction is the
  // youngest (largest begin sequence number): t must abort itself.
  bool self_is_deadlock_victim(ThreadId t, const std::string&) const {
    std::vector<ThreadId> chain{t};
    std::uint64_t maxage = threads_.at(t).age;
    ThreadId cur = t;
    for (std::size_t hops = 0; hops <= threads_.size(); ++hops) {
      auto nxt = waits_for(cur);
      if (!nxt) return false;
      cur = *nxt;
      if (cur == t) {
        return threads_.at(t).age == maxage;  // t is the youngest
      }
      auto it = threads_.find(cur);
      if (it != threads_.end()) maxage = std::max(maxage, it->second.age);
    }
    return false;
  }

  bool try_lock(ThreadId t, Thread& s, const std::string& x, StepCtx&) {
    auto& o = locks_[x];
    if (!o || *o == t) {
      o = t;
      return true;
    }
    if (self_is_deadlock_victim(t, x)) {
      s.aborting = true;
      s.undo_left.assign(s.wset.begin(), s.wset.end());
      return false;
    }
    return false;
  }

  StepStatus abort_step(ThreadId t, Thread& s, StepCtx& ctx) {
    if (!s.undo_left.empty()) {
      auto [x, v] = s.undo_left.back();
      s.undo_left.pop_back();
      mem[x] = v;
      ctx.emit(t, Kind::Wb, x, v);
      return StepStatus::Progress;
    }
    release_all(t);
    s.active = false;
    s.aborting = false;
    s.rset.clear();
    s.wset.clear();
    s.pending.reset();
    ctx.emit(t, Kind::Aborted);
    return StepStatus::Progress;
  }

  std::uint64_t seq_ = 0;
  std::map<std::string, std::optional<ThreadId>> locks_;
  std::map<ThreadId, Thread> threads_;
};

}  // namespace tmlab
