#pragma once

#include "tmlab/action.hpp"
#include "tmlab/history.hpp"

namespace tmlab::test {

// Fluent builder for histories used throughout the tests; ids are assigned
// sequentially from 1.
struct HB {
  History h;
  ActionId next = 1;

  HB& act(Kind k, ThreadId t, std::string reg = "", Value v = 0) {
    Action a;
    a.id = next++;
    a.thread = t;
    a.kind = k;
    a.reg = std::move(reg);
    a.value = v;
    h.actions.push_back(std::move(a));
    return *this;
  }
  HB& begintx(ThreadId t) { return act(Kind::BeginTx, t); }
  HB& ok(ThreadId t) { return act(Kind::Ok, t); }
  HB& trycommit(ThreadId t) { return act(Kind::TryCommit, t); }
  HB& committed(ThreadId t) { return act(Kind::Committed, t); }
  HB& aborted(ThreadId t) { return act(Kind::Aborted, t); }
  HB& write(ThreadId t, std::string reg, Value v) {
    return act(Kind::Write, t, std::move(reg), v);
  }
  HB& read(ThreadId t, std::string reg) {
    return act(Kind::Read, t, std::move(reg));
  }
  HB& ret(ThreadId t, Value v) { return act(Kind::Ret, t, "", v); }
  HB& retu(ThreadId t) { return act(Kind::RetUnit, t); }
  HB& fbegin(ThreadId t) { return act(Kind::FBegin, t); }
  HB& fend(ThreadId t) { return act(Kind::FEnd, t); }

  // Whole-operation shorthands.
  HB& ntx_write(ThreadId t, std::string reg, Value v) {
    return write(t, reg, v).retu(t);
  }
  HB& ntx_read(ThreadId t, std::string reg, Value v) {
    return read(t, std::move(reg)).ret(t, v);
  }
};

}  // namespace tmlab::test
