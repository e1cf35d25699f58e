#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tmlab/atomic_tm.hpp"
#include "tmlab/history.hpp"

namespace tmlab {

// Dense binary relation over indices with in-place transitive closure.
class Relation {
 public:
  explicit Relation(std::size_t n = 0) : n_(n), bits_(n * n, 0) {}

  std::size_t size() const { return n_; }
  void add(std::size_t i, std::size_t j) { bits_[i * n_ + j] = 1; }
  bool operator()(std::size_t i, std::size_t j) const {
    return bits_[i * n_ + j] != 0;
  }

  void close() {  // Floyd-Warshall
    for (std::size_t k = 0; k < n_; ++k)
      for (std::size_t i = 0; i < n_; ++i) {
        if (!bits_[i * n_ + k]) continue;
        for (std::size_t j = 0; j < n_; ++j)
          if (bits_[k * n_ + j]) bits_[i * n_ + j] = 1;
      }
  }

  Relation& operator|=(const Relation& o) {
    for (std::size_t i = 0; i < bits_.size(); ++i)
      bits_[i] = bits_[i] | o.bits_[i];
    return *this;
  }

 private:
  std::size_t n_;
  std::vector<char> bits_;
};

struct ConflictPair {
  std::size_t nontx_request = 0;
  std::size_t tx_request = 0;
  std::string reg;
};

// All Def-1 conflicts: a non-transactional request and a transactional
// request by different threads on the same register, at least one a write.
inline std::vector<ConflictPair> conflicts(const History& h) {
  Structure st = analyze(h);
  std::vector<ConflictPair> out;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const Action& a = h[i];
    if ((a.kind != Kind::Read && a.kind != Kind::Write) ||
        st.tx_of[i] != Structure::npos)
      continue;
    for (std::size_t j = 0; j < h.size(); ++j) {
      const Action& b = h[j];
      if ((b.kind != Kind::Read && b.kind != Kind::Write) ||
          st.tx_of[j] == Structure::npos)
        continue;
      if (a.thread == b.thread || a.reg != b.reg) continue;
      if (a.kind != Kind::Write && b.kind != Kind::Write) continue;
      out.push_back({i, j, a.reg});
    }
  }
  return out;
}

// hb = (po U ef U cl)+ over action indices; defined for atomic histories.
inline Relation happens_before(const History& h, const InitMem& init = {}) {
  if (!is_atomic(h, init))
    throw Error("happens_before: history is not atomic");
  Structure st = analyze(h);
  Relation r(h.size());
  for (std::size_t i = 0; i < h.size(); ++i)
    for (std::size_t j = i + 1; j < h.size(); ++j) {
      if (h[i].thread == h[j].thread) r.add(i, j);  // po
      // ef: actions of two different transactions, in execution order.
      if (st.tx_of[i] != Structure::npos && st.tx_of[j] != Structure::npos &&
          st.tx_of[i] != st.tx_of[j])
        r.add(i, j);
      // cl: non-transactional actions in execution order.
      if (st.tx_of[i] == Structure::npos && st.tx_of[j] == Structure::npos)
        r.add(i, j);
    }
  r.close();
  return r;
}

struct TdrfResult {
  bool ok = true;
  std::vector<ConflictPair> unordered;
};

inline TdrfResult tdrf(const History& h, const InitMem& init = {}) {
  Relation hb = happens_before(h, init);
  TdrfResult res;
  for (const ConflictPair& c : conflicts(h)) {
    if (!hb(c.nontx_request, c.tx_request) &&
        !hb(c.tx_request, c.nontx_request)) {
      res.ok = false;
      res.unordered.push_back(c);
    }
  }
  return res;
}

// Correspondence: a bijection matching actions pointwise and preserving
// h1's per-thread and client orders. Because ids are unique the bijection
// is fixed by id; we verify contents and order preservation.
inline std::optional<std::vector<std::size_t>> corresponds(const History& h1,
                                                           const History& h2) {
  if (h1.size() != h2.size()) return std::nullopt;
  std::map<ActionId, std::size_t> pos2;
  for (std::size_t j = 0; j < h2.size(); ++j) pos2[h2[j].id] = j;
  std::vector<std::size_t> theta(h1.size());
  for (std::size_t i = 0; i < h1.size(); ++i) {
    auto it = pos2.find(h1[i].id);
    if (it == pos2.end() || !(h2[it->second] == h1[i])) return std::nullopt;
    theta[i] = it->second;
  }
  Structure st = analyze(h1);
  for (std::size_t i = 0; i < h1.size(); ++i)
    for (std::size_t j = i + 1; j < h1.size(); ++j) {
      bool po = h1[i].thread == h1[j].thread;
      bool cl = st.tx_of[i] == Structure::npos &&
                st.tx_of[j] == Structure::npos;
      if ((po || cl) && theta[i] > theta[j]) return std::nullopt;
    }
  return theta;
}

struct CdrfResult {
  bool ok = true;
  std::optional<History> racy_serialization;  // an S with a data race
  std::vector<ConflictPair> unordered;
};

// CDRF by enumeration: every matching atomic serialization must be TDRF.
inline CdrfResult cdrf(const History& h, std::size_t unit_cap,
                       const InitMem& init = {}) {
  CdrfResult res;
  enumerate_atomic_matches(
      h, unit_cap,
      [&](const History& s) {
        TdrfResult t = tdrf(s, init);
        if (!t.ok) {
          res.ok = false;
          res.racy_serialization = s;
          res.unordered = t.unordered;
          return false;
        }
        return true;
      },
      init);
  return res;
}

// Fenced happens-before: fhb = (po U cl U afs U bfe U (xpo;ef))+ where
//   xpo relates same-thread actions with a begintx strictly between them,
//   afs relates an fbegin to every later begintx,
//   bfe relates a committed/aborted to every later fend.
inline Relation fhb(const History& h) {
  Structure st = analyze(h);
  const std::size_t n = h.size();
  Relation xpo(n), ef(n), base(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (h[i].thread == h[j].thread) {
        base.add(i, j);  // po
        for (std::size_t k = i + 1; k < j; ++k)
          if (h[k].thread == h[i].thread && h[k].kind == Kind::BeginTx) {
            xpo.add(i, j);
            break;
          }
      }
      if (st.tx_of[i] == Structure::npos && st.tx_of[j] == Structure::npos)
        base.add(i, j);  // cl
      if (st.tx_of[i] != Structure::npos && st.tx_of[j] != Structure::npos &&
          st.tx_of[i] != st.tx_of[j])
        ef.add(i, j);
      if (h[i].kind == Kind::FBegin && h[j].kind == Kind::BeginTx)
        base.add(i, j);  // afs
      if ((h[i].kind == Kind::Committed || h[i].kind == Kind::Aborted) &&
          h[j].kind == Kind::FEnd)
        base.add(i, j);  // bfe
    }
  // xpo;ef composition.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      if (!xpo(i, k)) continue;
      for (std::size_t j = 0; j < n; ++j)
        if (ef(k, j)) base.add(i, j);
    }
  base.close();
  return base;
}

struct FencedDrfResult {
  bool ok = true;
  std::optional<History> racy_serialization;
  std::vector<ConflictPair> unordered;
};

// Def-45 data-race freedom: in every matching atomic serialization S, every
// conflict is ordered by fhb(S).
inline FencedDrfResult drf_fenced(const History& h, std::size_t unit_cap,
                                  const InitMem& init = {}) {
  FencedDrfResult res;
  auto visit = [&](const History& s) {
    Relation r = fhb(s);
    for (const ConflictPair& c : conflicts(s)) {
      if (!r(c.nontx_request, c.tx_request) &&
          !r(c.tx_request, c.nontx_request)) {
        res.ok = false;
        res.racy_serialization = s;
        res.unordered.push_back(c);
        return false;
      }
    }
    return true;
  };
  enumerate_atomic_matches(h, unit_cap, visit, init);
  return res;
}

}  // namespace tmlab
