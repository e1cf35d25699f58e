#pragma once

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace tmlab {

using ActionId = std::uint64_t;
using ThreadId = std::uint32_t;
using Value = std::int64_t;

// Distinguished return values assigned to atomic-block result variables.
// They compare unequal to every ordinary integer a program can compute.
inline constexpr Value kCommittedValue = INT64_MIN + 1;
inline constexpr Value kAbortedValue = INT64_MIN + 2;

enum class Kind : std::uint8_t {
  BeginTx,
  Ok,
  TryCommit,
  Committed,
  Aborted,
  Write,    // request, reg + value
  Read,     // request, reg
  Ret,      // response to Read, value
  RetUnit,  // response to Write
  FBegin,   // fence request
  FEnd,     // fence response
  Prim,     // primitive command, tag only; never in histories
  Wb,       // internal write-back, reg + value; never in histories
};

struct Action {
  ActionId id = 0;
  ThreadId thread = 0;
  Kind kind = Kind::Prim;
  std::string reg;   // Write / Read / Wb
  Value value = 0;   // Write / Ret / Wb
  std::string tag;   // Prim

  friend bool operator==(const Action&, const Action&) = default;
};

// Equality ignoring the action identifier; used when comparing traces from
// independent runs ("up to action-id renaming").
inline bool same_content(const Action& a, const Action& b) {
  return a.thread == b.thread && a.kind == b.kind && a.reg == b.reg &&
         a.value == b.value && a.tag == b.tag;
}

inline bool is_request(Kind k) {
  switch (k) {
    case Kind::BeginTx:
    case Kind::TryCommit:
    case Kind::Write:
    case Kind::Read:
    case Kind::FBegin:
      return true;
    default:
      return false;
  }
}

inline bool is_response(Kind k) {
  switch (k) {
    case Kind::Ok:
    case Kind::Committed:
    case Kind::Aborted:
    case Kind::Ret:
    case Kind::RetUnit:
    case Kind::FEnd:
      return true;
    default:
      return false;
  }
}

inline bool is_interface(Kind k) { return k != Kind::Prim && k != Kind::Wb; }

// Does `resp` answer a pending request of kind `req`?
inline bool matches_request(Kind req, Kind resp) {
  switch (req) {
    case Kind::BeginTx:
      return resp == Kind::Ok || resp == Kind::Aborted;
    case Kind::TryCommit:
      return resp == Kind::Committed || resp == Kind::Aborted;
    case Kind::Write:
      return resp == Kind::RetUnit || resp == Kind::Aborted;
    case Kind::Read:
      return resp == Kind::Ret || resp == Kind::Aborted;
    case Kind::FBegin:
      return resp == Kind::FEnd;
    default:
      return false;
  }
}

inline std::string kind_name(Kind k) {
  switch (k) {
    case Kind::BeginTx: return "begintx";
    case Kind::Ok: return "ok";
    case Kind::TryCommit: return "trycommit";
    case Kind::Committed: return "committed";
    case Kind::Aborted: return "aborted";
    case Kind::Write: return "write";
    case Kind::Read: return "read";
    case Kind::Ret: return "ret";
    case Kind::RetUnit: return "retu";
    case Kind::FBegin: return "fbegin";
    case Kind::FEnd: return "fend";
    case Kind::Prim: return "prim";
    case Kind::Wb: return "wb";
  }
  return "?";
}

inline std::string to_line(const Action& a) {
  std::ostringstream os;
  os << a.id << ' ' << a.thread << ' ' << kind_name(a.kind);
  switch (a.kind) {
    case Kind::Write:
    case Kind::Wb:
      os << ' ' << a.reg << ' ' << a.value;
      break;
    case Kind::Read:
      os << ' ' << a.reg;
      break;
    case Kind::Ret:
      os << ' ' << a.value;
      break;
    case Kind::Prim:
      os << ' ' << a.tag;
      break;
    default:
      break;
  }
  return os.str();
}

struct Trace {
  std::vector<Action> actions;

  std::size_t size() const { return actions.size(); }
  bool empty() const { return actions.empty(); }
  const Action& operator[](std::size_t i) const { return actions[i]; }

  friend bool operator==(const Trace&, const Trace&) = default;
};

// A history is a trace of interface actions only. Kept as a distinct type so
// signatures say which one they expect.
struct History {
  std::vector<Action> actions;

  std::size_t size() const { return actions.size(); }
  bool empty() const { return actions.empty(); }
  const Action& operator[](std::size_t i) const { return actions[i]; }

  friend bool operator==(const History&, const History&) = default;
};

struct ParseError {
  std::size_t line = 0;
  std::string message;
};

// Line format: `<id> <thread> <kind> [<arg>...]`, `#` starts a comment.
// `allow_wb` distinguishes execution files from history files.
inline std::optional<std::vector<Action>> parse_action_lines(
    std::string_view text, bool allow_wb, ParseError& err) {
  std::vector<Action> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
    std::istringstream ls(line);
    std::string idtok;
    if (!(ls >> idtok)) continue;  // blank
    Action a;
    std::string kindtok;
    try {
      a.id = std::stoull(idtok);
      std::string thtok;
      if (!(ls >> thtok)) throw std::invalid_argument("missing thread");
      a.thread = static_cast<ThreadId>(std::stoul(thtok));
      if (!(ls >> kindtok)) throw std::invalid_argument("missing kind");
    } catch (const std::exception&) {
      err = {lineno, "malformed line: expected `<id> <thread> <kind> ...`"};
      return std::nullopt;
    }
    auto need_reg = [&](Kind k) -> bool {
      a.kind = k;
      if (!(ls >> a.reg)) {
        err = {lineno, "missing register for `" + kindtok + "`"};
        return false;
      }
      return true;
    };
    auto need_val = [&]() -> bool {
      std::string v;
      if (!(ls >> v)) {
        err = {lineno, "missing value for `" + kindtok + "`"};
        return false;
      }
      try {
        a.value = std::stoll(v);
      } catch (const std::exception&) {
        err = {lineno, "non-integer value `" + v + "`"};
        return false;
      }
      return true;
    };
    if (kindtok == "begintx") a.kind = Kind::BeginTx;
    else if (kindtok == "ok") a.kind = Kind::Ok;
    else if (kindtok == "trycommit") a.kind = Kind::TryCommit;
    else if (kindtok == "committed") a.kind = Kind::Committed;
    else if (kindtok == "aborted") a.kind = Kind::Aborted;
    else if (kindtok == "retu") a.kind = Kind::RetUnit;
    else if (kindtok == "fbegin") a.kind = Kind::FBegin;
    else if (kindtok == "fend") a.kind = Kind::FEnd;
    else if (kindtok == "write") {
      if (!need_reg(Kind::Write) || !need_val()) return std::nullopt;
    } else if (kindtok == "read") {
      if (!need_reg(Kind::Read)) return std::nullopt;
    } else if (kindtok == "ret") {
      a.kind = Kind::Ret;
      if (!need_val()) return std::nullopt;
    } else if (kindtok == "wb") {
      if (!allow_wb) {
        err = {lineno, "`wb` is not allowed in a history file"};
        return std::nullopt;
      }
      if (!need_reg(Kind::Wb) || !need_val()) return std::nullopt;
    } else {
      err = {lineno, "unknown kind `" + kindtok + "`"};
      return std::nullopt;
    }
    std::string extra;
    if (ls >> extra) {
      err = {lineno, "trailing token `" + extra + "`"};
      return std::nullopt;
    }
    out.push_back(std::move(a));
  }
  return out;
}

inline std::optional<History> parse_history(std::string_view text,
                                            ParseError& err) {
  auto acts = parse_action_lines(text, /*allow_wb=*/false, err);
  if (!acts) return std::nullopt;
  return History{std::move(*acts)};
}

inline std::optional<Trace> parse_execution(std::string_view text,
                                            ParseError& err) {
  auto acts = parse_action_lines(text, /*allow_wb=*/true, err);
  if (!acts) return std::nullopt;
  return Trace{std::move(*acts)};
}

inline std::string serialize_history(const History& h) {
  std::string out;
  for (const auto& a : h.actions) {
    out += to_line(a);
    out += '\n';
  }
  return out;
}

inline std::string serialize_execution(const Trace& t) {
  std::string out;
  for (const auto& a : t.actions) {
    out += to_line(a);
    out += '\n';
  }
  return out;
}

}  // namespace tmlab
