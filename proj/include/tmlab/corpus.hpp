#pragma once

#include <map>
#include <string>

#include "tmlab/history.hpp"

namespace tmlab::corpus {

// Privatization: a flag transfers x from transactional to direct access.
inline const char* privatization = R"(
init priv = 0;
init x = 0;
thread t1 {
  l1 = atomic { priv.write(1); };
  if (l1 == committed) {
    x.write(1);
  }
}
thread t2 {
  l2 = atomic {
    l3 = priv.read();
    if (!l3) {
      x.write(42);
    }
  };
}
post !(l1 == committed) || x == 1;
)";

// Publication: x is written directly, then published via the flag.
inline const char* publication = R"(
init priv = 1;
init x = 0;
thread t1 {
  x.write(42);
  l0 = atomic { priv.write(0); };
}
thread t2 {
  l1 = 0;
  l2 = atomic {
    l3 = priv.read();
    if (!l3) {
      l1 = x.read();
    }
  };
}
post !(l2 == committed && l1 != 0) || l1 == 42;
)";

// Data race: direct reads race with a transaction's two writes.
inline const char* race = R"(
init x = 0;
init y = 0;
thread t1 {
  l0 = atomic {
    x.write(1);
    y.write(2);
  };
}
thread t2 {
  l1 = x.read();
  l2 = y.read();
}
post !(l1 == 1) || l2 == 2;
)";

// Privatization by agreement outside transactions: the readiness flag is
// set and polled with direct accesses only.
inline const char* agreement = R"(
init x_is_ready = 0;
init x = 0;
thread t1 {
  l1 = atomic { x.write(42); };
  x_is_ready.write(1);
}
thread t2 {
  do {
    l2 = x_is_ready.read();
  } while (!l2);
  l3 = x.read();
}
post !(l1 == committed) || l3 == 42;
)";

// Proxy privatization: one thread privatizes, a second checks the flag
// transactionally before accessing directly, a third stays transactional.
inline const char* proxy = R"(
init priv = 0;
init x = 0;
thread t1 {
  l0 = atomic { priv.write(1); };
}
thread t2 {
  l1 = atomic { l2 = priv.read(); };
  if (l1 == committed && l2) {
    x.write(1);
  }
}
thread t3 {
  l4 = atomic {
    l5 = priv.read();
    if (!l5) {
      x.write(42);
    }
  };
}
post !(l1 == committed && l2) || x == 1;
)";

// Privatization with a direct read: separates progressive TMs with
// invisible reads from strongly atomic behaviour.
inline const char* privatization_read = R"(
init priv = 0;
init x = 0;
thread t1 {
  l1 = atomic { priv.write(1); };
  if (l1 == committed) {
    l2 = x.read();
  }
}
thread t2 {
  l3 = atomic {
    l4 = priv.read();
    if (!l4) {
      x.write(42);
    }
  };
}
post !(l1 == committed && l3 == committed && l4 == 0) || l2 == 42;
)";

inline const std::map<std::string, const char*>& programs() {
  static const std::map<std::string, const char*> m = {
      {"privatization", privatization},
      {"publication", publication},
      {"race", race},
      {"agreement", agreement},
      {"proxy", proxy},
      {"privatization-read", privatization_read},
  };
  return m;
}

inline const char* lookup(const std::string& name) {
  auto it = programs().find(name);
  if (it == programs().end()) throw Error("unknown corpus program: " + name);
  return it->second;
}

}  // namespace tmlab::corpus
