// Command-line front end: history checking, program exploration under a
// chosen TM, TM property probes, and the built-in program corpus.
//
// Exit codes: 0 all checks pass, 1 some check failed, 2 input did not
// parse, 3 an enumeration cap was exceeded.

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tmlab/atomic_tm.hpp"
#include "tmlab/corpus.hpp"
#include "tmlab/explore.hpp"
#include "tmlab/history.hpp"
#include "tmlab/lang.hpp"
#include "tmlab/opacity.hpp"
#include "tmlab/race.hpp"
#include "tmlab/stm.hpp"
#include "tmlab/stm_props.hpp"
#include "tmlab/stm_witness.hpp"

namespace {

using nlohmann::json;
using namespace tmlab;

constexpr int kExitPass = 0, kExitFail = 1, kExitParse = 2, kExitCap = 3;

struct BoundsSpec {
  int depth = 64;
  int loop = 3;
  std::size_t perm_cap = 12;

  std::string echo() const {
    return "depth=" + std::to_string(depth) + ",loop=" + std::to_string(loop) +
           ",perm-cap=" + std::to_string(perm_cap);
  }
  lang::Bounds lang_bounds() const {
    lang::Bounds b;
    b.loop = loop;
    b.max_actions = static_cast<std::size_t>(depth);
    return b;
  }
};

bool parse_bounds(const std::string& s, BoundsSpec& out, std::string& err) {
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos) {
      err = "bounds item `" + item + "` is not key=value";
      return false;
    }
    std::string key = item.substr(0, eq);
    long v = 0;
    try {
      v = std::stol(item.substr(eq + 1));
    } catch (const std::exception&) {
      err = "bounds value in `" + item + "` is not an integer";
      return false;
    }
    if (key == "depth") out.depth = static_cast<int>(v);
    else if (key == "loop") out.loop = static_cast<int>(v);
    else if (key == "perm-cap") out.perm_cap = static_cast<std::size_t>(v);
    else {
      err = "unknown bounds key `" + key + "`";
      return false;
    }
  }
  return true;
}

bool parse_init(const std::string& s, InitMem& out, std::string& err) {
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos) {
      err = "init item `" + item + "` is not reg=value";
      return false;
    }
    try {
      out[item.substr(0, eq)] = std::stoll(item.substr(eq + 1));
    } catch (const std::exception&) {
      err = "init value in `" + item + "` is not an integer";
      return false;
    }
  }
  return true;
}

// One report block per check; text mode prints key:value lines, json-lines
// mode prints one JSON object per block.
class Reporter {
 public:
  Reporter(bool as_json, std::string command, std::string input,
           std::string bounds, long seed)
      : json_(as_json),
        command_(std::move(command)),
        input_(std::move(input)),
        bounds_(std::move(bounds)),
        seed_(seed) {}

  void block(const std::string& check, const std::string& verdict,
             const std::vector<std::pair<std::string, std::string>>& extra,
             long elapsed_ms) {
    if (json_) {
      json j{{"command", command_}, {"input", input_},   {"bounds", bounds_},
             {"seed", seed_},       {"check", check},    {"verdict", verdict},
             {"elapsed_ms", elapsed_ms}};
      for (const auto& [k, v] : extra) j[k] = v;
      std::cout << j.dump() << "\n";
    } else {
      std::cout << "command: " << command_ << "\n"
                << "input: " << input_ << "\n"
                << "bounds: " << bounds_ << "\n"
                << "seed: " << seed_ << "\n"
                << "check: " << check << "\n"
                << "verdict: " << verdict << "\n";
      for (const auto& [k, v] : extra) std::cout << k << ": " << v << "\n";
      std::cout << "elapsed_ms: " << elapsed_ms << "\n\n";
    }
  }

 private:
  bool json_;
  std::string command_, input_, bounds_;
  long seed_;
};

class Timer {
 public:
  long ms() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now() - t0_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ =
      std::chrono::steady_clock::now();
};

bool write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  return static_cast<bool>(out);
}

std::string show_value(Value v) {
  if (v == kCommittedValue) return "committed";
  if (v == kAbortedValue) return "aborted";
  return std::to_string(v);
}

std::string show_final(const lang::FinalState& f) {
  std::string s;
  for (const auto& [l, v] : f.locals) s += l + "=" + show_value(v) + " ";
  for (const auto& [x, v] : f.regs) s += x + "=" + show_value(v) + " ";
  if (!s.empty()) s.pop_back();
  return s;
}

int worse(int a, int b) {
  // cap-exceeded dominates, then failure, then pass.
  if (a == kExitCap || b == kExitCap) return kExitCap;
  return std::max(a, b);
}

// --------------------------------------------------------------------------
// check-history
// --------------------------------------------------------------------------

int cmd_check_history(const std::string& file,
                      std::vector<std::string> checks, const InitMem& init,
                      const BoundsSpec& bounds, Reporter& rep) {
  std::ifstream in(file);
  if (!in) {
    std::cerr << "error: cannot open " << file << "\n";
    return kExitParse;
  }
  std::stringstream buf;
  buf << in.rdbuf();
  ParseError perr;
  auto parsed = parse_history(buf.str(), perr);
  if (!parsed) {
    std::cerr << "error: " << file << ":" << perr.line << ": " << perr.message
              << "\n";
    return kExitParse;
  }
  const History h = std::move(*parsed);

  if (checks.empty())
    checks = {"wf",   "cons",       "atomic",        "tdrf",      "cdrf",
              "cdrf-graph", "opacity", "opacity-graph", "fenced-drf"};
  // Canonical dependency order.
  const std::vector<std::string> order = {
      "wf",   "cons",       "atomic",  "tdrf",          "cdrf",
      "cdrf-graph", "opacity", "opacity-graph", "fenced-drf"};
  std::vector<std::string> todo;
  for (const std::string& c : order)
    for (const std::string& want : checks)
      if (want == c) todo.push_back(c);
  if (todo.size() != checks.size()) {
    std::cerr << "error: unknown check name\n";
    return kExitParse;
  }

  int code = kExitPass;
  bool wf_ok = true, cons_ok = true;
  for (const std::string& c : todo) {
    Timer t;
    std::vector<std::pair<std::string, std::string>> extra;
    std::string verdict = "pass";
    try {
      if (c != "wf" && !wf_ok) {
        verdict = "fail";
        extra.emplace_back("note", "prerequisite wf failed");
      } else if ((c == "cdrf-graph" || c == "opacity-graph") && !cons_ok) {
        verdict = "fail";
        extra.emplace_back("note", "prerequisite cons failed");
      } else if (c == "wf") {
        auto viols = validate_wellformed(h);
        if (!viols.empty()) {
          wf_ok = false;
          verdict = "fail";
          extra.emplace_back("note", viols.front().message);
        }
      } else if (c == "cons") {
        ConsResult r = cons(h, init);
        if (!r.ok) {
          cons_ok = false;
          verdict = "fail";
          extra.emplace_back(
              "note", "inconsistent read response at index " +
                          std::to_string(r.bad_reads.front()));
        }
      } else if (c == "atomic") {
        if (!is_atomic(h, init)) verdict = "fail";
      } else if (c == "tdrf") {
        TdrfResult r = tdrf(h, init);
        if (!r.ok) {
          verdict = "fail";
          std::string w = file + ".witness.hist";
          write_file(w, serialize_history(h));
          extra.emplace_back("witness", w);
          extra.emplace_back(
              "note",
              "unordered conflict on " + r.unordered.front().reg);
        }
      } else if (c == "cdrf") {
        CdrfResult r = cdrf(h, bounds.perm_cap, init);
        if (!r.ok) {
          verdict = "fail";
          std::string w = file + ".witness.hist";
          write_file(w, serialize_history(*r.racy_serialization));
          extra.emplace_back("witness", w);
        }
      } else if (c == "cdrf-graph") {
        if (!cdrf_graph(h, init)) verdict = "fail";
      } else if (c == "opacity") {
        auto r = check_opaque_direct(h, bounds.perm_cap, init);
        if (r) {
          std::string w = file + ".witness.hist";
          write_file(w, serialize_history(*r));
          extra.emplace_back("witness", w);
        } else {
          verdict = "fail";
        }
      } else if (c == "opacity-graph") {
        OpaqueGraphResult r = check_opaque_graph(h, init);
        if (r.witness) {
          std::string w = file + ".witness.graph";
          write_file(w, serialize_graph(*r.witness));
          extra.emplace_back("witness", w);
        } else {
          verdict = "fail";
          if (!r.consistent) extra.emplace_back("note", "history inconsistent");
        }
      } else if (c == "fenced-drf") {
        FencedDrfResult r = drf_fenced(h, bounds.perm_cap, init);
        if (!r.ok) {
          verdict = "fail";
          std::string w = file + ".witness.hist";
          write_file(w, serialize_history(*r.racy_serialization));
          extra.emplace_back("witness", w);
        }
      }
    } catch (const CapExceeded& e) {
      rep.block(c, "fail", {{"note", e.what()}}, t.ms());
      code = worse(code, kExitCap);
      continue;
    } catch (const Error& e) {
      verdict = "fail";
      extra.emplace_back("note", e.what());
    }
    rep.block(c, verdict, extra, t.ms());
    if (verdict == "fail") code = worse(code, kExitFail);
  }
  return code;
}

// --------------------------------------------------------------------------
// run
// --------------------------------------------------------------------------

std::optional<std::string> load_program_text(const std::string& input) {
  const auto& corpus = corpus::programs();
  if (auto it = corpus.find(input); it != corpus.end())
    return std::string(it->second);
  std::ifstream in(input);
  if (!in) return std::nullopt;
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int cmd_run(const std::string& input, const std::string& tm,
            std::vector<std::string> checks, const BoundsSpec& bounds,
            Reporter& rep) {
  auto text = load_program_text(input);
  if (!text) {
    std::cerr << "error: `" << input
              << "` is neither a corpus program nor a readable file\n";
    return kExitParse;
  }
  lang::Program p;
  try {
    p = lang::parse_program(*text);
  } catch (const lang::SyntaxError& e) {
    std::cerr << "error: " << input << ": " << e.what() << "\n";
    return kExitParse;
  }
  const bool atomic_tm = tm == "atomic";
  std::optional<Alg> alg;
  if (!atomic_tm) {
    alg = parse_alg(tm);
    if (!alg) {
      std::cerr << "error: unknown tm `" << tm << "`\n";
      return kExitParse;
    }
  }
  if (checks.empty()) checks = {"post"};

  const lang::Bounds lb = bounds.lang_bounds();
  std::optional<lang::ExploreResult> mech, atom;
  auto need_mech = [&]() -> lang::ExploreResult& {
    if (!mech)
      mech = atomic_tm ? lang::explore_atomic(p, lb)
                       : lang::explore(p, *alg, lb);
    return *mech;
  };
  auto need_atom = [&]() -> lang::ExploreResult& {
    if (!atom) atom = lang::explore_atomic(p, lb);
    return *atom;
  };

  int code = kExitPass;
  for (const std::string& c : checks) {
    Timer t;
    std::vector<std::pair<std::string, std::string>> extra;
    std::string verdict = "pass";
    try {
      if (c == "post") {
        lang::ExploreResult& r = need_mech();
        lang::PostcondResult pc = lang::check_postcondition(r, p);
        if (!pc.ok) {
          verdict = "fail";
          extra.emplace_back("final", show_final(*pc.failing));
          auto ex = r.exemplars.find(*pc.failing);
          if (ex != r.exemplars.end()) {
            std::string w = input + ".witness.hist";
            write_file(w, serialize_history(history_of(ex->second)));
            extra.emplace_back("witness", w);
          }
        } else if (pc.partial) {
          verdict = "partial";
        }
      } else if (c == "tdrf") {
        lang::TdrfProgramResult r = lang::tdrf_program(p, lb);
        if (!r.ok) {
          verdict = "fail";
          std::string w = input + ".witness.hist";
          write_file(w, serialize_history(*r.racy));
          extra.emplace_back("witness", w);
        } else if (r.partial) {
          verdict = "partial";
        }
      } else if (c == "refinement") {
        lang::ExploreResult& a = need_mech();
        lang::ExploreResult& b = need_atom();
        lang::RefinesResult r = lang::refines(a.traces, b.traces);
        if (!r.ok) {
          verdict = "fail";
          std::string w = input + ".witness.hist";
          write_file(w, serialize_history(history_of(*r.unmatched)));
          extra.emplace_back("witness", w);
        } else if (a.partial || b.partial) {
          verdict = "partial";
        }
      } else if (c == "witness-graph") {
        if (atomic_tm) {
          std::cerr << "error: witness-graph requires a TM machine\n";
          return kExitParse;
        }
        lang::ExploreResult& r = need_mech();
        std::size_t checked = 0;
        for (const Trace& tr : r.traces) {
          WitnessReport wr = witness_graph(tr, *alg, p.init);
          ++checked;
          if (!wr.ok()) {
            verdict = "fail";
            std::string wg = input + ".witness.graph";
            std::string wh = input + ".witness.hist";
            write_file(wg, serialize_graph(wr.graph));
            write_file(wh, serialize_history(*wr.hist));
            extra.emplace_back("witness", wh);
            extra.emplace_back("witness_graph", wg);
            extra.emplace_back("note", wr.violations.front());
            break;
          }
        }
        extra.emplace_back("executions", std::to_string(checked));
        if (verdict == "pass" && r.partial) verdict = "partial";
      } else {
        std::cerr << "error: unknown run check `" << c << "`\n";
        return kExitParse;
      }
    } catch (const CapExceeded& e) {
      rep.block(c, "fail", {{"note", e.what()}}, t.ms());
      code = worse(code, kExitCap);
      continue;
    }
    rep.block(c, verdict, extra, t.ms());
    if (verdict == "fail") code = worse(code, kExitFail);
  }
  return code;
}

// --------------------------------------------------------------------------
// tm-props
// --------------------------------------------------------------------------

int cmd_tm_props(const std::string& tm, int depth, const std::string& input,
                 Reporter& rep) {
  auto alg = parse_alg(tm);
  if (!alg) {
    std::cerr << "error: unknown tm `" << tm << "`\n";
    return kExitParse;
  }
  {
    Timer t;
    PropResult r = check_progressive_bounded(*alg, depth);
    std::vector<std::pair<std::string, std::string>> extra{
        {"progressive", r.ok ? "true" : "false"}};
    if (!r.ok) {
      std::string w = input + ".witness.hist";
      write_file(w, serialize_execution(r.witness));
      extra.emplace_back("witness", w);
      extra.emplace_back("note", r.note);
    }
    rep.block("progressive", r.ok ? "pass" : "fail", extra, t.ms());
  }
  {
    Timer t;
    PropResult r = check_invisible_reads_bounded(*alg, depth);
    std::vector<std::pair<std::string, std::string>> extra{
        {"invisible_reads", r.ok ? "true" : "false"}};
    if (!r.ok) {
      std::string w = input + ".witness.hist";
      write_file(w, serialize_execution(r.witness));
      extra.emplace_back("witness", w);
      extra.emplace_back("note", r.note);
    }
    rep.block("invisible-reads", r.ok ? "pass" : "fail", extra, t.ms());
  }
  return kExitPass;  // property probes report, they do not gate
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"transactional-memory verification laboratory"};
  app.require_subcommand(1);

  std::string bounds_str, format = "text", init_str;
  long seed = 0;
  app.add_option("--bounds", bounds_str,
                 "bounds as depth=<n>,loop=<n>,perm-cap=<n>");
  app.add_option("--seed", seed, "seed echoed into reports");
  app.add_option("--format", format, "text | json-lines")
      ->check(CLI::IsMember({"text", "json-lines"}));

  auto* ch = app.add_subcommand("check-history", "run checks on a history file");
  std::string ch_file;
  std::vector<std::string> ch_checks;
  ch->add_option("file", ch_file, "history file")->required();
  ch->add_option("--checks", ch_checks,
                 "subset of wf,cons,atomic,tdrf,cdrf,cdrf-graph,opacity,"
                 "opacity-graph,fenced-drf")
      ->delimiter(',');
  ch->add_option("--init", init_str, "initial register values as x=1,y=2");

  auto* run = app.add_subcommand("run", "explore a program under a TM");
  std::string run_input, run_tm = "atomic";
  std::vector<std::string> run_checks;
  run->add_option("program", run_input, "program file or corpus name")
      ->required();
  run->add_option("--tm", run_tm, "fencedtl2|tl2|2pl|globallock|atomic");
  run->add_option("--check", run_checks,
                  "subset of post,tdrf,refinement,witness-graph")
      ->delimiter(',');

  auto* props = app.add_subcommand("tm-props", "bounded TM property probes");
  std::string props_tm;
  int props_depth = 8;
  props->add_option("--tm", props_tm, "fencedtl2|tl2|2pl|globallock")
      ->required();
  props->add_option("--depth", props_depth, "schedule depth bound");

  auto* corpus_cmd = app.add_subcommand("corpus", "built-in programs");
  auto* corpus_list = corpus_cmd->add_subcommand("list", "list program names");
  auto* corpus_show = corpus_cmd->add_subcommand("show", "print a program");
  std::string corpus_name;
  corpus_show->add_option("name", corpus_name, "program name")->required();
  corpus_cmd->require_subcommand(1);
  // Allow the global flags to appear after a subcommand.
  for (CLI::App* s : {ch, run, props, corpus_cmd, corpus_list, corpus_show})
    s->fallthrough();

  CLI11_PARSE(app, argc, argv);

  BoundsSpec bounds;
  std::string err;
  if (!parse_bounds(bounds_str, bounds, err)) {
    std::cerr << "error: " << err << "\n";
    return kExitParse;
  }
  InitMem init;
  if (!parse_init(init_str, init, err)) {
    std::cerr << "error: " << err << "\n";
    return kExitParse;
  }
  const bool as_json = format == "json-lines";

  try {
    if (ch->parsed()) {
      Reporter rep(as_json, "check-history", ch_file, bounds.echo(), seed);
      return cmd_check_history(ch_file, ch_checks, init, bounds, rep);
    }
    if (run->parsed()) {
      Reporter rep(as_json, "run", run_input, bounds.echo(), seed);
      return cmd_run(run_input, run_tm, run_checks, bounds, rep);
    }
    if (props->parsed()) {
      Reporter rep(as_json, "tm-props", props_tm, bounds.echo(), seed);
      return cmd_tm_props(props_tm, props_depth, props_tm, rep);
    }
    if (corpus_list->parsed()) {
      for (const auto& [name, src] : corpus::programs())
        std::cout << name << "\n";
      return kExitPass;
    }
    if (corpus_show->parsed()) {
      std::cout << corpus::lookup(corpus_name);
      return kExitPass;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  }
  return kExitPass;
}
