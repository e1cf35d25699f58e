#pragma once

#include <cctype>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "tmlab/action.hpp"

namespace tmlab::lang {

struct SyntaxError : std::runtime_error {
  std::size_t pos;
  SyntaxError(const std::string& msg, std::size_t p)
      : std::runtime_error(msg + " (at offset " + std::to_string(p) + ")"),
        pos(p) {}
};

// ---------------------------------------------------------------------------
// AST
// ---------------------------------------------------------------------------

struct Expr {
  enum Kind { Int, Local, Unary, Binary } kind = Int;
  Value lit = 0;
  std::string name;  // Local
  std::string op;    // Unary/Binary
  std::vector<Expr> args;
};

struct Stmt {
  enum Kind { Assign, Skip, Atomic, ReadReg, WriteReg, If, While, DoWhile }
      kind = Skip;
  std::string target;  // Assign/Atomic/ReadReg destination local
  std::string reg;     // ReadReg/WriteReg
  Expr expr;           // Assign/WriteReg value, If/While/DoWhile condition
  std::vector<Stmt> body, els;
};

struct ThreadDef {
  std::string name;
  std::vector<Stmt> body;
};

struct Program {
  std::map<std::string, Value> init;
  std::vector<ThreadDef> threads;
  std::optional<Expr> post;
  std::set<std::string> regs;
  std::map<std::string, std::size_t> local_thread;  // local -> thread index
};

// Environment of locals (and, for postconditions, final register values).
using Env = std::map<std::string, Value>;

inline Value eval_expr(const Expr& e, const Env& env) {
  switch (e.kind) {
    case Expr::Int: return e.lit;
    case Expr::Local: {
      auto it = env.find(e.name);
      return it == env.end() ? 0 : it->second;
    }
    case Expr::Unary: {
      Value v = eval_expr(e.args[0], env);
      if (e.op == "!") return v == 0 ? 1 : 0;
      return -v;
    }
    case Expr::Binary: {
      Value a = eval_expr(e.args[0], env);
      if (e.op == "&&") return (a != 0 && eval_expr(e.args[1], env) != 0);
      if (e.op == "||") return (a != 0 || eval_expr(e.args[1], env) != 0);
      Value b = eval_expr(e.args[1], env);
      if (e.op == "+") return a + b;
      if (e.op == "-") return a - b;
      if (e.op == "*") return a * b;
      if (e.op == "==") return a == b;
      if (e.op == "!=") return a != b;
      if (e.op == "<") return a < b;
      if (e.op == "<=") return a <= b;
      if (e.op == ">") return a > b;
      return a >= b;
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Parser (recursive descent over a token stream)
// ---------------------------------------------------------------------------

namespace detail {

struct Lexer {
  std::string src;
  std::size_t i = 0;

  void skip() {
    while (i < src.size()) {
      if (std::isspace((unsigned char)src[i])) {
        ++i;
      } else if (src.compare(i, 2, "//") == 0) {
        while (i < src.size() && src[i] != '\n') ++i;
      } else {
        break;
      }
    }
  }
  bool eof() {
    skip();
    return i >= src.size();
  }
  bool peek_punct(const std::string& p) {
    skip();
    return src.compare(i, p.size(), p) == 0;
  }
  bool eat_punct(const std::string& p) {
    if (!peek_punct(p)) return false;
    i += p.size();
    return true;
  }
  void expect(const std::string& p) {
    if (!eat_punct(p)) throw SyntaxError("expected '" + p + "'", i);
  }
  std::optional<std::string> peek_ident() {
    skip();
    std::size_t j = i;
    if (j >= src.size() ||
        (!std::isalpha((unsigned char)src[j]) && src[j] != '_'))
      return std::nullopt;
    while (j < src.size() &&
           (std::isalnum((unsigned char)src[j]) || src[j] == '_'))
      ++j;
    return src.substr(i, j - i);
  }
  std::optional<std::string> eat_ident() {
    auto id = peek_ident();
    if (id) i += id->size();
    return id;
  }
  bool eat_keyword(const std::string& kw) {
    auto id = peek_ident();
    if (id && *id == kw) {
      i += kw.size();
      return true;
    }
    return false;
  }
  std::optional<Value> eat_int() {
    skip();
    std::size_t j = i;
    if (j < src.size() && src[j] == '-' && j + 1 < src.size() &&
        std::isdigit((unsigned char)src[j + 1]))
      ++j;
    if (j >= src.size() || !std::isdigit((unsigned char)src[j]))
      return std::nullopt;
    while (j < src.size() && std::isdigit((unsigned char)src[j])) ++j;
    Value v = std::stoll(src.substr(i, j - i));
    i = j;
    return v;
  }
};

struct Parser {
  Lexer lx;
  Program p;
  std::size_t cur_thread = 0;
  bool in_atomic = false;

  Expr parse_or() {
    Expr e = parse_and();
    while (lx.eat_punct("||")) {
      Expr r = parse_and();
      Expr b{Expr::Binary, 0, "", "||", {std::move(e), std::move(r)}};
      e = std::move(b);
    }
    return e;
  }
  Expr parse_and() {
    Expr e = parse_cmp();
    while (lx.eat_punct("&&")) {
      Expr r = parse_cmp();
      Expr b{Expr::Binary, 0, "", "&&", {std::move(e), std::move(r)}};
      e = std::move(b);
    }
    return e;
  }
  Expr parse_cmp() {
    Expr e = parse_add();
    for (const char* op : {"==", "!=", "<=", ">=", "<", ">"}) {
      if (lx.eat_punct(op)) {
        Expr r = parse_add();
        return Expr{Expr::Binary, 0, "", op, {std::move(e), std::move(r)}};
      }
    }
    return e;
  }
  Expr parse_add() {
    Expr e = parse_mul();
    for (;;) {
      if (lx.eat_punct("+")) {
        Expr r = parse_mul();
        e = Expr{Expr::Binary, 0, "", "+", {std::move(e), std::move(r)}};
      } else if (!lx.peek_punct("->") && lx.eat_punct("-")) {
        Expr r = parse_mul();
        e = Expr{Expr::Binary, 0, "", "-", {std::move(e), std::move(r)}};
      } else {
        break;
      }
    }
    return e;
  }
  Expr parse_mul() {
    Expr e = parse_unary();
    while (lx.eat_punct("*")) {
      Expr r = parse_unary();
      e = Expr{Expr::Binary, 0, "", "*", {std::move(e), std::move(r)}};
    }
    return e;
  }
  Expr parse_unary() {
    if (lx.eat_punct("!"))
      return Expr{Expr::Unary, 0, "", "!", {parse_unary()}};
    if (auto v = lx.eat_int()) return Expr{Expr::Int, *v, "", "", {}};
    if (lx.eat_punct("-"))
      return Expr{Expr::Unary, 0, "", "-", {parse_unary()}};
    return parse_atom();
  }
  Expr parse_atom() {
    if (lx.eat_punct("(")) {
      Expr e = parse_or();
      lx.expect(")");
      return e;
    }
    if (auto v = lx.eat_int()) return Expr{Expr::Int, *v, "", "", {}};
    if (lx.eat_keyword("committed"))
      return Expr{Expr::Int, kCommittedValue, "", "", {}};
    if (lx.eat_keyword("aborted"))
      return Expr{Expr::Int, kAbortedValue, "", "", {}};
    if (lx.eat_keyword("true")) return Expr{Expr::Int, 1, "", "", {}};
    if (lx.eat_keyword("false")) return Expr{Expr::Int, 0, "", "", {}};
    if (auto id = lx.eat_ident()) return Expr{Expr::Local, 0, *id, "", {}};
    throw SyntaxError("expected expression", lx.i);
  }

  void note_local(const std::string& name) {
    if (p.regs.count(name))
      throw SyntaxError("'" + name + "' used both as register and local",
                        lx.i);
    auto [it, fresh] = p.local_thread.emplace(name, cur_thread);
    if (!fresh && it->second != cur_thread)
      throw SyntaxError("local '" + name + "' referenced by another thread",
                        lx.i);
  }
  void note_reg(const std::string& name) {
    if (p.local_thread.count(name))
      throw SyntaxError("'" + name + "' used both as register and local",
                        lx.i);
    p.regs.insert(name);
  }

  std::vector<Stmt> parse_block() {
    lx.expect("{");
    std::vector<Stmt> out;
    while (!lx.eat_punct("}")) out.push_back(parse_stmt());
    return out;
  }

  Stmt parse_stmt() {
    if (lx.eat_keyword("skip")) {
      lx.expect(";");
      return Stmt{};
    }
    if (lx.eat_keyword("if")) {
      Stmt s;
      s.kind = Stmt::If;
      lx.expect("(");
      s.expr = parse_or();
      lx.expect(")");
      s.body = parse_block();
      if (lx.eat_keyword("else")) s.els = parse_block();
      check_expr_locals(s.expr);
      return s;
    }
    if (lx.eat_keyword("while")) {
      Stmt s;
      s.kind = Stmt::While;
      lx.expect("(");
      s.expr = parse_or();
      lx.expect(")");
      s.body = parse_block();
      check_expr_locals(s.expr);
      return s;
    }
    if (lx.eat_keyword("do")) {
      Stmt s;
      s.kind = Stmt::DoWhile;
      s.body = parse_block();
      if (!lx.eat_keyword("while")) throw SyntaxError("expected 'while'", lx.i);
      lx.expect("(");
      s.expr = parse_or();
      lx.expect(")");
      lx.expect(";");
      check_expr_locals(s.expr);
      return s;
    }
    auto id = lx.eat_ident();
    if (!id) throw SyntaxError("expected statement", lx.i);
    if (lx.eat_punct(".")) {
      // <reg>.write(expr);
      if (!lx.eat_keyword("write"))
        throw SyntaxError("expected 'write' after register name", lx.i);
      Stmt s;
      s.kind = Stmt::WriteReg;
      s.reg = *id;
      note_reg(*id);
      lx.expect("(");
      s.expr = parse_or();
      lx.expect(")");
      lx.expect(";");
      check_expr_locals(s.expr);
      return s;
    }
    lx.expect("=");
    if (lx.eat_keyword("atomic")) {
      if (in_atomic) throw SyntaxError("nested atomic block", lx.i);
      Stmt s;
      s.kind = Stmt::Atomic;
      s.target = *id;
      note_local(*id);
      in_atomic = true;
      s.body = parse_block();
      in_atomic = false;
      lx.expect(";");
      return s;
    }
    // Either `<lv> = <reg>.read();` or a plain assignment.
    {
      std::size_t save = lx.i;
      if (auto rhs = lx.eat_ident()) {
        if (lx.eat_punct(".")) {
          if (!lx.eat_keyword("read"))
            throw SyntaxError("expected 'read' after register name", lx.i);
          lx.expect("(");
          lx.expect(")");
          lx.expect(";");
          Stmt s;
          s.kind = Stmt::ReadReg;
          s.target = *id;
          s.reg = *rhs;
          note_local(*id);
          note_reg(*rhs);
          return s;
        }
      }
      lx.i = save;
    }
    Stmt s;
    s.kind = Stmt::Assign;
    s.target = *id;
    s.expr = parse_or();
    lx.expect(";");
    note_local(*id);
    check_expr_locals(s.expr);
    return s;
  }

  void check_expr_locals(const Expr& e) {
    if (e.kind == Expr::Local) {
      if (p.regs.count(e.name))
        throw SyntaxError("register '" + e.name +
                              "' used in an expression; use .read()",
                          lx.i);
      note_local(e.name);
    }
    for (const Expr& a : e.args) check_expr_locals(a);
  }

  Program parse() {
    while (!lx.eof()) {
      if (lx.eat_keyword("init")) {
        auto reg = lx.eat_ident();
        if (!reg) throw SyntaxError("expected register name", lx.i);
        lx.expect("=");
        auto v = lx.eat_int();
        if (!v) throw SyntaxError("expected integer", lx.i);
        lx.expect(";");
        note_reg(*reg);
        p.init[*reg] = *v;
      } else if (lx.eat_keyword("thread")) {
        auto name = lx.eat_ident();
        if (!name) throw SyntaxError("expected thread name", lx.i);
        cur_thread = p.threads.size();
        p.threads.push_back(ThreadDef{*name, {}});
        p.threads.back().body = parse_block();
      } else if (lx.eat_keyword("post")) {
        Expr e = parse_or();
        lx.expect(";");
        // Postconditions may name registers directly (final memory values).
        p.post = std::move(e);
      } else {
        throw SyntaxError("expected 'init', 'thread' or 'post'", lx.i);
      }
    }
    return std::move(p);
  }
};

}  // namespace detail

inline Program parse_program(const std::string& text) {
  detail::Parser ps;
  ps.lx.src = text;
  return ps.parse();
}

// ---------------------------------------------------------------------------
// Flat compiled form: each thread becomes a vector of instructions with
// jumps; loops carry a site id for the unrolling bound.
// ---------------------------------------------------------------------------

struct Instr {
  enum Op {
    LocalAssign,  // target = expr
    ReadReg,      // target = reg (transactional iff inside Begin..End)
    WriteReg,     // reg = expr
    Jmp,          // to a
    Jz,           // if !expr goto a; resets loop site b if taken
    JnzBack,      // if expr goto a (counts site b); else reset site b
    Back,         // goto a (counts site b)
    Begin,        // atomic block; target = result local, a = index of End
    End,          // commit point of the block opened at a
  } op = Jmp;
  std::string target, reg;
  Expr expr;
  std::size_t a = 0;
  int b = -1;
};

struct Compiled {
  std::vector<std::vector<Instr>> code;  // per thread
  std::vector<std::vector<std::string>> own_locals;
  int loop_sites = 0;
};

namespace detail {

struct Compiler {
  Compiled out;
  std::vector<Instr>* code = nullptr;
  std::set<std::string>* locals = nullptr;

  void emit_block(const std::vector<Stmt>& body) {
    for (const Stmt& s : body) emit(s);
  }

  void emit(const Stmt& s) {
    switch (s.kind) {
      case Stmt::Skip: break;
      case Stmt::Assign: {
        locals->insert(s.target);
        Instr i;
        i.op = Instr::LocalAssign;
        i.target = s.target;
        i.expr = s.expr;
        code->push_back(std::move(i));
        break;
      }
      case Stmt::ReadReg: {
        locals->insert(s.target);
        Instr i;
        i.op = Instr::ReadReg;
        i.target = s.target;
        i.reg = s.reg;
        code->push_back(std::move(i));
        break;
      }
      case Stmt::WriteReg: {
        Instr i;
        i.op = Instr::WriteReg;
        i.reg = s.reg;
        i.expr = s.expr;
        code->push_back(std::move(i));
        break;
      }
      case Stmt::If: {
        Instr jz;
        jz.op = Instr::Jz;
        jz.expr = s.expr;
        std::size_t at = code->size();
        code->push_back(jz);
        emit_block(s.body);
        if (s.els.empty()) {
          (*code)[at].a = code->size();
        } else {
          Instr jmp;
          jmp.op = Instr::Jmp;
          std::size_t jat = code->size();
          code->push_back(jmp);
          (*code)[at].a = code->size();
          emit_block(s.els);
          (*code)[jat].a = code->size();
        }
        break;
      }
      case Stmt::While: {
        int site = out.loop_sites++;
        std::size_t top = code->size();
        Instr jz;
        jz.op = Instr::Jz;
        jz.expr = s.expr;
        jz.b = site;
        std::size_t at = code->size();
        code->push_back(jz);
        emit_block(s.body);
        Instr back;
        back.op = Instr::Back;
        back.a = top;
        back.b = site;
        code->push_back(back);
        (*code)[at].a = code->size();
        break;
      }
      case Stmt::DoWhile: {
        int site = out.loop_sites++;
        std::size_t top = code->size();
        emit_block(s.body);
        Instr j;
        j.op = Instr::JnzBack;
        j.expr = s.expr;
        j.a = top;
        j.b = site;
        code->push_back(j);
        break;
      }
      case Stmt::Atomic: {
        locals->insert(s.target);
        Instr b;
        b.op = Instr::Begin;
        b.target = s.target;
        std::size_t at = code->size();
        code->push_back(b);
        emit_block(s.body);
        Instr e;
        e.op = Instr::End;
        e.a = at;
        code->push_back(e);
        (*code)[at].a = code->size() - 1;
        break;
      }
    }
  }
};

}  // namespace detail

inline Compiled compile(const Program& p) {
  detail::Compiler c;
  c.out.code.resize(p.threads.size());
  c.out.own_locals.resize(p.threads.size());
  for (std::size_t t = 0; t < p.threads.size(); ++t) {
    c.code = &c.out.code[t];
    std::set<std::string> ls;
    c.locals = &ls;
    c.emit_block(p.threads[t].body);
    c.out.own_locals[t].assign(ls.begin(), ls.end());
  }
  return std::move(c.out);
}

}  // namespace tmlab::lang
