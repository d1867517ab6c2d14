// Surface syntax: tokenizer, parser with desugaring, and pretty printer.

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "stagecraft/ir.hpp"

namespace stagecraft {

struct SourceProgram {
  std::string text;
  std::string origin = "<inline>";
};

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int column, std::string message, std::vector<std::string> expected = {});

  int line() const { return line_; }
  int column() const { return column_; }
  const std::string& message() const { return message_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  int line_;
  int column_;
  std::string message_;
  std::vector<std::string> expected_;
};

enum class TokenKind {
  Ident,
  Number,
  Text,        // :name or :"..."
  HostExpr,    // "..." with escapes resolved
  StagePrefix, // '@e:'   (text holds e)
  StageParam,  // '[y]'   (text holds y)
  LParen,
  RParen,
  LBrace,
  RBrace,
  LBracket,
  RBracket,
  Comma,
  Bang,
  End,
};

struct Token {
  TokenKind kind;
  std::string text;
  int line = 1;
  int column = 1;
  bool operator==(const Token& o) const { return kind == o.kind && text == o.text; }
};

std::vector<Token> tokenize(const SourceProgram& src);

/// Parses a whole program. The result is a zero-parameter lambda whose body
/// is the top-level instruction sequence; running the program invokes it.
Term parse_program(const SourceProgram& src);

/// Parses a sequence of instructions (no enclosing lambda); free names
/// `if` and `exit` become builtins.
Body parse_body(const SourceProgram& src);

struct Definition {
  enum class Kind { Let, Fix } kind;
  Identifier name;
  Term value;
};

/// Parses a file made only of `let` / `fix` headers (a prelude asset).
std::vector<Definition> parse_definitions(const SourceProgram& src);

/// Nests a parsed program inside the definitions, outermost first. The
/// program's top-level instructions keep their natural staging.
Term link_program(const std::vector<Definition>& defs, const Term& program);

/// Parses one quoted host expression (without the quotes).
HostExpr parse_host_expr(const std::string& text, int line = 1, int column = 1);

std::string print_term(const Term& t);
std::string print_body(const Body& b);
std::string print_stage(const StageExpr& e);
std::string print_host(const HostExpr& e);
/// Prints a parsed program as its top-level instruction sequence.
std::string print_program(const Term& program);

/// Renames every binder to b0, b1, ... in traversal order.
Term canonicalize(const Term& t);
Body canonicalize(const Body& b);

}  // namespace stagecraft
