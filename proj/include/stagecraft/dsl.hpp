// Arithmetic DSL front end and the pipelines that run its semantic actions.

#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stagecraft/engine.hpp"
#include "stagecraft/prelude.hpp"

namespace stagecraft {

struct SourcePos {
  int line = 1;
  int column = 1;
  bool operator==(const SourcePos&) const = default;
};

class DslError : public std::runtime_error {
 public:
  DslError(const std::string& message, std::optional<SourcePos> pos = std::nullopt);
  const std::optional<SourcePos>& pos() const { return pos_; }

 private:
  std::optional<SourcePos> pos_;
};

struct ArithExpr {
  enum class Kind { Number, Ref, Binary, Bind, MatMul } kind = Kind::Number;
  Number value;             // Number
  std::string name;         // Ref, Bind; matrix names in MatMul are Ref kids
  char op = '+';            // Binary
  std::vector<ArithExpr> kids;  // Binary: l, r; Bind: value, body; MatMul: refs
  SourcePos pos;

  static ArithExpr number(Number v, SourcePos p = {});
  static ArithExpr ref(std::string n, SourcePos p = {});
  static ArithExpr binary(char op, ArithExpr l, ArithExpr r, SourcePos p = {});
  static ArithExpr bind(std::string n, ArithExpr value, ArithExpr body, SourcePos p = {});
  static ArithExpr matmul(std::vector<ArithExpr> refs, SourcePos p = {});
};

/// Fully parenthesized rendering, e.g. ((1+(4*2))+3).
std::string to_string(const ArithExpr& e);

/// Integers, identifiers, + - * / with the usual precedence, parentheses,
/// leading `name = expr;` bindings and `matmul(A, B, ...)` chains. Errors
/// are ParseError with line and column.
ArithExpr parse_arith(const std::string& text);

struct MatrixShape {
  std::int64_t rows = 1;
  std::int64_t cols = 1;
  std::string name;
};

using MatrixTable = std::map<std::string, MatrixShape>;

/// Reads a chain file: one matrix per line as `rows cols name`; `#` starts a comment.
std::vector<MatrixShape> parse_chain(const std::string& text);

struct ActionEvent {
  enum class Kind { Start, Number, Add, Sub, Mul, Div, Bind, Reference, MulStart, MulNext, MulEnd, Matrix, End };
  Kind kind = Kind::Start;
  Number value;        // Number
  std::string name;    // Bind, Reference, Matrix (data name)
  MatrixShape shape;   // Matrix
  SourcePos pos;

  bool operator==(const ActionEvent& o) const;
};

/// Compact rendering used in tests: numbers print as themselves, the
/// rest as their action name (bind/reference carry the name: bind:x).
std::string to_string(const ActionEvent& e);
std::string to_string(const std::vector<ActionEvent>& events);

enum class EventOrder { Postfix, Prefix };

/// Walks the tree; postfix puts operands before operators, prefix puts
/// operators first. Matrix names are resolved through `matrices`.
std::vector<ActionEvent> emit_events(const ArithExpr& tree, EventOrder order, const MatrixTable* matrices = nullptr);

enum class Pipeline { Immediate, Simple, Staged, Stack, Ast, Env };

std::string to_string(Pipeline p);
/// Accepts immediate, simple, staged, stack, ast, env.
Pipeline parse_pipeline(const std::string& name);

struct PipelineInfo {
  PreludeVariant prelude;
  std::vector<std::string> action_files;  // under dsl_dir()
  EventOrder order;
};

PipelineInfo pipeline_info(Pipeline p);

/// Directory holding the action files; STAGECRAFT_DSL_DIR overrides it.
std::string dsl_dir();

/// Object-language driver that feeds the events to the actions, one event per line.
std::string driver_source(const std::vector<ActionEvent>& events, Pipeline p);

/// Driver linked with the prelude and the pipeline's actions.
Term pipeline_program(const std::vector<ActionEvent>& events, Pipeline p);

/// Runs the immediate interpreter and returns the exit value.
Number run_immediate(const std::vector<ActionEvent>& events, std::size_t fuel = kDefaultFuel);

struct BuildResult {
  Term residual_lambda;  // (exit)'[pt]' { ... }
  Body residual;         // its body
  RunResult run;
};

/// Runs a building pipeline to completion and extracts the residual program.
BuildResult build_program(const std::vector<ActionEvent>& events, Pipeline p, std::size_t fuel = kDefaultFuel);

/// Pipeline for name-binding programs (prefix order, binding actions).
BuildResult run_env_example(const std::vector<ActionEvent>& events, std::size_t fuel = kDefaultFuel);

/// Builds and residualizes `matmul(...)` over the given chain.
BuildResult run_matmul_example(const std::vector<MatrixShape>& chain, std::size_t fuel = kDefaultFuel);

/// Applies a residual program to a continuation that exits with its
/// argument, runs it, and returns the exit value.
Term execute_residual(const Term& residual_lambda, std::size_t fuel = kDefaultFuel);

/// Convenience: parse, emit in the pipeline's order, and build or run.
std::vector<ActionEvent> events_for(const std::string& arith, Pipeline p, const MatrixTable* matrices = nullptr);

}  // namespace stagecraft
