// Dynamic-staging evaluator.
//
// The program state is a single term. At every step the scheduler fires the
// deepest instruction whose staging expression holds and which can make
// progress; ties at equal depth go to the leftmost path.

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stagecraft/ir.hpp"

namespace stagecraft {

constexpr std::size_t kDefaultFuel = 1'000'000;

/// Binding state of a variable for staging purposes.
struct Binding {
  enum class Kind { Concrete, Symbolic } kind = Kind::Symbolic;
  std::optional<Term> value;

  static Binding concrete(Term t) { return {Kind::Concrete, std::move(t)}; }
  static Binding symbolic() { return {}; }
};

/// Variables missing from the map are symbolic.
using Valuation = std::map<Identifier, Binding>;

/// Child indices from the program root. Lambda: [body]; Tuple: items;
/// Rec: [fn]; HostExpr: embedded terms; Map: values; Apply: [callee, args...];
/// Fix: [value, rest].
using RedexPath = std::vector<std::size_t>;

std::string format_path(const RedexPath& p);

enum class ReductionKind { Beta, FixUnfold, HostExpr, Builtin };
std::string to_string(ReductionKind k);

struct StepRecord {
  std::size_t number = 0;
  RedexPath path;
  StageExpr stage;
  ReductionKind kind = ReductionKind::Beta;
  std::optional<Term> snapshot;  // program after the step, when requested
};

struct Trace {
  std::vector<StepRecord> steps;

  /// One line per step: number, path, kind and stage, tab separated.
  std::string serialize() const;
};

class EvalError : public std::runtime_error {
 public:
  EvalError(const std::string& message, RedexPath path, Trace trace = {});
  const RedexPath& path() const { return path_; }
  const Trace& trace() const { return trace_; }
  void set_trace(Trace t) { trace_ = std::move(t); }

 private:
  RedexPath path_;
  Trace trace_;
};

bool eval_stage_expr(const StageExpr& e, const Valuation& v);

/// Next instruction to fire, if any.
std::optional<RedexPath> find_redex(const Term& program);

struct StepOutcome {
  Term program;
  StepRecord record;
  std::optional<Term> exit_value;  // set when `exit` fired
};

/// Fires one instruction. Returns nothing when no instruction can progress.
std::optional<StepOutcome> step(const Term& program);

/// Treats a zero-parameter program lambda as invoked: its stage parameter
/// becomes always, which activates its naturally staged instructions.
Term invoke(const Term& program);

struct RunOptions {
  std::size_t fuel = kDefaultFuel;
  bool snapshots = false;
  bool invoke_program = true;
};

struct RunResult {
  Term final_program;
  Trace trace;
  bool exhausted = false;
  std::optional<Term> exit_value;
};

RunResult run(const Term& program, const RunOptions& opts = {});

/// Reads the residual program out of a run result: the body of the outermost
/// lambda whose stage parameter is named `live_stage`. Searches the exit value
/// first, then the final program.
Body residualize(const RunResult& result, const std::string& live_stage = "pt");
Body residualize(const Term& final_program, const std::string& live_stage = "pt");

/// The term found by residualize (the live lambda itself).
Term residual_lambda(const RunResult& result, const std::string& live_stage = "pt");

/// Term or body reached by a path.
std::string describe_at(const Term& program, const RedexPath& path);

}  // namespace stagecraft
