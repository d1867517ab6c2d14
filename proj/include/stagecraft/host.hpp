// Built-in functions and the quoted host-expression evaluator.

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stagecraft/ir.hpp"

namespace stagecraft {

class HostError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Result of evaluating a host expression. An empty value means the
/// expression needs a variable that is still symbolic.
struct HostResult {
  std::optional<Term> value;
  bool stuck() const { return !value.has_value(); }
};

/// Evaluates a host expression whose leaves are embedded terms. Variables
/// that remain in the expression are symbolic; operations that need their
/// value make the whole expression stuck. Matrices are tuples [dim, data]
/// with dim = [x, y] (columns, rows).
HostResult eval_host_expr(const HostExpr& e);

/// Convenience: parses `text` and evaluates it with `bindings` substituted.
HostResult eval_host_expr(const std::string& text, const Subst& bindings);

/// Outcome of a built-in call.
struct BuiltinResult {
  enum class Kind { Stuck, Replace, Exit } kind = Kind::Stuck;
  std::optional<Body> replacement;  // Replace
  std::optional<Term> exit_value;   // Exit
};

/// `if cond tb fb` and `exit v`.
BuiltinResult apply_builtin(const std::string& name, const std::vector<Term>& args);

using Dims = std::vector<std::int64_t>;
using MulOrder = std::vector<std::size_t>;

/// Optimal multiplication order for a chain where matrix i is d[i-1] x d[i].
/// order[k] is the position, in the shrinking matrix list, of the left
/// operand of the k-th multiplication.
MulOrder matrix_chain_order(const Dims& d);

/// Scalar multiplications spent when following `order` over the chain `d`.
std::uint64_t chain_cost(const Dims& d, const MulOrder& order);

/// Minimal cost by dynamic programming (no order reconstruction).
std::uint64_t optimal_chain_cost(const Dims& d);

}  // namespace stagecraft
