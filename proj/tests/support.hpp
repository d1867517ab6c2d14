// Oracles and inspection helpers shared by the unit and acceptance tests.

#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "stagecraft/dsl.hpp"
#include "stagecraft/engine.hpp"
#include "stagecraft/host.hpp"
#include "stagecraft/ir.hpp"
#include "stagecraft/syntax.hpp"

namespace testing {

using namespace stagecraft;

Term parse(const std::string& text);
Body parse_instrs(const std::string& text);
std::string slurp(const std::string& path);
std::string fixture(const std::string& name);  // tests/fixtures/<name>

/// Direct recursive evaluation of an arithmetic tree.
Number eval_direct(const ArithExpr& e, const std::map<std::string, Number>& env = {});

/// Random + - * tree with integer leaves in [0, 9].
ArithExpr random_tree(std::mt19937& rng, int max_depth);

/// Random program of nested bindings and references; every reference is bound.
ArithExpr random_binding_program(std::mt19937& rng, int max_depth);

/// Minimum over every full parenthesization, by exhaustive recursion.
std::uint64_t brute_force_chain_cost(const Dims& d);

/// Instructions of a residual body, following continuation lambdas.
std::vector<Body> instruction_chain(const Body& body);

/// Every identifier occurring anywhere in a term (bound or free).
std::vector<std::string> all_identifiers(const Term& t);

struct PurityReport {
  bool pure = true;
  std::string reason;
};

/// Checks a residual lambda: a single chain of host-expression instructions
/// ending in a call of its own first parameter, each staged on the live stage
/// parameter (or its rebinding by the previous continuation), with no lambdas
/// other than the continuations and no map, call or indexing operations.
PurityReport check_residual(const Term& residual_lambda);

/// Count of host-expression instructions whose top operation is `op`.
std::size_t count_host_ops(const Body& body, const std::string& op);

/// Multiplication order read back from a matrix residual, as left-operand
/// positions in the shrinking list of matrix names.
MulOrder residual_mul_order(const Body& body, const std::vector<std::string>& names);

enum class Builders { Unstaged, Staged, Universal };

/// Random single-operation user codes over x, such as "x*3".
std::vector<std::string> random_fragment_codes(std::mt19937& rng, int k);

/// One fragment per code, built with the given builders, merged in an
/// association chosen by `rng` (order preserved) and sealed. The program
/// exits with the residual `(exit, x) { ... }`.
std::string fragment_chain_program(std::mt19937& rng, const std::vector<std::string>& codes, Builders b);

}  // namespace testing
