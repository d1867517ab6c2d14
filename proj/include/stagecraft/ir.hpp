// Core term representation for the staged CPS language.
//
// Terms and bodies are immutable handles over shared nodes. Every node caches
// its free variables and whether its subtree holds an instruction whose
// staging expression is already satisfied, so the engine can skip inert
// subtrees without re-walking them.

#pragma once

#include <compare>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace stagecraft {

using Number = boost::multiprecision::cpp_rational;

struct Identifier {
  std::string text;
  unsigned tag = 0;

  Identifier() = default;
  Identifier(std::string t, unsigned g = 0) : text(std::move(t)), tag(g) {}
  Identifier(const char* t) : text(t) {}

  std::string str() const;
  auto operator<=>(const Identifier&) const = default;
  bool operator==(const Identifier&) const = default;
};

/// Sorted, duplicate-free identifier list.
using IdList = std::vector<Identifier>;

bool contains(const IdList& ids, const Identifier& id);
IdList unite(const IdList& a, const IdList& b);
IdList remove_all(const IdList& from, const IdList& drop);

namespace detail {
struct StageNode;
struct TermNode;
struct BodyNode;
struct HostNode;
}  // namespace detail

/// Boolean staging expression: always, never, variables, &, |, !.
class StageExpr {
 public:
  enum class Kind { Always, Never, Var, And, Or, Not };

  StageExpr();  // always
  static StageExpr always();
  static StageExpr never();
  static StageExpr var(Identifier id);
  static StageExpr conj(StageExpr a, StageExpr b);
  static StageExpr disj(StageExpr a, StageExpr b);
  static StageExpr negate(StageExpr a);

  Kind kind() const;
  const Identifier& id() const;  // Var only
  const StageExpr& lhs() const;  // And/Or/Not
  const StageExpr& rhs() const;  // And/Or
  const IdList& free_vars() const;

  /// Value with every remaining variable read as symbolic (never).
  bool satisfied() const;

  bool is_var(const Identifier& id) const { return kind() == Kind::Var && this->id() == id; }

 private:
  explicit StageExpr(std::shared_ptr<const detail::StageNode> n) : node_(std::move(n)) {}
  std::shared_ptr<const detail::StageNode> node_;
};

struct Literal {
  std::variant<Number, bool, std::string> value;

  bool is_number() const { return std::holds_alternative<Number>(value); }
  bool is_bool() const { return std::holds_alternative<bool>(value); }
  bool is_text() const { return std::holds_alternative<std::string>(value); }
  const Number& number() const { return std::get<Number>(value); }
  bool boolean() const { return std::get<bool>(value); }
  const std::string& text() const { return std::get<std::string>(value); }
  std::string str() const;
  bool operator==(const Literal&) const = default;
};

class Body;
class HostExpr;
struct Param;
struct LambdaData;
struct RecData;
struct ApplyData;
struct FixData;

enum class TermKind { Lambda, Var, Literal, Tuple, StageConst, HostExpr, Builtin, Rec, Map };

class Term {
 public:
  Term();  // empty tuple
  static Term lambda(std::vector<Param> params, Identifier stage_param, Body body);
  static Term var(Identifier id);
  static Term literal(Literal lit);
  static Term number(Number n);
  static Term boolean(bool b);
  static Term text(std::string s);
  static Term tuple(std::vector<Term> items);
  static Term stage_const(bool always);
  static Term host(HostExpr e);
  static Term builtin(std::string name);
  /// Self-referential function: `name` is bound to the Rec itself inside `fn`.
  static Term rec(Identifier name, Term fn);
  static Term map(std::vector<std::pair<std::string, Term>> entries);

  TermKind kind() const;
  bool is(TermKind k) const { return kind() == k; }

  const LambdaData& as_lambda() const;
  const Identifier& as_var() const;
  const Literal& as_literal() const;
  const std::vector<Term>& as_tuple() const;
  bool as_stage_const() const;
  const HostExpr& as_host() const;
  const std::string& as_builtin() const;
  const RecData& as_rec() const;
  const std::vector<std::pair<std::string, Term>>& as_map() const;

  const IdList& free_vars() const;
  /// True when some instruction in this subtree has a satisfied stage.
  bool has_active() const;
  bool same_node(const Term& o) const { return node_ == o.node_; }

 private:
  explicit Term(std::shared_ptr<const detail::TermNode> n) : node_(std::move(n)) {}
  std::shared_ptr<const detail::TermNode> node_;
};

struct Param {
  Identifier name;
  bool packed = false;
  bool operator==(const Param&) const = default;
};

/// Call argument; a splice expands a tuple in place.
struct Arg {
  Term value;
  bool splice = false;
};

enum class BodyKind { Apply, Fix };

/// One instruction of a lambda body: a staged application or a staged fix.
class Body {
 public:
  static Body apply(StageExpr stage, Term callee, std::vector<Arg> args);
  static Body fix(StageExpr stage, Identifier name, Identifier stage_param, Term value, Body rest);

  BodyKind kind() const;
  bool is_apply() const { return kind() == BodyKind::Apply; }
  const ApplyData& as_apply() const;
  const FixData& as_fix() const;
  const StageExpr& stage() const;

  const IdList& free_vars() const;
  bool has_active() const;
  /// This node's own stage is satisfied.
  bool self_active() const;
  bool same_node(const Body& o) const { return node_ == o.node_; }

 private:
  explicit Body(std::shared_ptr<const detail::BodyNode> n) : node_(std::move(n)) {}
  std::shared_ptr<const detail::BodyNode> node_;
};

/// Quoted non-CPS expression. Leaves that refer to object-language values are
/// stored as embedded terms, so substitution reaches inside the quote.
class HostExpr {
 public:
  enum class Op { Ref, List, Binary, Neg, Index, Field, Method, Call, Range };

  static HostExpr ref(Term t);
  static HostExpr list(std::vector<HostExpr> items);
  static HostExpr binary(std::string op, HostExpr l, HostExpr r);
  static HostExpr neg(HostExpr x);
  static HostExpr index(HostExpr base, HostExpr idx);
  static HostExpr field(HostExpr base, std::string name);
  static HostExpr method(HostExpr base, std::string name, std::vector<HostExpr> args);
  static HostExpr call(std::string name, std::vector<HostExpr> args);
  static HostExpr range(HostExpr lo, HostExpr hi);

  Op op() const;
  const std::string& name() const;  // operator, field, method or function name
  const std::vector<HostExpr>& kids() const;
  const Term& term() const;  // Ref only

  const IdList& free_vars() const;
  bool has_active() const;

  /// Embedded terms in left-to-right order.
  std::vector<Term> refs() const;
  /// Rebuilds with the embedded terms replaced, in refs() order.
  HostExpr with_refs(const std::vector<Term>& replacement) const;

 private:
  explicit HostExpr(std::shared_ptr<const detail::HostNode> n) : node_(std::move(n)) {}
  static HostExpr make(Op op, std::string name, std::vector<HostExpr> kids, std::optional<Term> term);
  std::shared_ptr<const detail::HostNode> node_;
};

struct LambdaData {
  std::vector<Param> params;
  Identifier stage_param;
  Body body;
};

struct RecData {
  Identifier name;
  Term fn;
};

struct ApplyData {
  StageExpr stage;
  Term callee;
  std::vector<Arg> args;
};

struct FixData {
  StageExpr stage;
  Identifier name;
  Identifier stage_param;
  Term value;
  Body rest;
};

using Subst = std::vector<std::pair<Identifier, Term>>;

IdList free_vars(const Term& t);
IdList free_vars(const Body& b);

/// Capture-avoiding simultaneous substitution.
Term substitute(const Term& t, const Subst& s);
Body substitute(const Body& b, const Subst& s);
StageExpr substitute(const StageExpr& e, const Subst& s);

bool alpha_equivalent(const Term& a, const Term& b);
bool alpha_equivalent(const Body& a, const Body& b);

/// `hint` itself when unused, otherwise the hint text with the smallest free tag.
Identifier fresh_name(const Identifier& hint, const IdList& in_use);

/// Number of nested instructions along the continuation spine of a body.
std::size_t instruction_count(const Body& b);

}  // namespace stagecraft
