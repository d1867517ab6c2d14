#include "stagecraft/ir.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace stagecraft {

std::string Identifier::str() const {
  return tag == 0 ? text : text + "#" + std::to_string(tag);
}

bool contains(const IdList& ids, const Identifier& id) {
  return std::binary_search(ids.begin(), ids.end(), id);
}

IdList unite(const IdList& a, const IdList& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  IdList out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

IdList remove_all(const IdList& from, const IdList& drop) {
  if (from.empty() || drop.empty()) return from;
  IdList out;
  std::set_difference(from.begin(), from.end(), drop.begin(), drop.end(),
                      std::back_inserter(out));
  return out;
}

namespace {

IdList sorted(IdList ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

}  // namespace

std::string Literal::str() const {
  if (is_number()) {
    const Number& n = number();
    if (denominator(n) == 1) return numerator(n).str();
    return numerator(n).str() + "/" + denominator(n).str();
  }
  if (is_bool()) return boolean() ? "true" : "false";
  return ":" + text();
}

// ---------------------------------------------------------------------------
// Nodes

namespace detail {

struct StageNode {
  StageExpr::Kind kind;
  Identifier id;
  std::vector<StageExpr> kids;
  IdList fv;
  bool value = false;
};

struct VarData {
  Identifier id;
};
struct StageConstData {
  bool always;
};
struct BuiltinData {
  std::string name;
};
struct TupleData {
  std::vector<Term> items;
};
struct MapData {
  std::vector<std::pair<std::string, Term>> entries;
};
struct HostData {
  HostExpr expr;
};

struct TermNode {
  std::variant<LambdaData, VarData, Literal, TupleData, StageConstData, HostData, BuiltinData,
               RecData, MapData>
      data;
  IdList fv;
  bool active = false;
};

struct BodyNode {
  std::variant<ApplyData, FixData> data;
  IdList fv;
  bool self_active = false;
  bool active = false;
};

struct HostNode {
  HostExpr::Op op;
  std::string name;
  std::vector<HostExpr> kids;
  std::optional<Term> term;
  IdList fv;
  bool active = false;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// StageExpr

namespace {

std::shared_ptr<const detail::StageNode> make_stage(StageExpr::Kind k, Identifier id,
                                                    std::vector<StageExpr> kids) {
  auto n = std::make_shared<detail::StageNode>();
  n->kind = k;
  n->id = std::move(id);
  n->kids = std::move(kids);
  switch (k) {
    case StageExpr::Kind::Always: n->value = true; break;
    case StageExpr::Kind::Never: n->value = false; break;
    case StageExpr::Kind::Var:
      n->fv = {n->id};
      n->value = false;
      break;
    case StageExpr::Kind::And:
      n->fv = unite(n->kids[0].free_vars(), n->kids[1].free_vars());
      n->value = n->kids[0].satisfied() && n->kids[1].satisfied();
      break;
    case StageExpr::Kind::Or:
      n->fv = unite(n->kids[0].free_vars(), n->kids[1].free_vars());
      n->value = n->kids[0].satisfied() || n->kids[1].satisfied();
      break;
    case StageExpr::Kind::Not:
      n->fv = n->kids[0].free_vars();
      n->value = !n->kids[0].satisfied();
      break;
  }
  return n;
}

const std::shared_ptr<const detail::StageNode>& always_node() {
  static const auto n = make_stage(StageExpr::Kind::Always, {}, {});
  return n;
}

const std::shared_ptr<const detail::StageNode>& never_node() {
  static const auto n = make_stage(StageExpr::Kind::Never, {}, {});
  return n;
}

}  // namespace

StageExpr::StageExpr() : node_(always_node()) {}
StageExpr StageExpr::always() { return StageExpr(always_node()); }
StageExpr StageExpr::never() { return StageExpr(never_node()); }
StageExpr StageExpr::var(Identifier id) { return StageExpr(make_stage(Kind::Var, std::move(id), {})); }
StageExpr StageExpr::conj(StageExpr a, StageExpr b) {
  return StageExpr(make_stage(Kind::And, {}, {std::move(a), std::move(b)}));
}
StageExpr StageExpr::disj(StageExpr a, StageExpr b) {
  return StageExpr(make_stage(Kind::Or, {}, {std::move(a), std::move(b)}));
}
StageExpr StageExpr::negate(StageExpr a) {
  return StageExpr(make_stage(Kind::Not, {}, {std::move(a)}));
}
StageExpr::Kind StageExpr::kind() const { return node_->kind; }
const Identifier& StageExpr::id() const { return node_->id; }
const StageExpr& StageExpr::lhs() const { return node_->kids.at(0); }
const StageExpr& StageExpr::rhs() const { return node_->kids.at(1); }
const IdList& StageExpr::free_vars() const { return node_->fv; }
bool StageExpr::satisfied() const { return node_->value; }

// ---------------------------------------------------------------------------
// Term

namespace {

std::shared_ptr<const detail::TermNode> finish(detail::TermNode n) {
  return std::make_shared<const detail::TermNode>(std::move(n));
}

IdList binders_of(const LambdaData& l) {
  IdList ids;
  for (const auto& p : l.params) ids.push_back(p.name);
  ids.push_back(l.stage_param);
  return sorted(std::move(ids));
}

}  // namespace

Term::Term() : Term(tuple({})) {}

Term Term::lambda(std::vector<Param> params, Identifier stage_param, Body body) {
  detail::TermNode n{LambdaData{std::move(params), std::move(stage_param), std::move(body)}, {}, false};
  const auto& l = std::get<LambdaData>(n.data);
  n.fv = remove_all(l.body.free_vars(), binders_of(l));
  n.active = l.body.has_active();
  return Term(finish(std::move(n)));
}

Term Term::var(Identifier id) {
  detail::TermNode n{detail::VarData{id}, {id}, false};
  return Term(finish(std::move(n)));
}

Term Term::literal(Literal lit) { return Term(finish({std::move(lit), {}, false})); }
Term Term::number(Number v) { return literal(Literal{std::move(v)}); }
Term Term::boolean(bool b) { return literal(Literal{b}); }
Term Term::text(std::string s) { return literal(Literal{std::move(s)}); }

Term Term::tuple(std::vector<Term> items) {
  detail::TermNode n{detail::TupleData{std::move(items)}, {}, false};
  for (const auto& t : std::get<detail::TupleData>(n.data).items) {
    n.fv = unite(n.fv, t.free_vars());
    n.active = n.active || t.has_active();
  }
  return Term(finish(std::move(n)));
}

Term Term::stage_const(bool always) { return Term(finish({detail::StageConstData{always}, {}, false})); }

Term Term::host(HostExpr e) {
  IdList fv = e.free_vars();
  bool active = e.has_active();
  return Term(finish({detail::HostData{std::move(e)}, std::move(fv), active}));
}

Term Term::builtin(std::string name) { return Term(finish({detail::BuiltinData{std::move(name)}, {}, false})); }

Term Term::rec(Identifier name, Term fn) {
  if (!fn.is(TermKind::Lambda)) throw std::invalid_argument("fix value must be a lambda");
  IdList fv = remove_all(fn.free_vars(), {name});
  bool active = fn.has_active();
  return Term(finish({RecData{std::move(name), std::move(fn)}, std::move(fv), active}));
}

Term Term::map(std::vector<std::pair<std::string, Term>> entries) {
  detail::TermNode n{detail::MapData{std::move(entries)}, {}, false};
  for (const auto& [k, t] : std::get<detail::MapData>(n.data).entries) {
    n.fv = unite(n.fv, t.free_vars());
    n.active = n.active || t.has_active();
  }
  return Term(finish(std::move(n)));
}

TermKind Term::kind() const { return static_cast<TermKind>(node_->data.index()); }
const LambdaData& Term::as_lambda() const { return std::get<LambdaData>(node_->data); }
const Identifier& Term::as_var() const { return std::get<detail::VarData>(node_->data).id; }
const Literal& Term::as_literal() const { return std::get<Literal>(node_->data); }
const std::vector<Term>& Term::as_tuple() const { return std::get<detail::TupleData>(node_->data).items; }
bool Term::as_stage_const() const { return std::get<detail::StageConstData>(node_->data).always; }
const HostExpr& Term::as_host() const { return std::get<detail::HostData>(node_->data).expr; }
const std::string& Term::as_builtin() const { return std::get<detail::BuiltinData>(node_->data).name; }
const RecData& Term::as_rec() const { return std::get<RecData>(node_->data); }
const std::vector<std::pair<std::string, Term>>& Term::as_map() const {
  return std::get<detail::MapData>(node_->data).entries;
}
const IdList& Term::free_vars() const { return node_->fv; }
bool Term::has_active() const { return node_->active; }

// ---------------------------------------------------------------------------
// Body

Body Body::apply(StageExpr stage, Term callee, std::vector<Arg> args) {
  detail::BodyNode n{ApplyData{std::move(stage), std::move(callee), std::move(args)}, {}, false, false};
  const auto& a = std::get<ApplyData>(n.data);
  n.fv = unite(a.stage.free_vars(), a.callee.free_vars());
  n.active = a.callee.has_active();
  for (const auto& arg : a.args) {
    n.fv = unite(n.fv, arg.value.free_vars());
    n.active = n.active || arg.value.has_active();
  }
  n.self_active = a.stage.satisfied();
  n.active = n.active || n.self_active;
  return Body(std::make_shared<const detail::BodyNode>(std::move(n)));
}

Body Body::fix(StageExpr stage, Identifier name, Identifier stage_param, Term value, Body rest) {
  if (!value.is(TermKind::Lambda)) throw std::invalid_argument("fix value must be a lambda");
  detail::BodyNode n{FixData{std::move(stage), std::move(name), std::move(stage_param), std::move(value),
                             std::move(rest)},
                     {}, false, false};
  const auto& f = std::get<FixData>(n.data);
  n.fv = unite(f.stage.free_vars(), remove_all(f.value.free_vars(), {f.name}));
  n.fv = unite(n.fv, remove_all(f.rest.free_vars(), sorted({f.name, f.stage_param})));
  n.self_active = f.stage.satisfied();
  n.active = n.self_active || f.value.has_active() || f.rest.has_active();
  return Body(std::make_shared<const detail::BodyNode>(std::move(n)));
}

BodyKind Body::kind() const { return static_cast<BodyKind>(node_->data.index()); }
const ApplyData& Body::as_apply() const { return std::get<ApplyData>(node_->data); }
const FixData& Body::as_fix() const { return std::get<FixData>(node_->data); }
const StageExpr& Body::stage() const {
  return is_apply() ? as_apply().stage : as_fix().stage;
}
const IdList& Body::free_vars() const { return node_->fv; }
bool Body::has_active() const { return node_->active; }
bool Body::self_active() const { return node_->self_active; }

// ---------------------------------------------------------------------------
// HostExpr

namespace {

HostExpr::Op host_op(const detail::HostNode& n) { return n.op; }

}  // namespace

HostExpr HostExpr::make(Op op, std::string name, std::vector<HostExpr> kids, std::optional<Term> term) {
  auto n = std::make_shared<detail::HostNode>();
  n->op = op;
  n->name = std::move(name);
  n->kids = std::move(kids);
  n->term = std::move(term);
  if (n->term) {
    n->fv = n->term->free_vars();
    n->active = n->term->has_active();
  }
  for (const auto& k : n->kids) {
    n->fv = unite(n->fv, k.free_vars());
    n->active = n->active || k.has_active();
  }
  return HostExpr(std::shared_ptr<const detail::HostNode>(std::move(n)));
}

HostExpr HostExpr::ref(Term t) { return make(Op::Ref, "", {}, std::optional<Term>(std::move(t))); }
HostExpr HostExpr::list(std::vector<HostExpr> items) {
  return make(Op::List, "", std::move(items), std::nullopt);
}
HostExpr HostExpr::binary(std::string op, HostExpr l, HostExpr r) {
  return make(Op::Binary, std::move(op), (std::vector<HostExpr>{std::move(l), std::move(r)}),
                              std::nullopt);
}
HostExpr HostExpr::neg(HostExpr x) {
  return make(Op::Neg, "-", (std::vector<HostExpr>{std::move(x)}), std::nullopt);
}
HostExpr HostExpr::index(HostExpr base, HostExpr idx) {
  return make(Op::Index, "", (std::vector<HostExpr>{std::move(base), std::move(idx)}),
                              std::nullopt);
}
HostExpr HostExpr::field(HostExpr base, std::string name) {
  return make(Op::Field, std::move(name), (std::vector<HostExpr>{std::move(base)}),
                              std::nullopt);
}
HostExpr HostExpr::method(HostExpr base, std::string name, std::vector<HostExpr> args) {
  args.insert(args.begin(), std::move(base));
  return make(Op::Method, std::move(name), std::move(args), std::nullopt);
}
HostExpr HostExpr::call(std::string name, std::vector<HostExpr> args) {
  return make(Op::Call, std::move(name), std::move(args), std::nullopt);
}
HostExpr HostExpr::range(HostExpr lo, HostExpr hi) {
  return make(Op::Range, "..", (std::vector<HostExpr>{std::move(lo), std::move(hi)}),
                              std::nullopt);
}


HostExpr::Op HostExpr::op() const { return host_op(*node_); }
const std::string& HostExpr::name() const { return node_->name; }
const std::vector<HostExpr>& HostExpr::kids() const { return node_->kids; }
const Term& HostExpr::term() const { return *node_->term; }
const IdList& HostExpr::free_vars() const { return node_->fv; }
bool HostExpr::has_active() const { return node_->active; }

namespace {

void collect_refs(const HostExpr& e, std::vector<Term>& out) {
  if (e.op() == HostExpr::Op::Ref) {
    out.push_back(e.term());
    return;
  }
  for (const auto& k : e.kids()) collect_refs(k, out);
}

HostExpr rebuild_refs(const HostExpr& e, const std::vector<Term>& repl, std::size_t& pos) {
  using Op = HostExpr::Op;
  if (e.op() == Op::Ref) return HostExpr::ref(repl.at(pos++));
  std::vector<HostExpr> kids;
  for (const auto& k : e.kids()) kids.push_back(rebuild_refs(k, repl, pos));
  switch (e.op()) {
    case Op::List: return HostExpr::list(std::move(kids));
    case Op::Binary: return HostExpr::binary(e.name(), kids[0], kids[1]);
    case Op::Neg: return HostExpr::neg(kids[0]);
    case Op::Index: return HostExpr::index(kids[0], kids[1]);
    case Op::Field: return HostExpr::field(kids[0], e.name());
    case Op::Method: {
      HostExpr base = kids[0];
      kids.erase(kids.begin());
      return HostExpr::method(base, e.name(), std::move(kids));
    }
    case Op::Call: return HostExpr::call(e.name(), std::move(kids));
    case Op::Range: return HostExpr::range(kids[0], kids[1]);
    case Op::Ref: break;
  }
  throw std::logic_error("unreachable host node");
}

}  // namespace

std::vector<Term> HostExpr::refs() const {
  std::vector<Term> out;
  collect_refs(*this, out);
  return out;
}

HostExpr HostExpr::with_refs(const std::vector<Term>& replacement) const {
  std::size_t pos = 0;
  return rebuild_refs(*this, replacement, pos);
}

// ---------------------------------------------------------------------------
// free variables, substitution

IdList free_vars(const Term& t) { return t.free_vars(); }
IdList free_vars(const Body& b) { return b.free_vars(); }

Identifier fresh_name(const Identifier& hint, const IdList& in_use) {
  if (!contains(in_use, hint)) return hint;
  for (unsigned tag = 1;; ++tag) {
    Identifier candidate{hint.text, tag};
    if (!contains(in_use, candidate)) return candidate;
  }
}

namespace {

const Term* lookup(const Subst& s, const Identifier& id) {
  for (const auto& [k, v] : s)
    if (k == id) return &v;
  return nullptr;
}

// Keeps only the bindings whose key is free in `fv`.
Subst relevant(const Subst& s, const IdList& fv) {
  Subst out;
  for (const auto& kv : s)
    if (contains(fv, kv.first)) out.push_back(kv);
  return out;
}

IdList range_fv(const Subst& s) {
  IdList out;
  for (const auto& kv : s) out = unite(out, kv.second.free_vars());
  return out;
}

Term subst_term(const Term& t, const Subst& s);
Body subst_body(const Body& b, const Subst& s);

// Renames binders that would capture a free variable of the substitution
// range. Returns the new binder names (same order) and extends `s`.
std::vector<Identifier> guard_binders(const std::vector<Identifier>& binders, const IdList& scope_fv,
                                      Subst& s) {
  IdList avoid = range_fv(s);
  std::vector<Identifier> out = binders;
  bool clash = false;
  for (const auto& b : binders) clash = clash || contains(avoid, b);
  if (!clash) return out;
  IdList in_use = unite(avoid, scope_fv);
  for (const auto& kv : s) in_use = unite(in_use, {kv.first});
  in_use = unite(in_use, sorted(binders));
  for (auto& b : out) {
    if (!contains(avoid, b)) continue;
    Identifier fresh = fresh_name(b, in_use);
    in_use = unite(in_use, {fresh});
    s.emplace_back(b, Term::var(fresh));
    b = fresh;
  }
  return out;
}

StageExpr subst_stage(const StageExpr& e, const Subst& s) {
  using K = StageExpr::Kind;
  if (e.free_vars().empty()) return e;
  switch (e.kind()) {
    case K::Always:
    case K::Never: return e;
    case K::Var: {
      const Term* t = lookup(s, e.id());
      if (!t) return e;
      if (t->is(TermKind::StageConst)) return t->as_stage_const() ? StageExpr::always() : StageExpr::never();
      if (t->is(TermKind::Var)) return StageExpr::var(t->as_var());
      return StageExpr::always();
    }
    case K::And: return StageExpr::conj(subst_stage(e.lhs(), s), subst_stage(e.rhs(), s));
    case K::Or: return StageExpr::disj(subst_stage(e.lhs(), s), subst_stage(e.rhs(), s));
    case K::Not: return StageExpr::negate(subst_stage(e.lhs(), s));
  }
  return e;
}

Term subst_lambda(const Term& t, Subst s) {
  const auto& l = t.as_lambda();
  std::vector<Identifier> binders;
  for (const auto& p : l.params) binders.push_back(p.name);
  binders.push_back(l.stage_param);
  auto renamed = guard_binders(binders, l.body.free_vars(), s);
  std::vector<Param> params = l.params;
  for (std::size_t i = 0; i < params.size(); ++i) params[i].name = renamed[i];
  return Term::lambda(std::move(params), renamed.back(), subst_body(l.body, s));
}

Term subst_term(const Term& t, const Subst& s0) {
  Subst s = relevant(s0, t.free_vars());
  if (s.empty()) return t;
  switch (t.kind()) {
    case TermKind::Var: return *lookup(s, t.as_var());
    case TermKind::Lambda: return subst_lambda(t, std::move(s));
    case TermKind::Tuple: {
      std::vector<Term> items;
      for (const auto& x : t.as_tuple()) items.push_back(subst_term(x, s));
      return Term::tuple(std::move(items));
    }
    case TermKind::HostExpr: {
      std::vector<Term> refs = t.as_host().refs();
      for (auto& r : refs) r = subst_term(r, s);
      return Term::host(t.as_host().with_refs(refs));
    }
    case TermKind::Rec: {
      const auto& r = t.as_rec();
      auto renamed = guard_binders({r.name}, r.fn.free_vars(), s);
      return Term::rec(renamed[0], subst_term(r.fn, s));
    }
    case TermKind::Map: {
      auto entries = t.as_map();
      for (auto& [k, v] : entries) v = subst_term(v, s);
      return Term::map(std::move(entries));
    }
    case TermKind::Literal:
    case TermKind::StageConst:
    case TermKind::Builtin: return t;
  }
  return t;
}

Body subst_body(const Body& b, const Subst& s0) {
  Subst s = relevant(s0, b.free_vars());
  if (s.empty()) return b;
  if (b.is_apply()) {
    const auto& a = b.as_apply();
    std::vector<Arg> args;
    for (const auto& arg : a.args) args.push_back({subst_term(arg.value, s), arg.splice});
    return Body::apply(subst_stage(a.stage, s), subst_term(a.callee, s), std::move(args));
  }
  const auto& f = b.as_fix();
  StageExpr stage = subst_stage(f.stage, s);
  // The fix name scopes over value and rest; the stage parameter over rest only.
  IdList avoid = range_fv(s);
  IdList in_use = unite(avoid, unite(f.value.free_vars(), f.rest.free_vars()));
  for (const auto& kv : s) in_use = unite(in_use, {kv.first});
  in_use = unite(in_use, sorted({f.name, f.stage_param}));
  Identifier name = f.name;
  Subst for_value = s;
  if (contains(avoid, name)) {
    name = fresh_name(name, in_use);
    in_use = unite(in_use, {name});
    for_value.emplace_back(f.name, Term::var(name));
  }
  Subst for_rest;
  for (const auto& kv : for_value)
    if (kv.first != f.stage_param) for_rest.push_back(kv);
  Identifier y = f.stage_param;
  if (contains(avoid, y)) {
    y = fresh_name(y, in_use);
    for_rest.emplace_back(f.stage_param, Term::var(y));
  }
  Term value = subst_term(f.value, for_value);
  Body rest = subst_body(f.rest, for_rest);
  return Body::fix(stage, name, y, value, rest);
}

}  // namespace

Term substitute(const Term& t, const Subst& s) { return subst_term(t, s); }
Body substitute(const Body& b, const Subst& s) { return subst_body(b, s); }
StageExpr substitute(const StageExpr& e, const Subst& s) { return subst_stage(e, s); }

// ---------------------------------------------------------------------------
// alpha equivalence

namespace {

struct AlphaEnv {
  std::map<Identifier, std::vector<int>> left, right;
  int next = 0;

  void bind(const Identifier& a, const Identifier& b) {
    left[a].push_back(next);
    right[b].push_back(next);
    ++next;
  }
  void unbind(const Identifier& a, const Identifier& b) {
    left[a].pop_back();
    right[b].pop_back();
  }
  bool same(const Identifier& a, const Identifier& b) const {
    auto la = left.find(a);
    auto rb = right.find(b);
    bool ba = la != left.end() && !la->second.empty();
    bool bb = rb != right.end() && !rb->second.empty();
    if (ba != bb) return false;
    if (!ba) return a == b;
    return la->second.back() == rb->second.back();
  }
};

bool alpha(const Term& a, const Term& b, AlphaEnv& env);
bool alpha(const Body& a, const Body& b, AlphaEnv& env);

bool alpha(const StageExpr& a, const StageExpr& b, const AlphaEnv& env) {
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case StageExpr::Kind::Always:
    case StageExpr::Kind::Never: return true;
    case StageExpr::Kind::Var: return env.same(a.id(), b.id());
    case StageExpr::Kind::Not: return alpha(a.lhs(), b.lhs(), env);
    default: return alpha(a.lhs(), b.lhs(), env) && alpha(a.rhs(), b.rhs(), env);
  }
}

bool alpha_host(const HostExpr& a, const HostExpr& b, AlphaEnv& env) {
  if (a.op() != b.op() || a.name() != b.name() || a.kids().size() != b.kids().size()) return false;
  if (a.op() == HostExpr::Op::Ref) return alpha(a.term(), b.term(), env);
  for (std::size_t i = 0; i < a.kids().size(); ++i)
    if (!alpha_host(a.kids()[i], b.kids()[i], env)) return false;
  return true;
}

bool alpha(const Term& a, const Term& b, AlphaEnv& env) {
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case TermKind::Var: return env.same(a.as_var(), b.as_var());
    case TermKind::Literal: return a.as_literal() == b.as_literal();
    case TermKind::StageConst: return a.as_stage_const() == b.as_stage_const();
    case TermKind::Builtin: return a.as_builtin() == b.as_builtin();
    case TermKind::Tuple: {
      const auto& x = a.as_tuple();
      const auto& y = b.as_tuple();
      if (x.size() != y.size()) return false;
      for (std::size_t i = 0; i < x.size(); ++i)
        if (!alpha(x[i], y[i], env)) return false;
      return true;
    }
    case TermKind::Map: {
      const auto& x = a.as_map();
      const auto& y = b.as_map();
      if (x.size() != y.size()) return false;
      for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i].first != y[i].first || !alpha(x[i].second, y[i].second, env)) return false;
      return true;
    }
    case TermKind::HostExpr: return alpha_host(a.as_host(), b.as_host(), env);
    case TermKind::Rec: {
      env.bind(a.as_rec().name, b.as_rec().name);
      bool ok = alpha(a.as_rec().fn, b.as_rec().fn, env);
      env.unbind(a.as_rec().name, b.as_rec().name);
      return ok;
    }
    case TermKind::Lambda: {
      const auto& x = a.as_lambda();
      const auto& y = b.as_lambda();
      if (x.params.size() != y.params.size()) return false;
      for (std::size_t i = 0; i < x.params.size(); ++i)
        if (x.params[i].packed != y.params[i].packed) return false;
      for (std::size_t i = 0; i < x.params.size(); ++i) env.bind(x.params[i].name, y.params[i].name);
      env.bind(x.stage_param, y.stage_param);
      bool ok = alpha(x.body, y.body, env);
      env.unbind(x.stage_param, y.stage_param);
      for (std::size_t i = x.params.size(); i-- > 0;) env.unbind(x.params[i].name, y.params[i].name);
      return ok;
    }
  }
  return false;
}

bool alpha(const Body& a, const Body& b, AlphaEnv& env) {
  if (a.kind() != b.kind()) return false;
  if (!alpha(a.stage(), b.stage(), env)) return false;
  if (a.is_apply()) {
    const auto& x = a.as_apply();
    const auto& y = b.as_apply();
    if (x.args.size() != y.args.size() || !alpha(x.callee, y.callee, env)) return false;
    for (std::size_t i = 0; i < x.args.size(); ++i)
      if (x.args[i].splice != y.args[i].splice || !alpha(x.args[i].value, y.args[i].value, env))
        return false;
    return true;
  }
  const auto& x = a.as_fix();
  const auto& y = b.as_fix();
  env.bind(x.name, y.name);
  bool ok = alpha(x.value, y.value, env);
  if (ok) {
    env.bind(x.stage_param, y.stage_param);
    ok = alpha(x.rest, y.rest, env);
    env.unbind(x.stage_param, y.stage_param);
  }
  env.unbind(x.name, y.name);
  return ok;
}

}  // namespace

bool alpha_equivalent(const Term& a, const Term& b) {
  AlphaEnv env;
  return alpha(a, b, env);
}

bool alpha_equivalent(const Body& a, const Body& b) {
  AlphaEnv env;
  return alpha(a, b, env);
}

std::size_t instruction_count(const Body& b) {
  std::size_t n = 0;
  const Body* cur = &b;
  while (true) {
    ++n;
    if (!cur->is_apply()) {
      cur = &cur->as_fix().rest;
      continue;
    }
    const auto& a = cur->as_apply();
    if (a.args.empty() || a.args.back().splice || !a.args.back().value.is(TermKind::Lambda)) return n;
    cur = &a.args.back().value.as_lambda().body;
  }
}

}  // namespace stagecraft
