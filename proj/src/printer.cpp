#include <cctype>
#include <map>

#include "stagecraft/syntax.hpp"

namespace stagecraft {

namespace {

bool plain_word(const std::string& s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  return true;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

std::string literal_text(const Literal& lit) {
  if (lit.is_text()) return plain_word(lit.text()) ? ":" + lit.text() : ":\"" + escape(lit.text()) + "\"";
  return lit.str();
}

int stage_prec(const StageExpr& e) {
  switch (e.kind()) {
    case StageExpr::Kind::Or: return 0;
    case StageExpr::Kind::And: return 1;
    default: return 2;
  }
}

std::string stage_text(const StageExpr& e, int min_prec) {
  std::string out;
  switch (e.kind()) {
    case StageExpr::Kind::Always: out = "always"; break;
    case StageExpr::Kind::Never: out = "never"; break;
    case StageExpr::Kind::Var: out = e.id().str(); break;
    case StageExpr::Kind::Not: out = "!" + stage_text(e.lhs(), 2); break;
    case StageExpr::Kind::And: out = stage_text(e.lhs(), 1) + " & " + stage_text(e.rhs(), 2); break;
    case StageExpr::Kind::Or: out = stage_text(e.lhs(), 0) + " | " + stage_text(e.rhs(), 1); break;
  }
  return stage_prec(e) < min_prec ? "(" + out + ")" : out;
}

int host_prec(const HostExpr& e) {
  switch (e.op()) {
    case HostExpr::Op::Range: return 0;
    case HostExpr::Op::Binary: {
      const std::string& op = e.name();
      if (op == "+" || op == "-") return 2;
      if (op == "*" || op == "/") return 3;
      return 1;
    }
    case HostExpr::Op::Neg: return 4;
    case HostExpr::Op::Ref: {
      const Term& t = e.term();
      if (t.is(TermKind::Literal) && t.as_literal().is_number()) {
        const Number& n = t.as_literal().number();
        if (denominator(n) != 1) return 3;
        if (n < 0) return 4;
      }
      return 5;
    }
    default: return 5;
  }
}

std::string host_text(const HostExpr& e, int min_prec);

std::string host_list(const std::vector<HostExpr>& items, std::size_t from = 0) {
  std::string out;
  for (std::size_t i = from; i < items.size(); ++i) {
    if (i > from) out += ", ";
    out += host_text(items[i], 0);
  }
  return out;
}

std::string host_ref(const Term& t) {
  switch (t.kind()) {
    case TermKind::Var: return t.as_var().str();
    case TermKind::Literal: {
      const Literal& lit = t.as_literal();
      if (lit.is_text()) return "'" + lit.text() + "'";
      return lit.str();
    }
    case TermKind::Tuple: {
      std::string out = "[";
      const auto& items = t.as_tuple();
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ", ";
        out += host_ref(items[i]);
      }
      return out + "]";
    }
    case TermKind::Map: return "map()";
    default: return "<" + print_term(t) + ">";
  }
}

std::string host_text(const HostExpr& e, int min_prec) {
  std::string out;
  int prec = host_prec(e);
  switch (e.op()) {
    case HostExpr::Op::Ref: out = host_ref(e.term()); break;
    case HostExpr::Op::List: out = "[" + host_list(e.kids()) + "]"; break;
    case HostExpr::Op::Binary:
      out = host_text(e.kids()[0], prec) + e.name() + host_text(e.kids()[1], prec + 1);
      break;
    case HostExpr::Op::Neg: out = "-" + host_text(e.kids()[0], 4); break;
    case HostExpr::Op::Index:
      out = host_text(e.kids()[0], 5) + "[" + host_text(e.kids()[1], 0) + "]";
      break;
    case HostExpr::Op::Field: out = host_text(e.kids()[0], 5) + "." + e.name(); break;
    case HostExpr::Op::Method:
      out = host_text(e.kids()[0], 5) + "." + e.name() + "(" + host_list(e.kids(), 1) + ")";
      break;
    case HostExpr::Op::Call: out = e.name() + "(" + host_list(e.kids()) + ")"; break;
    case HostExpr::Op::Range:
      out = host_text(e.kids()[0], 1) + ".." + host_text(e.kids()[1], 1);
      break;
  }
  return prec < min_prec ? "(" + out + ")" : out;
}

// y occurs in the body other than as the body's own stage.
bool stage_param_visible(const Identifier& y, const Body& b) {
  if (!contains(b.free_vars(), y)) return false;
  if (!b.stage().is_var(y) && contains(b.stage().free_vars(), y)) return true;
  if (b.is_apply()) {
    const auto& a = b.as_apply();
    if (contains(a.callee.free_vars(), y)) return true;
    for (const auto& arg : a.args)
      if (contains(arg.value.free_vars(), y)) return true;
    return false;
  }
  const auto& f = b.as_fix();
  if (f.name == y) return false;
  if (contains(f.value.free_vars(), y)) return true;
  return f.stage_param != y && contains(f.rest.free_vars(), y);
}

class Printer {
 public:
  std::string term(const Term& t, int indent) {
    switch (t.kind()) {
      case TermKind::Lambda: return lambda(t.as_lambda(), indent);
      case TermKind::Var: return t.as_var().str();
      case TermKind::Literal: return literal_text(t.as_literal());
      case TermKind::Tuple: {
        std::string out = "[";
        const auto& items = t.as_tuple();
        for (std::size_t i = 0; i < items.size(); ++i) {
          if (i) out += ", ";
          out += term(items[i], indent);
        }
        return out + "]";
      }
      case TermKind::StageConst: return t.as_stage_const() ? "always" : "never";
      case TermKind::HostExpr: return "\"" + escape(host_text(t.as_host(), 0)) + "\"";
      case TermKind::Builtin: return t.as_builtin();
      case TermKind::Rec: return "<rec " + t.as_rec().name.str() + ">";
      case TermKind::Map: {
        std::string out = "<map";
        for (const auto& [k, v] : t.as_map()) out += " " + k + "=" + term(v, indent);
        return out + ">";
      }
    }
    return "?";
  }

  std::string params(const std::vector<Param>& ps, const Identifier& y, const Body& body) {
    std::string out = "(";
    for (std::size_t i = 0; i < ps.size(); ++i) {
      if (i) out += ", ";
      if (ps[i].packed) out += "!";
      out += ps[i].name.str();
    }
    out += ")";
    if (stage_param_visible(y, body)) out += "'[" + y.str() + "]'";
    return out;
  }

  std::string lambda(const LambdaData& l, int indent) {
    std::string head = params(l.params, l.stage_param, l.body);
    std::string inner = body(l.body, l.stage_param, indent + 2);
    if (inner.find('\n') == std::string::npos && inner.size() < 60) return head + " { " + inner + " }";
    return head + " {\n" + pad(indent + 2) + inner + "\n" + pad(indent) + "}";
  }

  std::string body(const Body& b, const Identifier& enclosing, int indent) {
    std::string out;
    if (!b.stage().is_var(enclosing)) out += "'@" + stage_text(b.stage(), 0) + ":' ";
    if (!b.is_apply()) {
      const auto& f = b.as_fix();
      out += "fix ";
      if (stage_param_visible(f.stage_param, f.rest)) out += "'[" + f.stage_param.str() + "]' ";
      out += f.name.str() + " " + term(f.value, indent);
      return out + "\n" + pad(indent) + body(f.rest, f.stage_param, indent);
    }
    const auto& a = b.as_apply();
    if (a.callee.is(TermKind::Lambda) && a.args.size() == 1 && !a.args[0].splice) {
      const auto& l = a.callee.as_lambda();
      if (l.params.size() == 1 && !l.params[0].packed) {
        out += "let ";
        if (stage_param_visible(l.stage_param, l.body)) out += "'[" + l.stage_param.str() + "]' ";
        out += l.params[0].name.str() + " " + term(a.args[0].value, indent);
        return out + "\n" + pad(indent) + body(l.body, l.stage_param, indent);
      }
    }
    out += term(a.callee, indent);
    for (std::size_t i = 0; i < a.args.size(); ++i) {
      const Arg& arg = a.args[i];
      bool last = i + 1 == a.args.size();
      if (last && !arg.splice && arg.value.is(TermKind::Lambda) &&
          !(a.callee.is(TermKind::Builtin) && a.callee.as_builtin() == "if")) {
        const auto& l = arg.value.as_lambda();
        out += " " + params(l.params, l.stage_param, l.body);
        return out + "\n" + pad(indent) + body(l.body, l.stage_param, indent);
      }
      out += arg.splice ? " !" : " ";
      out += term(arg.value, indent);
    }
    return out;
  }

 private:
  static std::string pad(int n) { return std::string(static_cast<std::size_t>(n), ' '); }
};

// ---------------------------------------------------------------------------
// Canonical binder names

class Canonicalizer {
 public:
  explicit Canonicalizer(IdList reserved) : reserved_(std::move(reserved)) {}

  using Env = std::map<Identifier, Identifier>;

  Identifier bind(const Identifier& old, Env& env) {
    Identifier fresh;
    do {
      fresh = Identifier{"b" + std::to_string(counter_++)};
    } while (contains(reserved_, fresh));
    env[old] = fresh;
    return fresh;
  }

  static Identifier look(const Identifier& id, const Env& env) {
    auto it = env.find(id);
    return it == env.end() ? id : it->second;
  }

  StageExpr stage(const StageExpr& e, const Env& env) {
    switch (e.kind()) {
      case StageExpr::Kind::Var: return StageExpr::var(look(e.id(), env));
      case StageExpr::Kind::Not: return StageExpr::negate(stage(e.lhs(), env));
      case StageExpr::Kind::And: return StageExpr::conj(stage(e.lhs(), env), stage(e.rhs(), env));
      case StageExpr::Kind::Or: return StageExpr::disj(stage(e.lhs(), env), stage(e.rhs(), env));
      default: return e;
    }
  }

  Term term(const Term& t, const Env& env) {
    switch (t.kind()) {
      case TermKind::Lambda: {
        const auto& l = t.as_lambda();
        Env inner = env;
        std::vector<Param> ps;
        for (const auto& p : l.params) ps.push_back({bind(p.name, inner), p.packed});
        Identifier y = bind(l.stage_param, inner);
        return Term::lambda(std::move(ps), y, body(l.body, inner));
      }
      case TermKind::Var: return Term::var(look(t.as_var(), env));
      case TermKind::Tuple: {
        std::vector<Term> items;
        for (const auto& x : t.as_tuple()) items.push_back(term(x, env));
        return Term::tuple(std::move(items));
      }
      case TermKind::HostExpr: {
        std::vector<Term> refs;
        for (const auto& r : t.as_host().refs()) refs.push_back(term(r, env));
        return Term::host(t.as_host().with_refs(refs));
      }
      case TermKind::Rec: {
        Env inner = env;
        Identifier n = bind(t.as_rec().name, inner);
        return Term::rec(n, term(t.as_rec().fn, inner));
      }
      case TermKind::Map: {
        std::vector<std::pair<std::string, Term>> entries;
        for (const auto& [k, v] : t.as_map()) entries.emplace_back(k, term(v, env));
        return Term::map(std::move(entries));
      }
      default: return t;
    }
  }

  Body body(const Body& b, const Env& env) {
    StageExpr s = stage(b.stage(), env);
    if (b.is_apply()) {
      const auto& a = b.as_apply();
      Term callee = term(a.callee, env);
      std::vector<Arg> args;
      for (const auto& arg : a.args) args.push_back({term(arg.value, env), arg.splice});
      return Body::apply(s, callee, std::move(args));
    }
    const auto& f = b.as_fix();
    Env inner = env;
    Identifier n = bind(f.name, inner);
    Term value = term(f.value, inner);
    Identifier y = bind(f.stage_param, inner);
    return Body::fix(s, n, y, value, body(f.rest, inner));
  }

 private:
  IdList reserved_;
  unsigned counter_ = 0;
};

}  // namespace

std::string print_stage(const StageExpr& e) { return stage_text(e, 0); }

std::string print_host(const HostExpr& e) { return host_text(e, 0); }

std::string print_term(const Term& t) { return Printer().term(t, 0); }

std::string print_body(const Body& b) {
  // No enclosing stage parameter: every stage prefix is printed.
  return Printer().body(b, Identifier{"", ~0u}, 0);
}

std::string print_program(const Term& program) {
  if (!program.is(TermKind::Lambda) || !program.as_lambda().params.empty()) return print_term(program);
  const auto& l = program.as_lambda();
  return Printer().body(l.body, l.stage_param, 0);
}

Term canonicalize(const Term& t) { return Canonicalizer(t.free_vars()).term(t, {}); }

Body canonicalize(const Body& b) { return Canonicalizer(b.free_vars()).body(b, {}); }

}  // namespace stagecraft
