#include "stagecraft/host.hpp"

#include <limits>

#include "stagecraft/syntax.hpp"

namespace stagecraft {

namespace {

using Value = std::optional<Term>;  // nullopt: stuck on a symbolic variable

[[noreturn]] void fail(const std::string& msg) { throw HostError(msg); }

bool symbolic(const Term& t) { return t.is(TermKind::Var); }

const Number* as_number(const Term& t) {
  if (t.is(TermKind::Literal) && t.as_literal().is_number()) return &t.as_literal().number();
  return nullptr;
}

std::string describe(const Term& t) {
  std::string s = print_term(t);
  return s.size() > 40 ? s.substr(0, 37) + "..." : s;
}

const Number& need_number(const Term& t, const char* what) {
  const Number* n = as_number(t);
  if (!n) fail(std::string(what) + " expects a number, got " + describe(t));
  return *n;
}

std::int64_t need_index(const Term& t, const char* what) {
  const Number& n = need_number(t, what);
  if (denominator(n) != 1) fail(std::string(what) + " expects an integer, got " + describe(t));
  const auto& num = numerator(n);
  if (num > std::numeric_limits<std::int64_t>::max() || num < std::numeric_limits<std::int64_t>::min())
    fail(std::string(what) + " index out of range");
  return static_cast<std::int64_t>(num);
}

const std::vector<Term>& need_tuple(const Term& t, const char* what) {
  if (!t.is(TermKind::Tuple)) fail(std::string(what) + " expects a tuple, got " + describe(t));
  return t.as_tuple();
}

const std::string& need_text(const Term& t, const char* what) {
  if (!t.is(TermKind::Literal) || !t.as_literal().is_text())
    fail(std::string(what) + " expects a name, got " + describe(t));
  return t.as_literal().text();
}

std::size_t checked_position(std::int64_t i, std::size_t size, bool allow_end, const char* what) {
  std::size_t limit = allow_end ? size + 1 : size;
  if (i < 0 || static_cast<std::size_t>(i) >= limit)
    fail(std::string(what) + " index " + std::to_string(i) + " out of range for length " + std::to_string(size));
  return static_cast<std::size_t>(i);
}

// Concrete through and through, so structural comparison is meaningful.
bool ground(const Term& t) { return t.free_vars().empty(); }

class Evaluator {
 public:
  Value eval(const HostExpr& e) {
    switch (e.op()) {
      case HostExpr::Op::Ref: return e.term();
      case HostExpr::Op::List: {
        std::vector<Term> items;
        for (const auto& k : e.kids()) {
          Value v = eval(k);
          if (!v) return std::nullopt;
          items.push_back(*v);
        }
        return Term::tuple(std::move(items));
      }
      case HostExpr::Op::Binary: return binary(e);
      case HostExpr::Op::Neg: {
        Value v = concrete(e.kids()[0]);
        if (!v) return std::nullopt;
        return Term::number(-need_number(*v, "negation"));
      }
      case HostExpr::Op::Index: {
        Value base = concrete(e.kids()[0]);
        if (!base) return std::nullopt;
        Value idx = concrete(e.kids()[1]);
        if (!idx) return std::nullopt;
        const auto& items = need_tuple(*base, "indexing");
        return items[checked_position(need_index(*idx, "indexing"), items.size(), false, "indexing")];
      }
      case HostExpr::Op::Field: return field(e);
      case HostExpr::Op::Method: return method(e);
      case HostExpr::Op::Call: return call(e);
      case HostExpr::Op::Range: fail("a range is only valid as the argument of delete");
    }
    return std::nullopt;
  }

 private:
  // Evaluates and requires a non-variable result.
  Value concrete(const HostExpr& e) {
    Value v = eval(e);
    if (!v || symbolic(*v)) return std::nullopt;
    return v;
  }

  Value binary(const HostExpr& e) {
    Value l = concrete(e.kids()[0]);
    if (!l) return std::nullopt;
    Value r = concrete(e.kids()[1]);
    if (!r) return std::nullopt;
    const std::string& op = e.name();
    if (op == "==" || op == "!=") {
      if (!ground(*l) || !ground(*r)) return std::nullopt;
      bool same = alpha_equivalent(*l, *r);
      return Term::boolean(op == "==" ? same : !same);
    }
    if (op == "+" && l->is(TermKind::Literal) && l->as_literal().is_text()) {
      return Term::text(l->as_literal().text() + need_text(*r, "text concatenation"));
    }
    const Number& a = need_number(*l, op.c_str());
    const Number& b = need_number(*r, op.c_str());
    if (op == "+") return Term::number(a + b);
    if (op == "-") return Term::number(a - b);
    if (op == "*") return Term::number(a * b);
    if (op == "/") {
      if (b == 0) fail("division by zero");
      return Term::number(a / b);
    }
    if (op == "<") return Term::boolean(a < b);
    if (op == "<=") return Term::boolean(a <= b);
    if (op == ">") return Term::boolean(a > b);
    if (op == ">=") return Term::boolean(a >= b);
    fail("unknown operator " + op);
  }

  Value field(const HostExpr& e) {
    Value base = concrete(e.kids()[0]);
    if (!base) return std::nullopt;
    const std::string& name = e.name();
    std::size_t slot;
    if (name == "dim" || name == "x") {
      slot = 0;
    } else if (name == "data" || name == "y") {
      slot = 1;
    } else {
      fail("unknown field ." + name);
    }
    const auto& items = need_tuple(*base, ("field ." + name).c_str());
    if (items.size() != 2) fail("field ." + name + " expects a pair, got " + describe(*base));
    return items[slot];
  }

  Value method(const HostExpr& e) {
    const auto& kids = e.kids();
    Value base = concrete(kids[0]);
    if (!base) return std::nullopt;
    const std::string& name = e.name();
    auto arity = [&](std::size_t n) {
      if (kids.size() - 1 != n) fail("." + name + " expects " + std::to_string(n) + " argument(s)");
    };

    if (base->is(TermKind::Map)) {
      if (name == "insert" || name == "bind") {
        arity(2);
        Value key = concrete(kids[1]);
        if (!key) return std::nullopt;
        Value v = eval(kids[2]);
        if (!v) return std::nullopt;
        const std::string& k = need_text(*key, "map insert");
        auto entries = base->as_map();
        bool replaced = false;
        for (auto& [ek, ev] : entries) {
          if (ek == k) {
            ev = *v;
            replaced = true;
          }
        }
        if (!replaced) entries.emplace_back(k, *v);
        return Term::map(std::move(entries));
      }
      if (name == "lookup") {
        arity(1);
        Value key = concrete(kids[1]);
        if (!key) return std::nullopt;
        const std::string& k = need_text(*key, "map lookup");
        for (const auto& [ek, ev] : base->as_map())
          if (ek == k) return ev;
        fail("unbound name " + k);
      }
      fail("unknown map method ." + name);
    }

    const auto& items = need_tuple(*base, ("." + name).c_str());
    if (name == "insert") {
      arity(2);
      Value idx = concrete(kids[1]);
      if (!idx) return std::nullopt;
      Value v = eval(kids[2]);
      if (!v) return std::nullopt;
      std::size_t at = checked_position(need_index(*idx, "insert"), items.size(), true, "insert");
      std::vector<Term> out = items;
      out.insert(out.begin() + static_cast<std::ptrdiff_t>(at), *v);
      return Term::tuple(std::move(out));
    }
    if (name == "delete") {
      arity(1);
      const HostExpr& arg = kids[1];
      Value lo, hi;
      if (arg.op() == HostExpr::Op::Range) {
        lo = concrete(arg.kids()[0]);
        hi = concrete(arg.kids()[1]);
      } else {
        lo = hi = concrete(arg);
      }
      if (!lo || !hi) return std::nullopt;
      std::int64_t i = need_index(*lo, "delete"), j = need_index(*hi, "delete");
      if (j < i) fail("delete range is empty");
      checked_position(i, items.size(), false, "delete");
      checked_position(j, items.size(), false, "delete");
      std::vector<Term> out;
      for (std::size_t k = 0; k < items.size(); ++k)
        if (static_cast<std::int64_t>(k) < i || static_cast<std::int64_t>(k) > j) out.push_back(items[k]);
      return Term::tuple(std::move(out));
    }
    if (name == "count") {
      arity(0);
      return Term::number(static_cast<long long>(items.size()));
    }
    fail("unknown tuple method ." + name);
  }

  Value call(const HostExpr& e) {
    const std::string& name = e.name();
    std::vector<Term> args;
    for (const auto& k : e.kids()) {
      Value v = concrete(k);
      if (!v) return std::nullopt;
      args.push_back(*v);
    }
    auto arity = [&](std::size_t n) {
      if (args.size() != n) fail(name + " expects " + std::to_string(n) + " argument(s)");
    };
    if (name == "map") {
      arity(0);
      return Term::map({});
    }
    if (name == "count") {
      arity(1);
      return Term::number(static_cast<long long>(need_tuple(args[0], "count").size()));
    }
    if (name == "concat") {
      if (args.empty()) fail("concat expects at least one argument");
      std::vector<Term> out;
      for (const auto& a : args) {
        const auto& items = need_tuple(a, "concat");
        out.insert(out.end(), items.begin(), items.end());
      }
      return Term::tuple(std::move(out));
    }
    if (name == "matrix_chain_order") {
      arity(1);
      Dims d;
      for (const auto& t : need_tuple(args[0], "matrix_chain_order")) d.push_back(need_index(t, "matrix_chain_order"));
      std::vector<Term> out;
      for (std::size_t idx : matrix_chain_order(d)) out.push_back(Term::number(static_cast<long long>(idx)));
      return Term::tuple(std::move(out));
    }
    if (name == "chain_dims") {
      arity(1);
      const auto& ms = need_tuple(args[0], "chain_dims");
      if (ms.empty()) fail("chain_dims expects at least one matrix");
      std::vector<Term> d;
      std::optional<Number> prev_cols;
      for (const auto& m : ms) {
        const auto& parts = need_tuple(m, "chain_dims");
        if (parts.size() != 2) fail("chain_dims expects matrices [dim, data]");
        const auto& dim = need_tuple(parts[0], "chain_dims");
        if (dim.size() != 2) fail("chain_dims expects dim = [x, y]");
        const Number& cols = need_number(dim[0], "chain_dims");
        const Number& rows = need_number(dim[1], "chain_dims");
        if (!prev_cols) {
          d.push_back(Term::number(rows));
        } else if (*prev_cols != rows) {
          fail("dimension mismatch: " + Literal{*prev_cols}.str() + " columns against " + Literal{rows}.str() +
               " rows");
        }
        d.push_back(Term::number(cols));
        prev_cols = cols;
      }
      return Term::tuple(std::move(d));
    }
    fail("unknown function " + name);
  }
};

}  // namespace

HostResult eval_host_expr(const HostExpr& e) { return {Evaluator().eval(e)}; }

HostResult eval_host_expr(const std::string& text, const Subst& bindings) {
  Term t = substitute(Term::host(parse_host_expr(text)), bindings);
  return eval_host_expr(t.as_host());
}

BuiltinResult apply_builtin(const std::string& name, const std::vector<Term>& args) {
  BuiltinResult r;
  if (name == "if") {
    if (args.size() != 3) fail("if expects a condition and two branches");
    const Term& cond = args[0];
    if (symbolic(cond)) return r;
    if (!cond.is(TermKind::Literal) || !cond.as_literal().is_bool())
      fail("if expects a boolean condition, got " + describe(cond));
    r.kind = BuiltinResult::Kind::Replace;
    r.replacement = Body::apply(StageExpr::always(), cond.as_literal().boolean() ? args[1] : args[2], {});
    return r;
  }
  if (name == "exit") {
    if (args.size() != 1) fail("exit expects one argument");
    if (symbolic(args[0])) return r;
    r.kind = BuiltinResult::Kind::Exit;
    r.exit_value = args[0];
    return r;
  }
  fail("unknown builtin " + name);
}

MulOrder matrix_chain_order(const Dims& d) {
  if (d.size() < 2) fail("a matrix chain needs at least two dimensions");
  for (auto x : d)
    if (x < 1) fail("matrix dimensions must be positive");
  std::size_t n = d.size() - 1;
  std::vector<std::vector<std::uint64_t>> cost(n, std::vector<std::uint64_t>(n, 0));
  std::vector<std::vector<std::size_t>> split(n, std::vector<std::size_t>(n, 0));
  for (std::size_t len = 2; len <= n; ++len) {
    for (std::size_t i = 0; i + len <= n; ++i) {
      std::size_t j = i + len - 1;
      cost[i][j] = std::numeric_limits<std::uint64_t>::max();
      for (std::size_t k = i; k < j; ++k) {
        std::uint64_t c = cost[i][k] + cost[k + 1][j] +
                          static_cast<std::uint64_t>(d[i]) * static_cast<std::uint64_t>(d[k + 1]) *
                              static_cast<std::uint64_t>(d[j + 1]);
        if (c < cost[i][j]) {
          cost[i][j] = c;
          split[i][j] = k;
        }
      }
    }
  }
  // Post-order over the split tree; live[p] is the first original index of
  // the product currently sitting at position p.
  MulOrder order;
  std::vector<std::size_t> live(n);
  for (std::size_t i = 0; i < n; ++i) live[i] = i;
  auto emit = [&](auto&& self, std::size_t i, std::size_t j) -> void {
    if (i == j) return;
    std::size_t k = split[i][j];
    self(self, i, k);
    self(self, k + 1, j);
    std::size_t pos = 0;
    while (live[pos] != i) ++pos;
    order.push_back(pos);
    live.erase(live.begin() + static_cast<std::ptrdiff_t>(pos) + 1);
  };
  emit(emit, 0, n - 1);
  return order;
}

std::uint64_t chain_cost(const Dims& d, const MulOrder& order) {
  if (d.size() < 2) fail("a matrix chain needs at least two dimensions");
  std::vector<std::pair<std::int64_t, std::int64_t>> ms;  // rows, cols
  for (std::size_t i = 0; i + 1 < d.size(); ++i) ms.emplace_back(d[i], d[i + 1]);
  std::uint64_t total = 0;
  for (std::size_t idx : order) {
    if (idx + 1 >= ms.size())
      fail("multiplication position " + std::to_string(idx) + " out of range for " + std::to_string(ms.size()) +
           " matrices");
    auto [r, inner] = ms[idx];
    auto [inner2, c] = ms[idx + 1];
    if (inner != inner2) fail("inner dimensions disagree");
    total += static_cast<std::uint64_t>(r) * static_cast<std::uint64_t>(inner) * static_cast<std::uint64_t>(c);
    ms.erase(ms.begin() + static_cast<std::ptrdiff_t>(idx), ms.begin() + static_cast<std::ptrdiff_t>(idx) + 2);
    ms.insert(ms.begin() + static_cast<std::ptrdiff_t>(idx), {r, c});
  }
  if (ms.size() != 1) fail("order leaves " + std::to_string(ms.size()) + " matrices unmultiplied");
  return total;
}

std::uint64_t optimal_chain_cost(const Dims& d) { return chain_cost(d, matrix_chain_order(d)); }

}  // namespace stagecraft
