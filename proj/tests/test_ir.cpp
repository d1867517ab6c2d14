#include <catch_amalgamated.hpp>

#include <random>

#include "support.hpp"

using namespace stagecraft;
using testing::parse;
using testing::parse_instrs;

namespace {

IdList ids(std::initializer_list<Identifier> xs) {
  IdList out(xs);
  std::sort(out.begin(), out.end());
  return out;
}

Term lam_body_of(const Term& program) { return program.as_lambda().body.as_apply().callee; }

// Random closed-ish terms over a small vocabulary; binders shadow freely.
struct TermGen {
  std::mt19937 rng;
  unsigned counter = 0;

  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

  Identifier name(std::vector<Identifier>& scope) {
    static const char* pool[] = {"a", "b", "c", "f", "x"};
    if (!scope.empty() && pick(0, 2) > 0) return scope[pick(0, int(scope.size()) - 1)];
    return Identifier(pool[pick(0, 4)]);
  }

  Term term(int depth, std::vector<Identifier> scope) {
    int k = depth <= 0 ? pick(0, 1) : pick(0, 4);
    switch (k) {
      case 0: return Term::var(name(scope));
      case 1: return Term::number(pick(0, 9));
      case 2: {
        std::vector<Term> items;
        for (int i = pick(0, 2); i > 0; --i) items.push_back(term(depth - 1, scope));
        return Term::tuple(items);
      }
      case 3: {
        Term l = term(0, scope), r = term(0, scope);
        return Term::host(HostExpr::binary("+", HostExpr::ref(l), HostExpr::ref(r)));
      }
      default: {
        static const char* pool[] = {"a", "b", "x", "y"};
        std::vector<Param> params;
        for (int i = pick(0, 2); i > 0; --i) {
          Identifier p(pool[pick(0, 3)]);
          params.push_back({p});
          scope.push_back(p);
        }
        Identifier s("s", ++counter % 3);
        scope.push_back(s);
        return Term::lambda(params, s, body(depth - 1, scope));
      }
    }
  }

  Body body(int depth, const std::vector<Identifier>& scope) {
    std::vector<Identifier> sc = scope;
    StageExpr st = pick(0, 2) == 0 ? StageExpr::always() : StageExpr::var(name(sc));
    std::vector<Arg> args;
    for (int i = pick(0, 2); i > 0; --i) args.push_back({term(depth - 1, scope), false});
    return Body::apply(st, term(depth - 1, scope), args);
  }
};

// Renames every binder to a globally unique name.
struct Renamer {
  unsigned counter = 0;
  Term term(const Term& t) {
    switch (t.kind()) {
      case TermKind::Lambda: {
        const auto& l = t.as_lambda();
        Subst s;
        std::vector<Param> params;
        for (const Param& p : l.params) {
          Identifier n("r" + std::to_string(counter++));
          s.push_back({p.name, Term::var(n)});
          params.push_back({n, p.packed});
        }
        Identifier y("r" + std::to_string(counter++));
        s.push_back({l.stage_param, Term::var(y)});
        // Later bindings of a repeated name win, as with shadowing parameters.
        Subst dedup;
        for (auto it = s.rbegin(); it != s.rend(); ++it) {
          bool seen = false;
          for (auto& [k, v] : dedup) seen = seen || k == it->first;
          if (!seen) dedup.push_back(*it);
        }
        return Term::lambda(params, y, body(substitute(l.body, dedup)));
      }
      case TermKind::Tuple: {
        std::vector<Term> items;
        for (const Term& x : t.as_tuple()) items.push_back(term(x));
        return Term::tuple(items);
      }
      default: return t;
    }
  }
  Body body(const Body& b) {
    const auto& a = b.as_apply();
    std::vector<Arg> args;
    for (const Arg& x : a.args) args.push_back({term(x.value), x.splice});
    return Body::apply(a.stage, term(a.callee), args);
  }
};

}  // namespace

TEST_CASE("free_vars examples", "[ir]") {
  Term t = lam_body_of(parse("(x){ f x y }"));
  CHECK(t.free_vars() == ids({"f", "y"}));
  CHECK(Term::var("S").free_vars() == ids({"S"}));
  Term closed = lam_body_of(parse("(ct, pt, code, !args) { '@ct:' code 'pt' !args }"));
  CHECK(closed.free_vars().empty());
}

TEST_CASE("free_vars include stage expressions and host references", "[ir]") {
  Body b = parse_instrs("'@s & !t:' \"a+b\" (c) g c");
  CHECK(b.free_vars() == ids({"a", "b", "g", "s", "t"}));
}

TEST_CASE("substitute avoids capture", "[ir]") {
  Term t = lam_body_of(parse("(y){ f x }"));
  Term r = substitute(t, {{"x", Term::var("y")}});
  CHECK(alpha_equivalent(r, lam_body_of(parse("(z){ f y }"))));
  CHECK_FALSE(alpha_equivalent(r, lam_body_of(parse("(y){ f y }"))));
  CHECK(r.as_lambda().params[0].name != Identifier("y"));
}

TEST_CASE("substitute a stage parameter with always", "[ir]") {
  Body b = parse_instrs("'@bt:' g a");
  Body r = substitute(b, {{"bt", Term::stage_const(true)}});
  CHECK(r.stage().kind() == StageExpr::Kind::Always);
  CHECK(print_body(r) == "'@always:' g a");
}

TEST_CASE("substitute into a tuple", "[ir]") {
  Term t = Term::tuple({Term::var("v"), Term::var("S")});
  Term r = substitute(t, {{"v", Term::number(5)}});
  CHECK(print_term(r) == "[5, S]");
}

TEST_CASE("substitute is simultaneous", "[ir]") {
  Term t = Term::tuple({Term::var("a"), Term::var("b")});
  Term r = substitute(t, {{"a", Term::var("b")}, {"b", Term::var("a")}});
  CHECK(print_term(r) == "[b, a]");
}

TEST_CASE("alpha_equivalent examples", "[ir]") {
  CHECK(alpha_equivalent(parse("(x){ exit x }"), parse("(y){ exit y }")));
  CHECK_FALSE(alpha_equivalent(parse("(x){ exit x }"), parse("(x){ exit 1 }")));
  CHECK(alpha_equivalent(parse("(x)'[s]'{ '@s:' g x }"), parse("(y)'[t]'{ '@t:' g y }")));
  CHECK_FALSE(alpha_equivalent(parse("(x)'[s]'{ '@s:' g x }"), parse("(y)'[t]'{ '@s:' g y }")));
  // Stage expressions are compared structurally.
  CHECK_FALSE(alpha_equivalent(parse_instrs("'@a & b:' g"), parse_instrs("'@b & a:' g")));
}

TEST_CASE("fresh_name examples", "[ir]") {
  CHECK(fresh_name("sum", ids({"sum"})).str() == "sum#1");
  CHECK(fresh_name("sum", ids({"sum", Identifier("sum", 1)})).str() == "sum#2");
  CHECK(fresh_name("pt", {}).str() == "pt");
  CHECK(fresh_name("x", ids({"y"})) == fresh_name("x", ids({"y"})));
}

TEST_CASE("instruction_count", "[ir]") {
  CHECK(instruction_count(parse_instrs("\"1+2\" (a) \"a*2\" (b) exit b")) == 3);
}

TEST_CASE("property: identity substitution is alpha-stable", "[ir][property]") {
  TermGen gen{std::mt19937(11)};
  for (int i = 0; i < 300; ++i) {
    Term t = gen.term(4, {});
    for (const char* id : {"a", "b", "x", "f"}) {
      INFO(print_term(t));
      CHECK(alpha_equivalent(substitute(t, {{id, Term::var(id)}}), t));
    }
  }
}

TEST_CASE("property: alpha equivalence is an equivalence and survives renaming", "[ir][property]") {
  TermGen gen{std::mt19937(12)};
  Renamer ren;
  for (int i = 0; i < 300; ++i) {
    Term t = gen.term(4, {});
    Term u = ren.term(t);
    Term w = ren.term(u);
    INFO(print_term(t) << "\nvs\n" << print_term(u));
    CHECK(alpha_equivalent(t, t));
    CHECK(alpha_equivalent(t, u));
    CHECK(alpha_equivalent(u, t));
    CHECK(alpha_equivalent(u, w));
    CHECK(alpha_equivalent(t, w));
    Term other = gen.term(4, {});
    CHECK(alpha_equivalent(t, other) == alpha_equivalent(other, t));
  }
}

TEST_CASE("property: free variables after substitution", "[ir][property]") {
  TermGen gen{std::mt19937(13)};
  int checked = 0;
  for (int i = 0; i < 400; ++i) {
    Term t = gen.term(4, {});
    Term s = gen.term(2, {});
    for (const char* x : {"a", "b", "x"}) {
      if (!contains(t.free_vars(), x)) continue;
      ++checked;
      IdList kept = remove_all(t.free_vars(), {x});
      INFO(print_term(t) << " [" << x << " := " << print_term(s) << "]");
      // Exact with a variable; a non-variable landing in a stage position
      // collapses to a constant and drops its own free names.
      Term v = Term::var("c" + std::to_string(i));
      CHECK(substitute(t, {{x, v}}).free_vars() == unite(kept, v.free_vars()));
      IdList got = substitute(t, {{x, s}}).free_vars();
      CHECK(remove_all(got, s.free_vars()) == remove_all(kept, s.free_vars()));
      for (const Identifier& id : got) CHECK((contains(kept, id) || contains(s.free_vars(), id)));
    }
  }
  CHECK(checked > 100);
}
