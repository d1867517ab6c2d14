#include "support.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>

namespace testing {

Term parse(const std::string& text) { return parse_program({text, "<test>"}); }

Body parse_instrs(const std::string& text) { return parse_body({text, "<test>"}); }

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fixture(const std::string& name) { return slurp(std::string(STAGECRAFT_TEST_DIR) + "/fixtures/" + name); }

Number eval_direct(const ArithExpr& e, const std::map<std::string, Number>& env) {
  switch (e.kind) {
    case ArithExpr::Kind::Number: return e.value;
    case ArithExpr::Kind::Ref: {
      auto it = env.find(e.name);
      if (it == env.end()) throw std::runtime_error("unbound " + e.name);
      return it->second;
    }
    case ArithExpr::Kind::Binary: {
      Number l = eval_direct(e.kids[0], env), r = eval_direct(e.kids[1], env);
      switch (e.op) {
        case '+': return l + r;
        case '-': return l - r;
        case '*': return l * r;
        default:
          if (r == 0) throw std::runtime_error("division by zero");
          return l / r;
      }
    }
    case ArithExpr::Kind::Bind: {
      auto inner = env;
      inner[e.name] = eval_direct(e.kids[0], env);
      return eval_direct(e.kids[1], inner);
    }
    case ArithExpr::Kind::MatMul: break;
  }
  throw std::runtime_error("not a scalar expression");
}

namespace {

ArithExpr random_expr(std::mt19937& rng, int depth, const std::vector<std::string>& names) {
  std::uniform_int_distribution<int> coin(0, 2);
  if (depth <= 0 || coin(rng) == 0) {
    if (!names.empty() && coin(rng) == 0) {
      std::uniform_int_distribution<std::size_t> pick(0, names.size() - 1);
      return ArithExpr::ref(names[pick(rng)]);
    }
    return ArithExpr::number(std::uniform_int_distribution<int>(0, 9)(rng));
  }
  static const char ops[] = {'+', '-', '*'};
  char op = ops[std::uniform_int_distribution<int>(0, 2)(rng)];
  ArithExpr l = random_expr(rng, depth - 1, names);
  ArithExpr r = random_expr(rng, depth - 1, names);
  return ArithExpr::binary(op, std::move(l), std::move(r));
}

}  // namespace

ArithExpr random_tree(std::mt19937& rng, int max_depth) { return random_expr(rng, max_depth, {}); }

ArithExpr random_binding_program(std::mt19937& rng, int max_depth) {
  int count = std::uniform_int_distribution<int>(1, 3)(rng);
  std::vector<std::string> names;
  std::vector<ArithExpr> values;
  for (int i = 0; i < count; ++i) {
    values.push_back(random_expr(rng, max_depth, names));
    names.push_back("v" + std::to_string(i));
  }
  // The body always uses the last name so at least one reference exists.
  ArithExpr body = ArithExpr::binary('+', ArithExpr::ref(names.back()), random_expr(rng, max_depth, names));
  for (int i = count - 1; i >= 0; --i) body = ArithExpr::bind(names[i], values[i], std::move(body));
  return body;
}

std::uint64_t brute_force_chain_cost(const Dims& d) {
  std::function<std::uint64_t(std::size_t, std::size_t)> best = [&](std::size_t i, std::size_t j) -> std::uint64_t {
    if (i == j) return 0;
    std::uint64_t m = UINT64_MAX;
    for (std::size_t k = i; k < j; ++k) {
      std::uint64_t c = best(i, k) + best(k + 1, j) + std::uint64_t(d[i - 1]) * d[k] * d[j];
      m = std::min(m, c);
    }
    return m;
  };
  if (d.size() < 2) throw std::runtime_error("chain needs at least one matrix");
  return best(1, d.size() - 1);
}

std::vector<Body> instruction_chain(const Body& body) {
  std::vector<Body> out;
  std::optional<Body> cur = body;
  while (cur) {
    out.push_back(*cur);
    Body b = *cur;
    cur.reset();
    if (!b.is_apply()) break;
    const auto& args = b.as_apply().args;
    if (!args.empty() && !args.back().splice && args.back().value.is(TermKind::Lambda))
      cur = args.back().value.as_lambda().body;
  }
  return out;
}

namespace {

void collect_ids(const Term& t, std::set<std::string>& out);

void collect_ids(const StageExpr& e, std::set<std::string>& out) {
  for (const Identifier& id : e.free_vars()) out.insert(id.text);
}

void collect_ids(const Body& b, std::set<std::string>& out) {
  collect_ids(b.stage(), out);
  if (b.is_apply()) {
    collect_ids(b.as_apply().callee, out);
    for (const Arg& a : b.as_apply().args) collect_ids(a.value, out);
  } else {
    out.insert(b.as_fix().name.text);
    out.insert(b.as_fix().stage_param.text);
    collect_ids(b.as_fix().value, out);
    collect_ids(b.as_fix().rest, out);
  }
}

void collect_ids(const Term& t, std::set<std::string>& out) {
  switch (t.kind()) {
    case TermKind::Lambda:
      for (const Param& p : t.as_lambda().params) out.insert(p.name.text);
      out.insert(t.as_lambda().stage_param.text);
      collect_ids(t.as_lambda().body, out);
      break;
    case TermKind::Var: out.insert(t.as_var().text); break;
    case TermKind::Tuple:
      for (const Term& x : t.as_tuple()) collect_ids(x, out);
      break;
    case TermKind::HostExpr:
      for (const Term& x : t.as_host().refs()) collect_ids(x, out);
      break;
    case TermKind::Rec:
      out.insert(t.as_rec().name.text);
      collect_ids(t.as_rec().fn, out);
      break;
    case TermKind::Map:
      for (const auto& [k, v] : t.as_map()) collect_ids(v, out);
      break;
    default: break;
  }
}

bool arithmetic_only(const HostExpr& e) {
  switch (e.op()) {
    case HostExpr::Op::Ref: {
      const Term& t = e.term();
      return t.is(TermKind::Var) || t.is(TermKind::Literal);
    }
    case HostExpr::Op::Binary:
    case HostExpr::Op::Neg:
      return std::all_of(e.kids().begin(), e.kids().end(), arithmetic_only);
    default: return false;
  }
}

}  // namespace

std::vector<std::string> all_identifiers(const Term& t) {
  std::set<std::string> ids;
  collect_ids(t, ids);
  return {ids.begin(), ids.end()};
}

PurityReport check_residual(const Term& lam) {
  if (!lam.is(TermKind::Lambda) || lam.as_lambda().params.empty()) return {false, "not a lambda with parameters"};
  const LambdaData& top = lam.as_lambda();
  const Identifier exit_param = top.params.front().name;
  Identifier live = top.stage_param;
  std::vector<Body> chain = instruction_chain(top.body);
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const Body& b = chain[i];
    std::string where = "instruction " + std::to_string(i) + ": " + print_body(b).substr(0, 60);
    if (!b.is_apply()) return {false, where + " is a fix"};
    const StageExpr& s = b.stage();
    if (s.kind() != StageExpr::Kind::Var || s.id() != live) return {false, where + " is not staged on the live stage"};
    const ApplyData& a = b.as_apply();
    bool last = i + 1 == chain.size();
    if (last) {
      if (!a.callee.is(TermKind::Var) || a.callee.as_var() != exit_param)
        return {false, where + " does not end in the exit continuation"};
      for (const Arg& arg : a.args)
        if (arg.value.is(TermKind::Lambda)) return {false, where + " passes a lambda to exit"};
      continue;
    }
    if (!a.callee.is(TermKind::HostExpr)) return {false, where + " has a non-host callee"};
    if (!arithmetic_only(a.callee.as_host())) return {false, where + " uses a non-arithmetic host operation"};
    if (a.args.size() != 1 || !a.args[0].value.is(TermKind::Lambda))
      return {false, where + " is not a single continuation binder"};
    live = a.args[0].value.as_lambda().stage_param;
  }
  static const std::set<std::string> machinery = {"ct", "bt", "core", "core2", "next", "Fprev", "Fnext",
                                                  "Snext", "Tlambda", "lambda_i", "merge", "build", "push",
                                                  "pop", "M", "code"};
  for (const std::string& id : all_identifiers(lam))
    if (machinery.count(id)) return {false, "mentions " + id};
  return {};
}

std::size_t count_host_ops(const Body& body, const std::string& op) {
  std::size_t n = 0;
  for (const Body& b : instruction_chain(body))
    if (b.is_apply() && b.as_apply().callee.is(TermKind::HostExpr)) {
      const HostExpr& h = b.as_apply().callee.as_host();
      bool hit = op == "map" ? (h.op() == HostExpr::Op::Method || h.op() == HostExpr::Op::Call)
                             : (h.op() == HostExpr::Op::Binary && h.name() == op);
      if (hit) ++n;
    }
  return n;
}

MulOrder residual_mul_order(const Body& body, const std::vector<std::string>& names) {
  std::vector<Identifier> list(names.begin(), names.end());
  MulOrder order;
  for (const Body& b : instruction_chain(body)) {
    if (!b.is_apply() || !b.as_apply().callee.is(TermKind::HostExpr)) continue;
    const HostExpr& h = b.as_apply().callee.as_host();
    if (h.op() != HostExpr::Op::Binary || h.name() != "*") throw std::runtime_error("unexpected host instruction");
    auto var_of = [](const HostExpr& x) {
      if (x.op() != HostExpr::Op::Ref || !x.term().is(TermKind::Var)) throw std::runtime_error("operand not a name");
      return x.term().as_var();
    };
    Identifier l = var_of(h.kids()[0]), r = var_of(h.kids()[1]);
    auto it = std::find(list.begin(), list.end(), l);
    if (it == list.end() || it + 1 == list.end() || *(it + 1) != r)
      throw std::runtime_error("operands are not adjacent in the chain");
    std::size_t idx = it - list.begin();
    order.push_back(idx);
    list.erase(list.begin() + idx, list.begin() + idx + 2);
    list.insert(list.begin() + idx, b.as_apply().args[0].value.as_lambda().params[0].name);
  }
  if (list.size() != 1) throw std::runtime_error("chain not reduced to one matrix");
  return order;
}

std::vector<std::string> random_fragment_codes(std::mt19937& rng, int k) {
  static const char ops[] = {'+', '-', '*'};
  std::vector<std::string> out;
  for (int i = 0; i < k; ++i) {
    char op = ops[std::uniform_int_distribution<int>(0, 2)(rng)];
    out.push_back("x" + std::string(1, op) + std::to_string(std::uniform_int_distribution<int>(1, 9)(rng)));
  }
  return out;
}

std::string fragment_chain_program(std::mt19937& rng, const std::vector<std::string>& codes, Builders b) {
  std::ostringstream src;
  std::vector<std::string> frags;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    std::string name = "F" + std::to_string(i);
    switch (b) {
      case Builders::Unstaged:
        src << "build (x, cont) { \"" << codes[i] << "\" (y) cont y } (" << name << ")\n";
        break;
      case Builders::Staged:
        src << "build ('pt', exit, x, cont)'[ct]' { '@pt:' \"" << codes[i]
            << "\" (y)'[pt]' '@ct:' cont 'pt' exit y } (" << name << ")\n";
        break;
      case Builders::Universal:
        src << "build 1 ('pt', exit, x, cont)'[ct]' { '@pt:' \"" << codes[i]
            << "\" (y)'[pt]' '@ct:' cont 'pt' exit y } (" << name << ")\n";
        break;
    }
    frags.push_back(name);
  }
  int merged = 0;
  while (frags.size() > 1) {
    std::size_t i = std::uniform_int_distribution<std::size_t>(0, frags.size() - 2)(rng);
    std::string name = "M" + std::to_string(merged++);
    src << "merge " << frags[i] << " " << frags[i + 1] << " (" << name << ")\n";
    frags[i] = name;
    frags.erase(frags.begin() + i + 1);
  }
  const std::string& f = frags.front();
  switch (b) {
    case Builders::Unstaged:
      src << "exit (exit, x)'[pt]' { " << f << " (v) { exit v } (core) core x }\n";
      break;
    case Builders::Staged:
      src << f << " ('ct', 'pt', exit, v) { '@pt:' exit v } (program)\n"
          << "exit (exit, x)'[pt]' { '@program:' program 'always' 'pt' exit x }\n";
      break;
    case Builders::Universal:
      src << "build 0 ('pt', exit, v) { '@pt:' exit v } (Fend)\n"
          << "merge " << f << " Fend (Fc)\n"
          << "Fc [] (S)\n"
          << "pop S (program, rest)\n"
          << "exit (exit, x)'[pt]' { '@program:' program 'always' 'pt' exit x }\n";
      break;
  }
  return src.str();
}

}  // namespace testing
