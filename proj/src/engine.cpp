#include "stagecraft/engine.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

#include "stagecraft/host.hpp"
#include "stagecraft/syntax.hpp"

namespace stagecraft {

std::string format_path(const RedexPath& p) {
  if (p.empty()) return "/";
  std::string out;
  for (auto i : p) out += "/" + std::to_string(i);
  return out;
}

std::string to_string(ReductionKind k) {
  switch (k) {
    case ReductionKind::Beta: return "beta";
    case ReductionKind::FixUnfold: return "fix-unfold";
    case ReductionKind::HostExpr: return "host-expr";
    case ReductionKind::Builtin: return "builtin";
  }
  return "?";
}

std::string Trace::serialize() const {
  std::ostringstream os;
  for (const auto& s : steps)
    os << s.number << '\t' << format_path(s.path) << '\t' << to_string(s.kind) << '\t' << print_stage(s.stage)
       << '\n';
  return os.str();
}

EvalError::EvalError(const std::string& message, RedexPath path, Trace trace)
    : std::runtime_error(message + " at " + format_path(path)), path_(std::move(path)), trace_(std::move(trace)) {}

bool eval_stage_expr(const StageExpr& e, const Valuation& v) {
  switch (e.kind()) {
    case StageExpr::Kind::Always: return true;
    case StageExpr::Kind::Never: return false;
    case StageExpr::Kind::Var: {
      auto it = v.find(e.id());
      if (it == v.end() || it->second.kind == Binding::Kind::Symbolic) return false;
      const auto& t = it->second.value;
      // A staging constant keeps its own value; any other concrete value counts as always.
      if (t && t->is(TermKind::StageConst)) return t->as_stage_const();
      return true;
    }
    case StageExpr::Kind::And: return eval_stage_expr(e.lhs(), v) && eval_stage_expr(e.rhs(), v);
    case StageExpr::Kind::Or: return eval_stage_expr(e.lhs(), v) || eval_stage_expr(e.rhs(), v);
    case StageExpr::Kind::Not: return !eval_stage_expr(e.lhs(), v);
  }
  return false;
}

namespace {

const Term kAlways = Term::stage_const(true);

struct Candidate {
  RedexPath path;
  Body body;
};

void collect(const Term& t, RedexPath& path, std::vector<Candidate>& out);

void collect(const Body& b, RedexPath& path, std::vector<Candidate>& out) {
  if (!b.has_active()) return;
  if (b.self_active()) out.push_back({path, b});
  if (b.is_apply()) {
    const auto& a = b.as_apply();
    path.push_back(0);
    collect(a.callee, path, out);
    for (std::size_t i = 0; i < a.args.size(); ++i) {
      path.back() = i + 1;
      collect(a.args[i].value, path, out);
    }
    path.pop_back();
  } else {
    const auto& f = b.as_fix();
    path.push_back(0);
    collect(f.value, path, out);
    path.back() = 1;
    collect(f.rest, path, out);
    path.pop_back();
  }
}

void collect(const Term& t, RedexPath& path, std::vector<Candidate>& out) {
  if (!t.has_active()) return;
  switch (t.kind()) {
    case TermKind::Lambda:
      path.push_back(0);
      collect(t.as_lambda().body, path, out);
      path.pop_back();
      break;
    case TermKind::Tuple: {
      const auto& items = t.as_tuple();
      path.push_back(0);
      for (std::size_t i = 0; i < items.size(); ++i) {
        path.back() = i;
        collect(items[i], path, out);
      }
      path.pop_back();
      break;
    }
    case TermKind::Rec:
      path.push_back(0);
      collect(t.as_rec().fn, path, out);
      path.pop_back();
      break;
    case TermKind::HostExpr: {
      auto refs = t.as_host().refs();
      path.push_back(0);
      for (std::size_t i = 0; i < refs.size(); ++i) {
        path.back() = i;
        collect(refs[i], path, out);
      }
      path.pop_back();
      break;
    }
    case TermKind::Map: {
      const auto& entries = t.as_map();
      path.push_back(0);
      for (std::size_t i = 0; i < entries.size(); ++i) {
        path.back() = i;
        collect(entries[i].second, path, out);
      }
      path.pop_back();
      break;
    }
    default: break;
  }
}

// Deepest first, then leftmost.
std::vector<Candidate> ordered_candidates(const Term& program) {
  std::vector<Candidate> out;
  RedexPath path;
  collect(program, path, out);
  std::stable_sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
    if (a.path.size() != b.path.size()) return a.path.size() > b.path.size();
    return a.path < b.path;
  });
  return out;
}

struct Reduction {
  enum class Status { Stuck, Replace, Exit } status = Status::Stuck;
  ReductionKind kind = ReductionKind::Beta;
  std::optional<Body> replacement;
  std::optional<Term> exit_value;

  static Reduction stuck() { return {}; }
  static Reduction replace(ReductionKind k, Body b) { return {Status::Replace, k, std::move(b), std::nullopt}; }
};

struct Fault {
  std::string message;
};

[[noreturn]] void fault(const std::string& msg) { throw Fault{msg}; }

// Binds a lambda's parameters to arguments and returns its body with the
// stage parameter set to always. Empty when a symbolic splice cannot be
// matched against the parameter list yet.
std::optional<Body> beta(const LambdaData& l, const std::vector<Arg>& args) {
  std::vector<Term> flat;
  std::vector<std::size_t> symbolic_splices;
  for (const auto& a : args) {
    if (!a.splice) {
      flat.push_back(a.value);
    } else if (a.value.is(TermKind::Tuple)) {
      for (const auto& x : a.value.as_tuple()) flat.push_back(x);
    } else if (a.value.is(TermKind::Var)) {
      symbolic_splices.push_back(flat.size());
      flat.push_back(a.value);
    } else {
      fault("cannot splice non-tuple value " + print_term(a.value));
    }
  }

  const auto& ps = l.params;
  std::optional<std::size_t> packed;
  for (std::size_t i = 0; i < ps.size(); ++i)
    if (ps[i].packed) packed = i;

  Subst s;
  if (!symbolic_splices.empty()) {
    // A symbolic tuple can only stand in for the packed parameter as a whole.
    if (symbolic_splices.size() != 1 || !packed || symbolic_splices[0] != *packed || flat.size() != ps.size())
      return std::nullopt;
    for (std::size_t i = 0; i < ps.size(); ++i) s.emplace_back(ps[i].name, flat[i]);
  } else if (!packed) {
    if (flat.size() != ps.size())
      fault("arity mismatch: expected " + std::to_string(ps.size()) + " argument(s), got " +
            std::to_string(flat.size()));
    for (std::size_t i = 0; i < ps.size(); ++i) s.emplace_back(ps[i].name, flat[i]);
  } else {
    std::size_t fixed = ps.size() - 1;
    if (flat.size() < fixed)
      fault("arity mismatch: expected at least " + std::to_string(fixed) + " argument(s), got " +
            std::to_string(flat.size()));
    std::size_t absorbed = flat.size() - fixed;
    std::size_t p = *packed;
    for (std::size_t i = 0; i < p; ++i) s.emplace_back(ps[i].name, flat[i]);
    s.emplace_back(ps[p].name,
                   Term::tuple(std::vector<Term>(flat.begin() + static_cast<std::ptrdiff_t>(p),
                                                 flat.begin() + static_cast<std::ptrdiff_t>(p + absorbed))));
    for (std::size_t i = p + 1; i < ps.size(); ++i) s.emplace_back(ps[i].name, flat[i - 1 + absorbed]);
  }
  s.emplace_back(l.stage_param, kAlways);
  return substitute(l.body, s);
}

Reduction reduce_apply(const Body& b) {
  const auto& a = b.as_apply();
  const Term& callee = a.callee;
  switch (callee.kind()) {
    case TermKind::Lambda: {
      auto body = beta(callee.as_lambda(), a.args);
      if (!body) return Reduction::stuck();
      return Reduction::replace(ReductionKind::Beta, *body);
    }
    case TermKind::Rec: {
      const auto& r = callee.as_rec();
      Term fn = substitute(r.fn, {{r.name, callee}});
      auto body = beta(fn.as_lambda(), a.args);
      if (!body) return Reduction::stuck();
      return Reduction::replace(ReductionKind::FixUnfold, *body);
    }
    case TermKind::HostExpr: {
      HostResult r;
      try {
        r = eval_host_expr(callee.as_host());
      } catch (const HostError& e) {
        fault(e.what());
      }
      if (r.stuck()) return Reduction::stuck();
      if (a.args.size() != 1 || a.args[0].splice)
        fault("a host expression takes exactly one continuation");
      const Term& k = a.args[0].value;
      const Term& v = *r.value;
      if (k.is(TermKind::Lambda)) {
        const auto& l = k.as_lambda();
        std::vector<Arg> bound;
        if (l.params.size() == 1) {
          bound.push_back({v, false});
        } else if (!l.params.empty()) {
          if (!v.is(TermKind::Tuple))
            fault("cannot destructure " + print_term(v) + " into " + std::to_string(l.params.size()) + " binders");
          for (const auto& x : v.as_tuple()) bound.push_back({x, false});
        }
        auto body = beta(l, bound);
        if (!body) return Reduction::stuck();
        return Reduction::replace(ReductionKind::HostExpr, *body);
      }
      return Reduction::replace(ReductionKind::HostExpr, Body::apply(StageExpr::always(), k, {{v, false}}));
    }
    case TermKind::Builtin: {
      std::vector<Term> args;
      for (const auto& x : a.args) {
        if (x.splice) fault("builtin " + callee.as_builtin() + " does not take spliced arguments");
        args.push_back(x.value);
      }
      BuiltinResult r;
      try {
        r = apply_builtin(callee.as_builtin(), args);
      } catch (const HostError& e) {
        fault(e.what());
      }
      Reduction out;
      out.kind = ReductionKind::Builtin;
      switch (r.kind) {
        case BuiltinResult::Kind::Stuck: return Reduction::stuck();
        case BuiltinResult::Kind::Replace:
          out.status = Reduction::Status::Replace;
          out.replacement = r.replacement;
          return out;
        case BuiltinResult::Kind::Exit:
          out.status = Reduction::Status::Exit;
          out.exit_value = r.exit_value;
          return out;
      }
      return Reduction::stuck();
    }
    case TermKind::Var: return Reduction::stuck();
    default: fault("value " + print_term(callee) + " is not callable");
  }
}

Reduction reduce(const Body& b) {
  if (b.is_apply()) return reduce_apply(b);
  // Entering a fix binds the name to the recursive function for the rest.
  const auto& f = b.as_fix();
  Term rec = Term::rec(f.name, f.value);
  return Reduction::replace(ReductionKind::Beta, substitute(f.rest, {{f.name, rec}, {f.stage_param, kAlways}}));
}

Term replace_in(const Term& t, const RedexPath& path, std::size_t at, const Body& repl);

Body replace_in(const Body& b, const RedexPath& path, std::size_t at, const Body& repl) {
  if (at == path.size()) return repl;
  std::size_t i = path[at];
  if (b.is_apply()) {
    const auto& a = b.as_apply();
    if (i == 0) return Body::apply(a.stage, replace_in(a.callee, path, at + 1, repl), a.args);
    std::vector<Arg> args = a.args;
    args.at(i - 1).value = replace_in(args[i - 1].value, path, at + 1, repl);
    return Body::apply(a.stage, a.callee, std::move(args));
  }
  const auto& f = b.as_fix();
  if (i == 0) return Body::fix(f.stage, f.name, f.stage_param, replace_in(f.value, path, at + 1, repl), f.rest);
  return Body::fix(f.stage, f.name, f.stage_param, f.value, replace_in(f.rest, path, at + 1, repl));
}

Term replace_in(const Term& t, const RedexPath& path, std::size_t at, const Body& repl) {
  std::size_t i = path.at(at);
  switch (t.kind()) {
    case TermKind::Lambda: {
      const auto& l = t.as_lambda();
      return Term::lambda(l.params, l.stage_param, replace_in(l.body, path, at + 1, repl));
    }
    case TermKind::Tuple: {
      auto items = t.as_tuple();
      items.at(i) = replace_in(items[i], path, at + 1, repl);
      return Term::tuple(std::move(items));
    }
    case TermKind::Rec: return Term::rec(t.as_rec().name, replace_in(t.as_rec().fn, path, at + 1, repl));
    case TermKind::HostExpr: {
      auto refs = t.as_host().refs();
      refs.at(i) = replace_in(refs[i], path, at + 1, repl);
      return Term::host(t.as_host().with_refs(refs));
    }
    case TermKind::Map: {
      auto entries = t.as_map();
      entries.at(i).second = replace_in(entries[i].second, path, at + 1, repl);
      return Term::map(std::move(entries));
    }
    default: throw std::logic_error("path leads into a leaf term");
  }
}

}  // namespace

std::optional<RedexPath> find_redex(const Term& program) {
  for (const auto& c : ordered_candidates(program)) {
    try {
      if (reduce(c.body).status != Reduction::Status::Stuck) return c.path;
    } catch (const Fault&) {
      // A faulting instruction is still the one that fires.
      return c.path;
    }
  }
  return std::nullopt;
}

std::optional<StepOutcome> step(const Term& program) {
  for (const auto& c : ordered_candidates(program)) {
    Reduction r;
    try {
      r = reduce(c.body);
    } catch (const Fault& f) {
      throw EvalError(f.message, c.path);
    }
    if (r.status == Reduction::Status::Stuck) continue;
    StepOutcome out{program, {0, c.path, c.body.stage(), r.kind, std::nullopt}, std::nullopt};
    if (r.status == Reduction::Status::Exit) {
      out.exit_value = r.exit_value;
    } else {
      out.program = replace_in(program, c.path, 0, *r.replacement);
    }
    return out;
  }
  return std::nullopt;
}

Term invoke(const Term& program) {
  if (!program.is(TermKind::Lambda) || !program.as_lambda().params.empty()) return program;
  const auto& l = program.as_lambda();
  return Term::lambda({}, l.stage_param, substitute(l.body, {{l.stage_param, kAlways}}));
}

RunResult run(const Term& program, const RunOptions& opts) {
  RunResult res{opts.invoke_program ? invoke(program) : program, {}, false, std::nullopt};
  while (true) {
    if (res.trace.steps.size() >= opts.fuel) {
      res.exhausted = find_redex(res.final_program).has_value();
      return res;
    }
    std::optional<StepOutcome> out;
    try {
      out = step(res.final_program);
    } catch (EvalError& e) {
      e.set_trace(res.trace);
      throw;
    }
    if (!out) return res;
    out->record.number = res.trace.steps.size() + 1;
    if (opts.snapshots) out->record.snapshot = out->program;
    res.trace.steps.push_back(std::move(out->record));
    res.final_program = out->program;
    if (out->exit_value) {
      res.exit_value = out->exit_value;
      return res;
    }
  }
}

namespace {

std::optional<Term> find_live_lambda(const Term& root, const std::string& live) {
  std::deque<Term> queue{root};
  auto push_body = [&](const Body& b) {
    // Breadth-first over terms; bodies are flattened into their child terms.
    std::deque<Body> bodies{b};
    while (!bodies.empty()) {
      Body x = bodies.front();
      bodies.pop_front();
      if (x.is_apply()) {
        queue.push_back(x.as_apply().callee);
        for (const auto& a : x.as_apply().args) queue.push_back(a.value);
      } else {
        queue.push_back(x.as_fix().value);
        bodies.push_back(x.as_fix().rest);
      }
    }
  };
  while (!queue.empty()) {
    Term t = queue.front();
    queue.pop_front();
    switch (t.kind()) {
      case TermKind::Lambda:
        if (t.as_lambda().stage_param.text == live) return t;
        push_body(t.as_lambda().body);
        break;
      case TermKind::Tuple:
        for (const auto& x : t.as_tuple()) queue.push_back(x);
        break;
      case TermKind::Rec: queue.push_back(t.as_rec().fn); break;
      case TermKind::Map:
        for (const auto& [k, v] : t.as_map()) queue.push_back(v);
        break;
      case TermKind::HostExpr:
        for (const auto& r : t.as_host().refs()) queue.push_back(r);
        break;
      default: break;
    }
  }
  return std::nullopt;
}

Term checked_residual(std::optional<Term> found, const std::string& live) {
  if (!found) throw EvalError("no lambda staged on '" + live + "' in the result", {});
  if (auto p = find_redex(*found))
    throw EvalError("residual program still holds an active reducible instruction", *p);
  return *found;
}

}  // namespace

Term residual_lambda(const RunResult& result, const std::string& live_stage) {
  std::optional<Term> found;
  if (result.exit_value) found = find_live_lambda(*result.exit_value, live_stage);
  if (!found) found = find_live_lambda(result.final_program, live_stage);
  return checked_residual(found, live_stage);
}

Body residualize(const RunResult& result, const std::string& live_stage) {
  return residual_lambda(result, live_stage).as_lambda().body;
}

Body residualize(const Term& final_program, const std::string& live_stage) {
  return checked_residual(find_live_lambda(final_program, live_stage), live_stage).as_lambda().body;
}

std::string describe_at(const Term& program, const RedexPath& path) {
  // Walk terms and bodies alternately, printing whatever the path ends on.
  std::optional<Term> t = program;
  std::optional<Body> b;
  for (std::size_t i : path) {
    if (t) {
      switch (t->kind()) {
        case TermKind::Lambda: b = t->as_lambda().body; t.reset(); break;
        case TermKind::Tuple: t = t->as_tuple().at(i); break;
        case TermKind::Rec: t = t->as_rec().fn; break;
        case TermKind::HostExpr: t = t->as_host().refs().at(i); break;
        case TermKind::Map: t = t->as_map().at(i).second; break;
        default: return "<invalid path>";
      }
    } else {
      if (b->is_apply()) {
        t = i == 0 ? b->as_apply().callee : b->as_apply().args.at(i - 1).value;
        b.reset();
      } else if (i == 0) {
        t = b->as_fix().value;
        b.reset();
      } else {
        b = b->as_fix().rest;
      }
    }
  }
  return t ? print_term(*t) : print_body(*b);
}

}  // namespace stagecraft
