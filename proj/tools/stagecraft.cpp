// Command-line driver: run, residual, trace, alpha-eq, examples.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "stagecraft/dsl.hpp"
#include "stagecraft/engine.hpp"
#include "stagecraft/prelude.hpp"
#include "stagecraft/syntax.hpp"

using namespace stagecraft;

namespace {

constexpr int kOk = 0;
constexpr int kEvalFailure = 1;
constexpr int kUsage = 2;

// Thrown for problems with the invocation or its inputs (status 2).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::size_t fuel = kDefaultFuel;
  std::string prelude = "universal";
  std::string file;
  std::string file_b;
  std::string arith;
  std::string pipeline;
  std::string chain;
  std::string stage = "pt";
  std::string format = "plain";
  std::optional<std::size_t> steps;
  bool snapshots = false;
};

std::string corpus_dir() {
  if (const char* env = std::getenv("STAGECRAFT_CORPUS_DIR"); env && *env) return env;
  return STAGECRAFT_CORPUS_DIR;
}

Term load_program(const std::string& path, const std::string& prelude) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const PreludeError& e) {
    throw UsageError(e.what());
  }
  PreludeVariant v;
  try {
    v = parse_prelude_variant(prelude);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  return with_prelude(v, parse_program({text, path}));
}

Pipeline pipeline_or(const Options& o, Pipeline fallback) {
  if (o.pipeline.empty()) return fallback;
  try {
    return parse_pipeline(o.pipeline);
  } catch (const DslError& e) {
    throw UsageError(e.what());
  }
}

std::vector<MatrixShape> load_chain(const std::string& path) {
  try {
    return parse_chain(read_file(path));
  } catch (const std::exception& e) {
    throw UsageError(path + ": " + e.what());
  }
}

std::string render(const Body& b, const Options& o) {
  return print_body(o.format == "canon" ? canonicalize(b) : b);
}

int fuel_exhausted(std::size_t steps) {
  std::cerr << "fuel exhausted after " << steps << " steps\n";
  return kEvalFailure;
}

int cmd_run(const Options& o) {
  if (!o.arith.empty()) {
    Pipeline p = pipeline_or(o, Pipeline::Immediate);
    auto events = events_for(o.arith, p);
    if (p == Pipeline::Immediate) {
      std::cout << print_term(Term::number(run_immediate(events, o.fuel))) << "\n";
    } else {
      BuildResult b = build_program(events, p, o.fuel);
      std::cout << print_term(execute_residual(b.residual_lambda, o.fuel)) << "\n";
    }
    return kOk;
  }
  if (o.file.empty()) throw UsageError("run needs a FILE or --arith");
  RunResult r = run(load_program(o.file, o.prelude), {o.fuel, false, true});
  if (r.exit_value) {
    std::cout << print_term(*r.exit_value) << "\n";
    return kOk;
  }
  if (r.exhausted) return fuel_exhausted(r.trace.steps.size());
  std::cout << print_program(r.final_program) << "\n";
  return kOk;
}

int cmd_residual(const Options& o) {
  if (o.arith.empty() && o.chain.empty()) {
    if (o.file.empty()) throw UsageError("residual needs a FILE, --arith or --chain");
    RunResult r = run(load_program(o.file, o.prelude), {o.fuel, false, true});
    if (r.exhausted) return fuel_exhausted(r.trace.steps.size());
    std::cout << render(residualize(r, o.stage), o) << "\n";
    return kOk;
  }
  auto build = [&]() -> BuildResult {
    if (o.arith.empty()) return run_matmul_example(load_chain(o.chain), o.fuel);
    std::optional<MatrixTable> table;
    if (!o.chain.empty()) {
      table.emplace();
      for (const MatrixShape& m : load_chain(o.chain)) (*table)[m.name] = m;
    }
    Pipeline p = pipeline_or(o, table ? Pipeline::Ast : Pipeline::Stack);
    return build_program(events_for(o.arith, p, table ? &*table : nullptr), p, o.fuel);
  };
  std::cout << render(build().residual, o) << "\n";
  return kOk;
}

int cmd_trace(const Options& o) {
  if (o.file.empty()) throw UsageError("trace needs a FILE");
  std::size_t fuel = o.steps ? std::min(*o.steps, o.fuel) : o.fuel;
  Term program = load_program(o.file, o.prelude);
  RunResult r;
  try {
    r = run(program, {fuel, o.snapshots, true});
  } catch (const EvalError& e) {
    std::cout << e.trace().serialize();
    throw;
  }
  for (const StepRecord& s : r.trace.steps) {
    Trace one{{s}};
    std::cout << one.serialize();
    if (o.snapshots && s.snapshot) std::cout << print_program(*s.snapshot) << "\n\n";
  }
  if (r.exit_value) std::cout << "exit " << print_term(*r.exit_value) << "\n";
  return kOk;
}

// First path (same child numbering as redex paths) where two canonical
// terms differ.
std::optional<RedexPath> divergence(const Term& a, const Term& b, RedexPath& at);

std::optional<RedexPath> divergence(const Body& a, const Body& b, RedexPath& at) {
  if (a.kind() != b.kind() || print_stage(a.stage()) != print_stage(b.stage())) return at;
  std::vector<std::pair<Term, Term>> kids;
  if (a.is_apply()) {
    const auto &x = a.as_apply(), &y = b.as_apply();
    if (x.args.size() != y.args.size()) return at;
    kids.emplace_back(x.callee, y.callee);
    for (std::size_t i = 0; i < x.args.size(); ++i) {
      if (x.args[i].splice != y.args[i].splice) return at;
      kids.emplace_back(x.args[i].value, y.args[i].value);
    }
  } else {
    const auto &x = a.as_fix(), &y = b.as_fix();
    if (x.name != y.name || x.stage_param != y.stage_param) return at;
    at.push_back(0);
    if (auto d = divergence(x.value, y.value, at)) return d;
    at.back() = 1;
    if (auto d = divergence(x.rest, y.rest, at)) return d;
    at.pop_back();
    return std::nullopt;
  }
  for (std::size_t i = 0; i < kids.size(); ++i) {
    at.push_back(i);
    if (auto d = divergence(kids[i].first, kids[i].second, at)) return d;
    at.pop_back();
  }
  return std::nullopt;
}

std::optional<RedexPath> divergence(const Term& a, const Term& b, RedexPath& at) {
  if (a.kind() != b.kind()) return at;
  switch (a.kind()) {
    case TermKind::Lambda: {
      const auto &x = a.as_lambda(), &y = b.as_lambda();
      if (x.params != y.params || x.stage_param != y.stage_param) return at;
      at.push_back(0);
      if (auto d = divergence(x.body, y.body, at)) return d;
      at.pop_back();
      return std::nullopt;
    }
    case TermKind::Tuple: {
      const auto &x = a.as_tuple(), &y = b.as_tuple();
      if (x.size() != y.size()) return at;
      for (std::size_t i = 0; i < x.size(); ++i) {
        at.push_back(i);
        if (auto d = divergence(x[i], y[i], at)) return d;
        at.pop_back();
      }
      return std::nullopt;
    }
    case TermKind::Rec: {
      if (a.as_rec().name != b.as_rec().name) return at;
      at.push_back(0);
      if (auto d = divergence(a.as_rec().fn, b.as_rec().fn, at)) return d;
      at.pop_back();
      return std::nullopt;
    }
    default:
      if (print_term(a) != print_term(b)) return at;
      return std::nullopt;
  }
}

int cmd_alpha_eq(const Options& o) {
  if (o.file.empty() || o.file_b.empty()) throw UsageError("alpha-eq needs two files");
  auto load = [](const std::string& path) {
    try {
      return parse_program({read_file(path), path});
    } catch (const PreludeError& e) {
      throw UsageError(e.what());
    }
  };
  Term a = load(o.file), b = load(o.file_b);
  if (alpha_equivalent(a, b)) {
    std::cout << "alpha-equivalent\n";
    return kOk;
  }
  RedexPath at;
  auto d = divergence(canonicalize(a), canonicalize(b), at);
  std::cout << "distinct at " << format_path(d.value_or(RedexPath{})) << "\n";
  return kEvalFailure;
}

int cmd_examples() {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(corpus_dir()))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const fs::path& f : files) {
    std::string text = read_file(f.string());
    std::string summary;
    for (char c : text) {
      if (c == '\n') {
        if (!summary.empty() && summary.front() != '#') break;
        summary.clear();
        continue;
      }
      summary += c;
    }
    std::cout << f.filename().string() << "\t" << summary << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic-staging evaluator and residualizer"};
  app.require_subcommand(1, 1);
  Options o;

  auto add_fuel = [&](CLI::App* c) {
    c->add_option("--fuel", o.fuel, "Maximum number of reduction steps")->capture_default_str();
  };
  auto add_prelude = [&](CLI::App* c) {
    c->add_option("--prelude", o.prelude, "Builder library: none, unstaged, staged or universal")
        ->capture_default_str();
  };

  CLI::App* run_cmd = app.add_subcommand("run", "Run a program and print its exit value");
  run_cmd->add_option("file", o.file, "Program file");
  run_cmd->add_option("--arith", o.arith, "Arithmetic expression to evaluate through a pipeline");
  run_cmd->add_option("--pipeline", o.pipeline, "immediate, simple, staged, stack, ast or env");
  add_fuel(run_cmd);
  add_prelude(run_cmd);

  CLI::App* residual_cmd = app.add_subcommand("residual", "Print the program left on a live stage");
  residual_cmd->add_option("file", o.file, "Program file");
  residual_cmd->add_option("--arith", o.arith, "Arithmetic expression to compile");
  residual_cmd->add_option("--pipeline", o.pipeline, "simple, staged, stack, ast or env");
  residual_cmd->add_option("--chain", o.chain, "Matrix chain file (rows cols name per line)");
  residual_cmd->add_option("--stage", o.stage, "Name of the stage parameter left live")->capture_default_str();
  residual_cmd->add_option("--format", o.format, "plain or canon (binders renamed b0, b1, ...)")
      ->check(CLI::IsMember({"plain", "canon"}))
      ->capture_default_str();
  add_fuel(residual_cmd);
  add_prelude(residual_cmd);

  CLI::App* trace_cmd = app.add_subcommand("trace", "List the reduction steps of a run");
  trace_cmd->add_option("file", o.file, "Program file")->required();
  trace_cmd->add_option("--steps", o.steps, "Stop after this many steps");
  trace_cmd->add_flag("--snapshots", o.snapshots, "Print the program after every step");
  add_fuel(trace_cmd);
  add_prelude(trace_cmd);

  CLI::App* alpha_cmd = app.add_subcommand("alpha-eq", "Compare two programs up to renaming of bound names");
  alpha_cmd->add_option("first", o.file, "First program file")->required();
  alpha_cmd->add_option("second", o.file_b, "Second program file")->required();

  CLI::App* examples_cmd = app.add_subcommand("examples", "List the example corpus");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(o);
    if (residual_cmd->parsed()) return cmd_residual(o);
    if (trace_cmd->parsed()) return cmd_trace(o);
    if (alpha_cmd->parsed()) return cmd_alpha_eq(o);
    if (examples_cmd->parsed()) return cmd_examples();
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kUsage;
  } catch (const PreludeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const EvalError& e) {
    std::cerr << "evaluation error: " << e.what() << "\n";
    return kEvalFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kEvalFailure;
  }
  return kUsage;
}
