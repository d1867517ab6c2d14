#include "stagecraft/dsl.hpp"

#include <cctype>
#include <cstdlib>
#include <sstream>

#include "stagecraft/syntax.hpp"

namespace stagecraft {

DslError::DslError(const std::string& message, std::optional<SourcePos> pos)
    : std::runtime_error(pos ? std::to_string(pos->line) + ":" + std::to_string(pos->column) + ": " + message
                             : message),
      pos_(pos) {}

ArithExpr ArithExpr::number(Number v, SourcePos p) {
  ArithExpr e;
  e.kind = Kind::Number;
  e.value = std::move(v);
  e.pos = p;
  return e;
}

ArithExpr ArithExpr::ref(std::string n, SourcePos p) {
  ArithExpr e;
  e.kind = Kind::Ref;
  e.name = std::move(n);
  e.pos = p;
  return e;
}

ArithExpr ArithExpr::binary(char op, ArithExpr l, ArithExpr r, SourcePos p) {
  ArithExpr e;
  e.kind = Kind::Binary;
  e.op = op;
  e.kids = {std::move(l), std::move(r)};
  e.pos = p;
  return e;
}

ArithExpr ArithExpr::bind(std::string n, ArithExpr value, ArithExpr body, SourcePos p) {
  ArithExpr e;
  e.kind = Kind::Bind;
  e.name = std::move(n);
  e.kids = {std::move(value), std::move(body)};
  e.pos = p;
  return e;
}

ArithExpr ArithExpr::matmul(std::vector<ArithExpr> refs, SourcePos p) {
  ArithExpr e;
  e.kind = Kind::MatMul;
  e.kids = std::move(refs);
  e.pos = p;
  return e;
}

std::string to_string(const ArithExpr& e) {
  switch (e.kind) {
    case ArithExpr::Kind::Number: return e.value.str();
    case ArithExpr::Kind::Ref: return e.name;
    case ArithExpr::Kind::Binary:
      return "(" + to_string(e.kids[0]) + std::string(1, e.op) + to_string(e.kids[1]) + ")";
    case ArithExpr::Kind::Bind: return e.name + " = " + to_string(e.kids[0]) + "; " + to_string(e.kids[1]);
    case ArithExpr::Kind::MatMul: {
      std::string out = "matmul(";
      for (std::size_t i = 0; i < e.kids.size(); ++i) out += (i ? ", " : "") + e.kids[i].name;
      return out + ")";
    }
  }
  return {};
}

namespace {

struct ArithToken {
  enum class Kind { Number, Ident, Punct, End } kind;
  std::string text;
  SourcePos pos;
};

std::vector<ArithToken> lex_arith(const std::string& src) {
  std::vector<ArithToken> out;
  SourcePos pos;
  std::size_t i = 0;
  auto advance = [&] {
    if (src[i] == '\n') {
      ++pos.line;
      pos.column = 1;
    } else {
      ++pos.column;
    }
    ++i;
  };
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance();
    } else if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance();
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      ArithToken t{ArithToken::Kind::Number, "", pos};
      while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) {
        t.text += src[i];
        advance();
      }
      out.push_back(t);
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      ArithToken t{ArithToken::Kind::Ident, "", pos};
      while (i < src.size() && (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_')) {
        t.text += src[i];
        advance();
      }
      out.push_back(t);
    } else if (std::string("+-*/()=;,").find(c) != std::string::npos) {
      out.push_back({ArithToken::Kind::Punct, std::string(1, c), pos});
      advance();
    } else {
      throw ParseError(pos.line, pos.column, std::string("unexpected character '") + c + "'");
    }
  }
  out.push_back({ArithToken::Kind::End, "", pos});
  return out;
}

class ArithParser {
 public:
  explicit ArithParser(std::vector<ArithToken> toks) : toks_(std::move(toks)) {}

  ArithExpr program() {
    ArithExpr e = statement();
    if (peek().kind != ArithToken::Kind::End) fail("end of input");
    return e;
  }

 private:
  const ArithToken& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  bool is_punct(const char* p, std::size_t ahead = 0) const {
    return peek(ahead).kind == ArithToken::Kind::Punct && peek(ahead).text == p;
  }
  [[noreturn]] void fail(const std::string& expected) const {
    const auto& t = peek();
    std::string found = t.kind == ArithToken::Kind::End ? "end of input" : "'" + t.text + "'";
    throw ParseError(t.pos.line, t.pos.column, "expected " + expected + ", found " + found, {expected});
  }
  void expect(const char* p) {
    if (!is_punct(p)) fail(std::string("'") + p + "'");
    ++pos_;
  }

  ArithExpr statement() {
    if (peek().kind == ArithToken::Kind::Ident && is_punct("=", 1)) {
      SourcePos at = peek().pos;
      std::string name = peek().text;
      pos_ += 2;
      ArithExpr value = expr();
      expect(";");
      ArithExpr body = statement();
      return ArithExpr::bind(name, std::move(value), std::move(body), at);
    }
    return expr();
  }

  ArithExpr expr() {
    ArithExpr l = term();
    while (is_punct("+") || is_punct("-")) {
      SourcePos at = peek().pos;
      char op = peek().text[0];
      ++pos_;
      l = ArithExpr::binary(op, std::move(l), term(), at);
    }
    return l;
  }

  ArithExpr term() {
    ArithExpr l = factor();
    while (is_punct("*") || is_punct("/")) {
      SourcePos at = peek().pos;
      char op = peek().text[0];
      ++pos_;
      l = ArithExpr::binary(op, std::move(l), factor(), at);
    }
    return l;
  }

  ArithExpr factor() {
    const ArithToken& t = peek();
    if (t.kind == ArithToken::Kind::Number) {
      ++pos_;
      return ArithExpr::number(Number(t.text), t.pos);
    }
    if (t.kind == ArithToken::Kind::Ident && t.text == "matmul" && is_punct("(", 1)) {
      SourcePos at = t.pos;
      pos_ += 2;
      std::vector<ArithExpr> refs;
      while (true) {
        if (peek().kind != ArithToken::Kind::Ident) fail("matrix name");
        refs.push_back(ArithExpr::ref(peek().text, peek().pos));
        ++pos_;
        if (!is_punct(",")) break;
        ++pos_;
      }
      expect(")");
      return ArithExpr::matmul(std::move(refs), at);
    }
    if (t.kind == ArithToken::Kind::Ident) {
      ++pos_;
      return ArithExpr::ref(t.text, t.pos);
    }
    if (is_punct("(")) {
      ++pos_;
      ArithExpr e = expr();
      expect(")");
      return e;
    }
    fail("number, name or '('");
  }

  std::vector<ArithToken> toks_;
  std::size_t pos_ = 0;
};

}  // namespace

ArithExpr parse_arith(const std::string& text) { return ArithParser(lex_arith(text)).program(); }

std::vector<MatrixShape> parse_chain(const std::string& text) {
  std::vector<MatrixShape> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    MatrixShape m;
    if (!(fields >> m.rows)) {
      std::string rest;
      if (std::istringstream(line) >> rest) throw DslError("expected `rows cols name`", SourcePos{line_no, 1});
      continue;
    }
    std::string extra;
    if (!(fields >> m.cols >> m.name) || (fields >> extra) || m.rows <= 0 || m.cols <= 0)
      throw DslError("expected `rows cols name` with positive dimensions", SourcePos{line_no, 1});
    out.push_back(m);
  }
  for (std::size_t i = 1; i < out.size(); ++i)
    if (out[i - 1].cols != out[i].rows)
      throw DslError("matrix " + out[i].name + " has " + std::to_string(out[i].rows) + " rows, expected " +
                     std::to_string(out[i - 1].cols));
  return out;
}

bool ActionEvent::operator==(const ActionEvent& o) const {
  return kind == o.kind && value == o.value && name == o.name && shape.rows == o.shape.rows &&
         shape.cols == o.shape.cols && shape.name == o.shape.name;
}

namespace {

const char* action_name(ActionEvent::Kind k) {
  switch (k) {
    case ActionEvent::Kind::Start: return "start";
    case ActionEvent::Kind::Number: return "number";
    case ActionEvent::Kind::Add: return "add";
    case ActionEvent::Kind::Sub: return "sub";
    case ActionEvent::Kind::Mul: return "mul";
    case ActionEvent::Kind::Div: return "div";
    case ActionEvent::Kind::Bind: return "bind";
    case ActionEvent::Kind::Reference: return "reference";
    case ActionEvent::Kind::MulStart: return "mulStart";
    case ActionEvent::Kind::MulNext: return "mulNext";
    case ActionEvent::Kind::MulEnd: return "mulEnd";
    case ActionEvent::Kind::Matrix: return "matrix";
    case ActionEvent::Kind::End: return "end";
  }
  return "?";
}

ActionEvent::Kind op_event(char op) {
  switch (op) {
    case '+': return ActionEvent::Kind::Add;
    case '-': return ActionEvent::Kind::Sub;
    case '*': return ActionEvent::Kind::Mul;
    default: return ActionEvent::Kind::Div;
  }
}

ActionEvent event(ActionEvent::Kind k, SourcePos pos) {
  ActionEvent e;
  e.kind = k;
  e.pos = pos;
  return e;
}

void emit(const ArithExpr& t, EventOrder order, const MatrixTable* matrices, std::vector<ActionEvent>& out) {
  using K = ActionEvent::Kind;
  bool prefix = order == EventOrder::Prefix;
  switch (t.kind) {
    case ArithExpr::Kind::Number: {
      ActionEvent e = event(K::Number, t.pos);
      e.value = t.value;
      out.push_back(e);
      return;
    }
    case ArithExpr::Kind::Ref: {
      ActionEvent e = event(K::Reference, t.pos);
      e.name = t.name;
      out.push_back(e);
      return;
    }
    case ArithExpr::Kind::Binary: {
      if (prefix) out.push_back(event(op_event(t.op), t.pos));
      emit(t.kids[0], order, matrices, out);
      emit(t.kids[1], order, matrices, out);
      if (!prefix) out.push_back(event(op_event(t.op), t.pos));
      return;
    }
    case ArithExpr::Kind::Bind: {
      ActionEvent e = event(K::Bind, t.pos);
      e.name = t.name;
      if (prefix) out.push_back(e);
      emit(t.kids[0], order, matrices, out);
      emit(t.kids[1], order, matrices, out);
      if (!prefix) out.push_back(e);
      return;
    }
    case ArithExpr::Kind::MatMul: {
      if (!prefix) throw DslError("matrix chains need prefix order", t.pos);
      out.push_back(event(K::MulStart, t.pos));
      for (const ArithExpr& r : t.kids) {
        out.push_back(event(K::MulNext, r.pos));
        ActionEvent m = event(K::Matrix, r.pos);
        m.name = r.name;
        if (!matrices) throw DslError("no shape known for matrix " + r.name, r.pos);
        auto it = matrices->find(r.name);
        if (it == matrices->end()) throw DslError("no shape known for matrix " + r.name, r.pos);
        m.shape = it->second;
        m.shape.name = r.name;
        out.push_back(m);
      }
      out.push_back(event(K::MulEnd, t.pos));
      return;
    }
  }
}

}  // namespace

std::string to_string(const ActionEvent& e) {
  switch (e.kind) {
    case ActionEvent::Kind::Number: return e.value.str();
    case ActionEvent::Kind::Bind:
    case ActionEvent::Kind::Reference: return std::string(action_name(e.kind)) + ":" + e.name;
    case ActionEvent::Kind::Matrix:
      return "matrix:" + e.name + "[" + std::to_string(e.shape.rows) + "x" + std::to_string(e.shape.cols) + "]";
    default: return action_name(e.kind);
  }
}

std::string to_string(const std::vector<ActionEvent>& events) {
  std::string out;
  for (std::size_t i = 0; i < events.size(); ++i) out += (i ? " " : "") + to_string(events[i]);
  return out;
}

std::vector<ActionEvent> emit_events(const ArithExpr& tree, EventOrder order, const MatrixTable* matrices) {
  std::vector<ActionEvent> out{event(ActionEvent::Kind::Start, tree.pos)};
  emit(tree, order, matrices, out);
  out.push_back(event(ActionEvent::Kind::End, tree.pos));
  return out;
}

std::string to_string(Pipeline p) {
  switch (p) {
    case Pipeline::Immediate: return "immediate";
    case Pipeline::Simple: return "simple";
    case Pipeline::Staged: return "staged";
    case Pipeline::Stack: return "stack";
    case Pipeline::Ast: return "ast";
    case Pipeline::Env: return "env";
  }
  return "?";
}

Pipeline parse_pipeline(const std::string& name) {
  for (Pipeline p : {Pipeline::Immediate, Pipeline::Simple, Pipeline::Staged, Pipeline::Stack, Pipeline::Ast,
                     Pipeline::Env})
    if (to_string(p) == name) return p;
  throw DslError("unknown pipeline '" + name + "' (expected immediate, simple, staged, stack, ast or env)");
}

PipelineInfo pipeline_info(Pipeline p) {
  switch (p) {
    case Pipeline::Immediate: return {PreludeVariant::None, {"immediate.dcps"}, EventOrder::Postfix};
    case Pipeline::Simple: return {PreludeVariant::Unstaged, {"simple.dcps"}, EventOrder::Postfix};
    case Pipeline::Staged: return {PreludeVariant::Staged, {"staged.dcps"}, EventOrder::Postfix};
    case Pipeline::Stack: return {PreludeVariant::Universal, {"stack.dcps"}, EventOrder::Postfix};
    case Pipeline::Ast: return {PreludeVariant::Universal, {"ast.dcps", "matmul.dcps"}, EventOrder::Prefix};
    case Pipeline::Env: return {PreludeVariant::Universal, {"env.dcps"}, EventOrder::Prefix};
  }
  throw DslError("unknown pipeline");
}

std::string dsl_dir() {
  if (const char* env = std::getenv("STAGECRAFT_DSL_DIR"); env && *env) return env;
  return STAGECRAFT_DSL_DIR;
}

namespace {

bool supports(Pipeline p, ActionEvent::Kind k) {
  using K = ActionEvent::Kind;
  switch (k) {
    case K::Start:
    case K::Number:
    case K::Add:
    case K::Sub:
    case K::Mul:
    case K::Div:
    case K::End: return true;
    case K::Bind:
    case K::Reference: return p == Pipeline::Env;
    case K::MulStart:
    case K::MulNext:
    case K::MulEnd:
    case K::Matrix: return p == Pipeline::Ast;
  }
  return false;
}

std::string number_source(const Number& n) {
  if (boost::multiprecision::denominator(n) != 1) return "\"" + n.str() + "\"";
  return n.str();
}

}  // namespace

std::string driver_source(const std::vector<ActionEvent>& events, Pipeline p) {
  bool immediate = p == Pipeline::Immediate;
  const char* f = immediate ? "S" : "F";
  std::string out;
  for (const ActionEvent& e : events) {
    if (!supports(p, e.kind))
      throw DslError(std::string("the ") + to_string(p) + " pipeline has no " + action_name(e.kind) + " action", e.pos);
    std::string line = action_name(e.kind);
    switch (e.kind) {
      case ActionEvent::Kind::Start: out += line + " (" + f + ")\n"; continue;
      case ActionEvent::Kind::End:
        out += immediate ? "end S\n" : "end F (program)\nexit program\n";
        continue;
      case ActionEvent::Kind::Number: line += std::string(" ") + f + " " + number_source(e.value); break;
      case ActionEvent::Kind::Bind:
      case ActionEvent::Kind::Reference: line += std::string(" ") + f + " :\"" + e.name + "\""; break;
      case ActionEvent::Kind::Matrix:
        line += std::string(" ") + f + " " + std::to_string(e.shape.rows) + " " + std::to_string(e.shape.cols) + " " +
                e.name;
        break;
      default: line += std::string(" ") + f; break;
    }
    out += line + " (" + f + ")\n";
  }
  return out;
}

Term pipeline_program(const std::vector<ActionEvent>& events, Pipeline p) {
  PipelineInfo info = pipeline_info(p);
  std::vector<Definition> defs = load_prelude(info.prelude);
  for (const std::string& file : info.action_files) {
    std::string path = dsl_dir() + "/" + file;
    auto more = parse_definitions({read_file(path), path});
    defs.insert(defs.end(), more.begin(), more.end());
  }
  return link_program(defs, parse_program({driver_source(events, p), "<driver>"}));
}

namespace {

// Unbound names surface as evaluation errors; point them at the reference.
[[noreturn]] void rethrow_positioned(const EvalError& err, const std::vector<ActionEvent>& events) {
  const std::string prefix = "unbound name ";
  std::string msg = err.what();
  if (auto at = msg.find(prefix); at != std::string::npos) {
    std::string rest = msg.substr(at + prefix.size());
    std::string name = rest.substr(0, rest.find_first_of(" \t\n"));
    for (const ActionEvent& e : events)
      if (e.kind == ActionEvent::Kind::Reference && e.name == name) throw DslError(prefix + name, e.pos);
  }
  throw err;
}

RunResult run_checked(const Term& program, const std::vector<ActionEvent>& events, std::size_t fuel) {
  RunResult r;
  try {
    r = run(program, {fuel, false, true});
  } catch (const EvalError& err) {
    rethrow_positioned(err, events);
  }
  if (r.exhausted) throw DslError("fuel exhausted after " + std::to_string(r.trace.steps.size()) + " steps");
  return r;
}

}  // namespace

Number run_immediate(const std::vector<ActionEvent>& events, std::size_t fuel) {
  RunResult r = run_checked(pipeline_program(events, Pipeline::Immediate), events, fuel);
  if (!r.exit_value || !r.exit_value->is(TermKind::Literal) || !r.exit_value->as_literal().is_number())
    throw DslError("immediate run did not exit with a number");
  return r.exit_value->as_literal().number();
}

BuildResult build_program(const std::vector<ActionEvent>& events, Pipeline p, std::size_t fuel) {
  if (p == Pipeline::Immediate) throw DslError("the immediate pipeline computes values and builds no program");
  RunResult r = run_checked(pipeline_program(events, p), events, fuel);
  Term lam = residual_lambda(r);
  Body body = lam.as_lambda().body;
  return {lam, body, std::move(r)};
}

BuildResult run_env_example(const std::vector<ActionEvent>& events, std::size_t fuel) {
  return build_program(events, Pipeline::Env, fuel);
}

BuildResult run_matmul_example(const std::vector<MatrixShape>& chain, std::size_t fuel) {
  if (chain.empty()) throw DslError("empty matrix chain");
  MatrixTable table;
  std::vector<ArithExpr> refs;
  for (const MatrixShape& m : chain) {
    table[m.name] = m;
    refs.push_back(ArithExpr::ref(m.name));
  }
  return build_program(emit_events(ArithExpr::matmul(std::move(refs)), EventOrder::Prefix, &table), Pipeline::Ast,
                       fuel);
}

Term execute_residual(const Term& residual_lambda, std::size_t fuel) {
  IdList used = residual_lambda.free_vars();
  Identifier top = fresh_name("top", used);
  Identifier k = fresh_name("k", used);
  Identifier v = fresh_name("v", used);
  Term cont = Term::lambda({Param{v}}, k,
                           Body::apply(StageExpr::var(k), Term::builtin("exit"), {Arg{Term::var(v)}}));
  Term program = Term::lambda({}, top, Body::apply(StageExpr::var(top), residual_lambda, {Arg{cont}}));
  RunResult r = run(program, {fuel, false, true});
  if (!r.exit_value) {
    if (r.exhausted) throw DslError("fuel exhausted after " + std::to_string(r.trace.steps.size()) + " steps");
    throw DslError("residual program stopped without exiting: " + print_program(r.final_program));
  }
  return *r.exit_value;
}

std::vector<ActionEvent> events_for(const std::string& arith, Pipeline p, const MatrixTable* matrices) {
  return emit_events(parse_arith(arith), pipeline_info(p).order, matrices);
}

}  // namespace stagecraft
