#include <cctype>
#include <functional>
#include <optional>
#include <sstream>

#include "stagecraft/syntax.hpp"

namespace stagecraft {

namespace {

std::string format_error(int line, int column, const std::string& message) {
  std::ostringstream os;
  os << line << ":" << column << ": " << message;
  return os.str();
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class Lexer {
 public:
  explicit Lexer(const std::string& text) : s_(text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space();
      if (pos_ >= s_.size()) {
        out.push_back({TokenKind::End, "", line_, col_});
        return out;
      }
      out.push_back(next());
    }
  }

 private:
  char peek(std::size_t off = 0) const { return pos_ + off < s_.size() ? s_[pos_ + off] : '\0'; }

  void advance() {
    if (s_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < s_.size()) {
      if (std::isspace(static_cast<unsigned char>(peek()))) {
        advance();
      } else if (peek() == '/' && peek(1) == '/') {
        while (pos_ < s_.size() && peek() != '\n') advance();
      } else {
        break;
      }
    }
  }

  // Reads up to (not including) `close`, which must appear before end of input.
  std::string read_until(const std::string& close, int line, int col, const char* what) {
    std::size_t end = s_.find(close, pos_);
    if (end == std::string::npos) throw ParseError(line, col, std::string("unterminated ") + what, {close});
    std::string body = s_.substr(pos_, end - pos_);
    while (pos_ < end + close.size()) advance();
    return body;
  }

  std::string read_ident() {
    std::string out;
    while (ident_char(peek())) {
      out += peek();
      advance();
    }
    if (peek() == '#' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
      out += '#';
      advance();
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        out += peek();
        advance();
      }
    }
    return out;
  }

  std::string read_escaped(int line, int col, const char* what) {
    std::string out;
    while (true) {
      if (pos_ >= s_.size()) throw ParseError(line, col, std::string("unterminated ") + what, {"\""});
      char c = peek();
      advance();
      if (c == '"') return out;
      if (c == '\\' && pos_ < s_.size()) {
        out += peek();
        advance();
        continue;
      }
      out += c;
    }
  }

  Token next() {
    int line = line_, col = col_;
    char c = peek();
    auto simple = [&](TokenKind k) {
      advance();
      return Token{k, std::string(1, c), line, col};
    };
    switch (c) {
      case '(': return simple(TokenKind::LParen);
      case ')': return simple(TokenKind::RParen);
      case '{': return simple(TokenKind::LBrace);
      case '}': return simple(TokenKind::RBrace);
      case '[': return simple(TokenKind::LBracket);
      case ']': return simple(TokenKind::RBracket);
      case ',': return simple(TokenKind::Comma);
      case '!': return simple(TokenKind::Bang);
      default: break;
    }
    if (c == '\'') {
      advance();
      if (peek() == '@') {
        advance();
        return {TokenKind::StagePrefix, read_until(":'", line, col, "stage prefix"), line, col};
      }
      if (peek() == '[') {
        advance();
        return {TokenKind::StageParam, read_until("]'", line, col, "staging bracket"), line, col};
      }
      std::string name = read_until("'", line, col, "quoted identifier");
      if (name.empty() || !ident_start(name[0]))
        throw ParseError(line, col, "malformed quoted identifier '" + name + "'");
      return {TokenKind::Ident, name, line, col};
    }
    if (c == '"') {
      advance();
      return {TokenKind::HostExpr, read_escaped(line, col, "host expression"), line, col};
    }
    if (c == ':' && peek(1) == '"') {
      advance();
      advance();
      return {TokenKind::Text, read_escaped(line, col, "text literal"), line, col};
    }
    if (c == ':' && ident_start(peek(1))) {
      advance();
      return {TokenKind::Text, read_ident(), line, col};
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '-' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
      std::string num;
      if (c == '-') {
        num += c;
        advance();
      }
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        num += peek();
        advance();
      }
      if (peek() == '/' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
        num += '/';
        advance();
        while (std::isdigit(static_cast<unsigned char>(peek()))) {
          num += peek();
          advance();
        }
      }
      return {TokenKind::Number, num, line, col};
    }
    if (ident_start(c)) return {TokenKind::Ident, read_ident(), line, col};
    throw ParseError(line, col, std::string("unexpected character '") + c + "'");
  }

  const std::string& s_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

Identifier parse_identifier(const std::string& text) {
  auto hash = text.find('#');
  if (hash == std::string::npos) return Identifier{text};
  return Identifier{text.substr(0, hash), static_cast<unsigned>(std::stoul(text.substr(hash + 1)))};
}

Number parse_number(const std::string& text) {
  auto slash = text.find('/');
  if (slash == std::string::npos) return Number(boost::multiprecision::cpp_int(text));
  boost::multiprecision::cpp_int den(text.substr(slash + 1));
  if (den == 0) throw std::invalid_argument("zero denominator");
  return Number(boost::multiprecision::cpp_int(text.substr(0, slash)), den);
}

// ---------------------------------------------------------------------------
// Host sub-language

class HostParser {
 public:
  HostParser(const std::string& text, int line, int column) : s_(text), line_(line), column_(column) {}

  HostExpr run() {
    HostExpr e = expr();
    skip();
    if (pos_ < s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "' in host expression");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(line_, column_ + 1 + static_cast<int>(pos_), msg);
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(const std::string& tok) {
    skip();
    if (s_.compare(pos_, tok.size(), tok) != 0) return false;
    // `..` must not be mistaken for `.`; `<` must not swallow `<=`.
    if (tok == "." && s_.compare(pos_, 2, "..") == 0) return false;
    if ((tok == "<" || tok == ">" || tok == "=") && pos_ + 1 < s_.size() && s_[pos_ + 1] == '=') return false;
    pos_ += tok.size();
    return true;
  }

  void expect(const std::string& tok) {
    if (!eat(tok)) fail("expected '" + tok + "' in host expression");
  }

  HostExpr expr() {
    HostExpr lo = comparison();
    if (eat("..")) return HostExpr::range(lo, comparison());
    return lo;
  }

  HostExpr comparison() {
    HostExpr l = additive();
    for (const char* op : {"<=", ">=", "==", "!=", "<", ">"}) {
      if (eat(op)) return HostExpr::binary(op, l, additive());
    }
    return l;
  }

  HostExpr additive() {
    HostExpr l = multiplicative();
    while (true) {
      if (eat("+")) {
        l = HostExpr::binary("+", l, multiplicative());
      } else if (eat("-")) {
        l = HostExpr::binary("-", l, multiplicative());
      } else {
        return l;
      }
    }
  }

  HostExpr multiplicative() {
    HostExpr l = unary();
    while (true) {
      if (eat("*")) {
        l = HostExpr::binary("*", l, unary());
      } else if (eat("/")) {
        l = HostExpr::binary("/", l, unary());
      } else {
        return l;
      }
    }
  }

  HostExpr unary() {
    skip();
    if (pos_ + 1 < s_.size() && s_[pos_] == '-' && std::isdigit(static_cast<unsigned char>(s_[pos_ + 1]))) {
      ++pos_;
      return postfix(HostExpr::ref(Term::number(-read_number())));
    }
    if (eat("-")) return HostExpr::neg(unary());
    return postfix(primary());
  }

  Number read_number() {
    std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    return Number(boost::multiprecision::cpp_int(s_.substr(start, pos_ - start)));
  }

  std::string read_name() {
    skip();
    std::size_t start = pos_;
    if (pos_ >= s_.size() || !ident_start(s_[pos_])) fail("expected a name in host expression");
    while (pos_ < s_.size() && ident_char(s_[pos_])) ++pos_;
    if (pos_ + 1 < s_.size() && s_[pos_] == '#' && std::isdigit(static_cast<unsigned char>(s_[pos_ + 1]))) {
      ++pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    return s_.substr(start, pos_ - start);
  }

  std::vector<HostExpr> arguments(const std::string& close) {
    std::vector<HostExpr> args;
    if (eat(close)) return args;
    do {
      args.push_back(expr());
    } while (eat(","));
    expect(close);
    return args;
  }

  HostExpr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of host expression");
    char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c))) return HostExpr::ref(Term::number(read_number()));
    if (c == '\'') {
      std::size_t end = s_.find('\'', pos_ + 1);
      if (end == std::string::npos) fail("unterminated text in host expression");
      std::string text = s_.substr(pos_ + 1, end - pos_ - 1);
      pos_ = end + 1;
      return HostExpr::ref(Term::text(text));
    }
    if (eat("(")) {
      HostExpr e = expr();
      expect(")");
      return e;
    }
    if (eat("[")) return HostExpr::list(arguments("]"));
    std::string name = read_name();
    if (eat("(")) return HostExpr::call(name, arguments(")"));
    if (name == "true") return HostExpr::ref(Term::boolean(true));
    if (name == "false") return HostExpr::ref(Term::boolean(false));
    return HostExpr::ref(Term::var(parse_identifier(name)));
  }

  HostExpr postfix(HostExpr base) {
    while (true) {
      if (eat("[")) {
        HostExpr idx = expr();
        expect("]");
        base = HostExpr::index(base, idx);
      } else if (eat(".")) {
        std::string name = read_name();
        if (eat("(")) {
          base = HostExpr::method(base, name, arguments(")"));
        } else {
          base = HostExpr::field(base, name);
        }
      } else {
        return base;
      }
    }
  }

  const std::string& s_;
  int line_;
  int column_;
  std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Object language

const Identifier kStageHint{"_s"};

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  Term program() {
    Identifier top = fresh_stage();
    Body body = with_scope({top}, top, [&] { return parse_body(); });
    expect(TokenKind::End, "end of input");
    return Term::lambda({}, top, body);
  }

  Body bare_body() {
    Identifier top = fresh_stage();
    Body body = with_scope({top}, top, [&] { return parse_body(); });
    expect(TokenKind::End, "end of input");
    return body;
  }

  std::vector<Definition> definitions() {
    std::vector<Definition> defs;
    while (!at(TokenKind::End)) {
      if (at(TokenKind::StagePrefix)) fail("definitions cannot carry a stage prefix");
      if (at_keyword("let")) {
        next();
        if (at(TokenKind::StageParam)) next();
        Identifier name = ident();
        Term value = parse_term();
        defs.push_back({Definition::Kind::Let, name, value});
        bound_.push_back(name);
      } else if (at_keyword("fix")) {
        next();
        if (at(TokenKind::StageParam)) next();
        Identifier name = ident();
        bound_.push_back(name);
        Term value = parse_term();
        if (!value.is(TermKind::Lambda)) fail("fix binds a lambda");
        if (at_keyword("in")) next();
        defs.push_back({Definition::Kind::Fix, name, value});
      } else {
        fail("expected 'let' or 'fix'", {"let", "fix"});
      }
    }
    return defs;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& peek(std::size_t ahead) const { return toks_[std::min(pos_ + ahead, toks_.size() - 1)]; }
  bool at(TokenKind k) const { return peek().kind == k; }
  bool at_keyword(const char* kw) const { return at(TokenKind::Ident) && peek().text == kw; }
  const Token& next() { return toks_[pos_++]; }

  [[noreturn]] void fail(const std::string& msg, std::vector<std::string> expected = {}) const {
    throw ParseError(peek().line, peek().column, msg, std::move(expected));
  }

  void expect(TokenKind k, const char* what) {
    if (!at(k)) fail(std::string("expected ") + what, {what});
    next();
  }

  Identifier ident() {
    if (!at(TokenKind::Ident)) fail("expected identifier", {"identifier"});
    return parse_identifier(next().text);
  }

  Identifier fresh_stage() { return Identifier{kStageHint.text, ++stage_counter_}; }

  template <class F>
  auto with_scope(const std::vector<Identifier>& binders, const Identifier& stage, F&& f) -> decltype(f()) {
    std::size_t saved = bound_.size();
    Identifier saved_stage = current_stage_;
    bound_.insert(bound_.end(), binders.begin(), binders.end());
    current_stage_ = stage;
    auto result = f();
    bound_.resize(saved);
    current_stage_ = saved_stage;
    return result;
  }

  bool is_bound(const Identifier& id) const {
    for (auto it = bound_.rbegin(); it != bound_.rend(); ++it)
      if (*it == id) return true;
    return false;
  }

  StageExpr parse_stage_text(const Token& tok) {
    std::string text = tok.text;
    // Accept the mathematical constants as well.
    for (auto [from, to] : {std::pair<std::string, std::string>{"⊤", "always"}, {"⊥", "never"}}) {
      std::size_t at;
      while ((at = text.find(from)) != std::string::npos) text.replace(at, from.size(), to);
    }
    std::size_t pos = 0;
    auto skip = [&] {
      while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    };
    auto bad = [&](const std::string& m) -> StageExpr {
      throw ParseError(tok.line, tok.column, "in stage expression '" + tok.text + "': " + m);
    };
    std::function<StageExpr()> disj, conj, unary;
    unary = [&]() -> StageExpr {
      skip();
      if (pos >= text.size()) return bad("unexpected end");
      if (text[pos] == '!') {
        ++pos;
        return StageExpr::negate(unary());
      }
      if (text[pos] == '(') {
        ++pos;
        StageExpr e = disj();
        skip();
        if (pos >= text.size() || text[pos] != ')') return bad("expected ')'");
        ++pos;
        return e;
      }
      std::size_t start = pos;
      if (text[pos] == '\'') ++pos;
      std::size_t name_start = pos;
      while (pos < text.size() && (ident_char(text[pos]) || text[pos] == '#')) ++pos;
      std::string name = text.substr(name_start, pos - name_start);
      if (pos < text.size() && text[pos] == '\'' && text[start] == '\'') ++pos;
      if (name.empty()) return bad("expected a staging variable");
      if (name == "always") return StageExpr::always();
      if (name == "never") return StageExpr::never();
      return StageExpr::var(parse_identifier(name));
    };
    conj = [&]() -> StageExpr {
      StageExpr l = unary();
      while (true) {
        skip();
        if (pos < text.size() && text[pos] == '&') {
          ++pos;
          l = StageExpr::conj(l, unary());
        } else {
          return l;
        }
      }
    };
    disj = [&]() -> StageExpr {
      StageExpr l = conj();
      while (true) {
        skip();
        if (pos < text.size() && text[pos] == '|') {
          ++pos;
          l = StageExpr::disj(l, conj());
        } else {
          return l;
        }
      }
    };
    StageExpr e = disj();
    skip();
    if (pos != text.size()) bad("trailing characters");
    return e;
  }

  Body parse_body() {
    StageExpr stage = StageExpr::var(current_stage_);
    if (at(TokenKind::StagePrefix)) stage = parse_stage_text(next());

    if (at_keyword("let")) {
      next();
      Identifier y = at(TokenKind::StageParam) ? parse_identifier(next().text) : fresh_stage();
      Identifier name = ident();
      Term value = parse_term();
      Body rest = with_scope({name, y}, y, [&] { return parse_body(); });
      return Body::apply(stage, Term::lambda({{name, false}}, y, rest), {{value, false}});
    }
    if (at_keyword("fix")) {
      next();
      Identifier y = at(TokenKind::StageParam) ? parse_identifier(next().text) : fresh_stage();
      Identifier name = ident();
      Term value = with_scope({name}, current_stage_, [&] { return parse_term(); });
      if (!value.is(TermKind::Lambda)) fail("fix binds a lambda");
      if (at_keyword("in")) next();
      Body rest = with_scope({name, y}, y, [&] { return parse_body(); });
      return Body::fix(stage, name, y, value, rest);
    }

    Term callee = parse_callee();
    std::vector<Arg> args;
    while (true) {
      if (at(TokenKind::Bang)) {
        next();
        args.push_back({parse_atom(), true});
        continue;
      }
      if (at(TokenKind::LParen) && peek(1).kind == TokenKind::LParen) {
        args.push_back({parse_paren(), false});
        continue;
      }
      if (at(TokenKind::LParen)) {
        std::size_t mark = pos_;
        auto [params, y] = parse_params();
        if (at(TokenKind::LBrace)) {
          pos_ = mark;
          args.push_back({parse_term(), false});
          continue;
        }
        // Continuation binder: the rest of the body becomes its lambda.
        std::vector<Identifier> binders;
        for (const auto& p : params) binders.push_back(p.name);
        Identifier stage_param = y ? *y : fresh_stage();
        binders.push_back(stage_param);
        Body rest = with_scope(binders, stage_param, [&] { return parse_body(); });
        args.push_back({Term::lambda(params, stage_param, rest), false});
        break;
      }
      if (starts_atom()) {
        args.push_back({parse_atom(), false});
        continue;
      }
      break;
    }
    if (!at(TokenKind::RBrace) && !at(TokenKind::End))
      fail("expected a continuation binder or the end of the body", {"(", "}"});
    return Body::apply(stage, callee, std::move(args));
  }

  bool starts_atom() const {
    switch (peek().kind) {
      case TokenKind::Ident: return !at_keyword("let") && !at_keyword("fix") && !at_keyword("in");
      case TokenKind::Number:
      case TokenKind::Text:
      case TokenKind::LBracket: return true;
      default: return false;
    }
  }

  std::pair<std::vector<Param>, std::optional<Identifier>> parse_params() {
    expect(TokenKind::LParen, "(");
    std::vector<Param> params;
    bool packed_seen = false;
    while (!at(TokenKind::RParen)) {
      bool packed = false;
      if (at(TokenKind::Bang)) {
        next();
        packed = true;
        if (packed_seen) fail("at most one packed parameter per list");
        packed_seen = true;
      }
      params.push_back({ident(), packed});
      if (at(TokenKind::Comma)) next();
    }
    next();
    std::optional<Identifier> y;
    if (at(TokenKind::StageParam)) y = parse_identifier(next().text);
    return {params, y};
  }

  Term parse_lambda() {
    auto [params, y] = parse_params();
    Identifier stage_param = y ? *y : fresh_stage();
    expect(TokenKind::LBrace, "{");
    std::vector<Identifier> binders;
    for (const auto& p : params) binders.push_back(p.name);
    binders.push_back(stage_param);
    Body body = with_scope(binders, stage_param, [&] { return parse_body(); });
    expect(TokenKind::RBrace, "}");
    return Term::lambda(std::move(params), stage_param, body);
  }

  Term parse_callee() {
    if (at(TokenKind::HostExpr)) {
      const Token& t = next();
      return Term::host(parse_host_expr(t.text, t.line, t.column));
    }
    return parse_term();
  }

  Term parse_term() {
    if (at(TokenKind::LParen)) return parse_paren();
    return parse_atom();
  }

  // A lambda, or a parenthesized term such as `((x) { exit x })`.
  Term parse_paren() {
    TokenKind after = peek(1).kind;
    if (after == TokenKind::Ident || after == TokenKind::Bang || after == TokenKind::RParen) return parse_lambda();
    next();
    Term inner = parse_term();
    expect(TokenKind::RParen, ")");
    return inner;
  }

  Term parse_atom() {
    const Token& t = peek();
    switch (t.kind) {
      case TokenKind::Number: {
        next();
        try {
          return Term::number(parse_number(t.text));
        } catch (const std::exception&) {
          throw ParseError(t.line, t.column, "malformed number '" + t.text + "'");
        }
      }
      case TokenKind::Text: next(); return Term::text(t.text);
      case TokenKind::LBracket: {
        next();
        std::vector<Term> items;
        while (!at(TokenKind::RBracket)) {
          if (at(TokenKind::End)) fail("unterminated tuple", {"]"});
          items.push_back(parse_term());
          if (at(TokenKind::Comma)) next();
        }
        next();
        return Term::tuple(std::move(items));
      }
      case TokenKind::LParen: return parse_paren();
      case TokenKind::Ident: {
        next();
        if (t.text == "always") return Term::stage_const(true);
        if (t.text == "never") return Term::stage_const(false);
        if (t.text == "true") return Term::boolean(true);
        if (t.text == "false") return Term::boolean(false);
        Identifier id = parse_identifier(t.text);
        if ((t.text == "if" || t.text == "exit") && !is_bound(id)) return Term::builtin(t.text);
        return Term::var(id);
      }
      default: fail("expected a term", {"identifier", "literal", "[", "("});
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::vector<Identifier> bound_;
  Identifier current_stage_;
  unsigned stage_counter_ = 0;
};

}  // namespace

ParseError::ParseError(int line, int column, std::string message, std::vector<std::string> expected)
    : std::runtime_error(format_error(line, column, message)),
      line_(line),
      column_(column),
      message_(std::move(message)),
      expected_(std::move(expected)) {}

std::vector<Token> tokenize(const SourceProgram& src) { return Lexer(src.text).run(); }

Term parse_program(const SourceProgram& src) { return Parser(tokenize(src)).program(); }

Body parse_body(const SourceProgram& src) { return Parser(tokenize(src)).bare_body(); }

std::vector<Definition> parse_definitions(const SourceProgram& src) {
  return Parser(tokenize(src)).definitions();
}

HostExpr parse_host_expr(const std::string& text, int line, int column) {
  return HostParser(text, line, column).run();
}

Term link_program(const std::vector<Definition>& defs, const Term& program) {
  if (!program.is(TermKind::Lambda) || !program.as_lambda().params.empty())
    throw std::invalid_argument("link_program expects a parsed program");
  const auto& top = program.as_lambda();
  // Fresh stage parameters for the definition levels, clear of every name in sight.
  IdList in_use = program.free_vars();
  in_use = unite(in_use, {top.stage_param});
  for (const auto& d : defs) in_use = unite(in_use, unite(d.value.free_vars(), {d.name}));
  std::vector<Identifier> stages;
  for (std::size_t i = 0; i <= defs.size(); ++i) {
    Identifier y = fresh_name(Identifier{"_link"}, in_use);
    in_use = unite(in_use, {y});
    stages.push_back(y);
  }
  // stages[i] is the stage parameter under which definition i is introduced;
  // the innermost binder reuses the program's own stage parameter.
  Body body = top.body;
  Identifier inner_stage = top.stage_param;
  for (std::size_t i = defs.size(); i-- > 0;) {
    const auto& d = defs[i];
    StageExpr stage = StageExpr::var(stages[i]);
    if (d.kind == Definition::Kind::Let) {
      body = Body::apply(stage, Term::lambda({{d.name, false}}, inner_stage, body), {{d.value, false}});
    } else {
      body = Body::fix(stage, d.name, inner_stage, d.value, body);
    }
    inner_stage = stages[i];
  }
  return Term::lambda({}, inner_stage, body);
}

}  // namespace stagecraft
