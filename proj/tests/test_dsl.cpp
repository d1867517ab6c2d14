#include <catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "stagecraft/prelude.hpp"
#include "support.hpp"

using namespace stagecraft;
using testing::fixture;
using testing::parse;

namespace {

std::string events(const std::string& text, EventOrder order) {
  return to_string(emit_events(parse_arith(text), order));
}

Term expected_arith_residual() { return parse(fixture("arith_residual.dcps")).as_lambda().body.as_apply().callee; }

Number exec(const Term& residual) {
  Term v = execute_residual(residual);
  REQUIRE(v.is(TermKind::Literal));
  return v.as_literal().number();
}

}  // namespace

TEST_CASE("parse_arith examples", "[dsl]") {
  CHECK(to_string(parse_arith("1+4*2+3")) == "((1+(4*2))+3)");
  CHECK(to_string(parse_arith("2*(3+4)")) == "(2*(3+4))");
  CHECK(to_string(parse_arith("8-3-2")) == "((8-3)-2)");
  CHECK(to_string(parse_arith("8/4/2")) == "((8/4)/2)");
  CHECK(to_string(parse_arith("x = 2+3;\n x*x")) == "x = (2+3); (x*x)");
  CHECK(to_string(parse_arith("matmul(A, B,C)")) == "matmul(A, B, C)");
  try {
    parse_arith("1+");
    FAIL("expected a syntax error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
    CHECK(e.column() == 3);
  }
  try {
    parse_arith("x = 1;\n(x + ) ");
    FAIL("expected a syntax error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() == 6);
  }
  CHECK_THROWS_AS(parse_arith("1 $ 2"), ParseError);
  CHECK_THROWS_AS(parse_arith("(1+2"), ParseError);
  CHECK_THROWS_AS(parse_arith("matmul()"), ParseError);
}

TEST_CASE("emit_events examples", "[dsl]") {
  CHECK(events("1+4*2+3", EventOrder::Postfix) == "start 1 4 2 mul add 3 add end");
  CHECK(events("1+4*2+3", EventOrder::Prefix) == "start add add 1 mul 4 2 3 end");
  CHECK(events("7", EventOrder::Postfix) == "start 7 end");
  CHECK(events("7", EventOrder::Prefix) == "start 7 end");
  CHECK(events("x = 1; x", EventOrder::Prefix) == "start bind:x 1 reference:x end");
  MatrixTable table{{"A", {2, 3, "A"}}, {"B", {3, 4, "B"}}};
  CHECK(to_string(emit_events(parse_arith("matmul(A, B)"), EventOrder::Prefix, &table)) ==
        "start mulStart mulNext matrix:A[2x3] mulNext matrix:B[3x4] mulEnd end");
  CHECK_THROWS_AS(emit_events(parse_arith("matmul(A, Z)"), EventOrder::Prefix, &table), DslError);
}

TEST_CASE("event positions point into the source", "[dsl]") {
  auto ev = emit_events(parse_arith("1 +\n  y"), EventOrder::Postfix);
  REQUIRE(ev.size() == 5);
  CHECK(ev[2].kind == ActionEvent::Kind::Reference);
  CHECK(ev[2].pos == SourcePos{2, 3});
  CHECK(ev[3].pos == SourcePos{1, 3});
}

TEST_CASE("run_immediate examples", "[dsl]") {
  auto imm = [](const std::string& s) { return run_immediate(events_for(s, Pipeline::Immediate)); };
  CHECK(imm("1+4*2+3") == 12);
  CHECK(imm("7") == 7);
  CHECK(imm("10-2*3") == 4);
  CHECK(imm("100/8") == Number(25) / 2);
  // A stream that pops more than it pushed.
  std::vector<ActionEvent> bad = events_for("7", Pipeline::Immediate);
  bad.insert(bad.end() - 1, ActionEvent{ActionEvent::Kind::Add, {}, {}, {}, {}});
  CHECK_THROWS(run_immediate(bad));
}

TEST_CASE("pipelines agree with the expected residual", "[dsl][reference]") {
  for (Pipeline p : {Pipeline::Staged, Pipeline::Stack, Pipeline::Ast}) {
    BuildResult b = build_program(events_for("1+4*2+3", p), p);
    INFO(to_string(p) << ": " << print_term(b.residual_lambda));
    CHECK(alpha_equivalent(b.residual_lambda, expected_arith_residual()));
    CHECK(exec(b.residual_lambda) == 12);
  }
  BuildResult leaf = build_program(events_for("7", Pipeline::Ast), Pipeline::Ast);
  CHECK(print_body(leaf.residual) == "'@pt:' exit 7");
  CHECK(instruction_count(leaf.residual) == 1);
}

TEST_CASE("simple pipeline keeps the builder layers", "[dsl]") {
  BuildResult b = build_program(events_for("1+4*2+3", Pipeline::Simple), Pipeline::Simple);
  CHECK(exec(b.residual_lambda) == 12);
  CHECK_FALSE(testing::check_residual(b.residual_lambda).pure);
  CHECK(instruction_count(b.residual) != 4);
}

TEST_CASE("pipeline metadata", "[dsl]") {
  CHECK(pipeline_info(Pipeline::Immediate).prelude == PreludeVariant::None);
  CHECK(pipeline_info(Pipeline::Stack).order == EventOrder::Postfix);
  CHECK(pipeline_info(Pipeline::Ast).order == EventOrder::Prefix);
  CHECK(parse_pipeline("ast") == Pipeline::Ast);
  CHECK_THROWS_AS(parse_pipeline("tree"), DslError);
  CHECK_THROWS_AS(build_program(events_for("1", Pipeline::Immediate), Pipeline::Immediate), DslError);
  CHECK_THROWS_AS(driver_source(events_for("x = 1; x", Pipeline::Env), Pipeline::Stack), DslError);
}

TEST_CASE("name binding", "[dsl]") {
  BuildResult sq = run_env_example(events_for("x = 2+3; x*x", Pipeline::Env));
  CHECK(instruction_count(sq.residual) == 3);
  CHECK(testing::count_host_ops(sq.residual, "+") == 1);
  CHECK(testing::count_host_ops(sq.residual, "*") == 1);
  CHECK(testing::count_host_ops(sq.residual, "map") == 0);
  CHECK(testing::check_residual(sq.residual_lambda).pure);
  CHECK(exec(sq.residual_lambda) == 25);

  BuildResult four = run_env_example(events_for("x = 4; x", Pipeline::Env));
  CHECK(print_body(four.residual) == "'@pt:' exit 4");

  try {
    run_env_example(events_for("x = 1;\ny * x", Pipeline::Env));
    FAIL("expected an unbound name");
  } catch (const DslError& e) {
    CHECK(std::string(e.what()).find("unbound name y") != std::string::npos);
    REQUIRE(e.pos());
    CHECK(*e.pos() == SourcePos{2, 1});
  }
}

TEST_CASE("matrix chains", "[dsl]") {
  BuildResult abc = run_matmul_example(parse_chain(testing::slurp(std::string(STAGECRAFT_SOURCE_DIR) +
                                                                  "/corpus/abc.chain")));
  CHECK(testing::count_host_ops(abc.residual, "*") == 2);
  CHECK(testing::residual_mul_order(abc.residual, {"A", "B", "C"}) == MulOrder{0, 0});
  CHECK(testing::check_residual(abc.residual_lambda).pure);

  BuildResult one = run_matmul_example({{4, 5, "A"}});
  CHECK(print_body(one.residual) == "'@pt:' exit A");

  CHECK_THROWS_AS(parse_chain("10 30 A\n5 60 C\n"), DslError);
  CHECK_THROWS_AS(parse_chain("10 A\n"), DslError);
  CHECK(parse_chain("# comment\n\n2 3 A # trailing\n").size() == 1);
}

TEST_CASE("property: stack and ast residuals agree and match direct evaluation", "[dsl][property]") {
  std::mt19937 rng(41);
  for (int i = 0; i < 60; ++i) {
    ArithExpr tree = testing::random_tree(rng, 1 + i % 6);
    INFO(to_string(tree));
    BuildResult s = build_program(emit_events(tree, EventOrder::Postfix), Pipeline::Stack);
    BuildResult a = build_program(emit_events(tree, EventOrder::Prefix), Pipeline::Ast);
    CHECK(alpha_equivalent(s.residual_lambda, a.residual_lambda));
    Number direct = testing::eval_direct(tree);
    CHECK(exec(s.residual_lambda) == direct);
    CHECK(run_immediate(emit_events(tree, EventOrder::Postfix)) == direct);
    CHECK(testing::check_residual(s.residual_lambda).pure);
  }
}

TEST_CASE("property: action definition order does not change the residual", "[dsl][property]") {
  std::mt19937 rng(42);
  auto events = events_for("(1+2)*3-4", Pipeline::Stack);
  Term reference = build_program(events, Pipeline::Stack).residual_lambda;
  auto defs = load_prelude(PreludeVariant::Universal);
  auto actions = parse_definitions({testing::slurp(dsl_dir() + "/stack.dcps")});
  for (int i = 0; i < 5; ++i) {
    std::shuffle(actions.begin(), actions.end(), rng);
    auto all = defs;
    all.insert(all.end(), actions.begin(), actions.end());
    Term program = link_program(all, parse_program({driver_source(events, Pipeline::Stack)}));
    CHECK(alpha_equivalent(residual_lambda(run(program)), reference));
  }
}
