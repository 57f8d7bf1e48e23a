#include <doctest.h>

#include "compadapt/fuzz.hpp"
#include "compadapt/textio.hpp"

using namespace compadapt;

TEST_CASE("basic compensable parses") {
  CHECK(parse_comp("<0>")->kind == Comp::Kind::Protected);
  CompPtr p = parse_comp("t[a.0, ~b.0] | ~t.0");
  REQUIRE(p->kind == Comp::Kind::Par);
  CHECK(p->a->kind == Comp::Kind::Trans);
  CHECK(p->b->kind == Comp::Kind::Out);
  CHECK(comp_equal(parse_comp("a"), parse_comp("a.0")));
  CHECK(parse_comp("inst(X => a.0).b.0")->kind == Comp::Kind::Inst);
  CHECK(parse_comp("!a.0")->kind == Comp::Kind::Repl);
  CHECK(parse_comp("new a. a.0 | b.0")->kind == Comp::Kind::Restrict);
}

TEST_CASE("well-formedness is enforced after parsing") {
  CHECK_THROWS_AS(parse_comp("a.<0>"), ParseError);
  CHECK_THROWS_AS(parse_comp("a.t[0, 0]"), ParseError);
  CHECK_NOTHROW(parse_comp("a.inst(X => 0).0"));
}

TEST_CASE("errors carry positions") {
  try {
    parse_comp("a.b || c");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line == 1);
    CHECK(e.column > 1);
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
  }
  try {
    parse_comp("a.\n  $l.t.0");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line == 2);
  }
}

TEST_CASE("reserved names: rejected in comp, accepted in adapt") {
  CHECK_THROWS_AS(parse_comp("$l.t.0"), ParseError);
  AdaptPtr a = parse_adapt("$l.t.$k.t.0");
  REQUIRE(a->kind == Adapt::Kind::In);
  CHECK(a->name == reserved(ReservedKind::L, Name("t")));
  CHECK(a->a->name == reserved(ReservedKind::K, Name("t")));
  AdaptPtr loc = parse_adapt("$p.t,\xce\xb5[0]");
  CHECK(loc->name == reserved(ReservedKind::P, Path{Name("t")}));
}

TEST_CASE("adaptable parses") {
  CHECK(parse_adapt("l[a.0]")->kind == Adapt::Kind::Loc);
  AdaptPtr u = parse_adapt("upd l(X => X | X).r.0");
  REQUIRE(u->kind == Adapt::Kind::Upd);
  CHECK(u->var == ProcVar("X"));
  CHECK_THROWS_AS(parse_adapt("<0>"), ParseError);
  CHECK_THROWS_AS(parse_adapt("inst(X => 0).0"), ParseError);
  CHECK_THROWS_AS(parse_adapt("t[a.0, b.0]"), ParseError);
}

TEST_CASE("comments and whitespace") {
  CompPtr p = parse_comp("# a transaction\n t[a.0, # default\n    b.0] \n");
  CHECK(p->kind == Comp::Kind::Trans);
}

TEST_CASE("printing round-trips through the parser") {
  const char* samples[] = {
      "t[a.0, ~b.0] | ~t.0", "<a.b.0> | new c. (c.0 | ~c.0)",
      "inst(X => a.0 | X).b.0", "!(a.0 | b.0)", "t[s[a.0, b.0] | <c.0>, d.0]"};
  for (const char* s : samples) {
    CompPtr p = parse_comp(s);
    CHECK(congruent(parse_comp(print_comp(p)), p));
  }
  const char* asamples[] = {"l[a.0] | upd l(X => X).0", "new a. (a.0 | ~a.b.0)",
                            "$p.\xce\xb5[upd $z.t,\xce\xb5(Y => Y).0]"};
  for (const char* s : asamples) {
    AdaptPtr p = parse_adapt(s);
    CHECK(congruent(parse_adapt(print_adapt(p)), p));
  }
}

TEST_CASE("normalized terms re-parse exactly") {
  GenConfig cfg;
  cfg.seed = 3;
  cfg.allow_dynamic = true;
  for (int i = 0; i < 500; ++i) {
    CompPtr p = normalize(gen_term(cfg, static_cast<std::uint64_t>(i)));
    CHECK(comp_equal(parse_comp(print_comp(p)), p));
  }
  GenConfig acfg;
  acfg.seed = 4;
  acfg.max_size = 10;
  for (int i = 0; i < 500; ++i) {
    AdaptPtr p = normalize(gen_adapt_term(acfg, static_cast<std::uint64_t>(i)));
    CHECK(adapt_equal(parse_adapt(print_adapt(p)), p));
  }
}

TEST_CASE("path parsing") {
  CHECK(parse_path("").empty());
  CHECK(parse_path("\xce\xb5").empty());
  CHECK(parse_path("eps").empty());
  Path p = parse_path("t1,t2");
  REQUIRE(p.size() == 2);
  CHECK(p[0] == Name("t1"));
  Path q = parse_path("t1,t2,\xce\xb5");
  CHECK(q == p);
  CHECK_THROWS_AS(parse_path("$l.t"), UsageError);
}
