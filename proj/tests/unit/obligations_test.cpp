#include <gtest/gtest.h>

#include <random>

#include "fdcert/error.hpp"
#include "fdcert/obligations.hpp"
#include "random_matrices.hpp"

namespace fdcert {
namespace {

ObligationSet sample_set() {
  std::mt19937_64 rng(11);
  ObligationSet s;
  s.program = "demo";
  s.invariants.push_back({"loop", "", "invariant", {{"x[0]", "x[1]"}, testing::random_spd(rng, 2)}});
  s.invariants.push_back({"input_bound", "", "assumption", {{"u"}, SymMatrix{{0.25}}}});
  Obligation o;
  o.id = "O1";
  o.tactic = Tactic::SProcedure;
  o.kind = ObligationKind::Step;
  o.label = "update";
  o.in_vars = {"x[0]", "x[1]", "u"};
  o.out_vars = {"x_next[0]", "x_next[1]"};
  o.T = testing::random_matrix(rng, 2, 3);
  o.b = {0.0, 0.0};
  o.pre = {{"invariant:loop", s.invariants[0].set}, {"assume:input_bound", s.invariants[1].set}};
  o.rule = "bounded_input";
  o.alpha = 1.0 / 3.0;
  o.post = {{"x_next[0]", "x_next[1]"}, testing::random_spd(rng, 2)};
  o.assumptions = {{"y", "out"}};
  s.obligations.push_back(o);
  Obligation c;
  c.id = "O2";
  c.behavior = "nominal_ellipsoid";
  c.kind = ObligationKind::Closing;
  c.in_vars = {"x_next[0]"};
  c.out_vars = {"x[0]"};
  c.T = Matrix{{1.0}};
  c.b = {0.5};
  c.stacked = true;
  c.pre = {{"obligation:O1", {{"x_next[0]"}, SymMatrix{{2.0}}}}};
  c.post = {{"x_next[0]", "x[0]"}, SymMatrix{{2.0, 2.0}, {2.0, 2.0}}};
  c.post_source = "invariant:loop";
  s.obligations.push_back(c);
  return s;
}

void expect_same(const QForm& a, const QForm& b) {
  EXPECT_EQ(a.vars, b.vars);
  EXPECT_EQ(a.Q, b.Q);
}

TEST(Sidecar, RoundTripIsExact) {
  const ObligationSet s = sample_set();
  const ObligationSet r = parse_obligations(emit_obligations(s));
  EXPECT_EQ(r.program, "demo");
  ASSERT_EQ(r.invariants.size(), 2u);
  EXPECT_EQ(r.invariants[1].kind, "assumption");
  expect_same(r.invariants[0].set, s.invariants[0].set);
  ASSERT_EQ(r.obligations.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& a = s.obligations[i];
    const auto& b = r.obligations[i];
    EXPECT_EQ(a.id, b.id);
    EXPECT_EQ(a.behavior, b.behavior);
    EXPECT_EQ(a.tactic, b.tactic);
    EXPECT_EQ(a.kind, b.kind);
    EXPECT_EQ(a.in_vars, b.in_vars);
    EXPECT_EQ(a.out_vars, b.out_vars);
    EXPECT_TRUE(std::equal(a.T.data().begin(), a.T.data().end(), b.T.data().begin()));
    EXPECT_EQ(a.b, b.b);
    EXPECT_EQ(a.stacked, b.stacked);
    EXPECT_EQ(a.rule, b.rule);
    EXPECT_EQ(a.alpha, b.alpha);
    ASSERT_EQ(a.pre.size(), b.pre.size());
    for (std::size_t k = 0; k < a.pre.size(); ++k) {
      EXPECT_EQ(a.pre[k].source, b.pre[k].source);
      expect_same(a.pre[k].set, b.pre[k].set);
    }
    expect_same(a.post, b.post);
    EXPECT_EQ(a.post_source, b.post_source);
    ASSERT_EQ(a.assumptions.size(), b.assumptions.size());
  }
  EXPECT_EQ(emit_obligations(r), emit_obligations(s));
}

TEST(Sidecar, EmptySetRoundTrips) {
  ObligationSet s;
  s.program = "empty";
  const ObligationSet r = parse_obligations(emit_obligations(s));
  EXPECT_EQ(r.program, "empty");
  EXPECT_TRUE(r.invariants.empty());
  EXPECT_TRUE(r.obligations.empty());
}

TEST(Sidecar, LookupById) {
  const ObligationSet s = sample_set();
  ASSERT_NE(s.find("O2"), nullptr);
  EXPECT_EQ(s.find("O2")->label, "");
  EXPECT_EQ(s.find("O9"), nullptr);
  EXPECT_NE(s.find_invariant("loop"), nullptr);
}

TEST(Sidecar, DimensionMismatchReportsLine) {
  const std::string text = R"(program = "bad"

[[obligation]]
id = "O1"
tactic = "AffineEllipsoid"
in_vars = ["a", "b"]
out_vars = ["c"]
T = [[1, 2, 3]]
[obligation.post]
vars = ["c"]
Q = [[1]]
)";
  try {
    parse_obligations(text);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Sidecar, UnknownTacticRejected) {
  const std::string text = R"([[obligation]]
id = "O1"
tactic = "Magic"
in_vars = []
out_vars = []
[obligation.post]
vars = []
)";
  EXPECT_THROW(parse_obligations(text), ParseError);
}

TEST(Alias, ParseAndRename) {
  const Alias a = parse_alias(" xp ==  nominal_state ");
  EXPECT_EQ(a.from, "xp");
  EXPECT_EQ(a.to, "nominal_state");
  EXPECT_EQ(format_alias(a), "xp == nominal_state");
  EXPECT_EQ(rename("xp[4]", {a}), "nominal_state[4]");
  EXPECT_EQ(rename("xpx[4]", {a}), "xpx[4]");
  EXPECT_EQ(rename("xp", {a}), "nominal_state");
  EXPECT_THROW(parse_alias("xp = y"), InputError);
  EXPECT_THROW(parse_alias("== y"), InputError);
}

}  // namespace
}  // namespace fdcert
