#include <gtest/gtest.h>

#include "fdcert/error.hpp"
#include "fdcert/text_format.hpp"

namespace fdcert::textfmt {
namespace {

TEST(TextFormat, ParsesScalarsTablesAndArrays) {
  const auto doc = parse(R"(# model
kind = "fault_detection"
dt = 0.05
flag = true

[plant]
A = [
  [1, 2],   # first row
  [3, 4e-1],
]
v = [1, -2.5, 1_000]

[plant.params]
g = 9.81

[[item]]
id = 1
[[item.sub]]
x = 1
[[item]]
id = 2
)");
  EXPECT_EQ(doc.at("kind").as_string(), "fault_detection");
  EXPECT_DOUBLE_EQ(doc.at("dt").as_number(), 0.05);
  EXPECT_TRUE(doc.at("flag").as_bool());
  const auto& plant = doc.at("plant").as_table();
  const Matrix a = plant.at("A").as_matrix();
  EXPECT_EQ(a.rows(), 2u);
  EXPECT_DOUBLE_EQ(a(1, 1), 0.4);
  EXPECT_EQ(plant.at("v").as_vector(), (Vector{1, -2.5, 1000}));
  EXPECT_DOUBLE_EQ(plant.at("params").as_table().at("g").as_number(), 9.81);
  const auto& items = doc.at("item").as_array();
  ASSERT_EQ(items.size(), 2u);
  EXPECT_EQ(items[0].as_table().at("sub").as_array().size(), 1u);
  EXPECT_EQ(items[1].as_table().at("id").as_int(), 2);
}

TEST(TextFormat, ErrorsCarryLineNumbers) {
  try {
    parse("a = 1\nb = [1, 2\nc = 3\n");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  try {
    parse("a = 1\n\nb = 1.2.3\n");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(parse("a = 1\na = 2\n"), ParseError);
  EXPECT_THROW(parse("[a\n"), ParseError);
  EXPECT_THROW(parse("s = \"open\n"), ParseError);
}

TEST(TextFormat, RaggedMatrixRejected) {
  const auto doc = parse("M = [[1, 2], [3]]\n");
  EXPECT_THROW(doc.at("M").as_matrix(), ParseError);
}

TEST(TextFormat, RoundTripIsExact) {
  Table root;
  root.set("name", "loop \"x\"");
  root.set("third", 1.0 / 3.0);
  root.set("tiny", -1.2345678901234567e-300);
  Table sub;
  sub.set("Q", matrix_value(Matrix{{0.1, 0.2}, {0.2, 1e17}}));
  sub.set("vars", strings_value({"x", "u"}));
  root.set("sub", Value(sub));
  Array arr;
  for (int i = 0; i < 2; ++i) {
    Table t;
    t.set("id", i);
    t.set("empty", Array{});
    arr.emplace_back(t);
  }
  root.set("obligation", Value(arr));

  const std::string text = emit(root);
  const Table back = parse(text);
  EXPECT_EQ(back.at("name").as_string(), "loop \"x\"");
  EXPECT_EQ(back.at("third").as_number(), 1.0 / 3.0);
  EXPECT_EQ(back.at("tiny").as_number(), -1.2345678901234567e-300);
  EXPECT_EQ(back.at("sub").as_table().at("Q").as_matrix(), (Matrix{{0.1, 0.2}, {0.2, 1e17}}));
  EXPECT_EQ(back.at("obligation").as_array().size(), 2u);
  EXPECT_EQ(emit(back), text);
}

TEST(TextFormat, SeventeenSignificantDigits) {
  EXPECT_EQ(format_number(0.1), "0.10000000000000001");
  EXPECT_EQ(format_number(1.0), "1");
  EXPECT_EQ(format_number(0.0), "0");
  EXPECT_THROW(format_number(std::numeric_limits<double>::infinity()), InputError);
}

}  // namespace
}  // namespace fdcert::textfmt
