// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "kgqa/errors.hpp"
#include "kgqa/term.hpp"

using namespace kgqa;

TEST(LiteralTest, InfersKinds) {
  EXPECT_EQ(Literal::infer("42").kind, LiteralKind::integer);
  EXPECT_EQ(Literal::infer("-7").value, "-7");
  EXPECT_EQ(Literal::infer("007").value, "7");
  EXPECT_EQ(Literal::infer("1.70").kind, LiteralKind::floating);
  EXPECT_EQ(Literal::infer("1.70").value, "1.7");
  EXPECT_EQ(Literal::infer("2e3").kind, LiteralKind::floating);
  EXPECT_EQ(Literal::infer("1944-02-09").kind, LiteralKind::datetime);
  EXPECT_EQ(Literal::infer("2009-06-01T12:30:00Z").kind, LiteralKind::datetime);
  // A bare year stays an integer.
  EXPECT_EQ(Literal::infer("1982").kind, LiteralKind::integer);
  EXPECT_EQ(Literal::infer("novelist").kind, LiteralKind::text);
  EXPECT_EQ(Literal::infer("1944-13-01").kind, LiteralKind::text);
}

TEST(LiteralTest, FloatCanonicalFormKeepsAFractionMarker) {
  EXPECT_EQ(Literal::floating(5.0).value, "5.0");
  EXPECT_EQ(Literal::make("5", LiteralKind::floating).value, "5.0");
  EXPECT_THROW(Literal::make("abc", LiteralKind::integer), InvalidArgument);
  EXPECT_EQ(Literal::make("1908", LiteralKind::datetime).kind, LiteralKind::datetime);
}

TEST(CompareTest, NumericAcrossIntegerAndFloat) {
  EXPECT_TRUE(compare_values(Literal::integer(5), CompareOp::eq, Literal::floating(5.0)));
  EXPECT_TRUE(compare_values(Literal::integer(10), CompareOp::gt, Literal::integer(9)));
  // Numeric, not lexicographic.
  EXPECT_TRUE(compare_values(Literal::integer(10), CompareOp::gt, Literal::integer(9)));
  EXPECT_TRUE(compare_values(Literal::floating(1.7), CompareOp::ge, Literal::floating(1.7)));
}

TEST(CompareTest, DatetimesChronological) {
  auto a = Literal::make("1946-12-18", LiteralKind::datetime);
  auto b = Literal::make("1950-01-01T00:00:00Z", LiteralKind::datetime);
  auto c = Literal::make("1980", LiteralKind::datetime);
  EXPECT_TRUE(compare_values(a, CompareOp::lt, b));
  EXPECT_TRUE(compare_values(c, CompareOp::gt, b));
  auto zoned = Literal::make("2000-01-01T02:00:00+02:00", LiteralKind::datetime);
  auto utc = Literal::make("2000-01-01T00:00:00Z", LiteralKind::datetime);
  EXPECT_TRUE(compare_values(zoned, CompareOp::eq, utc));
}

TEST(CompareTest, CrossKindComparisonsFail) {
  Value text = Literal::text("1000");
  Value number = Literal::integer(1000);
  Value entity = EntityId{"m.01"};
  for (auto op : {CompareOp::eq, CompareOp::ne, CompareOp::lt, CompareOp::ge}) {
    EXPECT_FALSE(compare_values(text, op, number));
    EXPECT_FALSE(compare_values(entity, op, number));
  }
  EXPECT_TRUE(compare_values(entity, CompareOp::ne, Value{EntityId{"m.02"}}));
}

TEST(CompareTest, OrderPlacesKindsInFixedRanks) {
  EXPECT_TRUE(order_values(EntityId{"m.zz"}, Literal::integer(1)) < 0);
  EXPECT_TRUE(order_values(Literal::integer(2), Literal::floating(2.5)) < 0);
  EXPECT_TRUE(order_values(Literal::integer(2), Literal::make("1900", LiteralKind::datetime)) < 0);
  EXPECT_TRUE(order_values(Literal::make("1900", LiteralKind::datetime), Literal::text("a")) < 0);
}
