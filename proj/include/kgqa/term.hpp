// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace kgqa {

/// Freebase-style node identifier such as "m.01abcd". Predicates share the
/// representation when bound to a variable.
struct EntityId {
  std::string id;

  friend auto operator<=>(const EntityId&, const EntityId&) = default;
};

enum class LiteralKind { text, integer, floating, datetime };

std::string_view to_string(LiteralKind kind);

/// A literal value. `value` holds the kind-canonical lexical form: integers
/// and floats are re-printed, datetimes and text are kept verbatim.
struct Literal {
  std::string value;
  LiteralKind kind = LiteralKind::text;

  friend auto operator<=>(const Literal&, const Literal&) = default;

  static Literal text(std::string v) { return {std::move(v), LiteralKind::text}; }
  static Literal integer(long long v);
  static Literal floating(double v);
  /// Throws InvalidArgument if `v` does not parse under `kind`.
  static Literal make(std::string_view v, LiteralKind kind);
  /// Infers integer / float / ISO-8601 datetime, falling back to text.
  static Literal infer(std::string_view raw);
};

/// Node value: an entity or a literal.
using Value = std::variant<EntityId, Literal>;

inline bool is_entity(const Value& v) { return std::holds_alternative<EntityId>(v); }

/// Canonical string used for answer comparison and lexicographic ordering.
const std::string& value_string(const Value& v);

bool looks_like_entity_id(std::string_view s);

std::optional<long long> parse_integer(std::string_view s);
std::optional<double> parse_float(std::string_view s);

/// Seconds since 1970-01-01T00:00:00Z plus fractional part, for chronological
/// comparison. Accepts YYYY, YYYY-MM, YYYY-MM-DD and full date-times with
/// optional fraction and zone offset.
std::optional<long double> parse_datetime(std::string_view s);

enum class CompareOp { eq, ne, lt, le, gt, ge };

std::string_view to_string(CompareOp op);

/// Filter comparison. Numbers compare numerically, datetimes chronologically,
/// text and entity ids lexicographically; any cross-kind pair is false.
bool compare_values(const Value& lhs, CompareOp op, const Value& rhs);

/// Total preorder used by ORDER BY: entities < numbers < datetimes < text,
/// same-kind values by their natural order.
std::weak_ordering order_values(const Value& lhs, const Value& rhs);

}  // namespace kgqa
