// SPDX-License-Identifier: Apache-2.0
#include "kgqa/term.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>

#include "kgqa/errors.hpp"

namespace kgqa {

std::string_view to_string(LiteralKind kind) {
  switch (kind) {
    case LiteralKind::text: return "text";
    case LiteralKind::integer: return "integer";
    case LiteralKind::floating: return "float";
    case LiteralKind::datetime: return "datetime";
  }
  return "text";
}

std::string_view to_string(CompareOp op) {
  switch (op) {
    case CompareOp::eq: return "=";
    case CompareOp::ne: return "!=";
    case CompareOp::lt: return "<";
    case CompareOp::le: return "<=";
    case CompareOp::gt: return ">";
    case CompareOp::ge: return ">=";
  }
  return "=";
}

std::optional<long long> parse_integer(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::size_t start = 0;
  if (s[0] == '+' || s[0] == '-') start = 1;
  if (start == s.size()) return std::nullopt;
  for (std::size_t i = start; i < s.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return std::nullopt;
  }
  long long out = 0;
  std::string_view digits = s[0] == '+' ? s.substr(1) : s;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), out);
  if (ec != std::errc{} || ptr != digits.data() + digits.size()) return std::nullopt;
  return out;
}

std::optional<double> parse_float(std::string_view s) {
  // [+-]? (d+ '.' d* | '.' d+ | d+) ([eE] [+-]? d+)?
  std::size_t i = 0;
  auto digits = [&] {
    std::size_t n = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i, ++n;
    return n;
  };
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
  std::size_t mantissa = digits();
  if (i < s.size() && s[i] == '.') {
    ++i;
    mantissa += digits();
  }
  if (mantissa == 0) return std::nullopt;
  if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
    ++i;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
    if (digits() == 0) return std::nullopt;
  }
  if (i != s.size()) return std::nullopt;
  std::string_view body = s[0] == '+' ? s.substr(1) : s;
  double out = 0;
  auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), out);
  if (ec != std::errc{} || ptr != body.data() + body.size()) return std::nullopt;
  return out;
}

namespace {

bool read_fixed(std::string_view s, std::size_t& pos, std::size_t width, int& out) {
  if (pos + width > s.size()) return false;
  int v = 0;
  for (std::size_t k = 0; k < width; ++k) {
    char c = s[pos + k];
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    v = v * 10 + (c - '0');
  }
  pos += width;
  out = v;
  return true;
}

// Days from civil, proleptic Gregorian (Howard Hinnant's algorithm).
long long days_from_civil(long long y, unsigned m, unsigned d) {
  y -= m <= 2;
  const long long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long long>(doe) - 719468;
}

}  // namespace

std::optional<long double> parse_datetime(std::string_view s) {
  std::size_t pos = 0;
  bool negative = false;
  if (!s.empty() && s[0] == '-') {
    negative = true;
    pos = 1;
  }
  int year = 0, month = 1, day = 1, hour = 0, minute = 0, second = 0;
  if (!read_fixed(s, pos, 4, year)) return std::nullopt;
  if (pos < s.size()) {
    if (s[pos] != '-') return std::nullopt;
    ++pos;
    if (!read_fixed(s, pos, 2, month) || month < 1 || month > 12) return std::nullopt;
  }
  if (pos < s.size() && s[pos] == '-') {
    ++pos;
    if (!read_fixed(s, pos, 2, day) || day < 1 || day > 31) return std::nullopt;
  }
  long double frac = 0;
  int offset_minutes = 0;
  if (pos < s.size() && (s[pos] == 'T' || s[pos] == ' ')) {
    ++pos;
    if (!read_fixed(s, pos, 2, hour) || hour > 24) return std::nullopt;
    if (pos >= s.size() || s[pos] != ':') return std::nullopt;
    ++pos;
    if (!read_fixed(s, pos, 2, minute) || minute > 59) return std::nullopt;
    if (pos < s.size() && s[pos] == ':') {
      ++pos;
      if (!read_fixed(s, pos, 2, second) || second > 60) return std::nullopt;
      if (pos < s.size() && s[pos] == '.') {
        ++pos;
        long double scale = 0.1L;
        std::size_t n = 0;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
          frac += scale * (s[pos] - '0');
          scale /= 10;
          ++pos;
          ++n;
        }
        if (n == 0) return std::nullopt;
      }
    }
    if (pos < s.size()) {
      if (s[pos] == 'Z') {
        ++pos;
      } else if (s[pos] == '+' || s[pos] == '-') {
        int sign = s[pos] == '-' ? -1 : 1;
        ++pos;
        int oh = 0, om = 0;
        if (!read_fixed(s, pos, 2, oh)) return std::nullopt;
        if (pos < s.size() && s[pos] == ':') ++pos;
        if (!read_fixed(s, pos, 2, om)) return std::nullopt;
        offset_minutes = sign * (oh * 60 + om);
      }
    }
  }
  if (pos != s.size()) return std::nullopt;
  long long y = negative ? -year : year;
  long long days = days_from_civil(y, static_cast<unsigned>(month), static_cast<unsigned>(day));
  long double secs = static_cast<long double>(days) * 86400.0L + hour * 3600.0L +
                     minute * 60.0L + second - offset_minutes * 60.0L;
  return secs + frac;
}

Literal Literal::integer(long long v) { return {std::to_string(v), LiteralKind::integer}; }

Literal Literal::floating(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  std::string out(buf.data(), ptr);
  if (std::isfinite(v) && out.find_first_of(".eE") == std::string::npos) out += ".0";
  return {std::move(out), LiteralKind::floating};
}

Literal Literal::make(std::string_view v, LiteralKind kind) {
  switch (kind) {
    case LiteralKind::text:
      return text(std::string(v));
    case LiteralKind::integer:
      if (auto i = parse_integer(v)) return integer(*i);
      break;
    case LiteralKind::floating:
      if (auto f = parse_float(v)) return floating(*f);
      break;
    case LiteralKind::datetime:
      if (parse_datetime(v)) return {std::string(v), LiteralKind::datetime};
      break;
  }
  throw InvalidArgument("literal '" + std::string(v) + "' does not parse as " +
                        std::string(to_string(kind)));
}

Literal Literal::infer(std::string_view raw) {
  if (auto i = parse_integer(raw)) return integer(*i);
  if (auto f = parse_float(raw)) return floating(*f);
  if (parse_datetime(raw)) return {std::string(raw), LiteralKind::datetime};
  return text(std::string(raw));
}

const std::string& value_string(const Value& v) {
  if (const auto* e = std::get_if<EntityId>(&v)) return e->id;
  return std::get<Literal>(v).value;
}

bool looks_like_entity_id(std::string_view s) {
  return s.size() > 2 && (s[0] == 'm' || s[0] == 'g') && s[1] == '.';
}

namespace {

bool is_numeric(LiteralKind k) { return k == LiteralKind::integer || k == LiteralKind::floating; }

// Same-kind comparison; nullopt when kinds are incomparable.
std::optional<std::partial_ordering> compare_same_kind(const Value& lhs, const Value& rhs) {
  const auto* le = std::get_if<EntityId>(&lhs);
  const auto* re = std::get_if<EntityId>(&rhs);
  if (le || re) {
    if (le && re) return le->id <=> re->id;
    return std::nullopt;
  }
  const auto& a = std::get<Literal>(lhs);
  const auto& b = std::get<Literal>(rhs);
  if (is_numeric(a.kind) && is_numeric(b.kind)) {
    if (a.kind == LiteralKind::integer && b.kind == LiteralKind::integer) {
      return *parse_integer(a.value) <=> *parse_integer(b.value);
    }
    return *parse_float(a.value) <=> *parse_float(b.value);
  }
  if (a.kind != b.kind) return std::nullopt;
  if (a.kind == LiteralKind::datetime) {
    return *parse_datetime(a.value) <=> *parse_datetime(b.value);
  }
  return a.value <=> b.value;
}

int kind_rank(const Value& v) {
  if (is_entity(v)) return 0;
  switch (std::get<Literal>(v).kind) {
    case LiteralKind::integer:
    case LiteralKind::floating: return 1;
    case LiteralKind::datetime: return 2;
    case LiteralKind::text: return 3;
  }
  return 3;
}

}  // namespace

bool compare_values(const Value& lhs, CompareOp op, const Value& rhs) {
  auto cmp = compare_same_kind(lhs, rhs);
  if (!cmp || *cmp == std::partial_ordering::unordered) return false;
  switch (op) {
    case CompareOp::eq: return *cmp == 0;
    case CompareOp::ne: return *cmp != 0;
    case CompareOp::lt: return *cmp < 0;
    case CompareOp::le: return *cmp <= 0;
    case CompareOp::gt: return *cmp > 0;
    case CompareOp::ge: return *cmp >= 0;
  }
  return false;
}

std::weak_ordering order_values(const Value& lhs, const Value& rhs) {
  int ra = kind_rank(lhs), rb = kind_rank(rhs);
  if (ra != rb) return ra <=> rb;
  auto cmp = compare_same_kind(lhs, rhs);
  if (!cmp || *cmp == std::partial_ordering::unordered) return std::weak_ordering::equivalent;
  if (*cmp < 0) return std::weak_ordering::less;
  if (*cmp > 0) return std::weak_ordering::greater;
  return std::weak_ordering::equivalent;
}

}  // namespace kgqa
