// SPDX-License-Identifier: Apache-2.0
//
// Recursive-descent parser for the supported SPARQL subset:
//
//   query   := prefix* SELECT DISTINCT? (var+ | COUNT '(' DISTINCT? var ')')
//              WHERE '{' pattern ('.' pattern)* '.'? filter* '}' order? limit?
//   pattern := term term term
//   filter  := FILTER '(' var op value ')'
//   order   := ORDER BY (ASC|DESC) '(' var ')' | ORDER BY var
//   limit   := LIMIT int
//   prefix  := PREFIX name ':' '<' iri '>'

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

#include "kgqa/sparql.hpp"
#include "kgqa/text.hpp"

namespace kgqa::sparql {

namespace {

std::string join_expected(const std::vector<std::string>& expected) {
  std::string out;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (i) out += ", ";
    out += expected[i];
  }
  return out;
}

enum class Tok { word, var, pname, iri, string, number, punct, end };

struct Token {
  Tok kind = Tok::end;
  std::string text;    // word, var name, pname, iri body, string body, number, punct
  std::string suffix;  // string literals: "@lang" or "^^datatype" (raw)
  std::size_t pos = 0;
};

bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
         static_cast<unsigned char>(c) >= 0x80;
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t;
      t.pos = i_;
      if (i_ >= src_.size()) {
        out.push_back(t);
        return out;
      }
      char c = src_[i_];
      if (c == '?' || c == '$') {
        ++i_;
        std::size_t start = i_;
        while (i_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[i_])) || src_[i_] == '_')) ++i_;
        if (i_ == start) throw SyntaxError(t.pos, {"variable name"}, std::string(1, c));
        t.kind = Tok::var;
        t.text = std::string(src_.substr(start, i_ - start));
      } else if (c == '<' && looks_like_iri()) {
        std::size_t close = src_.find('>', i_);
        t.kind = Tok::iri;
        t.text = std::string(src_.substr(i_ + 1, close - i_ - 1));
        i_ = close + 1;
      } else if (c == '"' || c == '\'') {
        t.kind = Tok::string;
        t.text = read_string(c, t.pos);
        if (i_ < src_.size() && src_[i_] == '@') {
          std::size_t start = i_++;
          while (i_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[i_])) || src_[i_] == '-')) ++i_;
          t.suffix = std::string(src_.substr(start, i_ - start));
        } else if (src_.substr(i_).starts_with("^^")) {
          i_ += 2;
          std::size_t start = i_;
          if (i_ < src_.size() && src_[i_] == '<') {
            std::size_t close = src_.find('>', i_);
            if (close == std::string_view::npos) throw SyntaxError(i_, {"'>'"}, "end of input");
            i_ = close + 1;
          } else {
            while (i_ < src_.size() && (is_name_char(src_[i_]) || src_[i_] == ':')) ++i_;
          }
          t.suffix = "^^" + std::string(src_.substr(start, i_ - start));
        }
      } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                 ((c == '-' || c == '+' || c == '.') && i_ + 1 < src_.size() &&
                  std::isdigit(static_cast<unsigned char>(src_[i_ + 1])))) {
        std::size_t start = i_++;
        while (i_ < src_.size()) {
          char d = src_[i_];
          if (std::isdigit(static_cast<unsigned char>(d))) {
            ++i_;
          } else if (d == '.' && i_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i_ + 1]))) {
            ++i_;
          } else if ((d == 'e' || d == 'E') && i_ + 1 < src_.size()) {
            ++i_;
            if (src_[i_] == '+' || src_[i_] == '-') ++i_;
          } else {
            break;
          }
        }
        t.kind = Tok::number;
        t.text = std::string(src_.substr(start, i_ - start));
      } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t start = i_;
        while (i_ < src_.size() && is_name_char(src_[i_])) ++i_;
        if (i_ < src_.size() && src_[i_] == ':') {
          ++i_;
          // Local part may contain dots but not end in one.
          while (i_ < src_.size() && (is_name_char(src_[i_]) || src_[i_] == '.')) ++i_;
          while (src_[i_ - 1] == '.') --i_;
          t.kind = Tok::pname;
        } else {
          t.kind = Tok::word;
        }
        t.text = std::string(src_.substr(start, i_ - start));
      } else if (c == ':') {
        // Empty-prefix name.
        std::size_t start = i_++;
        while (i_ < src_.size() && (is_name_char(src_[i_]) || src_[i_] == '.')) ++i_;
        while (i_ > start + 1 && src_[i_ - 1] == '.') --i_;
        t.kind = Tok::pname;
        t.text = std::string(src_.substr(start, i_ - start));
      } else {
        static const char* two_char[] = {"!=", "<=", ">=", "&&", "||", "^^"};
        t.kind = Tok::punct;
        t.text = std::string(1, c);
        for (const char* op : two_char) {
          if (src_.substr(i_).starts_with(op)) {
            t.text = op;
            break;
          }
        }
        i_ += t.text.size();
      }
      out.push_back(std::move(t));
    }
  }

 private:
  void skip_space() {
    while (i_ < src_.size()) {
      if (std::isspace(static_cast<unsigned char>(src_[i_]))) {
        ++i_;
      } else if (src_[i_] == '#') {
        while (i_ < src_.size() && src_[i_] != '\n') ++i_;
      } else {
        break;
      }
    }
  }

  bool looks_like_iri() const {
    for (std::size_t k = i_ + 1; k < src_.size(); ++k) {
      char c = src_[k];
      if (c == '>') return k > i_ + 1;
      if (std::isspace(static_cast<unsigned char>(c)) || c == '<' || c == '"' || c == '{' || c == '}') {
        return false;
      }
    }
    return false;
  }

  std::string read_string(char quote, std::size_t start) {
    ++i_;
    std::string out;
    while (i_ < src_.size() && src_[i_] != quote) {
      char c = src_[i_++];
      if (c == '\\' && i_ < src_.size()) {
        char n = src_[i_++];
        switch (n) {
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          case 'r': out.push_back('\r'); break;
          default: out.push_back(n);
        }
      } else {
        out.push_back(c);
      }
    }
    if (i_ >= src_.size()) throw SyntaxError(start, {"closing quote"}, "end of input");
    ++i_;
    return out;
  }

  std::string_view src_;
  std::size_t i_ = 0;
};

const std::vector<std::string_view> kUnsupportedKeywords = {
    "OPTIONAL", "UNION",  "MINUS",    "BIND",   "VALUES", "SERVICE", "GRAPH",  "GROUP",
    "HAVING",   "OFFSET", "CONSTRUCT", "ASK",   "DESCRIBE", "EXISTS", "NOT",   "FROM",
    "INSERT",   "DELETE", "LOAD",     "CLEAR"};

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : toks_(Lexer(src).run()) {}

  Query run() {
    Query q;
    while (is_word("PREFIX")) parse_prefix();
    check_unsupported();
    expect_word("SELECT");
    if (accept_word("DISTINCT")) q.distinct = true;
    if (is_word("COUNT")) {
      parse_count(q);
    } else if (is_punct("*")) {
      throw UnsupportedFeature("SELECT *", peek().pos);
    } else if (is_punct("(")) {
      // Standard aggregate spelling "(COUNT(?x) AS ?n)"; the alias is dropped.
      std::size_t pos = advance().pos;
      if (!is_word("COUNT")) throw UnsupportedFeature("projection expression", pos);
      parse_count(q);
      expect_word("AS");
      expect_var();
      expect_punct(")");
    } else {
      q.projection.push_back(expect_var());
      while (peek().kind == Tok::var) q.projection.push_back(expect_var());
    }
    check_unsupported();
    expect_word("WHERE");
    expect_punct("{");
    parse_group(q);
    expect_punct("}");
    check_unsupported();
    if (accept_word("ORDER")) {
      expect_word("BY");
      OrderBy ob;
      if (is_word("ASC") || is_word("DESC")) {
        ob.descending = upper(advance().text) == "DESC";
        expect_punct("(");
        ob.var = expect_var();
        expect_punct(")");
      } else if (peek().kind == Tok::var) {
        ob.var = expect_var();
      } else {
        fail({"ASC", "DESC", "variable"});
      }
      q.order = ob;
    }
    check_unsupported();
    if (accept_word("LIMIT")) {
      const Token& t = peek();
      auto n = t.kind == Tok::number ? parse_integer(t.text) : std::nullopt;
      if (!n || *n <= 0) fail({"positive integer"});
      advance();
      q.limit = static_cast<std::size_t>(*n);
    }
    check_unsupported();
    if (peek().kind != Tok::end) fail({"end of query"});
    validate(q);
    return q;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  const Token& advance() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  void parse_count(Query& q) {
    advance();
    q.form = QueryForm::count;
    expect_punct("(");
    if (accept_word("DISTINCT")) q.distinct = true;
    q.projection.push_back(expect_var());
    expect_punct(")");
  }

  bool is_word(std::string_view w) const { return peek().kind == Tok::word && upper(peek().text) == w; }
  bool is_punct(std::string_view p) const { return peek().kind == Tok::punct && peek().text == p; }
  bool accept_word(std::string_view w) {
    if (!is_word(w)) return false;
    advance();
    return true;
  }
  bool accept_punct(std::string_view p) {
    if (!is_punct(p)) return false;
    advance();
    return true;
  }

  [[noreturn]] void fail(std::vector<std::string> expected) const {
    const Token& t = peek();
    std::string found = t.kind == Tok::end ? "end of input" : "'" + t.text + "'";
    throw SyntaxError(t.pos, std::move(expected), found);
  }

  void expect_word(std::string_view w) {
    if (!accept_word(w)) fail({std::string(w)});
  }
  void expect_punct(std::string_view p) {
    if (!accept_punct(p)) fail({"'" + std::string(p) + "'"});
  }
  Variable expect_var() {
    if (peek().kind != Tok::var) fail({"variable"});
    return Variable{advance().text};
  }

  void check_unsupported() const {
    const Token& t = peek();
    if (t.kind != Tok::word) return;
    std::string w = upper(t.text);
    for (auto kw : kUnsupportedKeywords) {
      if (w == kw) throw UnsupportedFeature(w, t.pos);
    }
  }

  void parse_prefix() {
    advance();  // PREFIX
    const Token& name = peek();
    if (name.kind != Tok::pname || name.text.back() != ':') fail({"prefix name"});
    std::string prefix = name.text.substr(0, name.text.size() - 1);
    advance();
    if (peek().kind != Tok::iri) fail({"IRI"});
    prefixes_[prefix] = advance().text;
  }

  std::string iri_to_id(std::string iri) const {
    if (iri.starts_with(kFreebaseNamespace)) return iri.substr(kFreebaseNamespace.size());
    return iri;
  }

  std::string resolve_pname(const Token& t) const {
    auto colon = t.text.find(':');
    std::string prefix = t.text.substr(0, colon);
    std::string local = t.text.substr(colon + 1);
    auto it = prefixes_.find(prefix);
    if (it == prefixes_.end()) {
      if (prefix == "ns") return local;
      throw SyntaxError(t.pos, {"declared prefix"}, "'" + prefix + ":'");
    }
    return iri_to_id(it->second + local);
  }

  std::optional<LiteralKind> datatype_kind(const std::string& suffix, std::size_t pos) const {
    std::string dt = suffix.substr(2);
    if (dt.size() > 2 && dt.front() == '<') {
      dt = dt.substr(1, dt.size() - 2);
    } else if (auto colon = dt.find(':'); colon != std::string::npos) {
      std::string prefix = dt.substr(0, colon);
      auto it = prefixes_.find(prefix);
      dt = (it != prefixes_.end() ? it->second
                                  : std::string("http://www.w3.org/2001/XMLSchema#")) +
           dt.substr(colon + 1);
    }
    auto hash = dt.find_last_of("#/");
    std::string local = hash == std::string::npos ? dt : dt.substr(hash + 1);
    static const std::map<std::string, LiteralKind> kinds = {
        {"string", LiteralKind::text},        {"integer", LiteralKind::integer},
        {"int", LiteralKind::integer},        {"long", LiteralKind::integer},
        {"short", LiteralKind::integer},      {"decimal", LiteralKind::floating},
        {"float", LiteralKind::floating},     {"double", LiteralKind::floating},
        {"dateTime", LiteralKind::datetime},  {"date", LiteralKind::datetime},
        {"gYear", LiteralKind::datetime},     {"gYearMonth", LiteralKind::datetime}};
    auto it = kinds.find(local);
    if (it == kinds.end()) throw UnsupportedFeature("datatype " + local, pos);
    return it->second;
  }

  enum Position { subject, predicate, object, operand };

  PatternTerm parse_term(Position where) {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::var:
        return expect_var();
      case Tok::pname:
        advance();
        return Value{EntityId{resolve_pname(t)}};
      case Tok::iri:
        advance();
        return Value{EntityId{iri_to_id(t.text)}};
      case Tok::word:
        if (where == predicate && t.text == "a") {
          advance();
          return Value{EntityId{"type.object.type"}};
        }
        break;
      case Tok::string:
      case Tok::number:
        if (where == subject || where == predicate) break;
        return Value{parse_literal()};
      default:
        break;
    }
    check_unsupported();
    if (t.kind == Tok::punct && t.text == "{") throw UnsupportedFeature("nested group", t.pos);
    if (where == subject) fail({"variable", "IRI", "prefixed name"});
    if (where == predicate) fail({"variable", "IRI", "prefixed name", "'a'"});
    fail({"variable", "IRI", "prefixed name", "literal"});
  }

  Literal parse_literal() {
    const Token& t = advance();
    try {
      if (t.kind == Tok::number) {
        if (auto i = parse_integer(t.text)) return Literal::integer(*i);
        return Literal::make(t.text, LiteralKind::floating);
      }
      if (t.suffix.starts_with("^^")) return Literal::make(t.text, *datatype_kind(t.suffix, t.pos));
      return Literal::text(t.text);
    } catch (const InvalidArgument& e) {
      throw SyntaxError(t.pos, {"valid literal"}, e.what());
    }
  }

  std::optional<CompareOp> parse_op() {
    static const std::map<std::string, CompareOp> ops = {
        {"=", CompareOp::eq}, {"!=", CompareOp::ne}, {"<", CompareOp::lt},
        {"<=", CompareOp::le}, {">", CompareOp::gt}, {">=", CompareOp::ge}};
    if (peek().kind != Tok::punct) return std::nullopt;
    auto it = ops.find(peek().text);
    if (it == ops.end()) return std::nullopt;
    advance();
    return it->second;
  }

  void parse_filter(Query& q) {
    advance();  // FILTER
    expect_punct("(");
    std::size_t depth = 0;
    while (is_punct("(")) {
      advance();
      ++depth;
    }
    if (peek().kind != Tok::var) {
      if (peek().kind == Tok::word || is_punct("!")) throw UnsupportedFeature("FILTER expression", peek().pos);
      fail({"variable"});
    }
    Comparison c;
    c.var = expect_var();
    auto op = parse_op();
    if (!op) {
      if (is_punct("&&") || is_punct("||")) throw UnsupportedFeature("FILTER boolean connective", peek().pos);
      fail({"=", "!=", "<", "<=", ">", ">="});
    }
    c.op = *op;
    c.operand = parse_term(operand);
    for (; depth > 0; --depth) expect_punct(")");
    if (is_punct("&&") || is_punct("||")) throw UnsupportedFeature("FILTER boolean connective", peek().pos);
    expect_punct(")");
    q.filters.push_back(std::move(c));
  }

  void parse_group(Query& q) {
    check_unsupported();
    if (is_punct("{")) throw UnsupportedFeature("nested group", peek().pos);
    if (is_word("FILTER") || is_punct("}")) fail({"triple pattern"});
    for (;;) {
      TriplePattern tp;
      tp.subject = parse_term(subject);
      tp.predicate = parse_term(predicate);
      if (is_punct("/") || is_punct("|") || is_punct("*") || is_punct("+") || is_punct("^")) {
        throw UnsupportedFeature("property path", peek().pos);
      }
      tp.object = parse_term(object);
      if (is_punct(";") || is_punct(",")) throw UnsupportedFeature("predicate-object list", peek().pos);
      q.patterns.push_back(std::move(tp));
      if (!accept_punct(".")) break;
      check_unsupported();
      if (is_punct("{")) throw UnsupportedFeature("nested group", peek().pos);
      if (is_word("FILTER") || is_punct("}")) break;
    }
    while (is_word("FILTER")) parse_filter(q);
    check_unsupported();
    if (!is_punct("}")) {
      if (peek().kind == Tok::var || peek().kind == Tok::pname || peek().kind == Tok::iri) {
        fail({"'.'", "FILTER", "'}'"});
      }
      fail({"FILTER", "'}'"});
    }
  }

  void validate(const Query& q) const {
    auto vars = q.pattern_variables();
    auto need = [&](const Variable& v, const char* where) {
      if (!vars.contains(v.name)) {
        throw SemanticError(std::string(where) + " variable ?" + v.name + " is not bound by any pattern");
      }
    };
    for (const auto& v : q.projection) need(v, "projected");
    for (const auto& f : q.filters) {
      need(f.var, "filtered");
      if (const auto* ov = std::get_if<Variable>(&f.operand)) need(*ov, "filtered");
    }
    if (q.order) need(q.order->var, "ordered");
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::map<std::string, std::string> prefixes_;
};

bool is_plain_local(std::string_view id) {
  if (id.empty() || id.front() == '.' || id.back() == '.' || id.front() == '-') return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-';
  });
}

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(c);
    }
  }
  return out + "\"";
}

std::string print_term(const PatternTerm& t) {
  if (const auto* v = std::get_if<Variable>(&t)) return "?" + v->name;
  const auto& value = std::get<Value>(t);
  if (const auto* e = std::get_if<EntityId>(&value)) {
    if (is_plain_local(e->id)) return "ns:" + e->id;
    if (e->id.find("://") != std::string::npos) return "<" + e->id + ">";
    return "<" + std::string(kFreebaseNamespace) + e->id + ">";
  }
  const auto& lit = std::get<Literal>(value);
  switch (lit.kind) {
    case LiteralKind::text: return quote(lit.value);
    case LiteralKind::integer: return lit.value;
    case LiteralKind::floating:
      if (parse_float(lit.value)) return lit.value;
      return quote(lit.value) + "^^xsd:double";
    case LiteralKind::datetime: return quote(lit.value) + "^^xsd:dateTime";
  }
  return quote(lit.value);
}

}  // namespace

SyntaxError::SyntaxError(std::size_t position, std::vector<std::string> expected, const std::string& found)
    : Error("syntax error at offset " + std::to_string(position) + ": expected " +
            join_expected(expected) + ", found " + found),
      position_(position),
      expected_(std::move(expected)) {}

std::set<std::string> Query::pattern_variables() const {
  std::set<std::string> out;
  for (const auto& p : patterns) {
    for (const auto* t : {&p.subject, &p.predicate, &p.object}) {
      if (const auto* v = std::get_if<Variable>(t)) out.insert(v->name);
    }
  }
  return out;
}

Query parse(std::string_view query_text) {
  Parser parser(query_text);
  Query q = parser.run();
  if (q.patterns.empty()) throw SemanticError("query has no triple patterns");
  return q;
}

std::string print(const Query& q) {
  std::ostringstream out;
  out << "PREFIX ns: <" << kFreebaseNamespace << "> ";
  out << "SELECT ";
  if (q.form == QueryForm::count) {
    out << "COUNT(" << (q.distinct ? "DISTINCT " : "") << "?" << q.projection.at(0).name << ")";
  } else {
    if (q.distinct) out << "DISTINCT ";
    for (std::size_t i = 0; i < q.projection.size(); ++i) {
      out << (i ? " " : "") << "?" << q.projection[i].name;
    }
  }
  out << " WHERE { ";
  for (std::size_t i = 0; i < q.patterns.size(); ++i) {
    const auto& p = q.patterns[i];
    if (i) out << " . ";
    out << print_term(p.subject) << " " << print_term(p.predicate) << " " << print_term(p.object);
  }
  for (const auto& f : q.filters) {
    out << " FILTER(?" << f.var.name << " " << to_string(f.op) << " " << print_term(f.operand) << ")";
  }
  out << " }";
  if (q.order) out << " ORDER BY " << (q.order->descending ? "DESC" : "ASC") << "(?" << q.order->var.name << ")";
  if (q.limit) out << " LIMIT " << *q.limit;
  return out.str();
}

}  // namespace kgqa::sparql
