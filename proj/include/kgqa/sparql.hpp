// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "kgqa/errors.hpp"
#include "kgqa/graph.hpp"
#include "kgqa/term.hpp"

namespace kgqa::sparql {

struct Variable {
  std::string name;  // without the leading '?'
  friend auto operator<=>(const Variable&, const Variable&) = default;
};

/// A pattern position: a variable or a constant. Constants in predicate
/// position are EntityId values holding the predicate id.
using PatternTerm = std::variant<Variable, Value>;

struct TriplePattern {
  PatternTerm subject;
  PatternTerm predicate;
  PatternTerm object;
  friend bool operator==(const TriplePattern&, const TriplePattern&) = default;
};

struct Comparison {
  Variable var;
  CompareOp op = CompareOp::eq;
  PatternTerm operand;
  friend bool operator==(const Comparison&, const Comparison&) = default;
};

struct OrderBy {
  Variable var;
  bool descending = false;
  friend bool operator==(const OrderBy&, const OrderBy&) = default;
};

enum class QueryForm { select, count };

struct Query {
  QueryForm form = QueryForm::select;
  bool distinct = false;
  std::vector<Variable> projection;  // COUNT form: exactly the counted variable
  std::vector<TriplePattern> patterns;
  std::vector<Comparison> filters;
  std::optional<OrderBy> order;
  std::optional<std::size_t> limit;
  friend bool operator==(const Query&, const Query&) = default;

  /// Variables mentioned by any pattern, sorted by name.
  std::set<std::string> pattern_variables() const;
};

class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t position, std::vector<std::string> expected, const std::string& found);
  std::size_t position() const { return position_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  std::size_t position_;
  std::vector<std::string> expected_;
};

class UnsupportedFeature : public Error {
 public:
  UnsupportedFeature(std::string feature, std::size_t position)
      : Error("unsupported SPARQL feature: " + feature + " at offset " + std::to_string(position)),
        feature_(std::move(feature)) {}
  const std::string& feature() const { return feature_; }

 private:
  std::string feature_;
};

/// Query references a variable that no pattern binds, or has no patterns.
class SemanticError : public Error {
 public:
  using Error::Error;
};

/// IRI namespace that maps onto the fixture id space.
inline constexpr std::string_view kFreebaseNamespace = "http://rdf.freebase.com/ns/";

Query parse(std::string_view query_text);

/// Canonical text form; parse(print(q)) == q.
std::string print(const Query& query);

struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<Value>> rows;
  friend bool operator==(const ResultTable&, const ResultTable&) = default;
};

enum class ExecutionPolicy { serial, parallel };

/// Left-to-right basic-graph-pattern join over index scans. The parallel
/// policy distributes partial solutions across OpenMP threads; both policies
/// return identical tables.
ResultTable execute(const Query& query, const KnowledgeGraph& graph,
                    ExecutionPolicy policy = ExecutionPolicy::serial);

/// "count: N" for COUNT tables; otherwise a header line and up to
/// `max_rows` rows, with the total when truncated.
std::string format_table(const ResultTable& table, const KnowledgeGraph* graph,
                         std::size_t max_rows = 50);

}  // namespace kgqa::sparql
