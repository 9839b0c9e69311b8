// SPDX-License-Identifier: Apache-2.0
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>
#include <omp.h>

#include "bgp_oracle.hpp"
#include "json.hpp"
#include "kgqa/sparql.hpp"

using namespace kgqa;
using namespace kgqa::sparql;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = KGQA_FIXTURE_DIR;

const KnowledgeGraph& corpus() {
  static const KnowledgeGraph g =
      load_graph(kFixtures / "corpus_triples.tsv", kFixtures / "corpus_entities.jsonl");
  return g;
}

std::vector<std::pair<std::string, std::string>> corpus_queries() {
  std::vector<std::pair<std::string, std::string>> out;
  std::ifstream in(kFixtures / "corpus_dataset.jsonl");
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    out.emplace_back(j.at("id").get<std::string>(), j.at("sparql").get<std::string>());
  }
  return out;
}

KnowledgeGraph graph_of(std::vector<Triple> triples) { return KnowledgeGraph::build(std::move(triples), {}); }

}  // namespace

TEST(ParseTest, OneHopSelect) {
  auto q = parse("SELECT ?x WHERE { ns:m.01 ns:people.person.profession ?x }");
  EXPECT_EQ(q.form, QueryForm::select);
  ASSERT_EQ(q.projection.size(), 1u);
  EXPECT_EQ(q.projection[0].name, "x");
  ASSERT_EQ(q.patterns.size(), 1u);
  EXPECT_EQ(q.patterns[0].subject, PatternTerm{Value{EntityId{"m.01"}}});
  EXPECT_EQ(q.patterns[0].predicate, PatternTerm{Value{EntityId{"people.person.profession"}}});
  EXPECT_EQ(q.patterns[0].object, PatternTerm{Variable{"x"}});
}

TEST(ParseTest, PrefixesIrisAndTypedLiterals) {
  auto q = parse(
      "PREFIX ns: <http://rdf.freebase.com/ns/>\n"
      "SELECT DISTINCT ?x WHERE { ?x <http://rdf.freebase.com/ns/film.film.directed_by> ns:m.06pj8 .\n"
      "  ?x ns:film.film.initial_release_date ?d FILTER(?d >= \"1980\"^^xsd:gYear) } LIMIT 3");
  EXPECT_TRUE(q.distinct);
  EXPECT_EQ(q.patterns[0].predicate, PatternTerm{Value{EntityId{"film.film.directed_by"}}});
  ASSERT_EQ(q.filters.size(), 1u);
  EXPECT_EQ(q.filters[0].op, CompareOp::ge);
  EXPECT_EQ(std::get<Value>(q.filters[0].operand), Value{Literal::make("1980", LiteralKind::datetime)});
  EXPECT_EQ(q.limit, 3u);
}

TEST(ParseTest, CountAndOrder) {
  auto q = parse("SELECT (COUNT(DISTINCT ?x) AS ?n) WHERE { ?x ns:p ?y } ");
  EXPECT_EQ(q.form, QueryForm::count);
  EXPECT_TRUE(q.distinct);
  auto o = parse("SELECT ?x WHERE { ?x ns:p ?v } ORDER BY DESC(?v) LIMIT 1");
  ASSERT_TRUE(o.order);
  EXPECT_TRUE(o.order->descending);
  EXPECT_EQ(o.order->var.name, "v");
}

TEST(ParseTest, UnsupportedFeaturesAreNamed) {
  try {
    parse("SELECT ?x WHERE { ?x ns:p ?y OPTIONAL { ?y ns:q ?z } }");
    FAIL() << "expected UnsupportedFeature";
  } catch (const UnsupportedFeature& e) {
    EXPECT_EQ(e.feature(), "OPTIONAL");
  }
  EXPECT_THROW(parse("SELECT ?x WHERE { { ?x ns:p ?y } UNION { ?x ns:q ?y } }"), UnsupportedFeature);
  EXPECT_THROW(parse("SELECT * WHERE { ?x ns:p ?y }"), UnsupportedFeature);
  EXPECT_THROW(parse("ASK { ?x ns:p ?y }"), UnsupportedFeature);
  EXPECT_THROW(parse("SELECT ?x WHERE { ?x ns:p/ns:q ?y }"), UnsupportedFeature);
}

TEST(ParseTest, SyntaxAndSemanticErrors) {
  EXPECT_THROW(parse("SELECT ?x WHERE { ?x ns:p }"), SyntaxError);
  EXPECT_THROW(parse("SELECT ?x WHERE ?x ns:p ?y"), SyntaxError);
  EXPECT_THROW(parse(""), SyntaxError);
  try {
    parse("SELECT ?x WHERE { ?x ns:p ?y } LIMIT");
    FAIL();
  } catch (const SyntaxError& e) {
    EXPECT_GT(e.position(), 20u);
    EXPECT_FALSE(e.expected().empty());
  }
  EXPECT_THROW(parse("SELECT ?z WHERE { ?x ns:p ?y }"), SemanticError);
  EXPECT_THROW(parse("SELECT ?x WHERE { ?x ns:p ?y FILTER(?w > 3) }"), SemanticError);
}

TEST(PrintTest, RoundTripsCorpusQueries) {
  for (const auto& [id, text] : corpus_queries()) {
    auto q = parse(text);
    auto printed = print(q);
    EXPECT_EQ(parse(printed), q) << id << "\n" << printed;
    EXPECT_EQ(print(parse(printed)), printed) << id;
  }
}

TEST(ExecuteTest, CountOnNoMatches) {
  auto g = graph_of({{EntityId{"m.01"}, "p", EntityId{"m.02"}}});
  auto t = execute(parse("SELECT (COUNT(?x) AS ?n) WHERE { ?x ns:q ?y }"), g);
  EXPECT_EQ(t.columns, std::vector<std::string>{"count"});
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0][0], Value{Literal::integer(0)});
  EXPECT_EQ(format_table(t, &g), "count: 0");
}

TEST(ExecuteTest, DescendingOrderWithLimit) {
  auto g = graph_of({{EntityId{"m.a"}, "score", Literal::integer(3)},
                     {EntityId{"m.b"}, "score", Literal::integer(7)},
                     {EntityId{"m.c"}, "score", Literal::integer(5)}});
  auto t = execute(parse("SELECT ?v WHERE { ?x ns:score ?v } ORDER BY DESC(?v) LIMIT 1"), g);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0][0], Value{Literal::integer(7)});
}

TEST(ExecuteTest, NumericOrderIsNotLexicographic) {
  auto g = graph_of({{EntityId{"m.a"}, "n", Literal::integer(10)}, {EntityId{"m.b"}, "n", Literal::integer(9)}});
  auto t = execute(parse("SELECT ?x WHERE { ?x ns:n ?v } ORDER BY ?v"), g);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0][0], Value{EntityId{"m.b"}});
}

TEST(ExecuteTest, CrossKindFilterDropsRows) {
  // common.topic.notable_for mixes text, integer and entity objects; only the
  // integer can satisfy a numeric comparison.
  auto t = execute(parse("SELECT ?v WHERE { ?x ns:common.topic.notable_for ?v FILTER(?v > 1000) }"), corpus());
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0][0], Value{Literal::integer(1908)});
}

TEST(ExecuteTest, UnknownConstantYieldsEmpty) {
  auto t = execute(parse("SELECT ?x WHERE { ns:m.nothing ns:people.person.profession ?x }"), corpus());
  EXPECT_TRUE(t.rows.empty());
  EXPECT_EQ(t.columns, std::vector<std::string>{"x"});
}

TEST(ExecuteTest, RepeatedVariableMustAgree) {
  auto g = graph_of({{EntityId{"m.a"}, "knows", EntityId{"m.a"}}, {EntityId{"m.a"}, "knows", EntityId{"m.b"}}});
  auto t = execute(parse("SELECT ?x WHERE { ?x ns:knows ?x }"), g);
  ASSERT_EQ(t.rows.size(), 1u);
}

TEST(FormatTest, TruncatesWithTotal) {
  ResultTable t{{"x"}, {}};
  for (int i = 0; i < 60; ++i) t.rows.push_back({Literal::integer(i)});
  auto s = format_table(t, nullptr, 50);
  EXPECT_NE(s.find("Total rows: 60 (showing first 50)"), std::string::npos);
  EXPECT_EQ(s.find("\n50\n"), std::string::npos);
}

TEST(OracleTest, CorpusQueriesMatchBruteForce) {
  const auto& g = corpus();
  oracle::BgpOracle oracle(g);
  auto queries = corpus_queries();
  ASSERT_EQ(queries.size(), 50u);
  for (const auto& [id, text] : queries) {
    auto q = parse(text);
    auto expected = oracle.run(q);
    auto actual = execute(q, g);
    EXPECT_EQ(actual.columns, expected.columns) << id;
    // ORDER BY and LIMIT make the row sequence significant; otherwise compare
    // multisets.
    bool ordered = q.order.has_value() || q.limit.has_value();
    EXPECT_EQ(oracle::row_strings(actual, !ordered), oracle::row_strings(expected, !ordered)) << id;
    if (q.form == QueryForm::select && !q.limit) EXPECT_FALSE(actual.rows.empty()) << id << " has no answers";
  }
}

TEST(ParallelTest, SerialAndParallelAgree) {
  const auto& g = corpus();
  int saved = omp_get_max_threads();
  omp_set_num_threads(4);
  for (const auto& [id, text] : corpus_queries()) {
    auto q = parse(text);
    EXPECT_EQ(execute(q, g, ExecutionPolicy::serial), execute(q, g, ExecutionPolicy::parallel)) << id;
  }
  // A wide join with many partial solutions exercises every chunk.
  auto wide = parse("SELECT ?a ?b WHERE { ?a ?p ?x . ?b ?q ?x }");
  EXPECT_EQ(execute(wide, g, ExecutionPolicy::serial), execute(wide, g, ExecutionPolicy::parallel));
  omp_set_num_threads(saved);
}
