// SPDX-License-Identifier: Apache-2.0
//
// Serial reference vs OpenMP kernels: BGP joins on a generated graph and a
// batch evaluation over the corpus fixture.
#include <random>
#include <string>

#include <benchmark/benchmark.h>

#include "corpus_scenario.hpp"
#include "kgqa/pipeline.hpp"
#include "kgqa/sparql.hpp"

using namespace kgqa;

namespace {

// People with professions, employers and cities; joins fan out through the
// shared objects.
const KnowledgeGraph& synthetic(std::size_t people) {
  static std::map<std::size_t, KnowledgeGraph> cache;
  auto it = cache.find(people);
  if (it != cache.end()) return it->second;
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<std::size_t> prof(0, 49), org(0, 199), city(0, 99);
  std::vector<Triple> t;
  t.reserve(people * 4 + 300);
  for (std::size_t i = 0; i < people; ++i) {
    EntityId p{"m.p" + std::to_string(i)};
    t.push_back({p, "people.person.profession", Value{EntityId{"m.prof" + std::to_string(prof(rng))}}});
    t.push_back({p, "business.employment.employer", Value{EntityId{"m.org" + std::to_string(org(rng))}}});
    t.push_back({p, "people.person.age", Value{Literal::integer(static_cast<std::int64_t>(20 + i % 60))}});
  }
  for (std::size_t o = 0; o < 200; ++o) {
    t.push_back({EntityId{"m.org" + std::to_string(o)}, "location.located_in",
                 Value{EntityId{"m.city" + std::to_string(city(rng))}}});
  }
  return cache.emplace(people, KnowledgeGraph::build(std::move(t), {})).first->second;
}

const char* kJoin =
    "SELECT ?p ?c WHERE { ?p ns:people.person.profession ns:m.prof7 . ?p ns:business.employment.employer ?o . "
    "?o ns:location.located_in ?c . ?q ns:business.employment.employer ?o }";

void BM_Join(benchmark::State& state, sparql::ExecutionPolicy policy) {
  const auto& g = synthetic(static_cast<std::size_t>(state.range(0)));
  auto q = sparql::parse(kJoin);
  std::size_t rows = 0;
  for (auto _ : state) {
    auto t = sparql::execute(q, g, policy);
    rows = t.rows.size();
    benchmark::DoNotOptimize(t);
  }
  state.counters["rows"] = static_cast<double>(rows);
}

void BM_Evaluate(benchmark::State& state, sparql::ExecutionPolicy policy) {
  static const auto g = scenario::corpus_graph();
  static const auto items = scenario::corpus_items();
  static const auto prompts = dialogue::PromptSet::load(scenario::kPromptDir);
  scenario::PinnedRig rig(g, items, 0.7, 0.7);
  auto b = rig.backends();
  pipeline::EvalOptions opts;
  opts.policy = policy;
  for (auto _ : state) benchmark::DoNotOptimize(pipeline::evaluate_dataset(items, opts, b, g, prompts));
  state.counters["items"] = static_cast<double>(items.size());
}

}  // namespace

BENCHMARK_CAPTURE(BM_Join, serial, sparql::ExecutionPolicy::serial)->Arg(2000)->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Join, parallel, sparql::ExecutionPolicy::parallel)->Arg(2000)->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Evaluate, serial, sparql::ExecutionPolicy::serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Evaluate, parallel, sparql::ExecutionPolicy::parallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
