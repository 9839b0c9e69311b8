// SPDX-License-Identifier: Apache-2.0
#include "kgqa/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "kgqa/errors.hpp"
#include "kgqa/text.hpp"

namespace kgqa::pipeline {

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

json aggregate_json(const Aggregate& a) {
  return {{"n", a.n},
          {"f1", a.f1},
          {"rhits1", a.rhits1},
          {"em", a.em},
          {"mean_entity_clar", a.mean_entity_clar},
          {"mean_intent_clar", a.mean_intent_clar}};
}

std::string one_line(std::string_view s) {
  std::string out(s);
  std::replace(out.begin(), out.end(), '\n', ' ');
  return text::trim(out);
}

}  // namespace

std::vector<EvalItem> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("dataset not found: " + path.string());
  std::vector<EvalItem> items;
  std::set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    auto bad = [&](const std::string& why) { return LoadError(path.string(), lineno, why); };
    EvalItem item;
    try {
      auto j = json::parse(line);
      item.id = j.at("id").get<std::string>();
      item.question = j.at("question").get<std::string>();
      item.golden_sparql = j.contains("sparql") ? j["sparql"].get<std::string>() : j.at("golden_sparql").get<std::string>();
      item.category = j.at("category").get<std::string>();
    } catch (const json::exception& e) {
      throw bad(e.what());
    }
    if (std::find(kCategories.begin(), kCategories.end(), item.category) == kCategories.end()) {
      throw bad("unknown category: " + item.category);
    }
    if (!ids.insert(item.id).second) throw bad("duplicate id: " + item.id);
    try {
      sparql::parse(item.golden_sparql);
    } catch (const Error& e) {
      throw bad(std::string("gold query: ") + e.what());
    }
    items.push_back(std::move(item));
  }
  return items;
}

ItemScore score_item(const std::set<std::string>& predicted, const std::set<std::string>& gold) {
  if (gold.empty()) throw InvalidArgument("gold answer set is empty");
  ItemScore s;
  s.em = predicted == gold ? 1 : 0;
  if (predicted.empty()) return s;
  std::size_t hits = 0;
  for (const auto& p : predicted) hits += gold.count(p);
  if (hits == 0) return s;
  double precision = static_cast<double>(hits) / predicted.size();
  double recall = static_cast<double>(hits) / gold.size();
  s.f1 = 2 * precision * recall / (precision + recall);
  s.rhits1 = precision;
  return s;
}

std::set<std::string> answer_set(const sparql::ResultTable& table) {
  std::set<std::string> out;
  if (table.columns.empty()) return out;
  for (const auto& row : table.rows) out.insert(value_string(row.front()));
  return out;
}

// ---------------------------------------------------------------------------
// Metrics

MetricsReport aggregate(std::vector<ItemResult> items) {
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  MetricsReport report;
  auto add = [](Aggregate& a, const ItemResult& r) {
    ++a.n;
    a.f1 += r.score.f1;
    a.rhits1 += r.score.rhits1;
    a.em += r.score.em;
    a.mean_entity_clar += r.n_entity_clar;
    a.mean_intent_clar += r.n_intent_clar;
  };
  auto finish = [](Aggregate& a) {
    if (a.n == 0) return;
    double n = static_cast<double>(a.n);
    a.f1 /= n;
    a.rhits1 /= n;
    a.em /= n;
    a.mean_entity_clar /= n;
    a.mean_intent_clar /= n;
  };
  for (const auto& r : items) {
    add(report.overall, r);
    add(report.per_category[r.category], r);
  }
  finish(report.overall);
  for (auto& [_, a] : report.per_category) finish(a);
  report.per_item = std::move(items);
  return report;
}

json MetricsReport::to_json() const {
  json cats = json::object();
  for (const auto& [c, a] : per_category) cats[c] = aggregate_json(a);
  json rows = json::array();
  for (const auto& r : per_item) {
    json row = {{"id", r.id},
                {"category", r.category},
                {"f1", r.score.f1},
                {"rhits1", r.score.rhits1},
                {"em", r.score.em},
                {"status", r.status},
                {"n_entity_clar", r.n_entity_clar},
                {"n_intent_clar", r.n_intent_clar}};
    if (!r.failure_reason.empty()) row["failure_reason"] = r.failure_reason;
    rows.push_back(std::move(row));
  }
  return {{"overall", aggregate_json(overall)}, {"per_category", cats}, {"per_item", rows}};
}

std::string MetricsReport::per_item_csv() const {
  std::string out = "id,category,f1,rhits1,em,status,n_entity_clar,n_intent_clar\n";
  for (const auto& r : per_item) {
    out += csv_field(r.id) + "," + csv_field(r.category) + "," + fixed(r.score.f1, 4) + "," +
           fixed(r.score.rhits1, 4) + "," + std::to_string(r.score.em) + "," + r.status + "," +
           std::to_string(r.n_entity_clar) + "," + std::to_string(r.n_intent_clar) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Batch evaluation

namespace {

struct ItemRun {
  ItemResult result;
  dialogue::Transcript transcript;
};

ItemRun run_item(const EvalItem& item, const EvalOptions& options, Backends& backends, const KnowledgeGraph& graph,
                 const dialogue::PromptSet& prompts) {
  ItemRun run;
  auto& r = run.result;
  r.id = item.id;
  r.category = item.category;
  try {
    dialogue::SimulatedClarifier clarifier(item.golden_sparql, backends.user, prompts);
    run.transcript = dialogue::run_session(item.question, options.session, backends.agent, backends.scorer, graph,
                                           clarifier, prompts, item.golden_sparql);
    run.transcript.item_id = item.id;
    const auto& s = run.transcript.session;
    r.status = std::string(dialogue::to_string(s.status));
    r.failure_reason = s.failure_reason;
    r.n_entity_clar = s.clarification_count_entity;
    r.n_intent_clar = s.clarification_count_intent;
    auto gold = answer_set(sparql::execute(sparql::parse(item.golden_sparql), graph));
    std::set<std::string> predicted;
    if (s.status == dialogue::Status::finished && s.answers) predicted = answer_set(*s.answers);
    r.score = score_item(predicted, gold);
  } catch (const std::exception& e) {
    // An item never takes the batch down with it.
    r.score = ItemScore{};
    r.status = "failed";
    r.failure_reason = e.what();
  }
  return run;
}

}  // namespace

Evaluation evaluate_dataset(const std::vector<EvalItem>& items, const EvalOptions& options, Backends& backends,
                            const KnowledgeGraph& graph, const dialogue::PromptSet& prompts) {
  options.session.thresholds.validate();
  std::vector<ItemRun> runs(items.size());
  const bool parallel = options.policy == sparql::ExecutionPolicy::parallel;
  const auto n = static_cast<std::ptrdiff_t>(items.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    runs[i] = run_item(items[i], options, backends, graph, prompts);
  }
  std::sort(runs.begin(), runs.end(), [](const auto& a, const auto& b) { return a.result.id < b.result.id; });
  Evaluation ev;
  std::vector<ItemResult> results;
  for (auto& r : runs) {
    results.push_back(std::move(r.result));
    ev.transcripts.push_back(std::move(r.transcript));
  }
  ev.report = aggregate(std::move(results));
  return ev;
}

// ---------------------------------------------------------------------------
// Threshold sweeps

std::vector<double> parse_grid(std::string_view range) {
  auto bad = [&] { return InvalidArgument("bad grid '" + std::string(range) + "'; want lo:hi:step or a,b,c"); };
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      double v = std::stod(s, &used);
      if (used != s.size()) throw bad();
      return v;
    } catch (const std::logic_error&) {
      throw bad();
    }
  };
  auto round9 = [](double v) { return std::round(v * 1e9) / 1e9; };
  std::vector<double> out;
  if (range.find(':') != std::string_view::npos) {
    auto parts = text::split_any(range, ":");
    if (parts.size() != 3) throw bad();
    double lo = number(text::trim(parts[0])), hi = number(text::trim(parts[1])), step = number(text::trim(parts[2]));
    if (!(step > 0) || hi < lo) throw bad();
    auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    for (std::size_t i = 0; i < count; ++i) out.push_back(round9(lo + static_cast<double>(i) * step));
  } else {
    for (const auto& p : text::split_any(range, ",")) {
      if (!text::trim(p).empty()) out.push_back(round9(number(text::trim(p))));
    }
  }
  if (out.empty()) throw bad();
  for (double v : out) {
    if (v < 0.0 || v > 1.0) throw InvalidArgument("grid value outside [0, 1]: " + fixed(v, 3));
  }
  return out;
}

std::vector<GridPoint> grid_search(const std::vector<EvalItem>& items, const std::vector<double>& entity_grid,
                                   const std::vector<double>& intent_grid, const EvalOptions& options,
                                   Backends& backends, const KnowledgeGraph& graph,
                                   const dialogue::PromptSet& prompts, double fixed_threshold) {
  std::vector<GridPoint> points;
  auto run = [&](std::string axis, double e, double i) {
    EvalOptions opts = options;
    opts.session.thresholds = Thresholds{e, i};
    auto ev = evaluate_dataset(items, opts, backends, graph, prompts);
    GridPoint p;
    p.axis = std::move(axis);
    p.entity_threshold = e;
    p.intent_threshold = i;
    p.overall_f1 = ev.report.overall.f1;
    p.mean_entity_rounds = ev.report.overall.mean_entity_clar;
    p.mean_intent_rounds = ev.report.overall.mean_intent_clar;
    p.mean_clarification_rounds = p.mean_entity_rounds + p.mean_intent_rounds;
    points.push_back(p);
  };
  for (double e : entity_grid) run("entity", e, fixed_threshold);
  for (double i : intent_grid) run("intent", fixed_threshold, i);
  return points;
}

std::string grid_csv(const std::vector<GridPoint>& points) {
  std::string out = "entity_t,intent_t,f1,mean_rounds\n";
  for (const auto& p : points) {
    out += fixed(p.entity_threshold, 2) + "," + fixed(p.intent_threshold, 2) + "," + fixed(p.overall_f1, 4) + "," +
           fixed(p.mean_clarification_rounds, 4) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Unambiguous questions

json UnAmbItem::to_json() const {
  return {{"id", id},
          {"original_question", original_question},
          {"refined_question", refined_question},
          {"sparql", golden_sparql},
          {"n_entity_clar", n_entity_clar},
          {"n_intent_clar", n_intent_clar},
          {"regenerated", regenerated}};
}

UnAmbItem UnAmbItem::from_json(const json& j) {
  UnAmbItem u;
  u.id = j.at("id");
  u.original_question = j.at("original_question");
  u.refined_question = j.at("refined_question");
  u.golden_sparql = j.at("sparql");
  u.n_entity_clar = j.at("n_entity_clar");
  u.n_intent_clar = j.at("n_intent_clar");
  u.regenerated = j.at("regenerated");
  return u;
}

std::vector<std::pair<std::string, std::string>> clarification_pairs(const dialogue::Transcript& transcript) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& t : transcript.session.history) {
    if (t.action.kind == dialogue::ActionKind::tool_call && t.action.tool == Tool::ask_for_clarification &&
        t.clarification && !t.action.args.empty()) {
      out.emplace_back(t.action.args.front(), *t.clarification);
    }
  }
  return out;
}

llm::ChatPrompt build_generation_prompt(std::string_view golden_sparql,
                                        const std::vector<std::pair<std::string, std::string>>& pairs,
                                        const dialogue::PromptSet& prompts) {
  std::string body = "Golden SPARQL:\n" + std::string(golden_sparql) + "\n\nInteraction:";
  for (const auto& [request, response] : pairs) {
    body += "\nRequest: " + one_line(request) + "\nResponse: " + one_line(response);
  }
  llm::ChatPrompt prompt;
  prompt.system = prompts.question_generation;
  prompt.turns.push_back({llm::Role::user, std::move(body)});
  return prompt;
}

UnAmbItem build_unambiguous_item(const dialogue::Transcript& transcript, llm::ChatBackend& backend,
                                 const dialogue::PromptSet& prompts) {
  if (!transcript.golden_sparql) throw InvalidArgument("transcript has no gold query");
  const auto& s = transcript.session;
  UnAmbItem u;
  u.id = transcript.item_id.value_or("");
  u.original_question = s.question;
  u.golden_sparql = *transcript.golden_sparql;
  u.n_entity_clar = s.clarification_count_entity;
  u.n_intent_clar = s.clarification_count_intent;
  auto pairs = clarification_pairs(transcript);
  if (pairs.empty()) {
    u.refined_question = s.question;
    return u;
  }
  auto text = text::trim(llm::complete(build_generation_prompt(u.golden_sparql, pairs, prompts), backend).text);
  if (text.empty()) throw ProviderError("question generation returned an empty question");
  u.refined_question = std::move(text);
  u.regenerated = true;
  return u;
}

DatasetStats dataset_stats(const std::vector<UnAmbItem>& items) {
  if (items.empty()) throw InvalidArgument("no items");
  DatasetStats st;
  st.n_items = items.size();
  for (const auto& u : items) {
    st.avg_entity += u.n_entity_clar;
    st.avg_intent += u.n_intent_clar;
    st.n_regen += u.regenerated ? 1 : 0;
  }
  double n = static_cast<double>(items.size());
  st.avg_entity /= n;
  st.avg_intent /= n;
  st.percent_regen = std::round(10000.0 * static_cast<double>(st.n_regen) / n) / 100.0;
  return st;
}

std::string stats_csv(const DatasetStats& st) {
  return "Ave. #Entity,Ave. #Intent,#Item,Percent\n" + fixed(st.avg_entity, 2) + "," + fixed(st.avg_intent, 2) + "," +
         std::to_string(st.n_regen) + "," + fixed(st.percent_regen, 2) + "\n";
}

// ---------------------------------------------------------------------------
// Score distribution

std::vector<ScoreBin> score_distribution(const std::vector<dialogue::Transcript>& transcripts, std::size_t bins) {
  if (bins == 0) throw InvalidArgument("bins must be positive");
  std::vector<ScoreBin> out;
  for (auto kind : {AmbiguityKind::entity, AmbiguityKind::intent}) {
    std::vector<std::size_t> counts(bins, 0);
    for (const auto& t : transcripts) {
      for (const auto& r : t.session.reports) {
        if (r.kind != kind) continue;
        auto b = static_cast<std::size_t>(std::floor(std::clamp(r.score, 0.0, 1.0) * static_cast<double>(bins)));
        ++counts[std::min(b, bins - 1)];
      }
    }
    for (std::size_t b = 0; b < bins; ++b) {
      out.push_back({std::string(to_string(kind)), static_cast<double>(b) / static_cast<double>(bins),
                     static_cast<double>(b + 1) / static_cast<double>(bins), counts[b]});
    }
  }
  return out;
}

std::string distribution_csv(const std::vector<ScoreBin>& bins) {
  std::string out = "kind,bin_lo,bin_hi,count\n";
  for (const auto& b : bins) {
    out += b.kind + "," + fixed(b.lo, 2) + "," + fixed(b.hi, 2) + "," + std::to_string(b.count) + "\n";
  }
  return out;
}

namespace {

void read_transcript_file(const std::filesystem::path& path, std::vector<dialogue::Transcript>& out) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("transcripts not found: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const auto content = ss.str();
  // A single JSON document (object or array) or JSON Lines.
  auto whole = json::parse(content, nullptr, false);
  if (!whole.is_discarded()) {
    try {
      if (whole.is_array()) {
        for (const auto& j : whole) out.push_back(dialogue::Transcript::from_json(j));
      } else {
        out.push_back(dialogue::Transcript::from_json(whole));
      }
    } catch (const json::exception& e) {
      throw LoadError(path.string(), 1, e.what());
    }
    return;
  }
  std::istringstream lines(content);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(dialogue::Transcript::from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw LoadError(path.string(), lineno, e.what());
    }
  }
}

}  // namespace

std::vector<dialogue::Transcript> load_transcripts(const std::filesystem::path& path) {
  std::vector<dialogue::Transcript> out;
  if (std::filesystem::is_directory(path)) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(path)) {
      auto ext = e.path().extension();
      if (ext == ".json" || ext == ".jsonl") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) read_transcript_file(f, out);
  } else {
    read_transcript_file(path, out);
  }
  return out;
}

void save_transcripts(const std::vector<dialogue::Transcript>& transcripts, const std::filesystem::path& jsonl_path) {
  std::ofstream out(jsonl_path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write " + jsonl_path.string());
  for (const auto& t : transcripts) out << t.to_json().dump() << "\n";
}

}  // namespace kgqa::pipeline
