// SPDX-License-Identifier: Apache-2.0
//
// kgqa: command-line front end for the interactive KGQA agent.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "kgqa/ambiguity.hpp"
#include "kgqa/config.hpp"
#include "kgqa/dialogue.hpp"
#include "kgqa/errors.hpp"
#include "kgqa/graph.hpp"
#include "kgqa/pipeline.hpp"
#include "kgqa/service.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace kgqa;

namespace {

struct Globals {
  std::optional<fs::path> config_file;
  std::optional<std::string> mode;
  std::optional<fs::path> triples, entities, prompts, cassette;
  std::optional<double> entity_threshold, intent_threshold;
};

AppConfig resolve(const Globals& g) {
  auto c = load_config(g.config_file);
  if (g.mode) c.mode = mode_from_string(*g.mode);
  if (g.triples) c.triples = *g.triples;
  if (g.entities) c.entities = *g.entities;
  if (g.prompts) c.prompts = *g.prompts;
  if (g.cassette) c.cassette = *g.cassette;
  if (g.entity_threshold) c.thresholds.entity = *g.entity_threshold;
  if (g.intent_threshold) c.thresholds.intent = *g.intent_threshold;
  c.thresholds.validate();
  return c;
}

KnowledgeGraph graph_of(const AppConfig& c) {
  if (c.triples.empty() || c.entities.empty()) throw InvalidArgument("--triples and --entities are required");
  return load_graph(c.triples, c.entities);
}

std::map<std::string, std::string> gold_map(const std::vector<pipeline::EvalItem>& items) {
  std::map<std::string, std::string> m;
  for (const auto& it : items) m.emplace(it.question, it.golden_sparql);
  return m;
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

void emit(const fs::path& out, const std::string& content) {
  if (out.empty()) {
    std::cout << content;
  } else {
    write_file(out, content);
    std::cerr << "wrote " << out.string() << "\n";
  }
}

std::string event_line(const dialogue::Event& e) {
  const auto& p = e.payload;
  std::string body;
  for (const char* key : {"text", "reason", "sparql"}) {
    if (p.is_object() && p.contains(key) && p.at(key).is_string()) {
      body = p.at(key).get<std::string>();
      break;
    }
  }
  if (body.empty()) body = p.dump();
  return "[" + std::to_string(e.seq) + "] " + std::string(dialogue::to_string(e.kind)) + ": " + body;
}

// Asks the terminal user; EOF ends the session.
class StdinClarifier final : public dialogue::Clarifier {
 public:
  std::string respond(const dialogue::SessionState&, std::string_view) override {
    std::cout << "> " << std::flush;
    std::string line;
    if (!std::getline(std::cin, line)) throw StateError("no clarification (end of input)");
    return line;
  }
};

// ---------------------------------------------------------------------------

int cmd_load(const AppConfig& c) {
  auto g = graph_of(c);
  json j = {{"triples", g.triple_count()}, {"entities", g.entity_count()}, {"names", g.name_index_size()},
            {"terms", g.term_count()}};
  std::cout << j.dump(2) << "\n";
  return 0;
}

struct AskArgs {
  std::string question;
  bool interactive = false;
  std::string gold;
  std::optional<fs::path> dataset;
  fs::path transcript;
};

int cmd_ask(const AppConfig& c, const AskArgs& a) {
  auto g = graph_of(c);
  auto prompts = dialogue::PromptSet::load(c.prompts);
  std::map<std::string, std::string> gold;
  if (a.dataset) gold = gold_map(pipeline::load_dataset(*a.dataset));
  if (!a.gold.empty()) gold[a.question] = a.gold;
  auto known = gold.count(a.question) ? std::optional<std::string>(gold.at(a.question)) : std::nullopt;
  if (!a.interactive && !known) throw InvalidArgument("non-interactive ask needs --gold or a --dataset containing it");

  auto models = make_models(c, g, gold);
  BayesianScorer scorer(*models.ppl);
  StdinClarifier human;
  std::optional<dialogue::SimulatedClarifier> simulated;
  if (!a.interactive) simulated.emplace(*known, *models.user, prompts);
  dialogue::Clarifier& clarifier = a.interactive ? static_cast<dialogue::Clarifier&>(human) : *simulated;

  auto t = dialogue::run_session(a.question, c.session(), *models.agent, scorer, g, clarifier, prompts, known,
                                 [](const dialogue::Event& e) { std::cout << event_line(e) << "\n" << std::flush; });
  if (!a.transcript.empty()) write_file(a.transcript, t.to_json().dump(2) + "\n");
  return t.session.status == dialogue::Status::finished ? 0 : 1;
}

struct EvalArgs {
  fs::path dataset;
  fs::path out_dir = "eval_out";
  bool serial = false;
};

pipeline::EvalOptions eval_options(const AppConfig& c, bool serial) {
  pipeline::EvalOptions o;
  o.session = c.session();
  // Recording appends in call order; keep it reproducible.
  o.policy = (serial || c.mode == Mode::record) ? sparql::ExecutionPolicy::serial : sparql::ExecutionPolicy::parallel;
  return o;
}

int cmd_eval(const AppConfig& c, const EvalArgs& a) {
  auto g = graph_of(c);
  auto prompts = dialogue::PromptSet::load(c.prompts);
  auto items = pipeline::load_dataset(a.dataset);
  auto models = make_models(c, g, gold_map(items));
  BayesianScorer scorer(*models.ppl);
  pipeline::Backends b{*models.agent, *models.user, scorer};
  auto ev = pipeline::evaluate_dataset(items, eval_options(c, a.serial), b, g, prompts);

  fs::create_directories(a.out_dir);
  write_file(a.out_dir / "metrics.json", ev.report.to_json().dump(2) + "\n");
  write_file(a.out_dir / "per_item.csv", ev.report.per_item_csv());
  pipeline::save_transcripts(ev.transcripts, a.out_dir / "transcripts.jsonl");
  const auto& o = ev.report.overall;
  std::cout << "items=" << o.n << " F1=" << o.f1 << " Hits@1=" << o.rhits1 << " EM=" << o.em
            << " entity_clar=" << o.mean_entity_clar << " intent_clar=" << o.mean_intent_clar << "\n"
            << "wrote " << a.out_dir.string() << "/{metrics.json,per_item.csv,transcripts.jsonl}\n";
  return 0;
}

struct GridArgs {
  fs::path dataset;
  std::string entity = "0.5:0.9:0.1";
  std::string intent = "0.5:0.9:0.1";
  double fixed = 0.5;
  fs::path out;
  bool serial = false;
};

int cmd_grid(const AppConfig& c, const GridArgs& a) {
  auto egrid = pipeline::parse_grid(a.entity);
  auto igrid = pipeline::parse_grid(a.intent);
  auto g = graph_of(c);
  auto prompts = dialogue::PromptSet::load(c.prompts);
  auto items = pipeline::load_dataset(a.dataset);
  auto models = make_models(c, g, gold_map(items));
  BayesianScorer scorer(*models.ppl);
  pipeline::Backends b{*models.agent, *models.user, scorer};
  auto points = pipeline::grid_search(items, egrid, igrid, eval_options(c, a.serial), b, g, prompts, a.fixed);
  emit(a.out, pipeline::grid_csv(points));
  return 0;
}

int cmd_build_unamb(const AppConfig& c, const fs::path& transcripts, const fs::path& out) {
  auto prompts = dialogue::PromptSet::load(c.prompts);
  // The generator needs no graph; an empty one satisfies the mock agent.
  KnowledgeGraph g = c.triples.empty() ? KnowledgeGraph{} : graph_of(c);
  auto models = make_models(c, g);
  std::ostringstream lines;
  std::size_t n = 0;
  for (const auto& t : pipeline::load_transcripts(transcripts)) {
    lines << pipeline::build_unambiguous_item(t, *models.generator, prompts).to_json().dump() << "\n";
    ++n;
  }
  write_file(out, lines.str());
  std::cerr << "wrote " << n << " items to " << out.string() << "\n";
  return 0;
}

std::vector<pipeline::UnAmbItem> load_unamb(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("not found: " + path.string());
  std::vector<pipeline::UnAmbItem> items;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    items.push_back(pipeline::UnAmbItem::from_json(json::parse(line)));
  }
  return items;
}

int cmd_serve(const AppConfig& c, int port, const std::optional<fs::path>& dataset) {
  auto g = graph_of(c);
  auto prompts = dialogue::PromptSet::load(c.prompts);
  std::map<std::string, std::string> gold;
  if (dataset) gold = gold_map(pipeline::load_dataset(*dataset));
  auto models = make_models(c, g, gold);
  BayesianScorer scorer(*models.ppl);
  service::SessionService svc(g, prompts, c.session(), *models.agent, scorer);
  httplib::Server server;
  service::register_routes(server, svc);
  std::cerr << "listening on 0.0.0.0:" << port << " (mode " << to_string(c.mode) << ")\n";
  if (!server.listen("0.0.0.0", port)) throw Error("cannot listen on port " + std::to_string(port));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interactive question answering over a knowledge graph"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals gl;
  app.add_option("--config", gl.config_file, "key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("--mode", gl.mode, "remote | record | replay | mock (env LLM_MODE)");
  app.add_option("--triples", gl.triples, "triples TSV");
  app.add_option("--entities", gl.entities, "entities JSONL");
  app.add_option("--prompts", gl.prompts, "prompt directory");
  app.add_option("--cassette", gl.cassette, "cassette JSONL for record / replay");
  app.add_option("--entity-threshold", gl.entity_threshold, "entity ambiguity threshold (default 0.6)");
  app.add_option("--intent-threshold", gl.intent_threshold, "intent ambiguity threshold (default 0.8)");

  auto* load = app.add_subcommand("load", "Load a graph and print its size");

  AskArgs ask;
  auto* ask_cmd = app.add_subcommand("ask", "Answer one question");
  ask_cmd->add_option("question", ask.question)->required();
  ask_cmd->add_flag("--interactive", ask.interactive, "read clarifications from standard input");
  ask_cmd->add_option("--gold", ask.gold, "gold SPARQL for the simulated user");
  ask_cmd->add_option("--dataset", ask.dataset, "dataset supplying the gold query")->check(CLI::ExistingFile);
  ask_cmd->add_option("--transcript", ask.transcript, "write the transcript JSON here");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Evaluate a dataset with the simulated user");
  eval->add_option("--dataset", ev.dataset)->required()->check(CLI::ExistingFile);
  eval->add_option("--out-dir", ev.out_dir);
  eval->add_flag("--serial", ev.serial, "one item at a time");

  GridArgs gr;
  auto* grid = app.add_subcommand("grid", "Sweep the ambiguity thresholds");
  grid->add_option("--dataset", gr.dataset)->required()->check(CLI::ExistingFile);
  grid->add_option("--entity", gr.entity, "lo:hi:step or comma list");
  grid->add_option("--intent", gr.intent, "lo:hi:step or comma list");
  grid->add_option("--fixed", gr.fixed, "value of the axis not being swept");
  grid->add_option("--out", gr.out, "CSV path (default stdout)");
  grid->add_flag("--serial", gr.serial);

  fs::path transcripts, unamb_out;
  auto* build = app.add_subcommand("build-unamb", "Regenerate questions from clarification transcripts");
  build->add_option("--transcripts", transcripts, "file or directory")->required()->check(CLI::ExistingPath);
  build->add_option("--out", unamb_out)->required();

  fs::path unamb_in, stats_out;
  auto* stats = app.add_subcommand("stats", "Summary row for a regenerated dataset");
  stats->add_option("--unamb", unamb_in)->required()->check(CLI::ExistingFile);
  stats->add_option("--out", stats_out, "CSV path (default stdout)");

  int port = 0;
  std::optional<fs::path> serve_dataset;
  auto* serve = app.add_subcommand("serve", "HTTP session service");
  serve->add_option("--port", port, "default from config (8080)");
  serve->add_option("--dataset", serve_dataset, "gold queries for the rule-based agent")->check(CLI::ExistingFile);

  fs::path reports, dist_out;
  std::size_t bins = 10;
  auto* plot = app.add_subcommand("plot-dist", "Ambiguity score histogram from transcripts");
  plot->add_option("--reports", reports, "transcripts file or directory")->required()->check(CLI::ExistingPath);
  plot->add_option("--bins", bins)->check(CLI::PositiveNumber);
  plot->add_option("--out", dist_out, "CSV path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    auto c = resolve(gl);
    if (*load) return cmd_load(c);
    if (*ask_cmd) return cmd_ask(c, ask);
    if (*eval) return cmd_eval(c, ev);
    if (*grid) return cmd_grid(c, gr);
    if (*build) return cmd_build_unamb(c, transcripts, unamb_out);
    if (*stats) {
      emit(stats_out, pipeline::stats_csv(pipeline::dataset_stats(load_unamb(unamb_in))));
      return 0;
    }
    if (*serve) return cmd_serve(c, port ? port : c.port, serve_dataset);
    if (*plot) {
      emit(dist_out, pipeline::distribution_csv(pipeline::score_distribution(pipeline::load_transcripts(reports), bins)));
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "kgqa: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
