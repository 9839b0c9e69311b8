// SPDX-License-Identifier: Apache-2.0
#include "kgqa/graph.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <tuple>

#include <json.hpp>

#include "kgqa/errors.hpp"
#include "kgqa/text.hpp"

namespace kgqa {

using json = nlohmann::json;

std::string normalize_name(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char ch : s) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (c < 0x80 && std::ispunct(c)) continue;
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

namespace {

std::string term_key(const Value& v) {
  if (const auto* e = std::get_if<EntityId>(&v)) return "E:" + e->id;
  const auto& lit = std::get<Literal>(v);
  return "L" + std::string(to_string(lit.kind)) + ":" + lit.value;
}

std::vector<std::string> name_tokens(std::string_view normalized) {
  return text::split_any(normalized, " ");
}

double name_score(const std::string& query, const std::string& name) {
  if (query == name) return 1.0;
  double overlap = text::jaccard(name_tokens(query), name_tokens(name));
  if (overlap > 0.0) return 0.5 + 0.4 * overlap;
  double longest = static_cast<double>(std::max(query.size(), name.size()));
  double similarity = 1.0 - static_cast<double>(text::edit_distance(query, name)) / longest;
  return similarity >= 0.75 ? 0.5 * similarity : 0.0;
}

std::string strip_ns(std::string_view field) {
  if (field.starts_with("ns:")) field.remove_prefix(3);
  return std::string(field);
}

std::string unescape_quoted(std::string_view body) {
  std::string out;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] == '\\' && i + 1 < body.size()) {
      char n = body[++i];
      switch (n) {
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        default: out.push_back(n); break;
      }
    } else {
      out.push_back(body[i]);
    }
  }
  return out;
}

std::string escape_quoted(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out.push_back(c);
    }
  }
  out.push_back('"');
  return out;
}

EntityRecord parse_entity(const json& j) {
  if (!j.is_object()) throw InvalidArgument("expected a JSON object");
  if (!j.contains("id") || !j["id"].is_string() || j["id"].get<std::string>().empty()) {
    throw InvalidArgument("missing or empty 'id'");
  }
  EntityRecord r;
  r.id.id = strip_ns(j["id"].get<std::string>());
  auto str_field = [&](const char* key) -> std::string {
    if (!j.contains(key) || j[key].is_null()) return {};
    if (!j[key].is_string()) throw InvalidArgument(std::string("'") + key + "' must be a string");
    return j[key].get<std::string>();
  };
  auto list_field = [&](const char* key) -> std::vector<std::string> {
    if (!j.contains(key) || j[key].is_null()) return {};
    if (!j[key].is_array()) throw InvalidArgument(std::string("'") + key + "' must be an array");
    std::vector<std::string> out;
    for (const auto& item : j[key]) {
      if (!item.is_string()) throw InvalidArgument(std::string("'") + key + "' entries must be strings");
      out.push_back(item.get<std::string>());
    }
    return out;
  };
  r.canonical_name = str_field("name");
  r.aliases = list_field("aliases");
  r.description = str_field("description");
  r.types = list_field("types");
  if (j.contains("popularity") && !j["popularity"].is_null()) {
    const auto& pop = j["popularity"];
    if (!pop.is_number_integer() || pop.get<long long>() < 0) {
      throw InvalidArgument("'popularity' must be a non-negative integer");
    }
    r.popularity = pop.get<std::uint64_t>();
  }
  if (j.contains("is_cvt") && !j["is_cvt"].is_null()) {
    if (!j["is_cvt"].is_boolean()) throw InvalidArgument("'is_cvt' must be a boolean");
    r.is_cvt = j["is_cvt"].get<bool>();
  }
  if (r.canonical_name.empty() && !r.is_cvt) r.canonical_name = r.id.id;
  return r;
}

std::ifstream open_or_throw(const std::filesystem::path& p) {
  if (!std::filesystem::exists(p)) throw NotFoundError("file not found: " + p.string());
  std::ifstream in(p);
  if (!in) throw NotFoundError("cannot open: " + p.string());
  return in;
}

}  // namespace

std::optional<Triple> parse_triple_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  if (text::trim(line).empty() || line.front() == '#') return std::nullopt;
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == '\t') {
      fields.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  if (fields.size() != 3) {
    throw InvalidArgument("expected 3 tab-separated fields, found " + std::to_string(fields.size()));
  }
  Triple t;
  t.subject.id = strip_ns(text::trim(fields[0]));
  t.predicate = strip_ns(text::trim(fields[1]));
  if (t.subject.id.empty()) throw InvalidArgument("empty subject");
  if (t.predicate.empty()) throw InvalidArgument("empty predicate");
  std::string object = text::trim(fields[2]);
  if (object.size() >= 2 && object.front() == '"' && object.back() == '"') {
    t.object = Literal::text(unescape_quoted(std::string_view(object).substr(1, object.size() - 2)));
  } else {
    object = strip_ns(object);
    if (object.empty()) throw InvalidArgument("empty object");
    if (looks_like_entity_id(object)) {
      t.object = EntityId{object};
    } else {
      t.object = Literal::infer(object);
    }
  }
  return t;
}

KnowledgeGraph::TermId KnowledgeGraph::intern(const Value& v) {
  auto [it, inserted] = term_ids_.try_emplace(term_key(v), static_cast<TermId>(terms_.size()));
  if (inserted) terms_.push_back(v);
  return it->second;
}

KnowledgeGraph KnowledgeGraph::build(std::vector<Triple> triples, std::vector<EntityRecord> records) {
  KnowledgeGraph g;
  std::sort(triples.begin(), triples.end());
  triples.erase(std::unique(triples.begin(), triples.end()), triples.end());

  for (auto& r : records) {
    std::string id = r.id.id;
    if (!g.entities_.try_emplace(id, std::move(r)).second) {
      throw InvalidArgument("duplicate entity record: " + id);
    }
  }
  auto ensure_entity = [&](const EntityId& id) {
    if (g.entities_.contains(id.id)) return;
    EntityRecord minimal;
    minimal.id = id;
    minimal.canonical_name = id.id;
    g.entities_.emplace(id.id, std::move(minimal));
  };

  g.spo_.reserve(triples.size());
  for (const auto& t : triples) {
    ensure_entity(t.subject);
    if (const auto* e = std::get_if<EntityId>(&t.object)) ensure_entity(*e);
    IdTriple ids{g.intern(t.subject), g.intern(EntityId{t.predicate}), g.intern(t.object)};
    g.spo_.push_back(ids);
  }
  std::sort(g.spo_.begin(), g.spo_.end());
  g.pos_ = g.spo_;
  std::sort(g.pos_.begin(), g.pos_.end(), [](const IdTriple& a, const IdTriple& b) {
    return std::tie(a.p, a.o, a.s) < std::tie(b.p, b.o, b.s);
  });
  g.osp_ = g.spo_;
  std::sort(g.osp_.begin(), g.osp_.end(), [](const IdTriple& a, const IdTriple& b) {
    return std::tie(a.o, a.s, a.p) < std::tie(b.o, b.s, b.p);
  });

  for (const auto& [id, rec] : g.entities_) {
    if (rec.is_cvt) continue;
    std::set<std::string> names;
    if (!rec.canonical_name.empty()) names.insert(normalize_name(rec.canonical_name));
    for (const auto& alias : rec.aliases) names.insert(normalize_name(alias));
    for (const auto& n : names) {
      if (!n.empty()) g.name_index_[n].push_back(id);
    }
  }
  return g;
}

const EntityRecord* KnowledgeGraph::entity(std::string_view id) const {
  auto it = entities_.find(id);
  return it == entities_.end() ? nullptr : &it->second;
}

std::vector<Triple> KnowledgeGraph::triples() const {
  std::vector<Triple> out;
  out.reserve(spo_.size());
  for (const auto& t : spo_) {
    out.push_back(Triple{std::get<EntityId>(terms_[t.s]), std::get<EntityId>(terms_[t.p]).id,
                         terms_[t.o]});
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<EntityMatch> KnowledgeGraph::find_entities(std::string_view surface_name,
                                                       std::size_t limit) const {
  std::string query = normalize_name(surface_name);
  if (query.empty() || limit == 0) return {};
  std::map<std::string_view, double> best;
  for (const auto& [name, ids] : name_index_) {
    double s = name_score(query, name);
    if (s <= 0.0) continue;
    for (const auto& id : ids) {
      auto& slot = best[id];
      slot = std::max(slot, s);
    }
  }
  std::vector<EntityMatch> out;
  out.reserve(best.size());
  for (const auto& [id, score] : best) out.push_back({entity(id), score});
  std::sort(out.begin(), out.end(), [](const EntityMatch& a, const EntityMatch& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.record->popularity != b.record->popularity) return a.record->popularity > b.record->popularity;
    return a.record->id.id < b.record->id.id;
  });
  if (out.size() > limit) out.resize(limit);
  return out;
}

std::vector<Edge> KnowledgeGraph::neighbors(const EntityId& node, Direction direction) const {
  if (!entities_.contains(node.id)) throw UnknownEntityError(node.id);
  auto id = lookup(node);
  std::vector<Edge> outgoing, incoming;
  if (id) {
    if (direction != Direction::incoming) {
      for (const auto& t : match(*id, std::nullopt, std::nullopt)) {
        outgoing.push_back({std::get<EntityId>(terms_[t.p]).id, terms_[t.o], false});
      }
    }
    if (direction != Direction::outgoing) {
      for (const auto& t : match(std::nullopt, std::nullopt, *id)) {
        incoming.push_back({std::get<EntityId>(terms_[t.p]).id, terms_[t.s], true});
      }
    }
  }
  auto by_pred_then_value = [](const Edge& a, const Edge& b) {
    if (a.predicate != b.predicate) return a.predicate < b.predicate;
    return value_string(a.neighbor) < value_string(b.neighbor);
  };
  std::sort(outgoing.begin(), outgoing.end(), by_pred_then_value);
  std::sort(incoming.begin(), incoming.end(), by_pred_then_value);
  outgoing.insert(outgoing.end(), incoming.begin(), incoming.end());
  return outgoing;
}

std::size_t KnowledgeGraph::predicate_frequency(std::string_view predicate) const {
  auto p = lookup_predicate(predicate);
  return p ? match(std::nullopt, *p, std::nullopt).size() : 0;
}

std::optional<KnowledgeGraph::TermId> KnowledgeGraph::lookup(const Value& v) const {
  auto it = term_ids_.find(term_key(v));
  if (it == term_ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<KnowledgeGraph::TermId> KnowledgeGraph::lookup_predicate(std::string_view p) const {
  return lookup(EntityId{std::string(p)});
}

std::span<const KnowledgeGraph::IdTriple> KnowledgeGraph::match(std::optional<TermId> s,
                                                                std::optional<TermId> p,
                                                                std::optional<TermId> o) const {
  // Pick the permutation whose sort prefix covers the bound positions, then
  // binary-search the prefix.
  auto range = [](const std::vector<IdTriple>& index, auto key_of, auto key) {
    auto lo = std::lower_bound(index.begin(), index.end(), key,
                               [&](const IdTriple& t, const auto& k) { return key_of(t) < k; });
    auto hi = std::upper_bound(index.begin(), index.end(), key,
                               [&](const auto& k, const IdTriple& t) { return k < key_of(t); });
    return std::span<const IdTriple>(&*index.begin() + (lo - index.begin()),
                                     static_cast<std::size_t>(hi - lo));
  };
  if (spo_.empty()) return {};
  if (s && p && o) {
    return range(spo_, [](const IdTriple& t) { return std::tuple(t.s, t.p, t.o); },
                 std::tuple(*s, *p, *o));
  }
  if (s && p) {
    return range(spo_, [](const IdTriple& t) { return std::tuple(t.s, t.p); }, std::tuple(*s, *p));
  }
  if (s && o) {
    return range(osp_, [](const IdTriple& t) { return std::tuple(t.o, t.s); }, std::tuple(*o, *s));
  }
  if (p && o) {
    return range(pos_, [](const IdTriple& t) { return std::tuple(t.p, t.o); }, std::tuple(*p, *o));
  }
  if (s) return range(spo_, [](const IdTriple& t) { return t.s; }, *s);
  if (p) return range(pos_, [](const IdTriple& t) { return t.p; }, *p);
  if (o) return range(osp_, [](const IdTriple& t) { return t.o; }, *o);
  return spo_;
}

KnowledgeGraph load_graph(const std::filesystem::path& triples_path,
                          const std::filesystem::path& entities_path) {
  auto triples_in = open_or_throw(triples_path);
  auto entities_in = open_or_throw(entities_path);

  std::vector<Triple> triples;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(triples_in, line)) {
    ++lineno;
    try {
      if (auto t = parse_triple_line(line)) triples.push_back(std::move(*t));
    } catch (const InvalidArgument& e) {
      throw LoadError(triples_path.string(), lineno, e.what());
    }
  }

  std::vector<EntityRecord> records;
  std::set<std::string> seen;
  lineno = 0;
  while (std::getline(entities_in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      auto rec = parse_entity(json::parse(line));
      if (!seen.insert(rec.id.id).second) throw InvalidArgument("duplicate id " + rec.id.id);
      records.push_back(std::move(rec));
    } catch (const json::exception& e) {
      throw LoadError(entities_path.string(), lineno, e.what());
    } catch (const InvalidArgument& e) {
      throw LoadError(entities_path.string(), lineno, e.what());
    }
  }
  return KnowledgeGraph::build(std::move(triples), std::move(records));
}

void save_graph(const KnowledgeGraph& graph, const std::filesystem::path& triples_path,
                const std::filesystem::path& entities_path) {
  std::ofstream tout(triples_path);
  std::ofstream eout(entities_path);
  if (!tout || !eout) throw Error("cannot write graph files");
  for (const auto& t : graph.triples()) {
    tout << t.subject.id << '\t' << t.predicate << '\t';
    if (const auto* e = std::get_if<EntityId>(&t.object)) {
      tout << e->id;
    } else {
      const auto& lit = std::get<Literal>(t.object);
      if (lit.kind == LiteralKind::text) {
        tout << escape_quoted(lit.value);
      } else {
        tout << lit.value;
      }
    }
    tout << '\n';
  }
  for (const auto& [id, r] : graph.entities()) {
    json j = {{"id", r.id.id},          {"name", r.canonical_name}, {"aliases", r.aliases},
              {"description", r.description}, {"types", r.types},   {"popularity", r.popularity},
              {"is_cvt", r.is_cvt}};
    eout << j.dump() << '\n';
  }
}

}  // namespace kgqa
