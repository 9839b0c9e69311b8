// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kgqa/term.hpp"

namespace kgqa {

struct Triple {
  EntityId subject;
  std::string predicate;
  Value object;

  friend auto operator<=>(const Triple&, const Triple&) = default;
};

struct EntityRecord {
  EntityId id;
  std::string canonical_name;
  std::vector<std::string> aliases;
  std::string description;
  std::vector<std::string> types;
  std::uint64_t popularity = 0;
  bool is_cvt = false;

  friend bool operator==(const EntityRecord&, const EntityRecord&) = default;
};

struct EntityMatch {
  const EntityRecord* record = nullptr;
  double score = 0.0;  // in [0,1]
};

enum class Direction { outgoing, incoming, both };

struct Edge {
  std::string predicate;
  Value neighbor;
  bool incoming = false;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Lowercase, strip ASCII punctuation, collapse whitespace.
std::string normalize_name(std::string_view s);

/// Immutable indexed triple store. Terms are interned into dense ids; the
/// SPO, POS and OSP permutations are sorted arrays searched by prefix.
class KnowledgeGraph {
 public:
  using TermId = std::uint32_t;

  struct IdTriple {
    TermId s, p, o;
    friend auto operator<=>(const IdTriple&, const IdTriple&) = default;
  };

  KnowledgeGraph() = default;

  /// Deduplicates triples; creates a minimal record (popularity 0, name = id)
  /// for every entity id used in a triple but absent from `records`.
  static KnowledgeGraph build(std::vector<Triple> triples, std::vector<EntityRecord> records);

  std::size_t triple_count() const { return spo_.size(); }
  std::size_t entity_count() const { return entities_.size(); }
  std::size_t name_index_size() const { return name_index_.size(); }

  const EntityRecord* entity(std::string_view id) const;
  const std::map<std::string, EntityRecord, std::less<>>& entities() const { return entities_; }

  /// Triples in sorted (subject, predicate, object) order.
  std::vector<Triple> triples() const;

  /// Ranked surface-name lookup: exact normalized match, then token overlap,
  /// then edit similarity; ties by descending popularity, then id.
  std::vector<EntityMatch> find_entities(std::string_view surface_name, std::size_t limit) const;

  /// Throws UnknownEntityError for ids that are not graph entities.
  std::vector<Edge> neighbors(const EntityId& node, Direction direction) const;

  /// Number of triples using `predicate`.
  std::size_t predicate_frequency(std::string_view predicate) const;

  // Term-level access used by the query executor.
  std::optional<TermId> lookup(const Value& v) const;
  std::optional<TermId> lookup_predicate(std::string_view p) const;
  const Value& term(TermId id) const { return terms_[id]; }
  std::size_t term_count() const { return terms_.size(); }

  /// All triples matching the bound positions, as a contiguous index range.
  std::span<const IdTriple> match(std::optional<TermId> s, std::optional<TermId> p,
                                  std::optional<TermId> o) const;

 private:
  TermId intern(const Value& v);

  std::vector<Value> terms_;
  std::unordered_map<std::string, TermId> term_ids_;  // kind-tagged key
  // Same triples under three sort orders: (s,p,o), (p,o,s), (o,s,p).
  std::vector<IdTriple> spo_;
  std::vector<IdTriple> pos_;
  std::vector<IdTriple> osp_;
  std::map<std::string, EntityRecord, std::less<>> entities_;
  std::map<std::string, std::vector<std::string>, std::less<>> name_index_;
};

/// Reads the tab-separated triples file and the JSON Lines entities file.
/// Throws NotFoundError for missing files and LoadError for malformed lines.
KnowledgeGraph load_graph(const std::filesystem::path& triples_path,
                          const std::filesystem::path& entities_path);

/// Writes both files so that load_graph reproduces the same graph.
void save_graph(const KnowledgeGraph& graph, const std::filesystem::path& triples_path,
                const std::filesystem::path& entities_path);

/// Parses one triples-file line; nullopt for blank and comment lines.
std::optional<Triple> parse_triple_line(std::string_view line);

}  // namespace kgqa
