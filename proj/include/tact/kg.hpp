#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tact {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;
using EdgeId = std::uint32_t;

struct Triple {
  EntityId head = 0;
  RelationId rel = 0;
  EntityId tail = 0;

  bool reflexive() const { return head == tail; }
  friend bool operator==(const Triple&, const Triple&) = default;
};

struct RawTriple {
  std::string head;
  std::string rel;
  std::string tail;

  friend bool operator==(const RawTriple&, const RawTriple&) = default;
};

// Bidirectional string <-> dense id map. Ids are handed out in first-seen order.
class Vocab {
 public:
  Vocab() = default;
  explicit Vocab(std::vector<std::string> names);

  std::uint32_t intern(std::string_view name);
  // Returns size() when the name is unknown.
  std::uint32_t find(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name) != size(); }

  const std::string& name(std::uint32_t id) const;
  const std::vector<std::string>& names() const { return names_; }
  std::uint32_t size() const { return static_cast<std::uint32_t>(names_.size()); }

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.names_ == b.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> ids_;
};

// Reads `head<TAB>relation<TAB>tail` lines. Blank lines and lines starting
// with '#' are skipped; no deduplication.
std::vector<RawTriple> load_triples(const std::filesystem::path& path);

// Parses from an in-memory buffer; `source` only labels error messages.
std::vector<RawTriple> parse_triples(std::string_view text, std::string_view source = "<memory>");

void write_triples(const std::filesystem::path& path, std::span<const RawTriple> triples);

// Immutable, interned triple store with head/tail/relation incidence indices.
class KnowledgeGraph {
 public:
  // Relations are interned fresh unless `frozen_relations` is given, in which
  // case every relation string must already be present. Entities are always
  // interned fresh. `extra_entities` are interned after the triples as
  // isolated nodes (used for query entities absent from the fact graph).
  static KnowledgeGraph build(std::span<const RawTriple> raw, const Vocab* frozen_relations = nullptr,
                              std::span<const std::string> extra_entities = {});

  std::size_t num_entities() const { return entities_.size(); }
  std::size_t num_relations() const { return relations_.size(); }
  std::size_t num_edges() const { return triples_.size(); }

  const std::vector<Triple>& triples() const { return triples_; }
  const Triple& edge(EdgeId id) const { return triples_[id]; }

  std::span<const EdgeId> edges_with_head(EntityId node) const;
  std::span<const EdgeId> edges_with_tail(EntityId node) const;
  std::span<const EdgeId> edges_with_relation(RelationId rel) const;

  // Union of head and tail incidence, deduplicated and sorted by edge id.
  std::vector<EdgeId> incident_edges(EntityId node) const;

  // All edge ids carrying exactly this triple (duplicates included).
  std::vector<EdgeId> find_edges(const Triple& t) const;
  bool contains(const Triple& t) const;

  const Vocab& entities() const { return entities_; }
  const Vocab& relations() const { return relations_; }

  // Maps a string triple through this graph's vocabularies; unknown names
  // raise VocabError.
  Triple resolve(const RawTriple& raw) const;
  RawTriple to_raw(const Triple& t) const;
  std::vector<RawTriple> dump() const;

  std::size_t reflexive_count() const { return reflexive_count_; }

 private:
  void check_node(EntityId node) const;

  std::vector<Triple> triples_;
  std::vector<std::vector<EdgeId>> by_head_;
  std::vector<std::vector<EdgeId>> by_tail_;
  std::vector<std::vector<EdgeId>> by_rel_;
  Vocab entities_;
  Vocab relations_;
  std::size_t reflexive_count_ = 0;
};

// A dataset directory holds train/valid/test splits; `valid.txt` is optional.
struct DatasetFiles {
  std::vector<RawTriple> train;
  std::vector<RawTriple> valid;
  std::vector<RawTriple> test;
};

DatasetFiles load_dataset(const std::filesystem::path& dir);

}  // namespace tact
