#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "tact/kg.hpp"

namespace tact {

// Topological relationship between a neighbor edge and a target edge.
// The first six are the connected patterns; NC is never stored.
enum class Pattern : std::uint8_t { HT = 0, TT, HH, TH, Para, Loop, NC };

inline constexpr std::size_t kPatternCount = 7;
inline constexpr std::size_t kConnectedPatterns = 6;
inline constexpr std::array<Pattern, kConnectedPatterns> kConnected = {
    Pattern::HT, Pattern::TT, Pattern::HH, Pattern::TH, Pattern::Para, Pattern::Loop};

std::string_view pattern_name(Pattern p);
std::optional<Pattern> parse_pattern(std::string_view name);

struct EdgeEnds {
  EntityId head;
  EntityId tail;
};

// Which endpoints the neighbor edge shares with the target edge:
//   PARA  h_n = h_t and t_n = t_t      LOOP  h_n = t_t and t_n = h_t
//   H-H   h_n = h_t                    H-T   h_n = t_t
//   T-H   t_n = h_t                    T-T   t_n = t_t
//   NC    nothing shared
// Both edges must be irreflexive. Endpoints alone cannot tell two parallel
// edges from one edge passed twice; the edge-id overload rejects the latter.
Pattern classify_pattern(EdgeEnds neighbor, EdgeEnds target);
Pattern classify_pattern(const KnowledgeGraph& kg, EdgeId neighbor, EdgeId target);

// For each target relation and connected pattern, the sorted set of neighbor
// relations connected to it in that pattern.
class RelationalCorrelationGraph {
 public:
  using NeighborSets = std::array<std::vector<RelationId>, kConnectedPatterns>;

  RelationalCorrelationGraph() = default;
  explicit RelationalCorrelationGraph(std::size_t relation_count) : sets_(relation_count) {}

  std::size_t relation_count() const { return sets_.size(); }

  const std::vector<RelationId>& neighbors(RelationId target, Pattern p) const;
  bool has(RelationId target, Pattern p, RelationId neighbor) const;

  // Union over the six patterns, sorted.
  std::vector<RelationId> all_neighbors(RelationId target) const;

  // Total number of (target, pattern, neighbor) entries.
  std::size_t size() const;
  std::array<std::size_t, kConnectedPatterns> histogram() const;

  // Inserts and keeps the set sorted; returns false if already present.
  bool insert(RelationId target, Pattern p, RelationId neighbor);

  std::size_t skipped_reflexive() const { return skipped_reflexive_; }
  void set_skipped_reflexive(std::size_t n) { skipped_reflexive_ = n; }

  friend bool operator==(const RelationalCorrelationGraph& a, const RelationalCorrelationGraph& b) {
    return a.sets_ == b.sets_;
  }

 private:
  std::vector<NeighborSets> sets_;
  std::size_t skipped_reflexive_ = 0;
};

// Builds the correlation graph by joining edges on shared entities.
RelationalCorrelationGraph build_rcg(const KnowledgeGraph& kg);

// TSV rows `target<TAB>pattern<TAB>neighbor`, sorted by (target, pattern, neighbor)
// in relation-id order. Relation names come from `relations` when given, ids otherwise.
void export_rcg(const RelationalCorrelationGraph& rcg, const std::filesystem::path& path,
                const Vocab* relations = nullptr);
RelationalCorrelationGraph read_rcg(const std::filesystem::path& path, const Vocab& relations);

void export_pattern_histogram(const RelationalCorrelationGraph& rcg, const std::filesystem::path& path);

}  // namespace tact
