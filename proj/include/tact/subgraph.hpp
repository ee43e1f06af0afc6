#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <vector>

#include "tact/kg.hpp"

namespace tact {

struct LocalEdge {
  std::uint32_t head;
  RelationId rel;
  std::uint32_t tail;

  friend bool operator==(const LocalEdge&, const LocalEdge&) = default;
};

struct NodeLabel {
  std::uint32_t to_u;
  std::uint32_t to_v;

  friend bool operator==(const NodeLabel&, const NodeLabel&) = default;
};

// Enclosing subgraph around a candidate pair. The targets always sit at local
// indices 0 (u) and 1 (v); the remaining nodes are sorted by entity id.
struct EnclosingSubgraph {
  static constexpr std::uint32_t kTargetU = 0;
  static constexpr std::uint32_t kTargetV = 1;

  std::vector<EntityId> nodes;
  std::vector<LocalEdge> edges;
  std::vector<NodeLabel> labels;

  std::size_t size() const { return nodes.size(); }
};

// Undirected BFS up to depth k; includes the seed.
std::vector<EntityId> k_hop_neighbors(const KnowledgeGraph& kg, EntityId node, std::size_t k);

// Node set is (N_k(u) ∩ N_k(v)) ∪ {u, v}; edges are induced, minus every
// instance of `exclude` when given. Nodes farther than k from u or v inside the
// induced subgraph (or unreachable) are pruned, repeating until no node is
// dropped. Labels are left empty; see label_nodes.
EnclosingSubgraph extract_enclosing_subgraph(const KnowledgeGraph& kg, EntityId u, EntityId v, std::size_t k,
                                             const std::optional<Triple>& exclude);

// Double-radius labels: distance to u with v removed, distance to v with u
// removed. Targets are fixed at (0,1) and (1,0). Unreachable or larger
// distances are clamped to `cap`.
std::vector<NodeLabel> label_nodes(const EnclosingSubgraph& sub, std::uint32_t cap);

// Row i is one-hot(to_u) followed by one-hot(to_v), each block of width dim.
// Row-major, |labels| x 2*dim.
std::vector<double> init_node_features(const std::vector<NodeLabel>& labels, std::size_t dim);

// Extraction + labeling with the cap tied to the embedding width (dim - 1).
EnclosingSubgraph make_enclosing_subgraph(const KnowledgeGraph& kg, const Triple& target, std::size_t k,
                                          std::size_t dim, bool exclude_target = true);

// Undirected shortest distances from `source` over the local edges, skipping
// `blocked` (pass sub.size() for none). Unreachable nodes get SIZE_MAX.
std::vector<std::size_t> local_distances(const EnclosingSubgraph& sub, std::uint32_t source, std::uint32_t blocked);

// Debug dump: `edge<TAB>head<TAB>rel<TAB>tail` and `node<TAB>entity<TAB>d_u<TAB>d_v` rows.
void dump_subgraph(const EnclosingSubgraph& sub, const KnowledgeGraph& kg, const std::filesystem::path& path);

}  // namespace tact
