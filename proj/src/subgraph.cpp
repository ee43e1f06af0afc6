#include "tact/subgraph.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <limits>
#include <unordered_map>

#include "tact/error.hpp"

namespace tact {

namespace {

constexpr std::size_t kUnreachable = std::numeric_limits<std::size_t>::max();

struct Induced {
  std::vector<EntityId> nodes;
  std::vector<LocalEdge> edges;
};

// `others` must be sorted and must not contain u or v.
Induced induce(const KnowledgeGraph& kg, EntityId u, EntityId v, const std::vector<EntityId>& others,
               const std::optional<Triple>& exclude) {
  Induced out;
  out.nodes.reserve(others.size() + 2);
  out.nodes.push_back(u);
  out.nodes.push_back(v);
  out.nodes.insert(out.nodes.end(), others.begin(), others.end());

  std::unordered_map<EntityId, std::uint32_t> local;
  local.reserve(out.nodes.size() * 2);
  for (std::uint32_t i = 0; i < out.nodes.size(); ++i) {
    local.emplace(out.nodes[i], i);
  }
  std::vector<EdgeId> ids;
  for (auto n : out.nodes) {
    for (auto id : kg.edges_with_head(n)) {
      const auto& t = kg.edge(id);
      if (local.count(t.tail) != 0 && !(exclude && t == *exclude)) {
        ids.push_back(id);
      }
    }
  }
  std::sort(ids.begin(), ids.end());
  out.edges.reserve(ids.size());
  for (auto id : ids) {
    const auto& t = kg.edge(id);
    out.edges.push_back({local.at(t.head), t.rel, local.at(t.tail)});
  }
  return out;
}

std::vector<std::size_t> bfs(std::size_t n, const std::vector<LocalEdge>& edges, std::uint32_t source,
                             std::uint32_t blocked) {
  std::vector<std::vector<std::uint32_t>> adj(n);
  for (const auto& e : edges) {
    if (e.head == blocked || e.tail == blocked) {
      continue;
    }
    adj[e.head].push_back(e.tail);
    adj[e.tail].push_back(e.head);
  }
  std::vector<std::size_t> dist(n, kUnreachable);
  std::deque<std::uint32_t> queue{source};
  dist[source] = 0;
  while (!queue.empty()) {
    const auto x = queue.front();
    queue.pop_front();
    for (auto y : adj[x]) {
      if (dist[y] == kUnreachable) {
        dist[y] = dist[x] + 1;
        queue.push_back(y);
      }
    }
  }
  return dist;
}

}  // namespace

std::vector<EntityId> k_hop_neighbors(const KnowledgeGraph& kg, EntityId node, std::size_t k) {
  if (k < 1) {
    throw ContractError("k_hop_neighbors: k must be >= 1");
  }
  if (node >= kg.num_entities()) {
    throw IndexError("entity id " + std::to_string(node) + " out of range");
  }
  std::unordered_map<EntityId, std::size_t> depth{{node, 0}};
  std::vector<EntityId> frontier{node};
  for (std::size_t level = 1; level <= k && !frontier.empty(); ++level) {
    std::vector<EntityId> next;
    for (auto x : frontier) {
      auto visit = [&](EntityId y) {
        if (depth.emplace(y, level).second) {
          next.push_back(y);
        }
      };
      for (auto id : kg.edges_with_head(x)) {
        visit(kg.edge(id).tail);
      }
      for (auto id : kg.edges_with_tail(x)) {
        visit(kg.edge(id).head);
      }
    }
    frontier = std::move(next);
  }
  std::vector<EntityId> out;
  out.reserve(depth.size());
  for (const auto& [e, d] : depth) {
    out.push_back(e);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> local_distances(const EnclosingSubgraph& sub, std::uint32_t source, std::uint32_t blocked) {
  return bfs(sub.size(), sub.edges, source, blocked);
}

EnclosingSubgraph extract_enclosing_subgraph(const KnowledgeGraph& kg, EntityId u, EntityId v, std::size_t k,
                                             const std::optional<Triple>& exclude) {
  if (u == v) {
    throw ContractError("extract_enclosing_subgraph: u and v must differ");
  }
  const auto nu = k_hop_neighbors(kg, u, k);
  const auto nv = k_hop_neighbors(kg, v, k);
  std::vector<EntityId> common;
  std::set_intersection(nu.begin(), nu.end(), nv.begin(), nv.end(), std::back_inserter(common));
  std::erase_if(common, [&](EntityId e) { return e == u || e == v; });

  auto induced = induce(kg, u, v, common, exclude);
  while (true) {
    const auto n = induced.nodes.size();
    const auto du = bfs(n, induced.edges, EnclosingSubgraph::kTargetU, static_cast<std::uint32_t>(n));
    const auto dv = bfs(n, induced.edges, EnclosingSubgraph::kTargetV, static_cast<std::uint32_t>(n));
    std::vector<EntityId> kept;
    for (std::size_t i = 2; i < n; ++i) {
      if (du[i] <= k && dv[i] <= k) {
        kept.push_back(induced.nodes[i]);
      }
    }
    if (kept.size() + 2 == n) {
      break;
    }
    induced = induce(kg, u, v, kept, exclude);
  }

  EnclosingSubgraph sub;
  sub.nodes = std::move(induced.nodes);
  sub.edges = std::move(induced.edges);
  return sub;
}

std::vector<NodeLabel> label_nodes(const EnclosingSubgraph& sub, std::uint32_t cap) {
  const auto n = sub.size();
  const auto du = bfs(n, sub.edges, EnclosingSubgraph::kTargetU, EnclosingSubgraph::kTargetV);
  const auto dv = bfs(n, sub.edges, EnclosingSubgraph::kTargetV, EnclosingSubgraph::kTargetU);
  auto clamp = [cap](std::size_t d) {
    return d == kUnreachable || d > cap ? cap : static_cast<std::uint32_t>(d);
  };
  std::vector<NodeLabel> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = {clamp(du[i]), clamp(dv[i])};
  }
  labels[EnclosingSubgraph::kTargetU] = {0, std::min<std::uint32_t>(1, cap)};
  labels[EnclosingSubgraph::kTargetV] = {std::min<std::uint32_t>(1, cap), 0};
  return labels;
}

std::vector<double> init_node_features(const std::vector<NodeLabel>& labels, std::size_t dim) {
  std::vector<double> features(labels.size() * 2 * dim, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].to_u >= dim || labels[i].to_v >= dim) {
      throw ContractError("init_node_features: label (" + std::to_string(labels[i].to_u) + "," +
                          std::to_string(labels[i].to_v) + ") does not fit width " + std::to_string(dim));
    }
    features[i * 2 * dim + labels[i].to_u] = 1.0;
    features[i * 2 * dim + dim + labels[i].to_v] = 1.0;
  }
  return features;
}

EnclosingSubgraph make_enclosing_subgraph(const KnowledgeGraph& kg, const Triple& target, std::size_t k,
                                          std::size_t dim, bool exclude_target) {
  if (dim < 2) {
    throw ContractError("embedding width must be at least 2 to hold the target labels");
  }
  auto sub = extract_enclosing_subgraph(kg, target.head, target.tail, k,
                                        exclude_target ? std::optional<Triple>(target) : std::nullopt);
  sub.labels = label_nodes(sub, static_cast<std::uint32_t>(dim - 1));
  return sub;
}

void dump_subgraph(const EnclosingSubgraph& sub, const KnowledgeGraph& kg, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  for (std::size_t i = 0; i < sub.size(); ++i) {
    out << "node\t" << kg.entities().name(sub.nodes[i]);
    if (i < sub.labels.size()) {
      out << '\t' << sub.labels[i].to_u << '\t' << sub.labels[i].to_v;
    }
    out << '\n';
  }
  for (const auto& e : sub.edges) {
    out << "edge\t" << kg.entities().name(sub.nodes[e.head]) << '\t' << kg.relations().name(e.rel) << '\t'
        << kg.entities().name(sub.nodes[e.tail]) << '\n';
  }
}

}  // namespace tact
