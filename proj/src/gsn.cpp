#include "tact/gsn.hpp"

#include <array>
#include <map>

#include "tact/error.hpp"

namespace tact {

using ad::Var;

MessagePlan MessagePlan::build(const EnclosingSubgraph& sub, std::size_t num_relations) {
  std::map<std::uint32_t, std::vector<ad::AggregateEntry>> by_type;
  for (const auto& e : sub.edges) {
    if (e.rel >= num_relations) {
      throw IndexError("subgraph edge relation " + std::to_string(e.rel) + " out of range");
    }
    by_type[e.rel].push_back({e.tail, e.head, 1.0});
    by_type[e.rel + static_cast<std::uint32_t>(num_relations)].push_back({e.head, e.tail, 1.0});
  }
  MessagePlan plan;
  std::vector<std::size_t> in_degree(sub.size());
  for (auto& [type, list] : by_type) {
    std::fill(in_degree.begin(), in_degree.end(), 0);
    for (const auto& m : list) {
      ++in_degree[m.dst];
    }
    for (auto& m : list) {
      m.weight = 1.0 / static_cast<double>(in_degree[m.dst]);
    }
    plan.types.push_back(type);
    plan.entries.push_back(std::move(list));
  }
  return plan;
}

Var rgcn_layer(const MessagePlan& plan, Var features, const GsnLayerVars& layer) {
  const auto n = features.rows();
  Var total = ad::matmul(features, layer.self_weight);
  for (std::size_t k = 0; k < plan.types.size(); ++k) {
    const auto type = plan.types[k];
    if (type >= layer.relation_weights.size()) {
      throw ShapeError("message type " + std::to_string(type) + " has no weight (" +
                       std::to_string(layer.relation_weights.size()) + " available)");
    }
    auto aggregated = ad::aggregate_rows(features, plan.entries[k], n);
    total = ad::add(total, ad::matmul(aggregated, layer.relation_weights[type]));
  }
  return ad::relu(total);
}

SubgraphEncoding encode_subgraph(const EnclosingSubgraph& sub, const std::vector<GsnLayerVars>& layers,
                                 std::size_t dim, std::size_t num_relations) {
  if (layers.empty()) {
    throw ContractError("encode_subgraph: at least one layer is required");
  }
  if (sub.labels.size() != sub.size()) {
    throw ContractError("encode_subgraph: subgraph is not labeled");
  }
  auto& tape = layers.front().self_weight.tape();
  const auto plan = MessagePlan::build(sub, num_relations);
  Var h = tape.constant(ad::Matrix(sub.size(), 2 * dim, init_node_features(sub.labels, dim)));
  for (const auto& layer : layers) {
    h = rgcn_layer(plan, h, layer);
  }
  return {h, ad::mean_rows(h), ad::index_row(h, EnclosingSubgraph::kTargetU),
          ad::index_row(h, EnclosingSubgraph::kTargetV)};
}

Var structure_embedding(Var graph, Var u, Var v) {
  const std::array<Var, 3> parts{graph, u, v};
  return ad::concat_cols(parts);
}

}  // namespace tact
