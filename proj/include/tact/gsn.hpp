#pragma once

#include <vector>

#include "tact/autodiff.hpp"
#include "tact/params.hpp"
#include "tact/subgraph.hpp"

namespace tact {

struct GsnLayerVars {
  std::vector<ad::Var> relation_weights;  // 2|R|: originals then inverses
  ad::Var self_weight;
};

// Message lists of one subgraph, grouped by message type. An edge (h, r, t)
// sends h -> t with type r and t -> h with type r + |R|. Weights are 1/c_{i,type}.
struct MessagePlan {
  std::vector<std::uint32_t> types;                      // types present, ascending
  std::vector<std::vector<ad::AggregateEntry>> entries;  // parallel to `types`

  static MessagePlan build(const EnclosingSubgraph& sub, std::size_t num_relations);
};

// relu( sum_type Â_type X W_type + X W_0 ). Nodes without incoming messages
// only receive the self-loop term.
ad::Var rgcn_layer(const MessagePlan& plan, ad::Var features, const GsnLayerVars& layer);

struct SubgraphEncoding {
  ad::Var nodes;  // |V| x d after the last layer
  ad::Var graph;  // mean over nodes, 1 x d
  ad::Var u;      // 1 x d
  ad::Var v;      // 1 x d
};

SubgraphEncoding encode_subgraph(const EnclosingSubgraph& sub, const std::vector<GsnLayerVars>& layers,
                                 std::size_t dim, std::size_t num_relations);

// e_G ⊕ e_u ⊕ e_v.
ad::Var structure_embedding(ad::Var graph, ad::Var u, ad::Var v);

}  // namespace tact
