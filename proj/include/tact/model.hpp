#pragma once

#include <optional>
#include <vector>

#include "tact/autodiff.hpp"
#include "tact/gsn.hpp"
#include "tact/params.hpp"
#include "tact/rcg.hpp"
#include "tact/rcn.hpp"
#include "tact/subgraph.hpp"

namespace tact {

// The full scoring model recorded on one tape. Parameters are bound as
// variables (trainable) or constants (inference only); relation embeddings are
// computed once per tape and shared by every scored triple.
class TapeModel {
 public:
  TapeModel(ad::Tape& tape, const ModelParams& params, const ModelConfig& config,
            const RelationalCorrelationGraph& rcg, bool trainable);

  // Same, but over caller-provided variables in ModelParams::named() order.
  TapeModel(std::span<const ad::Var> vars, const ModelConfig& config, const RelationalCorrelationGraph& rcg);

  ad::Var relation_embeddings();
  // Binds precomputed relation embeddings (|R| x d) as a tape constant.
  void use_relation_embeddings(const Matrix& embeddings);
  SubgraphEncoding encode(const EnclosingSubgraph& sub);

  // f(u, r, v) for the given labeled subgraph. `encoding` may be reused across
  // relations that share one subgraph.
  ad::Var score(RelationId rel, const std::optional<SubgraphEncoding>& encoding);
  ad::Var score(const EnclosingSubgraph& sub, RelationId rel);

  // Variables in ModelParams::named() order.
  const std::vector<ad::Var>& vars() const { return flat_; }

  const ModelConfig& config() const { return config_; }

 private:
  void unpack();

  ad::Tape* tape_;
  ModelConfig config_;
  const RelationalCorrelationGraph* rcg_;
  std::size_t num_relations_;
  std::vector<ad::Var> flat_;
  RcnVars rcn_;
  std::vector<GsnLayerVars> gsn_;
  ad::Var score_weights_;
  std::optional<ad::Var> relation_embeddings_;
};

// Copies tape gradients of `vars` into matrices shaped like `params`.
std::vector<Matrix> collect_gradients(const ad::Tape& tape, const std::vector<ad::Var>& vars,
                                      const ModelParams& params);

}  // namespace tact
