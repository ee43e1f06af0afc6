#include "tact/model.hpp"

#include "tact/error.hpp"
#include "tact/scoring.hpp"

namespace tact {

using ad::Var;

TapeModel::TapeModel(ad::Tape& tape, const ModelParams& params, const ModelConfig& config,
                     const RelationalCorrelationGraph& rcg, bool trainable)
    : tape_(&tape), config_(config), rcg_(&rcg), num_relations_(params.rcn.relations.rows) {
  for (const auto& [name, m] : params.named()) {
    flat_.push_back(trainable ? tape.variable(*m) : tape.constant(*m));
  }
  unpack();
}

TapeModel::TapeModel(std::span<const Var> vars, const ModelConfig& config, const RelationalCorrelationGraph& rcg)
    : tape_(vars.empty() ? nullptr : &vars.front().tape()),
      config_(config),
      rcg_(&rcg),
      num_relations_(vars.empty() ? 0 : vars.front().rows()),
      flat_(vars.begin(), vars.end()) {
  unpack();
}

void TapeModel::unpack() {
  const auto expected = 1 + 2 * kConnectedPatterns + 1 + config_.layers * (2 * num_relations_ + 1) + 1;
  if (flat_.size() != expected) {
    throw ShapeError("model expects " + std::to_string(expected) + " parameter tensors, got " +
                     std::to_string(flat_.size()));
  }
  if (rcg_->relation_count() != num_relations_) {
    throw ShapeError("model covers " + std::to_string(num_relations_) + " relations, correlation graph " +
                     std::to_string(rcg_->relation_count()));
  }
  std::size_t i = 0;
  rcn_.relations = flat_[i++];
  for (std::size_t k = 0; k < kConnectedPatterns; ++k) {
    rcn_.pattern_weights[k] = flat_[i++];
  }
  for (std::size_t k = 0; k < kConnectedPatterns; ++k) {
    rcn_.attention[k] = flat_[i++];
  }
  rcn_.fusion = flat_[i++];
  gsn_.resize(config_.layers);
  for (auto& layer : gsn_) {
    layer.relation_weights.assign(flat_.begin() + static_cast<std::ptrdiff_t>(i),
                                  flat_.begin() + static_cast<std::ptrdiff_t>(i + 2 * num_relations_));
    i += 2 * num_relations_;
    layer.self_weight = flat_[i++];
  }
  score_weights_ = flat_[i++];
}

Var TapeModel::relation_embeddings() {
  if (!relation_embeddings_) {
    relation_embeddings_ = final_relation_embeddings(rcn_, *rcg_, config_.variant);
  }
  return *relation_embeddings_;
}

void TapeModel::use_relation_embeddings(const Matrix& embeddings) {
  if (embeddings.rows != num_relations_ || embeddings.cols != config_.dim) {
    throw ShapeError("relation embeddings have shape " + embeddings.shape_string());
  }
  relation_embeddings_ = tape_->constant(embeddings);
}

SubgraphEncoding TapeModel::encode(const EnclosingSubgraph& sub) {
  return encode_subgraph(sub, gsn_, config_.dim, num_relations_);
}

Var TapeModel::score(RelationId rel, const std::optional<SubgraphEncoding>& encoding) {
  if (rel >= num_relations_) {
    throw IndexError("relation id " + std::to_string(rel) + " out of range");
  }
  if (config_.parts.needs_structure() && !encoding) {
    throw ContractError("score: structural parts requested without a subgraph encoding");
  }
  Var r = config_.parts.use_r ? ad::index_row(relation_embeddings(), rel) : Var{};
  if (!encoding) {
    return tact::score(config_.parts, r, {}, {}, {}, score_weights_);
  }
  return tact::score(config_.parts, r, encoding->graph, encoding->u, encoding->v, score_weights_);
}

Var TapeModel::score(const EnclosingSubgraph& sub, RelationId rel) {
  std::optional<SubgraphEncoding> enc;
  if (config_.parts.needs_structure()) {
    enc = encode(sub);
  }
  return score(rel, enc);
}

std::vector<Matrix> collect_gradients(const ad::Tape& tape, const std::vector<Var>& vars, const ModelParams& params) {
  const auto named = params.named();
  if (named.size() != vars.size()) {
    throw ShapeError("gradient collection: parameter count mismatch");
  }
  std::vector<Matrix> grads;
  grads.reserve(vars.size());
  for (std::size_t k = 0; k < vars.size(); ++k) {
    const auto& g = tape.grad(vars[k]);
    grads.push_back(g.empty() ? Matrix(named[k].second->rows, named[k].second->cols) : g);
  }
  return grads;
}

}  // namespace tact
