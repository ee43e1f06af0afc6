#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tact/autodiff.hpp"
#include "tact/random.hpp"
#include "tact/rcg.hpp"

namespace tact {

using ad::Matrix;

// How the relation embedding is formed.
//   Full  relu([r_t ⊕ r_t^N] H) with attention-weighted pattern aggregation
//   NoRA  r_t itself, no neighborhood aggregation
//   NoRC  relu([r_t ⊕ mean of neighbor embeddings] H), patterns ignored
enum class RcnVariant { Full, NoRA, NoRC };

std::string_view variant_name(RcnVariant v);
RcnVariant parse_variant(std::string_view name);

// Which embeddings feed the scoring layer, concatenated in the fixed order
// r (relation), g (graph), n (the two target nodes).
struct ScoreParts {
  bool use_r = true;
  bool use_g = true;
  bool use_n = true;

  static ScoreParts parse(std::string_view spec);  // e.g. "ngr", "r", "gr"
  std::string str() const;                         // canonical "ngr" ordering
  std::size_t width(std::size_t dim) const {
    return dim * (use_r ? 1 : 0) + dim * (use_g ? 1 : 0) + 2 * dim * (use_n ? 1 : 0);
  }
  bool needs_structure() const { return use_g || use_n; }
  friend bool operator==(const ScoreParts&, const ScoreParts&) = default;
};

struct ModelConfig {
  std::size_t dim = 32;
  std::size_t layers = 2;
  std::size_t hops = 2;
  ScoreParts parts;
  RcnVariant variant = RcnVariant::Full;

  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct RcnParams {
  Matrix relations;                                        // |R| x d
  std::array<Matrix, kConnectedPatterns> pattern_weights;  // d x d each
  std::array<Matrix, kConnectedPatterns> attention;        // d x 1 each
  Matrix fusion;                                           // 2d x d
  friend bool operator==(const RcnParams&, const RcnParams&) = default;
};

struct GsnLayer {
  std::vector<Matrix> relation_weights;  // 2|R| entries: originals then inverses
  Matrix self_weight;
  friend bool operator==(const GsnLayer&, const GsnLayer&) = default;
};

struct ModelParams {
  RcnParams rcn;
  std::vector<GsnLayer> gsn;
  Matrix score;  // parts.width(d) x 1

  // Zero-filled parameters with the shapes implied by `config`.
  static ModelParams shaped(const ModelConfig& config, std::size_t num_relations);

  // Every tensor with its checkpoint name, in a fixed order.
  std::vector<std::pair<std::string, Matrix*>> named();
  std::vector<std::pair<std::string, const Matrix*>> named() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// Fills every entry uniformly in [-1/sqrt(d), 1/sqrt(d)], tensors in named() order.
void initialize(ModelParams& params, std::size_t dim, Rng& rng);

}  // namespace tact
