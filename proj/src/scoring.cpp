#include "tact/scoring.hpp"

#include <algorithm>

#include "tact/error.hpp"

namespace tact {

using ad::Var;

Var score(const ScoreParts& parts, Var relation, Var graph, Var u, Var v, Var weights) {
  std::vector<Var> inputs;
  if (parts.use_r) {
    inputs.push_back(relation);
  }
  if (parts.use_g) {
    inputs.push_back(graph);
  }
  if (parts.use_n) {
    inputs.push_back(u);
    inputs.push_back(v);
  }
  if (inputs.empty()) {
    throw ConfigError("score: no active parts");
  }
  auto joined = inputs.size() == 1 ? inputs.front() : ad::concat_cols(inputs);
  if (joined.cols() != weights.rows() || weights.cols() != 1) {
    throw ShapeError("score: input width " + std::to_string(joined.cols()) + " does not match weights " +
                     weights.value().shape_string());
  }
  return ad::matmul(joined, weights);
}

namespace {

std::size_t group_size(std::size_t pos, std::size_t neg) {
  if (pos == 0) {
    if (neg != 0) {
      throw ContractError("hinge_loss: negatives without positives");
    }
    return 0;
  }
  if (neg % pos != 0) {
    throw ContractError("hinge_loss: " + std::to_string(neg) + " negatives cannot be grouped evenly over " +
                        std::to_string(pos) + " positives");
  }
  return neg / pos;
}

}  // namespace

double hinge_loss(std::span<const double> pos, std::span<const double> neg, double margin) {
  const auto n = group_size(pos.size(), neg.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < neg.size(); ++i) {
    loss += std::max(0.0, neg[i] - pos[i / n] + margin);
  }
  return loss;
}

Var hinge_loss(std::span<const Var> pos, std::span<const Var> neg, double margin) {
  const auto n = group_size(pos.size(), neg.size());
  if (neg.empty()) {
    throw ContractError("hinge_loss: empty batch");
  }
  Var total;
  for (std::size_t i = 0; i < neg.size(); ++i) {
    auto term = ad::relu(ad::add_scalar(ad::sub(neg[i], pos[i / n]), margin));
    total = i == 0 ? term : ad::add(total, term);
  }
  return total;
}

std::vector<Triple> sample_negatives(const KnowledgeGraph& kg, const Triple& positive, std::size_t n, Rng& rng) {
  const auto ne = kg.num_entities();
  if (ne < 2) {
    throw ContractError("sample_negatives: need at least two entities");
  }
  std::vector<Triple> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool corrupt_head = rng.coin();
    const EntityId original = corrupt_head ? positive.head : positive.tail;
    const EntityId other = corrupt_head ? positive.tail : positive.head;
    // Candidates exclude `original` and `other` (one id when they coincide).
    const std::size_t excluded = original == other ? 1 : 2;
    if (ne <= excluded) {
      out.push_back({positive.tail, positive.rel, positive.head});
      continue;
    }
    // Map a draw from [0, ne - excluded) onto the ids that remain.
    auto pick = static_cast<EntityId>(rng.below(ne - excluded));
    const EntityId lo = std::min(original, other);
    const EntityId hi = std::max(original, other);
    if (pick >= lo) {
      ++pick;
    }
    if (excluded == 2 && pick >= hi) {
      ++pick;
    }
    Triple t = positive;
    (corrupt_head ? t.head : t.tail) = pick;
    out.push_back(t);
  }
  return out;
}

}  // namespace tact
