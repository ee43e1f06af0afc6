#pragma once

#include <span>
#include <vector>

#include "tact/autodiff.hpp"
#include "tact/kg.hpp"
#include "tact/params.hpp"
#include "tact/random.hpp"

namespace tact {

// [active parts in order r, g, n] W_S. Unused inputs may be default Vars.
ad::Var score(const ScoreParts& parts, ad::Var relation, ad::Var graph, ad::Var u, ad::Var v, ad::Var weights);

// sum_i max(0, neg_i - pos_{i / n} + margin); negatives grouped per positive.
double hinge_loss(std::span<const double> pos, std::span<const double> neg, double margin);
ad::Var hinge_loss(std::span<const ad::Var> pos, std::span<const ad::Var> neg, double margin);

// Corrupts head or tail (fair coin) with a uniform entity that differs from
// both the replaced value and the other endpoint, so negatives are never
// reflexive. When no such entity exists (a two-entity graph), the negative is
// the reversed triple. Known positives are not filtered out.
std::vector<Triple> sample_negatives(const KnowledgeGraph& kg, const Triple& positive, std::size_t n, Rng& rng);

}  // namespace tact
