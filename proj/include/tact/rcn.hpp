#pragma once

#include <array>
#include <filesystem>

#include "tact/autodiff.hpp"
#include "tact/params.hpp"
#include "tact/rcg.hpp"

namespace tact {

// RCN parameters recorded on a tape.
struct RcnVars {
  ad::Var relations;
  std::array<ad::Var, kConnectedPatterns> pattern_weights;
  std::array<ad::Var, kConnectedPatterns> attention;
  ad::Var fusion;
};

// Correlation coefficients for every target at once: row t holds the
// coefficients of target t over all |R| relations for pattern `p`
// (|R| x |R|). Scores are (R[i] W^p) . a^p; rows are softmax-normalized over
// the indicator set and zero where the set is empty.
ad::Var attention_matrix(const RcnVars& vars, const RelationalCorrelationGraph& rcg, Pattern p);

// Single-target slice of attention_matrix (1 x |R|).
ad::Var attention_coeffs(const RcnVars& vars, const RelationalCorrelationGraph& rcg, RelationId target, Pattern p);

// r^N for all targets (|R| x d): (1/6) sum_p (N^p ∘ Λ^p) R W^p. Patterns with an
// empty indicator set contribute zeros but still count toward the 1/6.
ad::Var neighborhood_embeddings(const RcnVars& vars, const RelationalCorrelationGraph& rcg);

// Unweighted mean of neighbor embeddings over the union of all six indicator
// sets (|R| x d); zero rows for relations without neighbors.
ad::Var mean_neighbor_embeddings(const RcnVars& vars, const RelationalCorrelationGraph& rcg);

// r^F for all relations (|R| x d) under the chosen variant.
ad::Var final_relation_embeddings(const RcnVars& vars, const RelationalCorrelationGraph& rcg, RcnVariant variant);

// Plain-value conveniences (no gradients).
Matrix attention_coeffs(const RcnParams& params, const RelationalCorrelationGraph& rcg, RelationId target, Pattern p);
Matrix neighborhood_embedding(const RcnParams& params, const RelationalCorrelationGraph& rcg, RelationId target);
Matrix final_relation_embedding(const RcnParams& params, const RelationalCorrelationGraph& rcg, RelationId target,
                                RcnVariant variant);

RcnVars bind_constant(ad::Tape& tape, const RcnParams& params);

// TSV rows `target<TAB>pattern<TAB>neighbor<TAB>coefficient` for every
// non-empty indicator set, coefficients printed with 17 significant digits.
void export_attention(const RcnParams& params, const RelationalCorrelationGraph& rcg, const Vocab& relations,
                      const std::filesystem::path& path);

}  // namespace tact
