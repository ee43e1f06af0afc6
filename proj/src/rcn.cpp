#include "tact/rcn.hpp"

#include <cstdio>
#include <fstream>

#include "tact/error.hpp"

namespace tact {

using ad::Matrix;
using ad::Tape;
using ad::Var;

namespace {

std::vector<std::uint8_t> indicator_mask(const RelationalCorrelationGraph& rcg, Pattern p) {
  const auto n = rcg.relation_count();
  std::vector<std::uint8_t> mask(n * n, 0);
  for (RelationId t = 0; t < n; ++t) {
    for (auto i : rcg.neighbors(t, p)) {
      mask[t * n + i] = 1;
    }
  }
  return mask;
}

Matrix to_matrix(std::size_t rows, std::size_t cols, const std::vector<std::uint8_t>& mask) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    m.data[i] = mask[i] ? 1.0 : 0.0;
  }
  return m;
}

void check_relation_count(const RcnVars& vars, const RelationalCorrelationGraph& rcg) {
  if (vars.relations.rows() != rcg.relation_count()) {
    throw ShapeError("relation embedding has " + std::to_string(vars.relations.rows()) +
                     " rows but the correlation graph covers " + std::to_string(rcg.relation_count()) +
                     " relations");
  }
}

std::size_t pattern_slot(Pattern p) {
  if (p == Pattern::NC) {
    throw ContractError("NC has no attention coefficients");
  }
  return static_cast<std::size_t>(p);
}

// Pattern-projected embeddings R W^p and their attention-normalized rows.
struct PatternTerm {
  Var projected;  // |R| x d
  Var weights;    // |R| x |R|
};

PatternTerm pattern_term(const RcnVars& vars, const RelationalCorrelationGraph& rcg, Pattern p) {
  check_relation_count(vars, rcg);
  const auto slot = pattern_slot(p);
  const auto n = rcg.relation_count();
  auto projected = ad::matmul(vars.relations, vars.pattern_weights[slot]);
  auto scores = ad::transpose(ad::matmul(projected, vars.attention[slot]));  // 1 x |R|
  auto weights = ad::masked_softmax(ad::repeat_rows(scores, n), indicator_mask(rcg, p));
  return {projected, weights};
}

}  // namespace

Var attention_matrix(const RcnVars& vars, const RelationalCorrelationGraph& rcg, Pattern p) {
  return pattern_term(vars, rcg, p).weights;
}

Var attention_coeffs(const RcnVars& vars, const RelationalCorrelationGraph& rcg, RelationId target, Pattern p) {
  return ad::index_row(attention_matrix(vars, rcg, p), target);
}

Var neighborhood_embeddings(const RcnVars& vars, const RelationalCorrelationGraph& rcg) {
  auto& tape = vars.relations.tape();
  const auto n = rcg.relation_count();
  std::array<Var, kConnectedPatterns> terms;
  for (std::size_t k = 0; k < kConnectedPatterns; ++k) {
    const auto p = kConnected[k];
    auto term = pattern_term(vars, rcg, p);
    auto indicators = tape.constant(to_matrix(n, n, indicator_mask(rcg, p)));
    terms[k] = ad::matmul(ad::hadamard(indicators, term.weights), term.projected);
  }
  return ad::scale(ad::add_n(terms), 1.0 / static_cast<double>(kConnectedPatterns));
}

Var mean_neighbor_embeddings(const RcnVars& vars, const RelationalCorrelationGraph& rcg) {
  check_relation_count(vars, rcg);
  const auto n = rcg.relation_count();
  Matrix averaging(n, n);
  for (RelationId t = 0; t < n; ++t) {
    const auto neighbors = rcg.all_neighbors(t);
    for (auto i : neighbors) {
      averaging(t, i) = 1.0 / static_cast<double>(neighbors.size());
    }
  }
  return ad::matmul(vars.relations.tape().constant(std::move(averaging)), vars.relations);
}

Var final_relation_embeddings(const RcnVars& vars, const RelationalCorrelationGraph& rcg, RcnVariant variant) {
  switch (variant) {
    case RcnVariant::NoRA:
      return vars.relations;
    case RcnVariant::Full:
      return ad::relu(ad::matmul(ad::concat_cols(vars.relations, neighborhood_embeddings(vars, rcg)), vars.fusion));
    case RcnVariant::NoRC:
      return ad::relu(ad::matmul(ad::concat_cols(vars.relations, mean_neighbor_embeddings(vars, rcg)), vars.fusion));
  }
  throw ConfigError("unknown relation embedding variant");
}

RcnVars bind_constant(Tape& tape, const RcnParams& params) {
  RcnVars v;
  v.relations = tape.constant(params.relations);
  for (std::size_t k = 0; k < kConnectedPatterns; ++k) {
    v.pattern_weights[k] = tape.constant(params.pattern_weights[k]);
    v.attention[k] = tape.constant(params.attention[k]);
  }
  v.fusion = tape.constant(params.fusion);
  return v;
}

Matrix attention_coeffs(const RcnParams& params, const RelationalCorrelationGraph& rcg, RelationId target, Pattern p) {
  Tape tape;
  return attention_coeffs(bind_constant(tape, params), rcg, target, p).value();
}

Matrix neighborhood_embedding(const RcnParams& params, const RelationalCorrelationGraph& rcg, RelationId target) {
  Tape tape;
  return ad::index_row(neighborhood_embeddings(bind_constant(tape, params), rcg), target).value();
}

Matrix final_relation_embedding(const RcnParams& params, const RelationalCorrelationGraph& rcg, RelationId target,
                                RcnVariant variant) {
  Tape tape;
  return ad::index_row(final_relation_embeddings(bind_constant(tape, params), rcg, variant), target).value();
}

void export_attention(const RcnParams& params, const RelationalCorrelationGraph& rcg, const Vocab& relations,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  Tape tape;
  const auto vars = bind_constant(tape, params);
  char buf[64];
  for (auto p : kConnected) {
    const auto& weights = attention_matrix(vars, rcg, p).value();
    for (RelationId t = 0; t < rcg.relation_count(); ++t) {
      for (auto i : rcg.neighbors(t, p)) {
        std::snprintf(buf, sizeof buf, "%.17g", weights(t, i));
        out << relations.name(t) << '\t' << pattern_name(p) << '\t' << relations.name(i) << '\t' << buf << '\n';
      }
    }
  }
  if (!out) {
    throw IoError("error writing " + path.string());
  }
}

}  // namespace tact
