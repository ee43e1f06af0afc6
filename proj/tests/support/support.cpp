#include "support.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <utility>

#include "tact/model.hpp"
#include "tact/scoring.hpp"
#include "tact/subgraph.hpp"

namespace tact::testing {

std::vector<RawTriple> random_triples(Rng& rng, std::size_t entities, std::size_t relations, std::size_t edges,
                                      bool allow_reflexive) {
  std::vector<RawTriple> out;
  while (out.size() < edges) {
    const auto h = rng.below(entities);
    const auto t = rng.below(entities);
    if (h == t && !allow_reflexive) {
      continue;
    }
    out.push_back({"e" + std::to_string(h), "r" + std::to_string(rng.below(relations)), "e" + std::to_string(t)});
  }
  return out;
}

Pattern oracle_pattern(EdgeEnds neighbor, EdgeEnds target) {
  const std::array<EntityId, 4> slots = {neighbor.head, neighbor.tail, target.head, target.tail};
  std::string code;
  std::vector<EntityId> seen;
  for (auto s : slots) {
    auto it = std::find(seen.begin(), seen.end(), s);
    if (it == seen.end()) {
      seen.push_back(s);
      it = seen.end() - 1;
    }
    code += static_cast<char>('0' + (it - seen.begin()));
  }
  static const std::map<std::string, Pattern> table = {
      {"0123", Pattern::NC},   {"0102", Pattern::HH},   {"0120", Pattern::HT},   {"0112", Pattern::TH},
      {"0121", Pattern::TT},   {"0101", Pattern::Para}, {"0110", Pattern::Loop},
  };
  const auto it = table.find(code);
  if (it == table.end()) {
    throw std::invalid_argument("reflexive edge: " + code);
  }
  return it->second;
}

RelationalCorrelationGraph oracle_rcg(const KnowledgeGraph& kg) {
  RelationalCorrelationGraph rcg(kg.num_relations());
  const auto& ts = kg.triples();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    for (std::size_t j = 0; j < ts.size(); ++j) {
      if (i == j || ts[i].reflexive() || ts[j].reflexive()) {
        continue;
      }
      const auto p = oracle_pattern({ts[i].head, ts[i].tail}, {ts[j].head, ts[j].tail});
      if (p != Pattern::NC) {
        rcg.insert(ts[j].rel, p, ts[i].rel);
      }
    }
  }
  return rcg;
}

std::vector<EntityId> oracle_k_hop(const KnowledgeGraph& kg, EntityId node, std::size_t k) {
  const auto n = kg.num_entities();
  std::vector<std::vector<bool>> step(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i) {
    step[i][i] = true;
  }
  for (const auto& t : kg.triples()) {
    step[t.head][t.tail] = true;
    step[t.tail][t.head] = true;
  }
  std::vector<bool> reach(n, false);
  reach[node] = true;
  for (std::size_t hop = 0; hop < k; ++hop) {
    std::vector<bool> next(n, false);
    for (std::size_t i = 0; i < n; ++i) {
      if (!reach[i]) {
        continue;
      }
      for (std::size_t j = 0; j < n; ++j) {
        if (step[i][j]) {
          next[j] = true;
        }
      }
    }
    reach = next;
  }
  std::vector<EntityId> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (reach[i]) {
      out.push_back(static_cast<EntityId>(i));
    }
  }
  return out;
}

ad::Matrix naive_matmul(const ad::Matrix& a, const ad::Matrix& b) {
  if (a.cols != b.rows) {
    throw std::invalid_argument("naive_matmul shape");
  }
  ad::Matrix c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < b.cols; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) {
        s += a(i, k) * b(k, j);
      }
      c(i, j) = s;
    }
  }
  return c;
}

ad::Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double scale) {
  ad::Matrix m(rows, cols);
  for (auto& x : m.data) {
    x = rng.uniform(-scale, scale);
  }
  return m;
}

Dataset family_dataset(std::uint64_t seed, std::size_t people, const std::string& prefix, double held_out) {
  Rng rng(seed);
  std::vector<std::size_t> parent(people, people);
  // contiguous blocks of 6 to 10 people, each one tree rooted at its first member
  Rng tree_rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::size_t block_begin = 0;
  std::size_t block_end = 0;
  for (std::size_t i = 0; i < people; ++i) {
    if (i == block_end) {
      block_begin = i;
      block_end = std::min(people, i + 6 + tree_rng.below(5));
      continue;
    }
    parent[i] = block_begin + tree_rng.below(i - block_begin);
  }

  auto name = [&](std::size_t i) { return prefix + std::to_string(i); };
  std::vector<RawTriple> all;
  for (std::size_t c = 0; c < people; ++c) {
    const auto p = parent[c];
    if (p == people) {
      continue;
    }
    all.push_back({name(p), "parent_of", name(c)});
    all.push_back({name(c), "child_of", name(p)});
    if (parent[p] != people) {
      all.push_back({name(parent[p]), "grandparent_of", name(c)});
      all.push_back({name(c), "grandchild_of", name(parent[p])});
    }
    for (std::size_t s = 0; s < people; ++s) {
      if (s != c && parent[s] == p) {
        all.push_back({name(c), "sibling_of", name(s)});
      }
    }
  }
  rng.shuffle(all);
  Dataset ds;
  const auto n_held = static_cast<std::size_t>(held_out * static_cast<double>(all.size()));
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (i < n_held) {
      ds.test.push_back(all[i]);
    } else if (i < 2 * n_held) {
      ds.valid.push_back(all[i]);
    } else {
      ds.train.push_back(all[i]);
    }
  }
  return ds;
}

void write_dataset(const std::filesystem::path& dir, const Dataset& ds) {
  std::filesystem::create_directories(dir);
  write_triples(dir / "train.txt", ds.train);
  write_triples(dir / "valid.txt", ds.valid);
  write_triples(dir / "test.txt", ds.test);
}

ad::GradCheckResult full_model_grad_check(std::uint64_t seed, std::size_t dim, std::size_t layers, std::size_t hops) {
  const std::vector<RawTriple> raw = {
      {"a", "r0", "b"}, {"b", "r1", "c"}, {"c", "r2", "a"}, {"a", "r1", "d"}, {"d", "r0", "e"}, {"e", "r2", "b"},
      {"f", "r0", "g"}, {"g", "r1", "h"}, {"h", "r2", "f"}, {"b", "r2", "f"}, {"c", "r0", "d"}, {"a", "r0", "b"},
  };
  const auto kg = KnowledgeGraph::build(raw);
  const auto rcg = build_rcg(kg);
  ModelConfig config;
  config.dim = dim;
  config.layers = layers;
  config.hops = hops;
  auto params = ModelParams::shaped(config, kg.num_relations());
  Rng rng(seed);
  initialize(params, dim, rng);
  // Larger weights keep relu inputs away from the kink.
  for (auto& [name, m] : params.named()) {
    for (auto& x : m->data) {
      x *= 3.0;
    }
  }
  std::vector<Triple> positives = {kg.edge(0), kg.edge(4), kg.edge(9)};
  std::vector<Triple> negatives;
  for (const auto& p : positives) {
    negatives.push_back(sample_negatives(kg, p, 1, rng).front());
  }
  std::vector<EnclosingSubgraph> pos_subs;
  std::vector<EnclosingSubgraph> neg_subs;
  for (std::size_t i = 0; i < positives.size(); ++i) {
    pos_subs.push_back(make_enclosing_subgraph(kg, positives[i], hops, dim));
    neg_subs.push_back(make_enclosing_subgraph(kg, negatives[i], hops, dim));
  }
  std::vector<ad::Matrix> flat;
  for (const auto& [name, m] : std::as_const(params).named()) {
    flat.push_back(*m);
  }
  // Large margin keeps every hinge term active. The loss then sits near 150, so
  // central differences carry ~1e-9 of rounding noise; gradients under 1e-4
  // are held to an absolute 1e-8 instead of a relative bound.
  const double margin = 50.0;
  return ad::grad_check(
      [&](ad::Tape&, std::span<const ad::Var> vars) {
        TapeModel model(vars, config, rcg);
        std::vector<ad::Var> pos;
        std::vector<ad::Var> neg;
        for (std::size_t i = 0; i < positives.size(); ++i) {
          pos.push_back(model.score(pos_subs[i], positives[i].rel));
          neg.push_back(model.score(neg_subs[i], negatives[i].rel));
        }
        return hinge_loss(pos, neg, margin);
      },
      flat, 1e-5, 50, seed, 1e-4);
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("tact_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace tact::testing
