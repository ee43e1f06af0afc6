#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tact/autodiff.hpp"
#include "tact/kg.hpp"
#include "tact/random.hpp"
#include "tact/rcg.hpp"

namespace tact::testing {

// Uniform random multigraph over entities e0.. and relations r0..
std::vector<RawTriple> random_triples(Rng& rng, std::size_t entities, std::size_t relations, std::size_t edges,
                                      bool allow_reflexive = false);

// Pattern from the partition the four endpoints induce, matched against a
// hand-written table. Independent of classify_pattern.
Pattern oracle_pattern(EdgeEnds neighbor, EdgeEnds target);

// Every ordered pair of distinct irreflexive edges.
RelationalCorrelationGraph oracle_rcg(const KnowledgeGraph& kg);

// Nodes within k undirected hops, from powers of the boolean adjacency matrix.
std::vector<EntityId> oracle_k_hop(const KnowledgeGraph& kg, EntityId node, std::size_t k);

ad::Matrix naive_matmul(const ad::Matrix& a, const ad::Matrix& b);
ad::Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double scale = 1.0);

// Family trees: parent_of, child_of, grandparent_of, grandchild_of, sibling_of.
// Every relation is implied by the tree, so held-out triples are predictable
// from the rest. Entity names carry `prefix` so splits can be disjoint.
struct Dataset {
  std::vector<RawTriple> train;
  std::vector<RawTriple> valid;
  std::vector<RawTriple> test;
};

Dataset family_dataset(std::uint64_t seed, std::size_t people, const std::string& prefix,
                       double held_out = 0.1);
void write_dataset(const std::filesystem::path& dir, const Dataset& ds);

// Finite-difference check of the summed margin loss of the whole model on a
// toy graph (8 entities, 3 relations), every parameter tensor included.
ad::GradCheckResult full_model_grad_check(std::uint64_t seed, std::size_t dim = 8, std::size_t layers = 2,
                                          std::size_t hops = 2);

// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

}  // namespace tact::testing
