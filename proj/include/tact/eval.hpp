#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tact/kg.hpp"
#include "tact/training.hpp"

namespace tact {

// Average precision over all scores sorted descending. Ties put negatives
// first. Both lists must be non-empty.
double auc_pr(std::span<const double> pos, std::span<const double> neg);

// 1 + (#candidates scoring strictly higher) + (#ties) / 2. `candidates`
// excludes the ground truth itself.
double tie_averaged_rank(double truth, std::span<const double> candidates);

inline constexpr std::array<std::size_t, 3> kHitsAt = {1, 5, 10};

struct RankMetrics {
  double mrr = 0.0;
  std::array<double, 3> hits{};  // at kHitsAt
};

RankMetrics mrr_hits(std::span<const double> ranks);

// Scores of every relation for one entity pair; index = relation id.
// Entries the caller marks as filtered may be left unscored.
using RelationScorer = std::function<std::vector<double>(EntityId u, EntityId v, const std::vector<bool>& wanted)>;

// Filtered rank of `query.rel` among all relations: competitors r' with
// (u, r', v) in `known` are dropped.
double relation_rank(const RelationScorer& scorer, const std::function<bool(const Triple&)>& known,
                     const Triple& query, std::size_t num_relations);

enum class Metric { AucPr, Rank, Both };
Metric parse_metric(std::string_view name);
std::string_view metric_name(Metric m);

enum class FrequencySource { FactGraph, TrainGraph };

struct EvalOptions {
  Metric metric = Metric::Both;
  std::uint64_t seed = 0;  // AUC-PR negatives
  std::size_t threads = 1;
};

struct EvalReport {
  std::optional<double> auc_pr;
  std::optional<RankMetrics> ranking;
  std::vector<double> ranks;  // per query, ranking metric only
  std::size_t n_queries = 0;
  std::size_t skipped_reflexive = 0;
  std::uint64_t seed = 0;
};

// Model evaluation on `facts` (the graph subgraphs are drawn from). Queries
// are scored with their own triple removed from the subgraph; the ranking
// filter is facts + queries + `extra_known`. Reflexive queries are skipped.
EvalReport evaluate_model(const Checkpoint& ckpt, const KnowledgeGraph& facts, std::span<const Triple> queries,
                          std::span<const Triple> extra_known, const EvalOptions& options);

// Relation counts used by the frequency baseline.
std::vector<double> relation_frequencies(std::span<const Triple> triples, std::size_t num_relations);

// Ranks every query's relation by `frequencies` with the same filter as
// evaluate_model. Only the ranking metric is produced.
EvalReport frequency_baseline(const std::vector<double>& frequencies, const KnowledgeGraph& facts,
                              std::span<const Triple> queries, std::span<const Triple> extra_known);

// Runs body(i) for i in [0, n) on up to `threads` workers. Each index is
// visited once; results must be written to per-index slots.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body);

void write_metrics_json(const EvalReport& report, const std::filesystem::path& path);
void write_metrics_tsv(const EvalReport& report, const std::filesystem::path& path);
std::string metrics_json(const EvalReport& report);

}  // namespace tact
