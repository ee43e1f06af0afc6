#include "tact/eval.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include <json.hpp>

#include "tact/error.hpp"
#include "tact/model.hpp"
#include "tact/random.hpp"
#include "tact/rcg.hpp"
#include "tact/scoring.hpp"
#include "tact/subgraph.hpp"

namespace tact {

double auc_pr(std::span<const double> pos, std::span<const double> neg) {
  if (pos.empty() || neg.empty()) {
    throw ContractError("auc_pr: need at least one positive and one negative score");
  }
  // (score, is_positive); descending score, negatives before positives on ties
  std::vector<std::pair<double, bool>> all;
  all.reserve(pos.size() + neg.size());
  for (double s : pos) {
    all.emplace_back(s, true);
  }
  for (double s : neg) {
    all.emplace_back(s, false);
  }
  for (const auto& [s, p] : all) {
    if (std::isnan(s)) {
      throw NumericError("auc_pr: NaN score");
    }
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) {
      return a.first > b.first;
    }
    return !a.second && b.second;
  });
  // each positive raises recall by 1/|pos|
  const double recall_step = 1.0 / static_cast<double>(pos.size());
  double ap = 0.0;
  std::size_t seen_pos = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i].second) {
      ++seen_pos;
      ap += recall_step * (static_cast<double>(seen_pos) / static_cast<double>(i + 1));
    }
  }
  return ap;
}

double tie_averaged_rank(double truth, std::span<const double> candidates) {
  std::size_t higher = 0;
  std::size_t ties = 0;
  for (double s : candidates) {
    if (s > truth) {
      ++higher;
    } else if (s == truth) {
      ++ties;
    }
  }
  return 1.0 + static_cast<double>(higher) + static_cast<double>(ties) / 2.0;
}

RankMetrics mrr_hits(std::span<const double> ranks) {
  if (ranks.empty()) {
    throw ContractError("mrr_hits: no ranks");
  }
  RankMetrics m;
  for (double r : ranks) {
    if (!(r >= 1.0)) {
      throw ContractError("mrr_hits: rank " + std::to_string(r) + " is below 1");
    }
    m.mrr += 1.0 / r;
    for (std::size_t k = 0; k < kHitsAt.size(); ++k) {
      if (r <= static_cast<double>(kHitsAt[k])) {
        m.hits[k] += 1.0;
      }
    }
  }
  const auto n = static_cast<double>(ranks.size());
  m.mrr /= n;
  for (auto& h : m.hits) {
    h /= n;
  }
  return m;
}

double relation_rank(const RelationScorer& scorer, const std::function<bool(const Triple&)>& known,
                     const Triple& query, std::size_t num_relations) {
  if (query.rel >= num_relations) {
    throw IndexError("relation id " + std::to_string(query.rel) + " out of range");
  }
  std::vector<bool> wanted(num_relations, false);
  for (RelationId r = 0; r < num_relations; ++r) {
    wanted[r] = r == query.rel || !known({query.head, r, query.tail});
  }
  const auto scores = scorer(query.head, query.tail, wanted);
  std::vector<double> competitors;
  for (RelationId r = 0; r < num_relations; ++r) {
    if (wanted[r] && r != query.rel) {
      competitors.push_back(scores[r]);
    }
  }
  return tie_averaged_rank(scores[query.rel], competitors);
}

Metric parse_metric(std::string_view name) {
  if (name == "auc-pr") {
    return Metric::AucPr;
  }
  if (name == "rank") {
    return Metric::Rank;
  }
  if (name == "both") {
    return Metric::Both;
  }
  throw ConfigError("unknown metric '" + std::string(name) + "' (expected auc-pr, rank or both)");
}

std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::AucPr:
      return "auc-pr";
    case Metric::Rank:
      return "rank";
    case Metric::Both:
      return "both";
  }
  return "?";
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body) {
  const auto workers = std::min(std::max<std::size_t>(threads, 1), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      body(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const auto i = next.fetch_add(1);
        if (i >= n) {
          return;
        }
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) {
            failure = std::current_exception();
          }
          next = n;
          return;
        }
      }
    });
  }
  for (auto& t : pool) {
    t.join();
  }
  if (failure) {
    std::rethrow_exception(failure);
  }
}

namespace {

class KnownTriples {
 public:
  void add(std::span<const Triple> ts) {
    for (const auto& t : ts) {
      set_.insert({t.head, t.rel, t.tail});
    }
  }
  bool operator()(const Triple& t) const { return set_.count({t.head, t.rel, t.tail}) != 0; }

 private:
  std::set<std::array<std::uint32_t, 3>> set_;
};

KnownTriples known_triples(const KnowledgeGraph& facts, std::span<const Triple> queries,
                           std::span<const Triple> extra) {
  KnownTriples known;
  known.add(facts.triples());
  known.add(queries);
  known.add(extra);
  return known;
}

}  // namespace

EvalReport evaluate_model(const Checkpoint& ckpt, const KnowledgeGraph& facts, std::span<const Triple> queries,
                          std::span<const Triple> extra_known, const EvalOptions& options) {
  ckpt.validate();
  if (facts.relations() != ckpt.relations) {
    throw CheckpointError("relation vocabulary of the evaluation graph differs from the checkpoint");
  }
  EvalReport report;
  report.seed = options.seed;

  std::vector<Triple> kept;
  for (const auto& q : queries) {
    if (q.reflexive()) {
      ++report.skipped_reflexive;
    } else {
      kept.push_back(q);
    }
  }
  report.n_queries = kept.size();
  if (kept.empty()) {
    throw ContractError("evaluation: no irreflexive queries");
  }

  const auto& config = ckpt.model;
  const auto rcg = build_rcg(facts);
  Matrix relation_embeddings;
  if (config.parts.use_r) {
    ad::Tape tape;
    TapeModel model(tape, ckpt.params, config, rcg, false);
    relation_embeddings = model.relation_embeddings().value();
  }
  const auto known = known_triples(facts, kept, extra_known);
  const auto num_relations = facts.num_relations();

  // Scores (u, r, v) for each wanted r. The subgraph drops (u, r, v) itself,
  // so relations absent from the fact graph share one encoding.
  auto score_pair = [&](EntityId u, EntityId v, const std::vector<bool>& wanted) {
    ad::Tape tape;
    TapeModel model(tape, ckpt.params, config, rcg, false);
    if (config.parts.use_r) {
      model.use_relation_embeddings(relation_embeddings);
    }
    std::vector<double> out(wanted.size(), 0.0);
    std::optional<SubgraphEncoding> shared;
    for (RelationId r = 0; r < wanted.size(); ++r) {
      if (!wanted[r]) {
        continue;
      }
      if (!config.parts.needs_structure()) {
        out[r] = model.score(r, std::nullopt).scalar();
        continue;
      }
      const Triple t{u, r, v};
      if (facts.contains(t)) {
        out[r] = model.score(make_enclosing_subgraph(facts, t, config.hops, config.dim), r).scalar();
        continue;
      }
      if (!shared) {
        shared = model.encode(make_enclosing_subgraph(facts, t, config.hops, config.dim));
      }
      out[r] = model.score(r, shared).scalar();
    }
    return out;
  };
  auto score_one = [&](const Triple& t) {
    std::vector<bool> wanted(num_relations, false);
    wanted[t.rel] = true;
    return score_pair(t.head, t.tail, wanted)[t.rel];
  };

  if (options.metric != Metric::Rank) {
    Rng rng(options.seed);
    std::vector<Triple> negatives;
    negatives.reserve(kept.size());
    for (const auto& q : kept) {
      negatives.push_back(sample_negatives(facts, q, 1, rng).front());
    }
    std::vector<double> pos(kept.size());
    std::vector<double> neg(kept.size());
    parallel_for(kept.size(), options.threads, [&](std::size_t i) {
      pos[i] = score_one(kept[i]);
      neg[i] = score_one(negatives[i]);
    });
    report.auc_pr = auc_pr(pos, neg);
  }
  if (options.metric != Metric::AucPr) {
    report.ranks.assign(kept.size(), 0.0);
    const RelationScorer scorer = score_pair;
    const std::function<bool(const Triple&)> is_known = std::cref(known);
    parallel_for(kept.size(), options.threads, [&](std::size_t i) {
      report.ranks[i] = relation_rank(scorer, is_known, kept[i], num_relations);
    });
    report.ranking = mrr_hits(report.ranks);
  }
  return report;
}

std::vector<double> relation_frequencies(std::span<const Triple> triples, std::size_t num_relations) {
  std::vector<double> freq(num_relations, 0.0);
  for (const auto& t : triples) {
    if (t.rel >= num_relations) {
      throw IndexError("relation id " + std::to_string(t.rel) + " out of range");
    }
    freq[t.rel] += 1.0;
  }
  return freq;
}

EvalReport frequency_baseline(const std::vector<double>& frequencies, const KnowledgeGraph& facts,
                              std::span<const Triple> queries, std::span<const Triple> extra_known) {
  if (frequencies.size() != facts.num_relations()) {
    throw ShapeError("frequency table covers " + std::to_string(frequencies.size()) + " relations, graph " +
                     std::to_string(facts.num_relations()));
  }
  if (queries.empty()) {
    throw ContractError("frequency baseline: no queries");
  }
  const auto known = known_triples(facts, queries, extra_known);
  const RelationScorer scorer = [&](EntityId, EntityId, const std::vector<bool>&) { return frequencies; };
  const std::function<bool(const Triple&)> is_known = std::cref(known);
  EvalReport report;
  report.n_queries = queries.size();
  for (const auto& q : queries) {
    report.ranks.push_back(relation_rank(scorer, is_known, q, frequencies.size()));
  }
  report.ranking = mrr_hits(report.ranks);
  return report;
}

std::string metrics_json(const EvalReport& report) {
  using nlohmann::json;
  json doc;
  doc["auc_pr"] = report.auc_pr ? json(*report.auc_pr) : json(nullptr);
  doc["mrr"] = report.ranking ? json(report.ranking->mrr) : json(nullptr);
  json hits = json::object();
  for (std::size_t k = 0; k < kHitsAt.size(); ++k) {
    hits[std::to_string(kHitsAt[k])] = report.ranking ? json(report.ranking->hits[k]) : json(nullptr);
  }
  doc["hits"] = hits;
  doc["n_queries"] = report.n_queries;
  doc["seed"] = report.seed;
  return doc.dump(2) + "\n";
}

void write_metrics_json(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  out << metrics_json(report);
}

void write_metrics_tsv(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  char buf[64];
  auto row = [&](const std::string& name, double value) {
    std::snprintf(buf, sizeof buf, "%.17g", value);
    out << name << '\t' << buf << '\n';
  };
  out << "metric\tvalue\n";
  if (report.auc_pr) {
    row("auc_pr", *report.auc_pr);
  }
  if (report.ranking) {
    row("mrr", report.ranking->mrr);
    for (std::size_t k = 0; k < kHitsAt.size(); ++k) {
      row("hits@" + std::to_string(kHitsAt[k]), report.ranking->hits[k]);
    }
  }
  out << "n_queries\t" << report.n_queries << '\n';
  out << "skipped_reflexive\t" << report.skipped_reflexive << '\n';
  out << "seed\t" << report.seed << '\n';
}

}  // namespace tact
