// Acceptance checks, one PASS/FAIL line per criterion.
//   tact_acceptance core     criteria 1-5 and 9 (self-contained)
//   tact_acceptance wn18rr   criteria 6-8 (needs the WN18RR v1 inductive split)
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "support.hpp"
#include "tact/app.hpp"
#include "tact/eval.hpp"
#include "tact/rcn.hpp"
#include "tact/training.hpp"

using namespace tact;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(const std::string& id, bool ok, const std::string& detail) {
  std::printf("[%s] %s: %s\n", ok ? "PASS" : "FAIL", id.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += ok ? 0 : 1;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runs `body` and turns exceptions into a FAIL line.
void criterion(const std::string& id, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(id, false, std::string("exception: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

void pattern_taxonomy() {
  const auto start = Clock::now();
  std::set<Pattern> classes;
  std::size_t configs = 0;
  bool exhaustive_ok = true;
  for (EntityId hn = 0; hn < 4; ++hn) {
    for (EntityId tn = 0; tn < 4; ++tn) {
      for (EntityId ht = 0; ht < 4; ++ht) {
        for (EntityId tt = 0; tt < 4; ++tt) {
          if (hn == tn || ht == tt) {
            continue;
          }
          ++configs;
          const auto p = classify_pattern({hn, tn}, {ht, tt});
          exhaustive_ok = exhaustive_ok && p == testing::oracle_pattern({hn, tn}, {ht, tt});
          classes.insert(p);
        }
      }
    }
  }
  Rng rng(2024);
  std::size_t agree = 0;
  const std::size_t pairs = 10000;
  for (std::size_t i = 0; i < pairs;) {
    EdgeEnds a{static_cast<EntityId>(rng.below(6)), static_cast<EntityId>(rng.below(6))};
    EdgeEnds b{static_cast<EntityId>(rng.below(6)), static_cast<EntityId>(rng.below(6))};
    if (a.head == a.tail || b.head == b.tail) {
      continue;
    }
    agree += classify_pattern(a, b) == testing::oracle_pattern(a, b) ? 1 : 0;
    ++i;
  }
  const double t = seconds_since(start);
  report("C1 pattern taxonomy", exhaustive_ok && classes.size() == 7 && agree == pairs && t < 1.0,
         std::to_string(classes.size()) + " classes over " + std::to_string(configs) + " configurations, " +
             std::to_string(agree) + "/" + std::to_string(pairs) + " random pairs agree, " + fmt("%.3f s", t));
}

void rcg_correctness() {
  const auto start = Clock::now();
  Rng rng(77);
  std::size_t equal = 0;
  double build_seconds = 0.0;
  for (int g = 0; g < 100; ++g) {
    const auto raw = testing::random_triples(rng, 2 + rng.below(60), 1 + rng.below(12), 1 + rng.below(200), g % 4 == 0);
    const auto kg = KnowledgeGraph::build(raw);
    const auto b0 = Clock::now();
    const auto built = build_rcg(kg);
    build_seconds += seconds_since(b0);
    equal += built == testing::oracle_rcg(kg) ? 1 : 0;
  }
  const double t = seconds_since(start);
  report("C2 RCG correctness", equal == 100 && t < 10.0,
         std::to_string(equal) + "/100 random graphs equal the all-pairs oracle, " + fmt("%.3f s total", t) +
             fmt(" (%.3f s in build_rcg)", build_seconds));
}

void gradient_integrity() {
  const auto start = Clock::now();
  const auto r = testing::full_model_grad_check(5);
  const double t = seconds_since(start);
  report("C3 gradient integrity", r.max_rel_error <= 1e-4 && t < 30.0,
         fmt("max relative error %.3e", r.max_rel_error) + fmt(" (max absolute %.1e)", r.max_abs_error) + " over " + std::to_string(r.per_tensor.size()) +
             " tensors (" + std::to_string(r.coords_checked) + " coordinates), d=8 L=2 k=2, " + fmt("%.2f s", t));
}

struct SyntheticRun {
  fs::path data;
  fs::path test;
};

SyntheticRun synthetic_dirs() {
  const auto root = testing::scratch_dir("acceptance");
  SyntheticRun s{root / "family", root / "family_ind"};
  testing::write_dataset(s.data, testing::family_dataset(11, 80, "p"));
  testing::write_dataset(s.test, testing::family_dataset(12, 60, "q"));
  return s;
}

RunConfig synthetic_config(const SyntheticRun& s, const fs::path& out, std::uint64_t seed) {
  RunConfig c;
  c.command = "run";
  c.data = s.data;
  c.test_data = s.test;
  c.out = out;
  c.train.model.dim = 8;
  c.train.epochs = 3;
  c.train.seed = seed;
  c.eval_seed = seed;
  return c;
}

void rcn_constraints(const SyntheticRun& s) {
  std::size_t checkpoints = 0;
  std::size_t supports = 0;
  double worst_sum = 0.0;
  double min_coeff = 1.0;
  bool outside_zero = true;
  for (std::uint64_t seed : {1, 2}) {
    const auto out = fs::temp_directory_path() / ("tact_acc_rcn_" + std::to_string(seed));
    const auto result = execute(synthetic_config(s, out, seed));
    const auto ckpt = load_checkpoint(out / "checkpoint.json");
    ++checkpoints;
    for (const auto* dir : {&s.data, &s.test}) {
      const auto g = KnowledgeGraph::build(load_triples(*dir / "train.txt"), &ckpt.relations);
      const auto rcg = build_rcg(g);
      for (RelationId t = 0; t < rcg.relation_count(); ++t) {
        for (auto p : kConnected) {
          if (rcg.neighbors(t, p).empty()) {
            continue;
          }
          ++supports;
          const auto lambda = attention_coeffs(ckpt.params.rcn, rcg, t, p);
          const auto& support = rcg.neighbors(t, p);
          double total = 0.0;
          for (RelationId i = 0; i < lambda.data.size(); ++i) {
            const double x = lambda.data[i];
            if (std::binary_search(support.begin(), support.end(), i)) {
              min_coeff = std::min(min_coeff, x);
            } else {
              outside_zero = outside_zero && x == 0.0;
            }
            total += x;
          }
          worst_sum = std::max(worst_sum, std::abs(total - 1.0));
        }
      }
    }
  }

  // bit-exact invariance under relabeling the six patterns
  Rng rng(31);
  std::size_t invariant = 0;
  const std::size_t trials = 50;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const std::size_t n = 2 + rng.below(8);
    ModelConfig cfg;
    cfg.dim = 4;
    auto params = ModelParams::shaped(cfg, n);
    initialize(params, cfg.dim, rng);
    RelationalCorrelationGraph rcg(n);
    for (RelationId t = 0; t < n; ++t) {
      for (auto p : kConnected) {
        for (RelationId i = 0; i < n; ++i) {
          if (rng.coin()) {
            rcg.insert(t, p, i);
          }
        }
      }
    }
    std::vector<std::size_t> perm = {0, 1, 2, 3, 4, 5};
    rng.shuffle(perm);
    auto moved_params = params.rcn;
    RelationalCorrelationGraph moved(n);
    for (std::size_t k = 0; k < kConnectedPatterns; ++k) {
      moved_params.pattern_weights[perm[k]] = params.rcn.pattern_weights[k];
      moved_params.attention[perm[k]] = params.rcn.attention[k];
      for (RelationId t = 0; t < n; ++t) {
        for (auto i : rcg.neighbors(t, kConnected[k])) {
          moved.insert(t, kConnected[perm[k]], i);
        }
      }
    }
    bool same = true;
    for (RelationId t = 0; t < n; ++t) {
      same = same && neighborhood_embedding(params.rcn, rcg, t) == neighborhood_embedding(moved_params, moved, t);
    }
    invariant += same ? 1 : 0;
  }
  report("C4 RCN constraints",
         min_coeff >= 0.0 && outside_zero && worst_sum <= 1e-12 && invariant == trials && checkpoints > 0 && supports > 0,
         std::to_string(supports) + " non-empty supports over " + std::to_string(checkpoints) +
             " trained checkpoints (synthetic family data), min coefficient " + fmt("%.3e", min_coeff) +
             fmt(", max |sum-1| %.3e", worst_sum) + (outside_zero ? ", zero off the support" : ", NONZERO off the support") + ", permutation invariance bit-exact in " +
             std::to_string(invariant) + "/" + std::to_string(trials) + " trials");
}

double sweep_ap(const std::vector<double>& pos, const std::vector<double>& neg) {
  std::set<double, std::greater<>> thresholds(pos.begin(), pos.end());
  thresholds.insert(neg.begin(), neg.end());
  double ap = 0.0;
  double prev = 0.0;
  for (double tau : thresholds) {
    double tp = 0.0;
    double fp = 0.0;
    for (double s : pos) {
      tp += s >= tau ? 1.0 : 0.0;
    }
    for (double s : neg) {
      fp += s >= tau ? 1.0 : 0.0;
    }
    if (tp > prev) {
      ap += ((tp - prev) / static_cast<double>(pos.size())) * (tp / (tp + fp));
      prev = tp;
    }
  }
  return ap;
}

void metric_oracles() {
  Rng rng(5);
  std::size_t exact = 0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> pos(1 + rng.below(10));
    std::vector<double> neg(1 + rng.below(10));
    for (auto& x : pos) {
      x = rng.uniform(-1, 1);
    }
    for (auto& x : neg) {
      x = rng.uniform(-1, 1);
    }
    exact += auc_pr(pos, neg) == sweep_ap(pos, neg) ? 1 : 0;
  }
  const auto m = mrr_hits(std::vector<double>{1, 2, 4});
  const bool mrr_ok = std::abs(m.mrr - 7.0 / 12.0) <= 1e-15 && std::abs(m.hits[0] - 1.0 / 3.0) <= 1e-15;
  report("C5 metric oracles", exact == 1000 && mrr_ok,
         std::to_string(exact) + "/1000 AUC-PR sets equal the threshold sweep exactly; ranks [1,2,4] give " +
             fmt("MRR %.5f", m.mrr) + fmt(", H@1 %.5f", m.hits[0]));
}

void determinism(const SyntheticRun& s) {
  const auto a = fs::temp_directory_path() / "tact_acc_det_a";
  const auto b = fs::temp_directory_path() / "tact_acc_det_b";
  fs::remove_all(a);
  fs::remove_all(b);
  execute(synthetic_config(s, a, 7));
  auto again = load_manifest(a / "manifest.json");
  again.out = b;
  execute(again);
  const bool ckpt_same = slurp(a / "checkpoint.json") == slurp(b / "checkpoint.json");
  const bool metrics_same = slurp(a / "metrics.json") == slurp(b / "metrics.json");
  report("C9 determinism", ckpt_same && metrics_same && !slurp(a / "checkpoint.json").empty(),
         std::string("checkpoint ") + (ckpt_same ? "identical" : "differs") + ", metrics JSON " +
             (metrics_same ? "identical" : "differs") + " across two runs from one manifest");
}

int core() {
  criterion("C1 pattern taxonomy", pattern_taxonomy);
  criterion("C2 RCG correctness", rcg_correctness);
  criterion("C3 gradient integrity", gradient_integrity);
  const auto s = synthetic_dirs();
  criterion("C4 RCN constraints", [&] { rcn_constraints(s); });
  criterion("C5 metric oracles", metric_oracles);
  criterion("C9 determinism", [&] { determinism(s); });
  return failures == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// WN18RR v1

fs::path wn18rr_dir() {
  if (const char* env = std::getenv("TACT_WN18RR_V1")) {
    return env;
  }
  return fs::path(TACT_DEFAULT_DATA) / "WN18RR_v1";
}

struct Scores {
  double auc = 0.0;
  double mrr = 0.0;
};

int wn18rr() {
  const auto data = wn18rr_dir();
  const auto test = default_test_dir(data);
  if (!fs::exists(data / "train.txt") || !fs::exists(test / "train.txt") || !fs::exists(test / "test.txt")) {
    for (const char* id : {"C6 frequency baseline", "C7 end-to-end reproduction", "C8 ablation ordering"}) {
      std::printf("[BLOCKED] %s: dataset not found at %s and %s (set TACT_WN18RR_V1)\n", id, data.c_str(),
                  test.c_str());
    }
    return 77;
  }
  const auto root = fs::temp_directory_path() / "tact_acc_wn18rr";
  fs::remove_all(root);

  criterion("C6 frequency baseline", [&] {
    double mrr[2] = {0, 0};
    for (int source = 0; source < 2; ++source) {
      RunConfig c;
      c.command = "eval";
      c.data = data;
      c.test_data = test;
      c.out = root / (source == 0 ? "freq_fact" : "freq_train");
      c.metric = Metric::Rank;
      c.baseline = "frequency";
      c.frequency_source = source == 0 ? FrequencySource::FactGraph : FrequencySource::TrainGraph;
      mrr[source] = execute(c).evaluation->ranking->mrr;
    }
    const bool ok = std::abs(mrr[0] - 0.763) <= 0.05 || std::abs(mrr[1] - 0.763) <= 0.05;
    report("C6 frequency baseline", ok,
           fmt("MRR %.4f with test fact-graph counts", mrr[0]) + fmt(", %.4f with training-graph counts", mrr[1]) +
               " (target 0.763 +/- 0.05)");
  });

  // variant -> per-seed scores
  std::map<std::string, std::vector<Scores>> runs;
  const auto start = Clock::now();
  criterion("C7 end-to-end reproduction", [&] {
    for (std::uint64_t seed : {0, 1, 2}) {
      for (const char* variant : {"full", "no-rc", "no-ra"}) {
        RunConfig c;
        c.command = "run";
        c.data = data;
        c.test_data = test;
        c.out = root / (std::string(variant) + "_" + std::to_string(seed));
        c.variant = variant;
        c.train.seed = seed;
        c.eval_seed = seed;
        const auto out = execute(c);
        runs[variant].push_back({*out.evaluation->auc_pr, out.evaluation->ranking->mrr});
        std::printf("  %s seed %llu: AUC-PR %.4f, MRR %.4f (%.0f s elapsed)\n", variant,
                    static_cast<unsigned long long>(seed), runs[variant].back().auc, runs[variant].back().mrr,
                    seconds_since(start));
        std::fflush(stdout);
      }
    }
    auto mean = [&](const std::string& v, double Scores::*field) {
      double s = 0.0;
      for (const auto& r : runs[v]) {
        s += r.*field;
      }
      return s / static_cast<double>(runs[v].size());
    };
    const double auc = mean("full", &Scores::auc);
    const double mrr = mean("full", &Scores::mrr);
    report("C7 end-to-end reproduction", auc >= 0.90 && mrr >= 0.90,
           fmt("full model mean AUC-PR %.4f", auc) + fmt(", MRR %.4f over 3 seeds", mrr) +
               " (needs >= 0.90 each), total wall time for 9 runs " + fmt("%.0f s", seconds_since(start)));
    const double full = mrr;
    const double norc = mean("no-rc", &Scores::mrr);
    const double nora = mean("no-ra", &Scores::mrr);
    report("C8 ablation ordering", full > norc && norc > nora,
           fmt("mean MRR full %.4f", full) + fmt(", without correlation %.4f", norc) +
               fmt(", without aggregation %.4f", nora));
  });
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "core";
  if (mode == "core") {
    return core();
  }
  if (mode == "wn18rr") {
    return wn18rr();
  }
  std::fprintf(stderr, "usage: tact_acceptance core|wn18rr\n");
  return 2;
}
