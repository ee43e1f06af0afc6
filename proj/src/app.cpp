#include "tact/app.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tact/error.hpp"
#include "tact/kg.hpp"
#include "tact/rcg.hpp"
#include "tact/rcn.hpp"
#include "tact/subgraph.hpp"

namespace tact {

namespace fs = std::filesystem;
using nlohmann::json;

void RunConfig::resolve() {
  if (variant == "base") {
    if (train.model.parts != ScoreParts::parse("r")) {
      throw ConfigError("--variant base scores from the relation embedding only; use --parts r or omit --parts");
    }
    train.model.variant = RcnVariant::Full;
  } else {
    train.model.variant = parse_variant(variant);
  }
  if (baseline != "none" && baseline != "frequency") {
    throw ConfigError("unknown baseline '" + baseline + "' (expected none or frequency)");
  }
  if (threads == 0) {
    throw ConfigError("--threads must be at least 1");
  }
  train.validate();
}

fs::path default_test_dir(const fs::path& data) {
  auto p = data;
  if (!p.has_filename()) {
    p = p.parent_path();
  }
  return p.string() + "_ind";
}

// ---------------------------------------------------------------------------
// Manifest

std::string manifest_json(const RunConfig& c) {
  const auto& m = c.train.model;
  json doc = {
      {"version", kVersion},
      {"command", c.command},
      {"paths",
       {{"data", c.data.string()},
        {"test_data", c.test_data.string()},
        {"checkpoint", c.checkpoint.string()},
        {"out", c.out.string()}}},
      {"model",
       {{"dim", m.dim},
        {"layers", m.layers},
        {"hops", m.hops},
        {"parts", m.parts.str()},
        {"variant", c.variant}}},
      {"train",
       {{"lr", c.train.lr},
        {"batch", c.train.batch_size},
        {"epochs", c.train.epochs},
        {"margin", c.train.margin},
        {"negatives", c.train.negatives},
        {"seed", c.train.seed},
        {"early_stopping", c.train.early_stopping}}},
      {"eval",
       {{"metric", std::string(metric_name(c.metric))},
        {"baseline", c.baseline},
        {"frequency_source", c.frequency_source == FrequencySource::FactGraph ? "fact" : "train"},
        {"seed", c.eval_seed},
        {"threads", c.threads}}},
      {"query", {{"head", c.head}, {"relation", c.relation}, {"tail", c.tail}}},
  };
  return doc.dump(2) + "\n";
}

RunConfig parse_manifest(const std::string& text) {
  RunConfig c;
  try {
    const auto doc = json::parse(text);
    c.command = doc.at("command").get<std::string>();
    const auto& paths = doc.at("paths");
    c.data = paths.at("data").get<std::string>();
    c.test_data = paths.at("test_data").get<std::string>();
    c.checkpoint = paths.at("checkpoint").get<std::string>();
    c.out = paths.at("out").get<std::string>();
    const auto& model = doc.at("model");
    c.train.model.dim = model.at("dim").get<std::size_t>();
    c.train.model.layers = model.at("layers").get<std::size_t>();
    c.train.model.hops = model.at("hops").get<std::size_t>();
    c.train.model.parts = ScoreParts::parse(model.at("parts").get<std::string>());
    c.variant = model.at("variant").get<std::string>();
    const auto& train = doc.at("train");
    c.train.lr = train.at("lr").get<double>();
    c.train.batch_size = train.at("batch").get<std::size_t>();
    c.train.epochs = train.at("epochs").get<std::size_t>();
    c.train.margin = train.at("margin").get<double>();
    c.train.negatives = train.at("negatives").get<std::size_t>();
    c.train.seed = train.at("seed").get<std::uint64_t>();
    c.train.early_stopping = train.at("early_stopping").get<bool>();
    const auto& eval = doc.at("eval");
    c.metric = parse_metric(eval.at("metric").get<std::string>());
    c.baseline = eval.at("baseline").get<std::string>();
    const auto source = eval.at("frequency_source").get<std::string>();
    if (source != "fact" && source != "train") {
      throw ConfigError("manifest: unknown frequency source '" + source + "'");
    }
    c.frequency_source = source == "fact" ? FrequencySource::FactGraph : FrequencySource::TrainGraph;
    c.eval_seed = eval.at("seed").get<std::uint64_t>();
    c.threads = eval.at("threads").get<std::size_t>();
    const auto& query = doc.at("query");
    c.head = query.at("head").get<std::string>();
    c.relation = query.at("relation").get<std::string>();
    c.tail = query.at("tail").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed manifest: ") + e.what());
  }
  return c;
}

RunConfig load_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open manifest " + path.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str());
}

// ---------------------------------------------------------------------------
// Commands

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  out << text;
}

void write_ranks(const EvalReport& report, std::span<const Triple> queries, const KnowledgeGraph& g,
                 const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  out << "head\trelation\ttail\trank\n";
  char buf[64];
  for (std::size_t i = 0; i < queries.size() && i < report.ranks.size(); ++i) {
    const auto raw = g.to_raw(queries[i]);
    std::snprintf(buf, sizeof buf, "%.17g", report.ranks[i]);
    out << raw.head << '\t' << raw.rel << '\t' << raw.tail << '\t' << buf << '\n';
  }
}

// Resolves `raw` in `g`, dropping triples with names `g` does not know.
std::vector<Triple> resolve_known(const KnowledgeGraph& g, std::span<const RawTriple> raw) {
  std::vector<Triple> out;
  for (const auto& r : raw) {
    if (g.entities().contains(r.head) && g.entities().contains(r.tail) && g.relations().contains(r.rel)) {
      out.push_back(g.resolve(r));
    }
  }
  return out;
}

TrainResult do_train(const RunConfig& c) {
  const auto files = load_dataset(c.data);
  const auto graph = KnowledgeGraph::build(files.train);
  std::vector<Triple> validation;
  if (c.train.early_stopping) {
    validation = resolve_known(graph, files.valid);
  }
  std::ofstream loss_log(c.out / "loss.tsv", std::ios::binary);
  if (!loss_log) {
    throw IoError("cannot write " + (c.out / "loss.tsv").string());
  }
  loss_log << "epoch\tbatch\tloss\n";
  auto result = train(graph, c.train, validation, [&](const LossRecord& r) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", r.loss);
    loss_log << r.epoch << '\t' << r.batch << '\t' << buf << '\n';
  });
  loss_log.close();
  save_checkpoint(result.checkpoint, c.out / "checkpoint.json");

  const auto rcg = build_rcg(graph);
  export_rcg(rcg, c.out / "rcg.tsv", &graph.relations());
  export_pattern_histogram(rcg, c.out / "rcg_histogram.tsv");
  if (c.train.model.variant == RcnVariant::Full) {
    export_attention(result.checkpoint.params.rcn, rcg, graph.relations(), c.out / "attention.tsv");
  }
  return result;
}

struct TestSplit {
  KnowledgeGraph facts;
  std::vector<Triple> queries;
};

TestSplit load_test_split(const fs::path& dir, const Vocab& relations) {
  const auto files = load_dataset(dir);
  std::vector<std::string> extra;
  for (const auto& t : files.test) {
    extra.push_back(t.head);
    extra.push_back(t.tail);
  }
  TestSplit split{KnowledgeGraph::build(files.train, &relations, extra), {}};
  for (const auto& t : files.test) {
    split.queries.push_back(split.facts.resolve(t));
  }
  return split;
}

EvalReport do_eval(const RunConfig& c, const std::optional<Checkpoint>& trained) {
  const auto test_dir = c.test_data.empty() ? default_test_dir(c.data) : c.test_data;
  if (c.baseline == "frequency") {
    // Relation vocabulary: checkpoint, then training data, then the test split itself.
    std::optional<KnowledgeGraph> train_graph;
    Vocab relations;
    if (trained) {
      relations = trained->relations;
    } else if (!c.checkpoint.empty()) {
      relations = load_checkpoint(c.checkpoint).relations;
    }
    if (!c.data.empty()) {
      train_graph = KnowledgeGraph::build(load_dataset(c.data).train, relations.size() ? &relations : nullptr);
      relations = train_graph->relations();
    }
    if (relations.size() == 0) {
      relations = KnowledgeGraph::build(load_dataset(test_dir).train).relations();
    }
    if (c.frequency_source == FrequencySource::TrainGraph && !train_graph) {
      throw ConfigError("--frequency-source train needs --data");
    }
    const auto split = load_test_split(test_dir, relations);
    const auto& counted = c.frequency_source == FrequencySource::TrainGraph ? *train_graph : split.facts;
    const auto freq = relation_frequencies(counted.triples(), relations.size());
    auto report = frequency_baseline(freq, split.facts, split.queries, {});
    report.seed = c.eval_seed;
    write_ranks(report, split.queries, split.facts, c.out / "ranks.tsv");
    return report;
  }

  const auto ckpt = trained ? *trained : load_checkpoint(c.checkpoint);
  const auto split = load_test_split(test_dir, ckpt.relations);
  EvalOptions opts;
  opts.metric = c.metric;
  opts.seed = c.eval_seed;
  opts.threads = c.threads;
  auto report = evaluate_model(ckpt, split.facts, split.queries, {}, opts);
  if (report.ranking) {
    std::vector<Triple> kept;
    for (const auto& q : split.queries) {
      if (!q.reflexive()) {
        kept.push_back(q);
      }
    }
    write_ranks(report, kept, split.facts, c.out / "ranks.tsv");
  }
  return report;
}

void do_rcg(const RunConfig& c) {
  const auto graph = KnowledgeGraph::build(load_triples(c.data / "train.txt"));
  const auto rcg = build_rcg(graph);
  export_rcg(rcg, c.out / "rcg.tsv", &graph.relations());
  export_pattern_histogram(rcg, c.out / "rcg_histogram.tsv");
}

void do_subgraph(const RunConfig& c) {
  const auto graph = KnowledgeGraph::build(load_triples(c.data / "train.txt"));
  const auto target = graph.resolve({c.head, c.relation, c.tail});
  const auto sub = make_enclosing_subgraph(graph, target, c.train.model.hops, c.train.model.dim);
  dump_subgraph(sub, graph, c.out / "subgraph.tsv");
}

}  // namespace

RunOutputs execute(RunConfig config) {
  config.resolve();
  const auto& c = config;
  if (c.out.empty()) {
    throw ConfigError("--out is required");
  }
  const bool needs_data = c.command != "eval";
  if (needs_data && c.data.empty()) {
    throw ConfigError(c.command + " needs --data");
  }
  if (c.command == "eval" && c.checkpoint.empty() && c.baseline != "frequency") {
    throw ConfigError("eval needs --checkpoint");
  }
  if (c.command == "eval" && c.test_data.empty() && c.data.empty()) {
    throw ConfigError("eval needs --test-data");
  }
  if (c.command == "subgraph" && (c.head.empty() || c.relation.empty() || c.tail.empty())) {
    throw ConfigError("subgraph needs --head, --relation and --tail");
  }

  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec) {
    throw IoError("cannot create output directory " + c.out.string() + ": " + ec.message());
  }
  write_text(c.out / "manifest.json", manifest_json(c));

  RunOutputs outputs;
  if (c.command == "train") {
    outputs.training = do_train(c);
  } else if (c.command == "eval") {
    outputs.evaluation = do_eval(c, std::nullopt);
  } else if (c.command == "run") {
    outputs.training = do_train(c);
    outputs.evaluation = do_eval(c, outputs.training->checkpoint);
  } else if (c.command == "rcg") {
    do_rcg(c);
  } else if (c.command == "subgraph") {
    do_subgraph(c);
  } else {
    throw ConfigError("unknown command '" + c.command + "'");
  }
  if (outputs.evaluation) {
    write_metrics_json(*outputs.evaluation, c.out / "metrics.json");
    write_metrics_tsv(*outputs.evaluation, c.out / "metrics.tsv");
  }
  return outputs;
}

}  // namespace tact
