#include "tact/training.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <tuple>

#include <json.hpp>

#include "tact/error.hpp"
#include "tact/eval.hpp"
#include "tact/model.hpp"
#include "tact/random.hpp"
#include "tact/rcg.hpp"
#include "tact/scoring.hpp"
#include "tact/subgraph.hpp"

namespace tact {

using json = nlohmann::json;

void adam_step(std::span<const std::pair<std::string, Matrix*>> params, std::span<const Matrix> grads,
               AdamState& state, double lr) {
  if (params.size() != grads.size()) {
    throw ShapeError("adam_step: " + std::to_string(params.size()) + " parameters but " +
                     std::to_string(grads.size()) + " gradients");
  }
  if (state.first_moment.empty()) {
    for (const auto& [name, p] : params) {
      state.first_moment.emplace_back(p->rows, p->cols);
      state.second_moment.emplace_back(p->rows, p->cols);
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw ShapeError("adam_step: optimizer state tracks a different parameter list");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!grads[k].same_shape(*params[k].second) || !state.first_moment[k].same_shape(grads[k])) {
      throw ShapeError("adam_step: gradient for " + params[k].first + " has shape " + grads[k].shape_string() +
                       ", parameter " + params[k].second->shape_string());
    }
    for (double g : grads[k].data) {
      if (!std::isfinite(g)) {
        throw NumericError("non-finite gradient for parameter " + params[k].first);
      }
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k].second->data;
    auto& m = state.first_moment[k].data;
    auto& v = state.second_moment[k].data;
    const auto& g = grads[k].data;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

void TrainConfig::validate() const {
  model.validate();
  if (!(lr > 0.0)) {
    throw ConfigError("learning rate must be positive");
  }
  if (batch_size == 0) {
    throw ConfigError("batch size must be positive");
  }
  if (!(margin > 0.0)) {
    throw ConfigError("margin must be positive");
  }
  if (negatives == 0) {
    throw ConfigError("at least one negative per positive is required");
  }
}

// ---------------------------------------------------------------------------
// Checkpoint I/O

namespace {

json matrix_to_json(const Matrix& m) {
  return json{{"shape", {m.rows, m.cols}}, {"data", m.data}};
}

}  // namespace

void Checkpoint::validate() const {
  model.validate();
  const auto expected = ModelParams::shaped(model, relations.size());
  const auto want = expected.named();
  const auto have = params.named();
  if (want.size() != have.size()) {
    throw CheckpointError("checkpoint holds " + std::to_string(have.size()) + " tensors, configuration implies " +
                          std::to_string(want.size()));
  }
  for (std::size_t k = 0; k < want.size(); ++k) {
    if (!want[k].second->same_shape(*have[k].second)) {
      throw CheckpointError("tensor " + want[k].first + " has shape " + have[k].second->shape_string() +
                            ", expected " + want[k].second->shape_string() + " for d=" +
                            std::to_string(model.dim));
    }
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  ckpt.validate();
  json meta = {
      {"format", "tact-checkpoint"},
      {"version", Checkpoint::kFormatVersion},
      {"d", ckpt.model.dim},
      {"L", ckpt.model.layers},
      {"k", ckpt.model.hops},
      {"parts", ckpt.model.parts.str()},
      {"variant", std::string(variant_name(ckpt.model.variant))},
      {"margin", ckpt.margin},
      {"seed", ckpt.seed},
      {"relations", ckpt.relations.names()},
  };
  json tensors = json::object();
  for (const auto& [name, m] : ckpt.params.named()) {
    tensors[name] = matrix_to_json(*m);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write checkpoint " + path.string());
  }
  out << json{{"meta", meta}, {"tensors", tensors}}.dump() << '\n';
  if (!out) {
    throw IoError("error writing checkpoint " + path.string());
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open checkpoint " + path.string());
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw CheckpointError(path.string() + ": malformed checkpoint JSON: " + e.what());
  }
  Checkpoint ckpt;
  try {
    const auto& meta = doc.at("meta");
    if (meta.at("format").get<std::string>() != "tact-checkpoint") {
      throw CheckpointError(path.string() + ": not a checkpoint file");
    }
    const int version = meta.at("version").get<int>();
    if (version != Checkpoint::kFormatVersion) {
      throw CheckpointError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
    }
    ckpt.model.dim = meta.at("d").get<std::size_t>();
    ckpt.model.layers = meta.at("L").get<std::size_t>();
    ckpt.model.hops = meta.at("k").get<std::size_t>();
    ckpt.model.parts = ScoreParts::parse(meta.at("parts").get<std::string>());
    ckpt.model.variant = parse_variant(meta.at("variant").get<std::string>());
    ckpt.margin = meta.at("margin").get<double>();
    ckpt.seed = meta.at("seed").get<std::uint64_t>();
    ckpt.relations = Vocab(meta.at("relations").get<std::vector<std::string>>());

    ckpt.params = ModelParams::shaped(ckpt.model, ckpt.relations.size());
    const auto& tensors = doc.at("tensors");
    if (tensors.size() != ckpt.params.named().size()) {
      throw CheckpointError(path.string() + ": expected " + std::to_string(ckpt.params.named().size()) +
                            " tensors, found " + std::to_string(tensors.size()));
    }
    for (auto& [name, m] : ckpt.params.named()) {
      if (!tensors.contains(name)) {
        throw CheckpointError(path.string() + ": missing tensor " + name);
      }
      const auto& t = tensors.at(name);
      const auto shape = t.at("shape").get<std::vector<std::size_t>>();
      auto data = t.at("data").get<std::vector<double>>();
      if (shape.size() != 2 || shape[0] != m->rows || shape[1] != m->cols || data.size() != m->size()) {
        throw CheckpointError(path.string() + ": tensor " + name + " does not have shape " + m->shape_string() +
                              " implied by d=" + std::to_string(ckpt.model.dim));
      }
      m->data = std::move(data);
    }
  } catch (const json::exception& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
  return ckpt;
}

Checkpoint initial_checkpoint(const TrainConfig& config, const Vocab& relations) {
  config.validate();
  Checkpoint ckpt;
  ckpt.model = config.model;
  ckpt.margin = config.margin;
  ckpt.seed = config.seed;
  ckpt.relations = relations;
  ckpt.params = ModelParams::shaped(config.model, relations.size());
  Rng rng(config.seed);
  initialize(ckpt.params, config.model.dim, rng);
  return ckpt;
}

// ---------------------------------------------------------------------------
// Training loop

namespace {

struct TripleKey {
  bool operator()(const Triple& a, const Triple& b) const {
    return std::tie(a.head, a.rel, a.tail) < std::tie(b.head, b.rel, b.tail);
  }
};

class SubgraphSource {
 public:
  SubgraphSource(const KnowledgeGraph& graph, const ModelConfig& model, bool memoize)
      : graph_(graph), model_(model), memoize_(memoize) {}

  const EnclosingSubgraph& get(const Triple& t, bool cacheable) {
    if (memoize_ && cacheable) {
      auto it = memo_.find(t);
      if (it == memo_.end()) {
        it = memo_.emplace(t, make_enclosing_subgraph(graph_, t, model_.hops, model_.dim)).first;
      }
      return it->second;
    }
    scratch_.push_back(make_enclosing_subgraph(graph_, t, model_.hops, model_.dim));
    return scratch_.back();
  }

  void clear_scratch() { scratch_.clear(); }

 private:
  const KnowledgeGraph& graph_;
  const ModelConfig& model_;
  bool memoize_;
  std::map<Triple, EnclosingSubgraph, TripleKey> memo_;
  std::deque<EnclosingSubgraph> scratch_;
};

}  // namespace

TrainResult train(const KnowledgeGraph& graph, const TrainConfig& config, std::span<const Triple> validation,
                  const TrainObserver& observer) {
  config.validate();
  if (graph.num_edges() == 0) {
    throw ContractError("train: the training graph has no triples");
  }
  if (config.early_stopping && validation.empty()) {
    throw ConfigError("early stopping needs validation triples");
  }

  TrainResult result;
  result.checkpoint = initial_checkpoint(config, graph.relations());
  auto& params = result.checkpoint.params;
  const auto rcg = build_rcg(graph);

  std::vector<Triple> positives;
  positives.reserve(graph.num_edges());
  for (const auto& t : graph.triples()) {
    if (t.reflexive()) {
      ++result.skipped_reflexive;
    } else {
      positives.push_back(t);
    }
  }
  if (positives.empty()) {
    throw ContractError("train: every training triple is reflexive");
  }

  Rng rng(config.seed);
  AdamState adam;
  SubgraphSource subgraphs(graph, config.model, config.memoize_subgraphs);
  auto named = params.named();
  double best_auc = -1.0;
  ModelParams best_params;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(positives);
    std::size_t batch_no = 0;
    for (std::size_t begin = 0; begin < positives.size(); begin += config.batch_size) {
      ++batch_no;
      const auto end = std::min(positives.size(), begin + config.batch_size);
      try {
        ad::Tape tape;
        TapeModel model(tape, params, config.model, rcg, true);
        std::vector<ad::Var> pos_scores;
        std::vector<ad::Var> neg_scores;
        for (std::size_t i = begin; i < end; ++i) {
          const auto& pos = positives[i];
          pos_scores.push_back(model.score(subgraphs.get(pos, true), pos.rel));
          for (const auto& neg : sample_negatives(graph, pos, config.negatives, rng)) {
            neg_scores.push_back(model.score(subgraphs.get(neg, false), neg.rel));
          }
        }
        auto loss = hinge_loss(pos_scores, neg_scores, config.margin);
        tape.backward(loss);
        const auto grads = collect_gradients(tape, model.vars(), params);
        adam_step(named, grads, adam, config.lr);
        LossRecord record{epoch, batch_no, loss.scalar()};
        result.losses.push_back(record);
        if (observer) {
          observer(record);
        }
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch_no) + ": " +
                           e.what());
      }
      subgraphs.clear_scratch();
    }

    if (config.early_stopping) {
      EvalOptions opts;
      opts.metric = Metric::AucPr;
      opts.seed = config.seed;
      const auto report = evaluate_model(result.checkpoint, graph, validation, {}, opts);
      if (*report.auc_pr > best_auc) {
        best_auc = *report.auc_pr;
        best_params = params;
        result.best_epoch = epoch;
      }
    }
  }
  if (config.early_stopping && result.best_epoch != 0) {
    params = best_params;
  }
  return result;
}

double batch_loss(const KnowledgeGraph& graph, const Checkpoint& ckpt, std::span<const Triple> positives,
                  std::size_t negatives, std::uint64_t seed) {
  const auto rcg = build_rcg(graph);
  Rng rng(seed);
  ad::Tape tape;
  TapeModel model(tape, ckpt.params, ckpt.model, rcg, false);
  std::vector<ad::Var> pos_scores;
  std::vector<ad::Var> neg_scores;
  for (const auto& pos : positives) {
    pos_scores.push_back(model.score(make_enclosing_subgraph(graph, pos, ckpt.model.hops, ckpt.model.dim), pos.rel));
    for (const auto& neg : sample_negatives(graph, pos, negatives, rng)) {
      neg_scores.push_back(
          model.score(make_enclosing_subgraph(graph, neg, ckpt.model.hops, ckpt.model.dim), neg.rel));
    }
  }
  return hinge_loss(pos_scores, neg_scores, ckpt.margin).scalar();
}

}  // namespace tact
