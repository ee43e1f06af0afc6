#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tact/kg.hpp"
#include "tact/params.hpp"

namespace tact {

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
};

// Bias-corrected Adam update, in place. Moments are allocated on the first
// call. Non-finite gradients raise NumericError naming the parameter.
void adam_step(std::span<const std::pair<std::string, Matrix*>> params, std::span<const Matrix> grads,
               AdamState& state, double lr);

struct TrainConfig {
  ModelConfig model;
  double lr = 0.01;
  std::size_t batch_size = 16;
  std::size_t epochs = 10;
  double margin = 8.0;
  std::size_t negatives = 1;
  std::uint64_t seed = 0;
  // Keep the epoch with the best validation AUC-PR (needs validation triples).
  bool early_stopping = false;
  // Cache positive-triple subgraphs across epochs.
  bool memoize_subgraphs = true;

  void validate() const;
};

struct Checkpoint {
  static constexpr int kFormatVersion = 1;

  ModelConfig model;
  double margin = 8.0;
  std::uint64_t seed = 0;
  Vocab relations;
  ModelParams params;

  // Every tensor must have the shape implied by `model` and the vocabulary.
  void validate() const;
  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Initial parameters for a run: shaped from the config, filled from `seed`.
Checkpoint initial_checkpoint(const TrainConfig& config, const Vocab& relations);

struct LossRecord {
  std::size_t epoch;
  std::size_t batch;
  double loss;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<LossRecord> losses;
  std::size_t best_epoch = 0;     // 0 when early stopping is off
  std::size_t skipped_reflexive = 0;
};

using TrainObserver = std::function<void(const LossRecord&)>;

// Margin-loss training over every irreflexive triple of `graph`. Each epoch
// shuffles the positives; each batch samples negatives, extracts subgraphs
// with the scored triple removed, and applies one Adam step to the summed loss.
TrainResult train(const KnowledgeGraph& graph, const TrainConfig& config, std::span<const Triple> validation = {},
                  const TrainObserver& observer = {});

// Summed hinge loss over `positives` under fixed parameters, with negatives
// drawn from `seed`. Used to compare parameter states.
double batch_loss(const KnowledgeGraph& graph, const Checkpoint& ckpt, std::span<const Triple> positives,
                  std::size_t negatives, std::uint64_t seed);

}  // namespace tact
