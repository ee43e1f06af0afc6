#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "tact/eval.hpp"
#include "tact/training.hpp"

namespace tact {

inline constexpr const char* kVersion = "tact 0.1.0";

// Everything a command needs, as resolved from flags. Serialized verbatim into
// the run manifest so a run can be repeated from it.
struct RunConfig {
  std::string command;  // train | eval | run | rcg | subgraph
  std::filesystem::path data;
  std::filesystem::path test_data;
  std::filesystem::path checkpoint;
  std::filesystem::path out;

  TrainConfig train;
  std::string variant = "full";  // full | base | no-ra | no-rc

  Metric metric = Metric::Both;
  std::string baseline = "none";  // none | frequency
  FrequencySource frequency_source = FrequencySource::FactGraph;
  std::uint64_t eval_seed = 0;
  std::size_t threads = 1;

  // subgraph command
  std::string head;
  std::string relation;
  std::string tail;

  // Applies `variant` to train.model and checks flag combinations.
  void resolve();
};

std::string manifest_json(const RunConfig& config);
RunConfig parse_manifest(const std::string& text);
RunConfig load_manifest(const std::filesystem::path& path);

struct RunOutputs {
  std::optional<TrainResult> training;
  std::optional<EvalReport> evaluation;
};

// Executes config.command. The manifest is written to out/manifest.json
// before anything is computed; every output goes under `out`.
RunOutputs execute(RunConfig config);

// Default inductive test directory for a training directory: "<data>_ind".
std::filesystem::path default_test_dir(const std::filesystem::path& data);

}  // namespace tact
