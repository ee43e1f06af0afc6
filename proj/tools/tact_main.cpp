#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tact/app.hpp"
#include "tact/error.hpp"

namespace {

int exit_code(tact::Error::Category c) {
  switch (c) {
    case tact::Error::Category::Usage:
      return 2;
    case tact::Error::Category::Data:
      return 3;
    case tact::Error::Category::Numeric:
      return 4;
    case tact::Error::Category::Internal:
      return 1;
  }
  return 1;
}

struct Flags {
  tact::RunConfig config;
  std::string parts = "ngr";
  std::string metric = "both";
  std::string frequency_source = "fact";
};

void add_common(CLI::App* cmd, Flags& f) {
  auto& c = f.config;
  auto& t = c.train;
  cmd->add_option("--data", c.data, "training dataset directory (train.txt, test.txt, optional valid.txt)");
  cmd->add_option("--out", c.out, "run directory")->required();
  cmd->add_option("--dim", t.model.dim, "embedding width d")->capture_default_str();
  cmd->add_option("--hops", t.model.hops, "subgraph hop count k")->capture_default_str();
  cmd->add_option("--layers", t.model.layers, "R-GCN layers L")->capture_default_str();
  cmd->add_option("--parts", f.parts, "scoring inputs, any of n g r")->capture_default_str();
  cmd->add_option("--variant", c.variant, "relation module variant")
      ->check(CLI::IsMember({"full", "base", "no-ra", "no-rc"}))
      ->capture_default_str();
  cmd->add_option("--threads", c.threads, "worker threads for evaluation")->capture_default_str();
}

void add_training(CLI::App* cmd, Flags& f) {
  auto& t = f.config.train;
  cmd->add_option("--margin", t.margin, "hinge margin")->capture_default_str();
  cmd->add_option("--lr", t.lr, "Adam learning rate")->capture_default_str();
  cmd->add_option("--batch", t.batch_size, "positives per batch")->capture_default_str();
  cmd->add_option("--epochs", t.epochs, "training epochs")->capture_default_str();
  cmd->add_option("--neg", t.negatives, "negatives per positive")->capture_default_str();
  cmd->add_option("--seed", t.seed, "training seed")->capture_default_str();
  cmd->add_flag("--early-stopping", t.early_stopping, "keep the epoch with the best validation AUC-PR");
}

void add_eval(CLI::App* cmd, Flags& f) {
  auto& c = f.config;
  cmd->add_option("--test-data", c.test_data, "inductive test directory (default <data>_ind)");
  cmd->add_option("--metric", f.metric, "metrics to compute")
      ->check(CLI::IsMember({"auc-pr", "rank", "both"}))
      ->capture_default_str();
  cmd->add_option("--baseline", c.baseline, "score with a baseline instead of a model")
      ->check(CLI::IsMember({"none", "frequency"}))
      ->capture_default_str();
  cmd->add_option("--frequency-source", f.frequency_source, "graph whose relation counts rank the baseline")
      ->check(CLI::IsMember({"fact", "train"}))
      ->capture_default_str();
  cmd->add_option("--eval-seed", c.eval_seed, "seed for AUC-PR negatives")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inductive link prediction with relational correlation and enclosing subgraphs"};
  app.set_version_flag("--version", tact::kVersion);
  app.require_subcommand(1);

  Flags f;
  auto* train = app.add_subcommand("train", "train a model and write a checkpoint");
  add_common(train, f);
  add_training(train, f);

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint (or a baseline) on an inductive split");
  add_common(eval, f);
  add_eval(eval, f);
  eval->add_option("--checkpoint", f.config.checkpoint, "checkpoint.json from a training run");

  auto* run = app.add_subcommand("run", "train, then evaluate on the inductive split");
  add_common(run, f);
  add_training(run, f);
  add_eval(run, f);

  auto* rcg = app.add_subcommand("rcg", "export the relational correlation graph and pattern histogram");
  rcg->add_option("--data", f.config.data, "dataset directory")->required();
  rcg->add_option("--out", f.config.out, "run directory")->required();

  auto* sub = app.add_subcommand("subgraph", "dump the labeled enclosing subgraph of one triple");
  add_common(sub, f);
  sub->add_option("--head", f.config.head)->required();
  sub->add_option("--relation", f.config.relation)->required();
  sub->add_option("--tail", f.config.tail)->required();

  std::string manifest_path;
  std::string rerun_out;
  auto* rerun = app.add_subcommand("rerun", "repeat a run from its manifest");
  rerun->add_option("--manifest", manifest_path, "manifest.json of an earlier run")->required();
  rerun->add_option("--out", rerun_out, "run directory (default: the manifest's)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    tact::RunConfig config;
    if (rerun->parsed()) {
      config = tact::load_manifest(manifest_path);
      if (!rerun_out.empty()) {
        config.out = rerun_out;
      }
    } else {
      config = f.config;
      config.command = app.get_subcommands().front()->get_name();
      config.train.model.parts = tact::ScoreParts::parse(f.parts);
      if (config.variant == "base" && !train->count("--parts") && !run->count("--parts") &&
          !eval->count("--parts") && !sub->count("--parts")) {
        config.train.model.parts = tact::ScoreParts::parse("r");
      }
      config.metric = tact::parse_metric(f.metric);
      config.frequency_source =
          f.frequency_source == "train" ? tact::FrequencySource::TrainGraph : tact::FrequencySource::FactGraph;
    }
    const auto outputs = tact::execute(config);
    if (outputs.evaluation) {
      std::cout << tact::metrics_json(*outputs.evaluation);
    }
    if (outputs.training && outputs.training->skipped_reflexive > 0) {
      std::cerr << "skipped " << outputs.training->skipped_reflexive << " reflexive training triples\n";
    }
  } catch (const tact::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
