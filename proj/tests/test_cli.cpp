#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

#include "support.hpp"
#include "tact/app.hpp"
#include "tact/training.hpp"

using namespace tact;
namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(TACT_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t lines(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
  }
  return n;
}

const std::string kSmall = " --dim 6 --layers 1 --batch 8 --seed 2";

struct Fixture {
  fs::path root = testing::scratch_dir("cli");
  fs::path data = root / "fam";
  fs::path ind = root / "fam_ind";
  Fixture() {
    testing::write_dataset(data, testing::family_dataset(1, 30, "p"));
    testing::write_dataset(ind, testing::family_dataset(2, 24, "q"));
  }
};

}  // namespace

TEST_CASE_FIXTURE(Fixture, "train writes its run directory") {
  const auto out = root / "run1";
  REQUIRE(run("train --data " + data.string() + " --out " + out.string() + " --epochs 1 --margin 8" + kSmall) == 0);
  for (const char* f : {"manifest.json", "checkpoint.json", "loss.tsv", "rcg.tsv", "rcg_histogram.tsv",
                        "attention.tsv"}) {
    CHECK(fs::exists(out / f));
  }
  CHECK(lines(out / "loss.tsv") > 1);
  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(manifest["train"]["margin"] == 8.0);
  CHECK(manifest["command"] == "train");
}

TEST_CASE_FIXTURE(Fixture, "zero epochs reproduce the initialization") {
  const auto out = root / "run0";
  REQUIRE(run("train --data " + data.string() + " --out " + out.string() + " --epochs 0" + kSmall) == 0);
  const auto ckpt = load_checkpoint(out / "checkpoint.json");
  TrainConfig config;
  config.model.dim = 6;
  config.model.layers = 1;
  config.batch_size = 8;
  config.seed = 2;
  const auto graph = KnowledgeGraph::build(load_triples(data / "train.txt"));
  CHECK(ckpt == initial_checkpoint(config, graph.relations()));
}

TEST_CASE_FIXTURE(Fixture, "eval, baseline, and determinism") {
  const auto out = root / "trained";
  REQUIRE(run("train --data " + data.string() + " --out " + out.string() + " --epochs 1" + kSmall) == 0);
  const auto ckpt = (out / "checkpoint.json").string();
  const auto e1 = root / "eval1";
  const auto e2 = root / "eval2";
  REQUIRE(run("eval --checkpoint " + ckpt + " --test-data " + ind.string() + " --out " + e1.string() +
              " --eval-seed 4 --threads 2") == 0);
  REQUIRE(run("eval --checkpoint " + ckpt + " --test-data " + ind.string() + " --out " + e2.string() +
              " --eval-seed 4") == 0);
  CHECK(fs::exists(e1 / "metrics.tsv"));
  CHECK(slurp(e1 / "metrics.json") == slurp(e2 / "metrics.json"));
  const auto m = nlohmann::json::parse(slurp(e1 / "metrics.json"));
  CHECK(m["auc_pr"].is_number());
  CHECK(m["mrr"].is_number());

  const auto fb = root / "freq";
  REQUIRE(run("eval --data " + data.string() + " --metric rank --baseline frequency --out " + fb.string()) == 0);
  const auto f = nlohmann::json::parse(slurp(fb / "metrics.json"));
  CHECK(f["mrr"].is_number());
  CHECK(f["auc_pr"].is_null());
  const auto fb2 = root / "freq_train";
  CHECK(run("eval --data " + data.string() + " --baseline frequency --frequency-source train --out " +
            fb2.string()) == 0);
}

TEST_CASE_FIXTURE(Fixture, "rerunning a manifest is bit-identical") {
  const auto a = root / "full_a";
  const auto b = root / "full_b";
  REQUIRE(run("run --data " + data.string() + " --out " + a.string() + " --epochs 1 --eval-seed 3" + kSmall) == 0);
  REQUIRE(run("rerun --manifest " + (a / "manifest.json").string() + " --out " + b.string()) == 0);
  CHECK(slurp(a / "checkpoint.json") == slurp(b / "checkpoint.json"));
  CHECK(slurp(a / "metrics.json") == slurp(b / "metrics.json"));
  CHECK(slurp(a / "loss.tsv") == slurp(b / "loss.tsv"));
}

TEST_CASE_FIXTURE(Fixture, "base variant and ablations") {
  CHECK(run("train --data " + data.string() + " --out " + (root / "base").string() +
            " --variant base --parts r --epochs 1" + kSmall) == 0);
  CHECK(load_checkpoint(root / "base" / "checkpoint.json").model.parts == ScoreParts::parse("r"));
  CHECK(run("train --data " + data.string() + " --out " + (root / "base2").string() + " --variant base --epochs 1" +
            kSmall) == 0);
  CHECK(run("train --data " + data.string() + " --out " + (root / "bad").string() +
            " --variant base --parts ngr" + kSmall) == 2);
  CHECK(run("train --data " + data.string() + " --out " + (root / "norc").string() + " --variant no-rc --epochs 1" +
            kSmall) == 0);
  CHECK(load_checkpoint(root / "norc" / "checkpoint.json").model.variant == RcnVariant::NoRC);
}

TEST_CASE_FIXTURE(Fixture, "rcg command") {
  const auto empty = root / "empty";
  fs::create_directories(empty);
  std::ofstream(empty / "train.txt").close();
  REQUIRE(run("rcg --data " + empty.string() + " --out " + (root / "rcg0").string()) == 0);
  CHECK(slurp(root / "rcg0" / "rcg.tsv").empty());

  const auto chain = root / "chain";
  fs::create_directories(chain);
  std::ofstream(chain / "train.txt") << "a\tr1\tb\nb\tr2\tc\n";
  REQUIRE(run("rcg --data " + chain.string() + " --out " + (root / "rcg1").string()) == 0);
  CHECK(lines(root / "rcg1" / "rcg.tsv") == 2);
  std::ifstream hist(root / "rcg1" / "rcg_histogram.tsv");
  std::string name;
  std::size_t count = 0;
  std::size_t total = 0;
  while (hist >> name >> count) {
    total += count;
  }
  CHECK(total == 2);
}

TEST_CASE_FIXTURE(Fixture, "subgraph dump") {
  const auto t = testing::family_dataset(1, 30, "p").train.front();
  REQUIRE(run("subgraph --data " + data.string() + " --out " + (root / "sub").string() + " --head " + t.head +
              " --relation " + t.rel + " --tail " + t.tail) == 0);
  const auto text = slurp(root / "sub" / "subgraph.tsv");
  CHECK(text.rfind("node\t" + t.head + "\t0\t1\n", 0) == 0);
}

TEST_CASE_FIXTURE(Fixture, "exit codes") {
  CHECK(run("train --bogus") == 2);
  CHECK(run("train --data " + data.string()) == 2);  // no --out
  CHECK(run("train --data " + (root / "nowhere").string() + " --out " + (root / "x").string()) == 3);
  CHECK(run("train --data " + data.string() + " --out " + (root / "y").string() + " --lr -1") == 2);
  CHECK(run("eval --checkpoint " + (root / "missing.json").string() + " --test-data " + ind.string() + " --out " +
            (root / "z").string()) == 3);
  const auto bad = root / "bad_rel";
  fs::create_directories(bad);
  std::ofstream(bad / "train.txt") << "a\tunknown\tb\n";
  std::ofstream(bad / "test.txt") << "a\tunknown\tb\n";
  REQUIRE(run("train --data " + data.string() + " --out " + (root / "t").string() + " --epochs 0" + kSmall) == 0);
  CHECK(run("eval --checkpoint " + (root / "t" / "checkpoint.json").string() + " --test-data " + bad.string() +
            " --out " + (root / "w").string()) == 3);
  CHECK(run("--version") == 0);
}

TEST_CASE("manifest round trip") {
  RunConfig c;
  c.command = "run";
  c.data = "d";
  c.out = "o";
  c.train.lr = 0.1 + 0.2;
  c.train.seed = 12345678901234ULL;
  c.train.model.parts = ScoreParts::parse("gr");
  c.variant = "no-ra";
  c.metric = Metric::Rank;
  c.frequency_source = FrequencySource::TrainGraph;
  const auto back = parse_manifest(manifest_json(c));
  CHECK(manifest_json(back) == manifest_json(c));
  CHECK(back.train.lr == c.train.lr);
}
