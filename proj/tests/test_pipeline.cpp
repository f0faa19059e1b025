#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "conreader/cli.hpp"

using namespace conreader;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::vector<std::string>& args) {
  std::ostringstream sink;
  return cli::run(args, sink);
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::path("/tmp") / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
};

}  // namespace

TEST_CASE("gen is reproducible byte for byte") {
  TempDir d1("conreader_pipe_gen1");
  TempDir d2("conreader_pipe_gen2");
  REQUIRE(run_cli({"gen", "--out", d1.path.string(), "--contracts", "3", "--dev", "1", "--test",
                   "1", "--types", "4", "--seed", "7"}) == 0);
  REQUIRE(run_cli({"gen", "--out", d2.path.string(), "--contracts", "3", "--dev", "1", "--test",
                   "1", "--types", "4", "--seed", "7"}) == 0);
  for (const char* f :
       {"train_contracts.jsonl", "ca_train.jsonl", "cd_train.jsonl", "definitions.jsonl",
        "test_contracts.jsonl", "ca_test.jsonl", "squad_train.json"})
    REQUIRE(slurp((d1.path / f).string()) == slurp((d2.path / f).string()));
}

TEST_CASE("full pipeline: gen, defs, train, predict, eval, explain") {
  TempDir dir("conreader_pipe_full");
  const std::string data = (dir.path / "data").string();
  REQUIRE(run_cli({"gen", "--out", data, "--contracts", "4", "--dev", "1", "--test", "2",
                   "--types", "3", "--seed", "11"}) == 0);

  // definition tooling against the generated gold
  const std::string defs_out = (dir.path / "defs.jsonl").string();
  REQUIRE(run_cli({"defs", "extract", "--contracts", data + "/train_contracts.jsonl", "--out",
                   defs_out}) == 0);
  std::ostringstream score_log;
  REQUIRE(cli::run({"defs", "score", "--pred", defs_out, "--gold", data + "/definitions.jsonl"},
                   score_log) == 0);
  REQUIRE(score_log.str().find("F1@D") != std::string::npos);

  // train a very small model through the CLI
  const std::string ckpt = (dir.path / "model.ckpt").string();
  const std::string loss_csv = (dir.path / "loss.csv").string();
  REQUIRE(run_cli({"train", "--data", data, "--task", "ca", "--out", ckpt, "--loss-csv",
                   loss_csv, "--epochs", "1", "--hidden", "16", "--layers", "1", "--heads", "2",
                   "--max-len", "128", "--slots", "8", "--seed", "3", "--batch-size", "4"}) == 0);
  REQUIRE(fs::exists(ckpt));
  {
    std::ifstream csv(loss_csv);
    std::string header;
    std::getline(csv, header);
    REQUIRE(header == "step,L,L_e,L_r");
    std::string row;
    REQUIRE(std::getline(csv, row).good());
  }

  const std::string preds = (dir.path / "preds.jsonl").string();
  REQUIRE(run_cli({"predict", "--ckpt", ckpt, "--data", data, "--task", "ca", "--split", "test",
                   "--out", preds, "--top-t", "5"}) == 0);
  REQUIRE(fs::exists(preds));

  const std::string scores = (dir.path / "scores.csv").string();
  const std::string pr = (dir.path / "pr.csv").string();
  REQUIRE(run_cli({"eval", "--pred", preds, "--gold", data + "/ca_test.jsonl", "--out", scores,
                   "--pr-curve", pr}) == 0);
  const std::string score_text = slurp(scores);
  REQUIRE(score_text.find("micro,aupr,") != std::string::npos);
  REQUIRE(score_text.find("macro,aupr,") != std::string::npos);
  REQUIRE(slurp(pr).find("recall,precision,confidence") != std::string::npos);

  const std::string slots = (dir.path / "slots.jsonl").string();
  REQUIRE(run_cli({"explain", "--ckpt", ckpt, "--data", data, "--task", "ca", "--split", "test",
                   "--out", slots, "--limit", "3"}) == 0);
  REQUIRE(fs::exists(slots));
  std::ifstream sl(slots);
  std::string line;
  REQUIRE(std::getline(sl, line).good());
  const auto j = nlohmann::json::parse(line);
  REQUIRE(j.contains("start_attention"));
  REQUIRE(j.contains("end_attention"));

  // zero-shot scoring mode works on the same files
  REQUIRE(run_cli({"eval", "--pred", preds, "--gold", data + "/ca_test.jsonl", "--mode",
                   "zero_shot", "--micro-only"}) == 0);
}

TEST_CASE("train twice with one seed: identical loss csv and prediction files") {
  TempDir dir("conreader_pipe_det");
  const std::string data = (dir.path / "data").string();
  REQUIRE(run_cli({"gen", "--out", data, "--contracts", "3", "--dev", "1", "--test", "1",
                   "--types", "3", "--seed", "5"}) == 0);
  auto round = [&](const std::string& tag) {
    const std::string ckpt = (dir.path / (tag + ".ckpt")).string();
    const std::string csv = (dir.path / (tag + ".csv")).string();
    const std::string preds = (dir.path / (tag + ".preds.jsonl")).string();
    REQUIRE(run_cli({"train", "--data", data, "--task", "ca", "--out", ckpt, "--loss-csv", csv,
                     "--epochs", "2", "--hidden", "16", "--layers", "1", "--heads", "2",
                     "--max-len", "128", "--slots", "8", "--seed", "21", "--batch-size",
                     "4"}) == 0);
    REQUIRE(run_cli({"predict", "--ckpt", ckpt, "--data", data, "--task", "ca", "--split",
                     "test", "--out", preds}) == 0);
    return std::pair{slurp(csv), slurp(preds)};
  };
  const auto a = round("a");
  const auto b = round("b");
  REQUIRE(a.first == b.first);
  REQUIRE(a.second == b.second);
}

TEST_CASE("cd task trains end to end") {
  TempDir dir("conreader_pipe_cd");
  const std::string data = (dir.path / "data").string();
  REQUIRE(run_cli({"gen", "--out", data, "--contracts", "6", "--dev", "1", "--test", "2",
                   "--types", "3", "--seed", "9", "--cd-rounds", "3"}) == 0);
  const std::string ckpt = (dir.path / "cd.ckpt").string();
  REQUIRE(run_cli({"train", "--data", data, "--task", "cd", "--out", ckpt, "--epochs", "1",
                   "--hidden", "16", "--layers", "1", "--heads", "2", "--max-len", "160",
                   "--slots", "8", "--seed", "3", "--batch-size", "4"}) == 0);
  const std::string preds = (dir.path / "cd_preds.jsonl").string();
  REQUIRE(run_cli({"predict", "--ckpt", ckpt, "--data", data, "--task", "cd", "--split", "test",
                   "--out", preds}) == 0);
  std::ostringstream log;
  REQUIRE(cli::run({"eval", "--pred", preds, "--gold", data + "/cd_test.jsonl", "--micro-only"},
                   log) == 0);
  REQUIRE(log.str().find("soft_f1") != std::string::npos);
}

TEST_CASE("unknown flags and missing files exit nonzero") {
  REQUIRE(run_cli({"train", "--no-such-flag"}) != 0);
  REQUIRE(run_cli({"predict", "--ckpt", "/tmp/does_not_exist.ckpt", "--contracts", "/tmp/nope",
                   "--examples", "/tmp/nope2"}) != 0);
  REQUIRE(run_cli({"eval", "--pred", "/tmp/missing.jsonl", "--gold", "/tmp/missing2.jsonl"}) != 0);
  REQUIRE(run_cli({}) != 0);
}
