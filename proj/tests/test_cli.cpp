#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "test_util.hpp"

#include "cascade/cli.hpp"
#include "cascade/synthetic.hpp"

using namespace cascade;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

const std::vector<std::string> kSmall = {"--set", "d=16", "--set", "embedding_dim=8", "--set", "lstm_hidden=8",
                                         "--set", "relation_emb_dim=8", "--set", "pos_emb_dim=4",
                                         "--set", "max_rel_distance=8"};

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run({"frobnicate"}).code == cli::kExitUsage);
  CHECK(run({}).code == cli::kExitUsage);
  CHECK(run({"evaluate", "--gold", "x"}).code == cli::kExitUsage);
  CHECK(run({"evaluate", "--pred", "a", "--gold", "b", "--mode", "fuzzy"}).code == cli::kExitUsage);
  CHECK(run({"stats", "--data", "a", "--bogus"}).code == cli::kExitUsage);
}

TEST_CASE("help on every subcommand") {
  const auto top = run({"--help"});
  CHECK(top.code == cli::kExitOk);
  for (const char* sub : {"train", "extract", "evaluate", "stats", "simulate-posterior", "gradcheck"}) {
    CAPTURE(sub);
    const auto r = run({sub, "--help"});
    CHECK(r.code == cli::kExitOk);
    CHECK(top.out.find(sub) != std::string::npos);
    CHECK(r.out.find("--") != std::string::npos);
  }
  const auto sim = run({"simulate-posterior", "--help"});
  for (const char* flag : {"--mh", "--mr", "--p11", "--p12", "--p22", "--robs", "--samples", "--seed", "--band"})
    CHECK(sim.out.find(flag) != std::string::npos);
  CHECK(sim.out.find("1000000") != std::string::npos);
  const auto ev = run({"evaluate", "--help"});
  CHECK(ev.out.find("exact") != std::string::npos);
  const auto tr = run({"train", "--help"});
  CHECK(tr.out.find("2e-5") != std::string::npos);
  CHECK(tr.out.find("0.4") != std::string::npos);
}

TEST_CASE("evaluate identical files") {
  testutil::TempDir dir;
  const auto corpus = generate_synthetic_corpus(SyntheticSpec{12, 4, 0.4, 0.3, 0.3, 3, 0}, 2);
  write_corpus(dir / "gold.jsonl", corpus);
  const auto r = run({"evaluate", "--pred", (dir / "gold.jsonl").string(), "--gold", (dir / "gold.jsonl").string()});
  CHECK(r.code == cli::kExitOk);
  CHECK(r.out.find("1.0000") != std::string::npos);

  const std::vector<std::string> args = {"evaluate", "--pred", (dir / "gold.jsonl").string(), "--gold",
                                         (dir / "gold.jsonl").string(), "--mode", "partial", "--elements",
                                         "--breakdown", "count", "--format", "delimited"};
  auto a = args, b = args;
  a.insert(a.end(), {"--report", (dir / "a.tsv").string()});
  b.insert(b.end(), {"--report", (dir / "b.tsv").string()});
  const auto ra = run(a), rb = run(b);
  CHECK(ra.code == 0);
  CHECK(rb.code == 0);
  CHECK(ra.out == rb.out);
  CHECK(testutil::read_file(dir / "a.tsv") == testutil::read_file(dir / "b.tsv"));
  CHECK(testutil::read_file(dir / "a.tsv") == ra.out);
  CHECK(ra.out.find("(h,r,t)") != std::string::npos);
  CHECK(ra.out.find(">=5") != std::string::npos);

  const auto missing = run({"evaluate", "--pred", (dir / "none.jsonl").string(), "--gold", (dir / "gold.jsonl").string()});
  CHECK(missing.code == cli::kExitRuntime);
  CHECK(missing.err.find("none.jsonl") != std::string::npos);
}

TEST_CASE("simulate-posterior") {
  const auto bad = run({"simulate-posterior", "--p22", "0"});
  CHECK(bad.code == cli::kExitRuntime);
  CHECK(bad.err.find("error:") != std::string::npos);

  const std::vector<std::string> args = {"simulate-posterior", "--p12", "0.5", "--samples", "200000", "--seed", "4",
                                         "--band", "0.05"};
  const auto r = run(args);
  REQUIRE(r.code == cli::kExitOk);
  CHECK(run(args).out == r.out);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["closed_form_mean"].get<double>() == doctest::Approx(0.5));
  CHECK(std::abs(j["mc_mean"].get<double>() - 0.5) < 3 * j["mc_stderr"].get<double>());
  CHECK(j["band"].get<double>() == 0.05);
}

TEST_CASE("stats") {
  testutil::TempDir dir;
  const auto corpus = generate_synthetic_corpus(SyntheticSpec{20, 4, 0.5, 0.25, 0.25, 3, 0}, 2);
  write_corpus(dir / "train.jsonl", corpus);
  const auto r = run({"stats", "--data", (dir / "train.jsonl").string()});
  CHECK(r.code == cli::kExitOk);
  CHECK(r.out.find("train") != std::string::npos);
  CHECK(r.out.find("20") != std::string::npos);
  CHECK(run({"stats", "--data", (dir / "nope.jsonl").string()}).code == cli::kExitRuntime);
}

TEST_CASE("train, extract and evaluate end to end") {
  testutil::TempDir dir;
  const auto corpus = generate_synthetic_corpus(SyntheticSpec{16, 4, 0.4, 0.3, 0.3, 3, 0}, 6);
  write_corpus(dir / "train.jsonl", corpus);
  synthetic_schema(4).save(dir / "schema.txt");
  testutil::write_file(dir / "model.cfg", "learning_rate = 0.01\nmax_epochs = 50\nbatch_size = 4\n");

  std::vector<std::string> args = {"train", "--train", (dir / "train.jsonl").string(), "--schema",
                                   (dir / "schema.txt").string(), "--config", (dir / "model.cfg").string(),
                                   "--max-epochs", "3", "--seed", "5", "--out", (dir / "m.ckpt").string(),
                                   "--report", (dir / "report.json").string()};
  args.insert(args.end(), kSmall.begin(), kSmall.end());
  const auto t = run(args);
  REQUIRE(t.code == cli::kExitOk);
  CHECK(t.out.find("epoch 3 loss") != std::string::npos);
  CHECK(t.out.find("epoch 4") == std::string::npos);
  const auto report = nlohmann::json::parse(testutil::read_file(dir / "report.json"));
  CHECK(report["epochs"].size() == 3);
  CHECK(report["seed"] == 5);

  auto again = args;
  again[again.size() - kSmall.size() - 3] = (dir / "m2.ckpt").string();
  again[again.size() - kSmall.size() - 1] = (dir / "report2.json").string();
  const auto t2 = run(again);
  CHECK(t2.out.substr(0, t2.out.find("best")) == t.out.substr(0, t.out.find("best")));
  CHECK(testutil::read_file(dir / "m.ckpt") == testutil::read_file(dir / "m2.ckpt"));

  const auto x = run({"extract", "--model", (dir / "m.ckpt").string(), "--input", (dir / "train.jsonl").string(),
                      "--output", (dir / "pred.jsonl").string(), "--delta", "0.3"});
  CHECK(x.code == cli::kExitOk);
  CHECK(x.out.find("wrote 16 records") != std::string::npos);
  const auto e = run({"evaluate", "--pred", (dir / "pred.jsonl").string(), "--gold", (dir / "train.jsonl").string()});
  CHECK(e.code == cli::kExitOk);

  auto bad = args;
  bad.insert(bad.end(), {"--set", "no_such_key=1"});
  CHECK(run(bad).code == cli::kExitRuntime);
  CHECK(run({"extract", "--model", (dir / "nope.ckpt").string(), "--input", (dir / "train.jsonl").string(),
             "--output", (dir / "p.jsonl").string()})
            .code == cli::kExitRuntime);
}

TEST_CASE("gradcheck subcommand") {
  testutil::TempDir dir;
  testutil::write_file(dir / "g.cfg", "d = 8\nlstm_hidden = 3\nembedding_dim = 4\nrelation_emb_dim = 4\npos_emb_dim = 4\n");
  const auto r = run({"gradcheck", "--config", (dir / "g.cfg").string(), "--seed", "3", "--max-entries", "20"});
  CHECK(r.code == cli::kExitOk);
  CHECK(r.out.find("PASS") != std::string::npos);
  CHECK(r.out.find("tagger_tail_end") != std::string::npos);
  const auto f = run({"gradcheck", "--config", (dir / "g.cfg").string(), "--max-entries", "5", "--tol", "1e-30"});
  CHECK(f.code == cli::kExitRuntime);
  CHECK(f.out.find("FAIL") != std::string::npos);
}
