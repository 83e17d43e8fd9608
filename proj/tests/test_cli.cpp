#include <doctest.h>

#include <sstream>

#include "test_util.hpp"
#include "tglrn/cli.hpp"
#include "tglrn/config.hpp"
#include "tglrn/error.hpp"

using namespace tglrn;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string first_line(const std::string& text) { return text.substr(0, text.find('\n')); }

// Small but complete pipeline settings passed as overrides.
std::vector<std::string> small(const TempDir& dir) {
  return {"--out_dir", dir.path().string(), "--edges", (dir / "edges.csv").string(), "--flows",
          (dir / "flow.csv").string(), "--nodes", "5", "--steps", "70", "--period", "24", "--regime_period", "6",
          "--input_len", "4", "--horizon", "2", "--D", "6", "--d", "4", "--m", "4", "--L", "2", "--n_blocks", "1",
          "--max_epochs", "2", "--batch_size", "8"};
}

std::vector<std::string> with(std::string cmd, std::vector<std::string> rest) {
  rest.insert(rest.begin(), std::move(cmd));
  return rest;
}

}  // namespace

TEST_CASE("config defaults, parsing and unknown keys") {
  RunConfig c;
  for (const auto& k : config_keys()) CHECK_NOTHROW(c.get(k.name));
  CHECK(c.get_double("learning_rate") == 0.005);
  CHECK(c.get_int("K") == 2);
  CHECK(c.get_int("patience") == 15);
  CHECK(c.get_int("batch_size") == 64);
  CHECK(c.get_double("mape_threshold") == 1.0);
  CHECK_FALSE(c.get_bool("normalized_loss"));
  c.merge_text("# comment\nseed = 9   # trailing\n\n  gamma=0.1\n", "t");
  CHECK(c.get_u64("seed") == 9);
  CHECK(c.get_double("gamma") == 0.1);
  CHECK_THROWS_AS(c.merge_text("gamm = 0.1\n", "t"), ConfigError);
  CHECK_THROWS_AS(c.merge_text("just words\n", "t"), ConfigError);
  c.set("D", "abc");
  CHECK_THROWS_AS(c.get_int("D"), ConfigError);
  c.set("scaler", "median");
  CHECK_THROWS_AS(c.scaler_mode(), ConfigError);
  c.set("normalized_loss", "maybe");
  CHECK_THROWS_AS(c.get_bool("normalized_loss"), ConfigError);
}

TEST_CASE("echoed config reproduces itself") {
  RunConfig c;
  c.set("seed", "42");
  c.set("topology", "ring");
  RunConfig d;
  d.merge_text(c.to_text(), "echo");
  CHECK(d.to_text() == c.to_text());
  CHECK(d.model_config(8).seed == 42);
}

TEST_CASE("cli: usage and config errors") {
  TempDir dir;
  auto r = run({});
  CHECK(r.code == 2);
  CHECK(r.err.rfind("ERROR:2:", 0) == 0);
  r = run({"fly"});
  CHECK(r.code == 2);
  r = run({"synth", "--out_dir", dir.path().string(), "--nodez", "5"});
  CHECK(r.code == 2);
  CHECK(r.err.find("nodez") != std::string::npos);
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
  r = run({"synth", "--config", (dir / "none.cfg").string()});
  CHECK(r.code == 2);
  write_file(dir / "bad.cfg", "bogus = 1\n");
  r = run({"synth", "--config", (dir / "bad.cfg").string()});
  CHECK(r.code == 2);
  r = run({"synth", "--out_dir", dir.path().string(), "--nodes"});
  CHECK(r.code == 2);
}

TEST_CASE("cli: synth writes three CSVs with documented headers") {
  TempDir dir;
  const auto r = run({"synth", "--topology", "chain", "--nodes", "8", "--out_dir", dir.path().string()});
  REQUIRE(r.code == 0);
  CHECK(first_line(read_file(dir / "edges.csv")) == "from,to");
  CHECK(first_line(read_file(dir / "flow.csv")) == "t,s0,s1,s2,s3,s4,s5,s6,s7");
  CHECK(first_line(read_file(dir / "planted.csv")) == "t,from,to,coeff");
  CHECK(read_file(dir / "effective.cfg").find("nodes = 8\n") != std::string::npos);
}

TEST_CASE("cli: data errors exit 3") {
  TempDir dir;
  auto r = run({"train", "--out_dir", dir.path().string(), "--flows", (dir / "nope.csv").string()});
  CHECK(r.code == 3);
  CHECK(r.err.rfind("ERROR:3:", 0) == 0);
  write_file(dir / "flow.csv", "t,s0,s1\n0,1,2\n1,1,2\n");
  write_file(dir / "edges.csv", "from,to\n0,1\n");
  r = run({"train", "--out_dir", dir.path().string(), "--flows", (dir / "flow.csv").string(), "--edges",
           (dir / "edges.csv").string()});
  CHECK(r.code == 3);
  r = run({"eval", "--out_dir", dir.path().string(), "--flows", (dir / "flow.csv").string(), "--edges",
           (dir / "edges.csv").string()});
  CHECK(r.code == 3);
}

TEST_CASE("cli: invalid schedule is a config error") {
  TempDir dir;
  REQUIRE(run(with("synth", small(dir))).code == 0);
  auto args = with("train", small(dir));
  args.insert(args.end(), {"--Ks", "3", "--n_blocks", "2"});
  const auto r = run(args);
  CHECK(r.code == 2);
  CHECK(r.err.find("Ks") != std::string::npos);
}

TEST_CASE("cli: train, eval, predict and inspect-graph end to end") {
  TempDir dir;
  REQUIRE(run(with("synth", small(dir))).code == 0);
  auto r = run(with("train", small(dir)));
  REQUIRE(r.code == 0);
  CHECK(std::filesystem::exists(dir / "model.ckpt"));
  CHECK(first_line(read_file(dir / "history.csv")) == "epoch,train_loss,val_mae,val_rmse,val_mape");

  r = run(with("eval", small(dir)));
  REQUIRE(r.code == 0);
  const auto metrics = read_file(dir / "metrics.csv");
  CHECK(first_line(metrics) == "model,horizon,mae,rmse,mape");
  CHECK(metrics.find("tglrn,all,") != std::string::npos);
  CHECK(metrics.find("ha,2,") != std::string::npos);

  // Same seed twice: identical artifacts.
  const auto history = read_file(dir / "history.csv");
  REQUIRE(run(with("train", small(dir))).code == 0);
  REQUIRE(run(with("eval", small(dir))).code == 0);
  CHECK(read_file(dir / "history.csv") == history);
  CHECK(read_file(dir / "metrics.csv") == metrics);

  // Re-running from the echoed config reproduces the metrics.
  TempDir again;
  REQUIRE(run({"eval", "--config", (dir / "effective.cfg").string(), "--out_dir", again.path().string(),
               "--checkpoint", (dir / "model.ckpt").string()})
              .code == 0);
  CHECK(read_file(again / "metrics.csv") == metrics);

  r = run(with("predict", small(dir)));
  REQUIRE(r.code == 0);
  const auto preds = read_file(dir / "predictions.csv");
  CHECK(first_line(preds) == "t,horizon,sensor,value");

  r = run(with("inspect-graph", small(dir)));
  REQUIRE(r.code == 0);
  CHECK(first_line(read_file(dir / "graph_dump.csv")) == "t,i,j,weight,hop_i");
  CHECK(first_line(read_file(dir / "hop_histogram.csv")) == "step,hop,count");

  // A checkpoint for a different sensor count is rejected as a data error.
  auto args = with("synth", small(dir));
  args.insert(args.end(), {"--nodes", "6"});
  REQUIRE(run(args).code == 0);
  r = run(with("eval", small(dir)));
  CHECK(r.code == 3);
}

TEST_CASE("cli: gradcheck passes") {
  TempDir dir;
  const auto r = run({"gradcheck", "--out_dir", dir.path().string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("FAIL") == std::string::npos);
}
