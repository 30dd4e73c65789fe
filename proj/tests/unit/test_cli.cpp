#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "test_support.hpp"

using afecnn::tools::run_cli;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string fixture_ntu() { return (fs::path(AFECNN_FIXTURE_DIR) / "ntu").string(); }

// Small 15-joint dataset shared by the slower tests.
fs::path small_dataset(const fs::path& dir) {
  const auto path = dir / "small.jsonl";
  const CliRun r = cli({"synth", "--classes", "3", "--per-class", "4", "--frames", "30", "--seed", "5", "--out",
                     path.string()});
  EXPECT_EQ(r.code, 0) << r.err;
  return path;
}

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli({}).code, 1);
  EXPECT_EQ(cli({"frobnicate"}).code, 1);
  EXPECT_EQ(cli({"synth"}).code, 1);
  EXPECT_EQ(cli({"synth", "--out", "x.jsonl", "--bogus"}).code, 1);
  EXPECT_EQ(cli({"train", "--data", "a", "--out-checkpoint", "b", "--epochs", "0"}).code, 1);
  const CliRun help = cli({"--help"});
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.out.find("ingest"), std::string::npos);
}

TEST(Cli, IngestReportsCorruptFileAndKeepsTheRest) {
  const auto dir = afecnn::test::scratch_dir("cli_ingest");
  const CliRun r = cli({"ingest", "--ntu-dir", fixture_ntu(), "--out", (dir / "out.jsonl").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("S001C001P002R001A002"), std::string::npos) << r.err;
  EXPECT_NE(r.out.find("sequences=3"), std::string::npos) << r.out;
  std::ifstream in(dir / "out.jsonl");
  std::size_t lines = 0;
  for (std::string line; std::getline(in, line);) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_TRUE(j.contains("frames"));
    ++lines;
  }
  EXPECT_EQ(lines, 3u);
}

TEST(Cli, IngestOfNothingIsADataError) {
  const auto dir = afecnn::test::scratch_dir("cli_empty");
  fs::create_directories(dir / "none");
  EXPECT_EQ(cli({"ingest", "--ntu-dir", (dir / "none").string(), "--out", (dir / "o.jsonl").string()}).code, 2);
  EXPECT_EQ(cli({"ingest", "--ntu-dir", (dir / "missing").string(), "--out", (dir / "o.jsonl").string()}).code, 2);
  EXPECT_EQ(cli({"ingest", "--out", (dir / "o.jsonl").string()}).code, 1);
}

TEST(Cli, SynthIsSeededByFlagOrEnvironment) {
  const auto dir = afecnn::test::scratch_dir("cli_synth");
  auto make = [&](const std::string& name, std::vector<std::string> extra) {
    std::vector<std::string> args{"synth", "--classes", "2", "--per-class", "2", "--frames", "20", "--out",
                                  (dir / name).string()};
    args.insert(args.end(), extra.begin(), extra.end());
    EXPECT_EQ(cli(args).code, 0);
    return slurp(dir / name);
  };
  const std::string a = make("a.jsonl", {"--seed", "9"}), b = make("b.jsonl", {"--seed", "9"});
  EXPECT_EQ(a, b);
  EXPECT_NE(a, make("c.jsonl", {"--seed", "10"}));
  ::setenv("AFE_SEED", "9", 1);
  const std::string env = make("d.jsonl", {});
  ::unsetenv("AFE_SEED");
  EXPECT_EQ(env, a);
  EXPECT_EQ(make("e.jsonl", {}), make("f.jsonl", {"--seed", "1"}));
}

TEST(Cli, TrainEvalEncodeBench) {
  const auto dir = afecnn::test::scratch_dir("cli_pipeline");
  const auto data = small_dataset(dir);
  const auto ck = dir / "model.afec";
  const CliRun t = cli({"train", "--data", data.string(), "--out-checkpoint", ck.string(), "--epochs", "2", "--batch",
                     "4", "--protocol", "cross-view"});
  ASSERT_EQ(t.code, 0) << t.err;
  ASSERT_TRUE(fs::exists(ck));
  std::ifstream log(dir / "model.log");
  std::string line;
  std::size_t n = 0;
  while (std::getline(log, line)) {
    ++n;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 3) << line;
    EXPECT_EQ(line.rfind(std::to_string(n) + ",", 0), 0u) << line;
  }
  EXPECT_EQ(n, 2u);

  const CliRun e = cli({"eval", "--checkpoint", ck.string(), "--data", data.string(), "--out-dir", dir.string()});
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_EQ(e.out.rfind("accuracy=", 0), 0u);
  EXPECT_NE(e.out.find("mean_class_accuracy="), std::string::npos);
  EXPECT_EQ(slurp(dir / "confusion.ppm").substr(0, 3), "P6\n");
  EXPECT_TRUE(fs::exists(dir / "confusion.csv"));

  const CliRun x = cli({"encode", "--checkpoint", ck.string(), "--sequence", data.string(), "--index", "3", "--out-dir",
                     (dir / "img").string()});
  ASSERT_EQ(x.code, 0) << x.err;
  for (const char* name : {"tf_kjei.ppm", "tf_bvei.ppm", "t_kjvi.ppm", "t_bvvi.ppm", "mfam.ppm"}) {
    const std::string ppm = slurp(dir / "img" / name);
    EXPECT_EQ(ppm.rfind("P6\n64 64\n255\n", 0), 0u) << name;
    EXPECT_EQ(ppm.size(), std::string("P6\n64 64\n255\n").size() + 64 * 64 * 3) << name;
  }
  EXPECT_EQ(cli({"encode", "--checkpoint", ck.string(), "--sequence", data.string(), "--index", "99", "--out-dir",
                 (dir / "img").string()})
                .code,
            1);

  const CliRun b = cli({"bench", "--checkpoint", ck.string(), "--iters", "3", "--warmup", "1"});
  ASSERT_EQ(b.code, 0) << b.err;
  const auto json = nlohmann::json::parse(b.out.substr(b.out.find('\n') + 1));
  for (const char* key : {"mean_ms", "median_ms", "p95_ms", "gflops", "params"}) EXPECT_TRUE(json.contains(key)) << key;
  EXPECT_GT(json["mean_ms"].get<double>(), 0.0);
}

TEST(Cli, ConfigMismatchAndBadData) {
  const auto dir = afecnn::test::scratch_dir("cli_mismatch");
  const auto ck = dir / "ntu.afec";
  ASSERT_EQ(cli({"encode", "--init", "--joints", "25", "--classes", "3", "--sequence",
                 small_dataset(dir).string(), "--out-dir", dir.string()})
                .code,
            3);
  {
    std::ofstream bad(dir / "junk.afec", std::ios::binary);
    bad << "nope";
  }
  EXPECT_EQ(cli({"eval", "--checkpoint", (dir / "junk.afec").string(), "--data", (dir / "small.jsonl").string()}).code,
            2);
  {
    std::ofstream bad(dir / "bad.jsonl");
    bad << "{not json\n";
  }
  EXPECT_EQ(cli({"train", "--data", (dir / "bad.jsonl").string(), "--out-checkpoint", ck.string()}).code, 2);
  EXPECT_EQ(cli({"train", "--data", (dir / "small.jsonl").string(), "--out-checkpoint", ck.string(), "--classes",
                 "2", "--epochs", "1"})
                .code,
            3);
}

TEST(Cli, InitBenchAndAblate) {
  const CliRun b = cli({"bench", "--init", "--joints", "25", "--classes", "60", "--iters", "2", "--warmup", "0"});
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(b.out.rfind("# cpu: ", 0), 0u);

  const auto dir = afecnn::test::scratch_dir("cli_ablate");
  const CliRun a = cli({"ablate", "--data", small_dataset(dir).string(), "--epochs", "1", "--batch", "8", "--out",
                     (dir / "ablation.csv").string()});
  ASSERT_EQ(a.code, 0) << a.err;
  const std::string csv = slurp(dir / "ablation.csv");
  EXPECT_EQ(csv, a.out);
  EXPECT_EQ(csv.rfind("variant,cross_subject,cross_view\nraw,", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 8);
}
