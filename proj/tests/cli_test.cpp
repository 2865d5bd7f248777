#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "rfsearch/errors.hpp"
#include "rfsearch/experiment.hpp"

namespace fs = std::filesystem;

namespace rfs {
namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("rfsearch_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_config(const std::string& name, Json j) {
    if (!j.contains("output_dir")) j["output_dir"] = (dir_ / ("out_" + name)).string();
    const fs::path p = dir_ / (name + ".json");
    std::ofstream(p) << j.dump(2);
    return p;
  }

  // Runs the CLI, capturing stderr into a file; returns the exit status.
  int run(const std::string& args) {
    const std::string cmd = std::string(RFSEARCH_BIN) + " " + args + " > " + (dir_ / "stdout.txt").string() +
                            " 2> " + (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  std::string err() const { return slurp(dir_ / "stderr.txt"); }

  static Json surrogate_config() {
    return Json::parse(R"({
      "master_seed": 3,
      "network": {"kernel_sizes": [3, 3, 3, 3], "widths": [4, 4, 4, 4]},
      "surrogate": {"target": [1, 16, 4, 256]},
      "global": {"iterations": 8, "population": 8, "k": 2, "T": 10},
      "oracle": {"seeds": 4}
    })");
  }
  static Json tiny_training_config() {
    return Json::parse(R"({
      "master_seed": 5,
      "task": {"kind": "lagged_copy", "lag": 3, "sequence_length": 24, "train_size": 24, "val_size": 8},
      "network": {"kernel_sizes": [2], "widths": [4], "residual": false},
      "train": {"epochs": 2, "batch_size": 8},
      "global": {"iterations": 2, "population": 4, "epochs": 1, "T": 4},
      "local": {"iterations": 2, "epochs_per_iteration": 1, "delta_fraction": 0.5}
    })");
  }

  fs::path dir_;
};

TEST(Config, DefaultsAreResolvedAndEchoed) {
  const ExperimentConfig cfg = parse_experiment_config(Json::parse(R"({"master_seed": 9, "global": {}})"));
  EXPECT_EQ(cfg.task.seed, 9u);
  EXPECT_EQ(cfg.network.dilations, std::vector<int>(4, 1));
  EXPECT_EQ(cfg.global->max_dilation_cap, 255);
  EXPECT_EQ(global_config(cfg).space.candidates.back(), 255);
  EXPECT_EQ(cfg.oracle.budget, 12u * 21u);
  const Json echoed = to_json(cfg);
  EXPECT_EQ(to_json(parse_experiment_config(echoed)), echoed);
}

TEST(Config, SurrogateCapIsTheFullSpace) {
  const ExperimentConfig cfg =
      parse_experiment_config(Json::parse(R"({"surrogate": {}, "global": {"k": 2, "T": 10}})"));
  EXPECT_EQ(global_config(cfg).space.candidates.back(), 1024);
}

TEST(Config, StrictSchema) {
  EXPECT_THROW(parse_experiment_config(Json::parse(R"({"globl": {}})")), ConfigError);
  EXPECT_THROW(parse_experiment_config(Json::parse(R"({"task": {"lagg": 3}})")), ConfigError);
  EXPECT_THROW(parse_experiment_config(Json::parse(R"({"task": {"lag": -3}})")), ConfigError);
  EXPECT_THROW(parse_experiment_config(Json::parse(R"({"train": {"epochs": "ten"}})")), ConfigError);
  EXPECT_THROW(parse_experiment_config(Json::parse(R"({"local": {"pmf": "relu"}})")), ConfigError);
  EXPECT_THROW(parse_experiment_config(Json::parse(R"({"network": {"dilations": [1, 2]}})")), ConfigError);
  EXPECT_THROW(parse_experiment_config(Json::parse(R"({"task": {"lag": 300}})")), ConfigError);
  EXPECT_THROW(parse_experiment_config(Json::parse(R"({"global": {"population": 1}})")), ConfigError);
}

TEST(Config, InitialGenomeSources) {
  ExperimentConfig cfg = parse_experiment_config(Json::parse(R"({"network": {"dilations": [2, 2, 4, 8]}})"));
  EXPECT_EQ(resolve_initial_genome(cfg, std::nullopt).dilations, (std::vector<int>{2, 2, 4, 8}));
  EXPECT_EQ(resolve_initial_genome(cfg, "baseline").dilations, std::vector<int>(4, 1));
  EXPECT_EQ(resolve_initial_genome(cfg, "3,5,7,9").dilations, (std::vector<int>{3, 5, 7, 9}));
  EXPECT_THROW(resolve_initial_genome(cfg, "3,5"), ConfigError);
  EXPECT_THROW(resolve_initial_genome(cfg, "/no/such/file.json"), ConfigError);
}

TEST_F(Cli, MissingConfigIsUsageError) {
  EXPECT_EQ(run("global --config " + (dir_ / "absent.json").string()), 2);
  EXPECT_NE(err().find("absent.json"), std::string::npos);
}

TEST_F(Cli, UnknownSubcommandOrFlagIsUsageError) {
  EXPECT_EQ(run("fly"), 2);
  EXPECT_EQ(run("global --config x.json --bogus"), 2);
}

TEST_F(Cli, InvalidConfigIsUsageError) {
  Json j = surrogate_config();
  j["global"]["p_m"] = 2.0;
  EXPECT_EQ(run("global --config " + write_config("bad", j).string()), 2);
  EXPECT_FALSE(err().empty());
}

TEST_F(Cli, GlobalOnSurrogateWritesArtifactsAndIsReproducible) {
  const fs::path cfg = write_config("g", surrogate_config());
  ASSERT_EQ(run("global --config " + cfg.string()), 0) << err();
  const fs::path out = dir_ / "out_g";
  for (const char* f : {"best.json", "config.json", "population.csv", "trajectory.csv"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  const Json best = Json::parse(slurp(out / "best.json"));
  EXPECT_EQ(best["kernel_sizes"], Json::array({3, 3, 3, 3}));
  EXPECT_EQ(slurp(out / "population.csv").substr(0, 62),
            "generation,candidate_id,genome,fitness,epochs,seed,wall_time_s");
  const std::string best1 = slurp(out / "best.json"), traj1 = slurp(out / "trajectory.csv");
  ASSERT_EQ(run("global --jobs 4 --config " + cfg.string()), 0) << err();
  EXPECT_EQ(slurp(out / "best.json"), best1);
  EXPECT_EQ(slurp(out / "trajectory.csv"), traj1);

  // The echoed config reproduces the run.
  const fs::path again = dir_ / "again.json";
  Json echoed = Json::parse(slurp(out / "config.json"));
  echoed["output_dir"] = (dir_ / "out_again").string();
  std::ofstream(again) << echoed.dump();
  ASSERT_EQ(run("global --config " + again.string()), 0) << err();
  EXPECT_EQ(slurp(dir_ / "out_again" / "best.json"), best1);
}

TEST_F(Cli, SeedFlagOverridesAndIsEchoed) {
  const fs::path cfg = write_config("s", surrogate_config());
  ASSERT_EQ(run("global --seed 77 --config " + cfg.string()), 0) << err();
  EXPECT_EQ(Json::parse(slurp(dir_ / "out_s" / "config.json"))["master_seed"], 77);
}

TEST_F(Cli, OracleModesAndReport) {
  const fs::path cfg = write_config("o", surrogate_config());
  ASSERT_EQ(run("oracle --mode compare --config " + cfg.string()), 0) << err();
  ASSERT_EQ(run("report " + (dir_ / "out_o").string()), 0) << err();
  const std::string report = slurp(dir_ / "out_o" / "report.csv");
  EXPECT_EQ(report.substr(0, 24), "method,budget,mean,std,n");
  EXPECT_NE(report.find("ga,72,"), std::string::npos);
  EXPECT_NE(report.find("random,72,"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "out_o" / "summary.txt"));

  Json small = surrogate_config();
  small["global"]["T"] = 2;
  small["network"]["kernel_sizes"] = Json::array({3, 3, 3});
  small["network"]["widths"] = Json::array({4, 4, 4});
  small["surrogate"]["target"] = Json::array({4, 1, 2});
  ASSERT_EQ(run("oracle --mode exhaustive --config " + write_config("e", small).string()), 0) << err();
  const std::string ranked = slurp(dir_ / "out_e" / "exhaustive.csv");
  EXPECT_EQ(ranked.substr(0, ranked.find('\n', 20) + 1), "rank,genome,fitness\n1,\"4,1,2\",0\n");

  ASSERT_EQ(run("oracle --mode exhaustive --config " + cfg.string()), 0) << err();  // 11^4 fits
  Json big = surrogate_config();
  big["network"]["kernel_sizes"] = Json::array({3, 3, 3, 3, 3, 3, 3, 3});
  big["network"]["widths"] = Json::array({4, 4, 4, 4, 4, 4, 4, 4});
  big["surrogate"].erase("target");
  EXPECT_EQ(run("oracle --mode exhaustive --config " + write_config("big", big).string()), 2);
  EXPECT_NE(err().find("214358881"), std::string::npos);
}

TEST_F(Cli, ReportSkipsMalformedRowsAndRejectsEmptyDirs) {
  fs::create_directories(dir_ / "runs");
  std::ofstream(dir_ / "runs" / "trajectory.csv")
      << "budget,running_best_fitness,seed,method\n10,-3.5,1,ga\n10,oops,2,ga\n10,-1.5,2,ga\n";
  EXPECT_EQ(run("report " + (dir_ / "runs").string()), 0);
  EXPECT_NE(err().find("malformed"), std::string::npos);
  EXPECT_NE(slurp(dir_ / "runs" / "report.csv").find("ga,10,-2.5,"), std::string::npos);

  fs::create_directories(dir_ / "empty");
  EXPECT_EQ(run("report " + (dir_ / "empty").string()), 2);
  EXPECT_EQ(run("report " + (dir_ / "nowhere").string()), 2);
}

TEST_F(Cli, TrainLocalAndPipeline) {
  const fs::path cfg = write_config("t", tiny_training_config());
  ASSERT_EQ(run("train --init 2 --config " + cfg.string()), 0) << err();
  const Json metrics = Json::parse(slurp(dir_ / "out_t" / "metrics.json"));
  EXPECT_EQ(metrics["dilations"], Json::array({2}));
  EXPECT_EQ(metrics["receptive_field"], 3);

  ASSERT_EQ(run("local --init baseline --config " + cfg.string()), 0) << err();
  const std::string traj = slurp(dir_ / "out_t" / "local_trajectory.csv");
  EXPECT_EQ(traj.substr(0, traj.find('\n')), "iteration,layer_index,T_l,alpha,new_dilation");
  EXPECT_NE(traj.find("1,0,\"1,2\","), std::string::npos) << traj;
  EXPECT_TRUE(Json::parse(slurp(dir_ / "out_t" / "final.json")).contains("dilations"));

  ASSERT_EQ(run("local --parallel --pmf softmax --init baseline --config " + cfg.string()), 0) << err();
  const Json par = Json::parse(slurp(dir_ / "out_t" / "final.json"));
  EXPECT_EQ(par["kind"], "parallel");
  EXPECT_EQ(Json::parse(slurp(dir_ / "out_t" / "config.json"))["local"]["pmf"], "softmax");
  ASSERT_EQ(run("train --init " + (dir_ / "out_t" / "final.json").string() + " --config " + cfg.string()), 0)
      << err();

  // Global search output feeds the local stage.
  ASSERT_EQ(run("global --config " + cfg.string()), 0) << err();
  ASSERT_EQ(run("local --init " + (dir_ / "out_t" / "best.json").string() + " --config " + cfg.string()), 0)
      << err();

  EXPECT_EQ(run("local --init 1,2 --config " + cfg.string()), 2);
  EXPECT_NE(err().find("searched layers"), std::string::npos);
}

TEST_F(Cli, IdxFlagsSwapInPermutedPixels) {
  auto be32 = [](std::ofstream& out, std::uint32_t v) {
    const char b[4] = {char(v >> 24), char(v >> 16), char(v >> 8), char(v)};
    out.write(b, 4);
  };
  {
    std::ofstream img(dir_ / "img.idx", std::ios::binary), lab(dir_ / "lab.idx", std::ios::binary);
    be32(img, 0x00000803);
    be32(img, 20);
    be32(img, 3);
    be32(img, 3);
    for (int i = 0; i < 20 * 9; ++i) img.put(static_cast<char>((i * 37) % 256));
    be32(lab, 0x00000801);
    be32(lab, 20);
    for (int i = 0; i < 20; ++i) lab.put(static_cast<char>(i % 3));
  }
  Json j = tiny_training_config();
  j.erase("global");
  j.erase("local");
  const fs::path cfg = write_config("idx", j);
  const std::string flags =
      " --idx-images " + (dir_ / "img.idx").string() + " --idx-labels " + (dir_ / "lab.idx").string();
  ASSERT_EQ(run("train --init 2 --config " + cfg.string() + flags), 0) << err();
  const Json echoed = Json::parse(slurp(dir_ / "out_idx" / "config.json"));
  EXPECT_EQ(echoed["task"]["sequence_length"], 9);
  EXPECT_EQ(echoed["idx"]["classes"], 10);
  EXPECT_TRUE(fs::exists(dir_ / "out_idx" / "metrics.json"));

  EXPECT_EQ(run("train --config " + cfg.string() + " --idx-images " + (dir_ / "img.idx").string()), 2);
  EXPECT_EQ(run("train --config " + cfg.string() + " --idx-images /none --idx-labels /none"), 2);
}

}  // namespace
}  // namespace rfs
