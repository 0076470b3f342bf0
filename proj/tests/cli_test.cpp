#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "trafficlens/io/csv.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("tl_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  // Runs the CLI in the scratch directory; returns the exit code.
  int run(const std::string& args, const std::string& env = "") {
    const std::string cmd = "cd '" + dir_.string() + "' && " + env + " '" TRAFFICLENS_CLI "' " + args +
                            " > stdout.txt 2> stderr.txt";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string read(const std::string& name) const { return trafficlens::csv::read_file(path(name)); }

  json report_without_timing(const std::string& name) const {
    auto j = json::parse(read(name));
    j.erase("timing");
    return j;
  }

  fs::path dir_;
};

std::size_t line_count(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST_F(Cli, SynthFitForecastWrites24Rows) {
  ASSERT_EQ(run("synth traffic --out data"), 0);
  ASSERT_EQ(run("fit-arima --series data/traffic.csv --order 2,0,1 --out arima.tlm"), 0) << read("stderr.txt");
  ASSERT_EQ(run("forecast --model arima.tlm --horizon 24 --out forecast.csv"), 0);
  const auto table = trafficlens::csv::parse(read("forecast.csv"));
  EXPECT_EQ(table.rows.size(), 24u);
  EXPECT_EQ(table.header, (std::vector<std::string>{"step", "forecast", "std_error", "lower_95", "upper_95"}));
  ASSERT_EQ(run("forecast --model arima.tlm --out default.csv"), 0);
  EXPECT_EQ(read("default.csv"), read("forecast.csv"));
}

TEST_F(Cli, HorizonZeroIsUsageErrorWithoutOutput) {
  ASSERT_EQ(run("synth traffic --out data --n 500"), 0);
  ASSERT_EQ(run("fit-arima --series data/traffic.csv --order 1,0,0 --out arima.tlm"), 0);
  EXPECT_EQ(run("forecast --model arima.tlm --horizon 0 --out f.csv"), 1);
  EXPECT_FALSE(fs::exists(path("f.csv")));
  const auto err = read("stderr.txt");
  EXPECT_EQ(line_count(err), 1u);
  EXPECT_NE(err.find("kind=config"), std::string::npos);
  EXPECT_NE(err.find("exit=1"), std::string::npos);
}

TEST_F(Cli, CorruptedModelIsRejectedWithExit2) {
  ASSERT_EQ(run("synth traffic --out data --n 500"), 0);
  ASSERT_EQ(run("fit-arima --series data/traffic.csv --order 1,0,1 --out arima.tlm"), 0);
  auto bytes = read("arima.tlm");
  bytes[bytes.size() / 2] = static_cast<char>(bytes[bytes.size() / 2] ^ 0x10);
  std::ofstream(path("bad.tlm"), std::ios::binary) << bytes;
  EXPECT_EQ(run("forecast --model bad.tlm --out f.csv"), 2);
  EXPECT_NE(read("stderr.txt").find("kind=checksum"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("f.csv")));
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("train-severity --model xgboost --data a.csv --out m.tlm"), 1);
  EXPECT_EQ(run("fit-arima --series s.csv --order 2,0 --out m.tlm"), 1);
  EXPECT_EQ(line_count(read("stderr.txt")), 1u);
  EXPECT_EQ(run("--help"), 0);
}

TEST_F(Cli, MissingInputIsDataError) {
  EXPECT_EQ(run("decompose --series nope.csv --out d.csv"), 2);
  EXPECT_NE(read("stderr.txt").find("kind=parse"), std::string::npos);
}

TEST_F(Cli, SeedFromEnvironmentFlagWins) {
  ASSERT_EQ(run("synth traffic --out a --n 100 --report a.json"), 0);
  EXPECT_EQ(json::parse(read("a.json"))["seed"], 42);
  ASSERT_EQ(run("synth traffic --out b --n 100 --report b.json", "TRAFFICLENS_SEED=7"), 0);
  EXPECT_EQ(json::parse(read("b.json"))["seed"], 7);
  ASSERT_EQ(run("synth traffic --out c --n 100 --seed 9 --report c.json", "TRAFFICLENS_SEED=7"), 0);
  EXPECT_EQ(json::parse(read("c.json"))["seed"], 9);
  EXPECT_NE(read("a/traffic.csv"), read("b/traffic.csv"));
  EXPECT_EQ(run("synth traffic --out d --n 100", "TRAFFICLENS_SEED=x1"), 1);
}

TEST_F(Cli, SeverityReportsAreIdenticalApartFromTiming) {
  ASSERT_EQ(run("synth accidents --out data --n 1500"), 0);
  const std::string train = "train-severity --data data/accidents.csv --model gbdt --rounds 20 --balance down --split 0.7 ";
  ASSERT_EQ(run(train + "--out m1.tlm --report r1.json"), 0) << read("stderr.txt");
  ASSERT_EQ(run(train + "--out m1b.tlm --report r2.json"), 0);
  EXPECT_EQ(read("m1.tlm"), read("m1b.tlm"));
  auto a = report_without_timing("r1.json");
  auto b = report_without_timing("r2.json");
  a["config"].erase("out");
  b["config"].erase("out");
  EXPECT_EQ(a.dump(), b.dump());
  for (const auto* key : {"seed", "config", "artifact_version", "result"}) EXPECT_TRUE(a.contains(key)) << key;
  const auto full = json::parse(read("r1.json"));
  EXPECT_TRUE(full["timing"].contains("wall_seconds"));
  EXPECT_TRUE(full["timing"].contains("train_seconds"));

  ASSERT_EQ(run(train + "--out m1.tlm --report r3.json"), 0);
  auto c = report_without_timing("r3.json");
  EXPECT_EQ(report_without_timing("r1.json").dump(), c.dump());

  ASSERT_EQ(run("evaluate --model m1.tlm --data data/accidents.csv --report e1.json"), 0);
  ASSERT_EQ(run("evaluate --model m1.tlm --data data/accidents.csv --report e2.json"), 0);
  EXPECT_EQ(report_without_timing("e1.json").dump(), report_without_timing("e2.json").dump());
  ASSERT_EQ(run("importance --model m1.tlm --out imp.csv"), 0);
  EXPECT_EQ(trafficlens::csv::parse(read("imp.csv")).header, (std::vector<std::string>{"feature", "gain"}));
}

TEST_F(Cli, GbdtOnBalancedSeparableDataScoresOneAtTwoDecimals) {
  ASSERT_EQ(run("synth accidents --out data"), 0);
  ASSERT_EQ(run("train-severity --data data/accidents.csv --model gbdt --balance down --out g.tlm"), 0);
  ASSERT_EQ(run("evaluate --model g.tlm --data data/accidents.csv --report e.json"), 0);
  const auto r = json::parse(read("e.json"))["result"];
  EXPECT_EQ(std::round(r["accuracy"].get<double>() * 100.0) / 100.0, 1.0);
  EXPECT_EQ(std::round(r["macro"]["f1"].get<double>() * 100.0) / 100.0, 1.0);
  EXPECT_EQ(r["classes"].size(), 3u);
}

TEST_F(Cli, EnsembleTuneBenchWordfreqDecompose) {
  ASSERT_EQ(run("synth accidents --out data --n 900"), 0);
  ASSERT_EQ(run("train-severity --data data/accidents.csv --model gbdt --rounds 10 --out g.tlm"), 0);
  ASSERT_EQ(run("train-severity --data data/accidents.csv --model logistic --steps 100 --out l.tlm"), 0);
  ASSERT_EQ(run("ensemble --models g.tlm,l.tlm --weights 0.7,0.3 --data data/accidents.csv --report en.json"), 0);
  EXPECT_EQ(json::parse(read("en.json"))["result"]["members"].size(), 2u);
  EXPECT_EQ(run("ensemble --models g.tlm,l.tlm --weights 0.7,0.7 --data data/accidents.csv"), 1);
  EXPECT_EQ(run("importance --model l.tlm --out imp.csv"), 1);

  std::ofstream(path("grid.json")) << R"({"max_depth": [2, 3], "eta": [0.3]})";
  ASSERT_EQ(run("tune --data data/accidents.csv --model gbdt --rounds 5 --grid grid.json --folds 3 --report t.json"), 0)
      << read("stderr.txt");
  const auto t = json::parse(read("t.json"));
  EXPECT_EQ(t["result"]["cells"].size(), 2u);
  std::ofstream(path("bad_grid.json")) << "{not json";
  EXPECT_EQ(run("tune --data data/accidents.csv --grid bad_grid.json"), 2);

  ASSERT_EQ(run("bench latency --model g.tlm --repetitions 30 --report lat.csv"), 0);
  const auto lat = trafficlens::csv::parse(read("lat.csv"));
  ASSERT_EQ(lat.rows.size(), 1u);
  EXPECT_EQ(lat.header[5], "p95_ms");
  EXPECT_EQ(run("bench latency --model g.tlm --repetitions 5 --report lat.csv"), 1);
  ASSERT_EQ(run("bench scaling --model logistic --sizes 300,600 --report sc.csv"), 0);
  EXPECT_EQ(trafficlens::csv::parse(read("sc.csv")).rows.size(), 2u);
  EXPECT_EQ(run("bench scaling --sizes 600,300 --report sc.csv"), 1);

  ASSERT_EQ(run("synth texts --out texts --n 200"), 0);
  ASSERT_EQ(run("wordfreq --texts texts/narratives.txt --top 3 --out wf.csv"), 0);
  EXPECT_EQ(trafficlens::csv::parse(read("wf.csv")).rows.size(), 3u);

  ASSERT_EQ(run("synth traffic --out ts --n 480"), 0);
  ASSERT_EQ(run("decompose --series ts/traffic.csv --period 24 --out dec.csv"), 0);
  const auto dec = trafficlens::csv::parse(read("dec.csv"));
  EXPECT_EQ(dec.rows.size(), 480u);
  EXPECT_EQ(dec.rows[0].fields[2], "");  // trend undefined at the edge
  EXPECT_NE(dec.rows[12].fields[2], "");
}

TEST_F(Cli, ImagePipeline) {
  ASSERT_EQ(run("synth images --out imgs --n 200"), 0);
  ASSERT_EQ(run("train-image --dir imgs --epochs 2 --out c.tlm --report c.json"), 0) << read("stderr.txt");
  ASSERT_EQ(run("evaluate --model c.tlm --data imgs --report e.json"), 0);
  EXPECT_EQ(json::parse(read("e.json"))["result"]["classes"].size(), 4u);
  ASSERT_EQ(run("train-image --dir imgs --epochs 2 --out c2.tlm"), 0);
  EXPECT_EQ(read("c.tlm"), read("c2.tlm"));
  EXPECT_EQ(run("train-image --dir imgs --epochs 0 --out c3.tlm"), 1);
  EXPECT_EQ(run("forecast --model c.tlm --out f.csv"), 2);
}
