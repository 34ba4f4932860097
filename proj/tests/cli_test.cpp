#include <gtest/gtest.h>

#include <sstream>

#include "cli_app.hpp"
#include "oracles.hpp"

using radarprep::cli::run;
namespace fs = std::filesystem;

namespace {
struct Result {
  int code;
  std::string out, err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = oracle::scratch_dir(::testing::UnitTest::GetInstance()->current_test_info()->name());
    input = (dir / "in.jsonl").string();
    ASSERT_EQ(cli({"synth", "-o", input, "--frames", "4", "--seed", "7"}).code, 0);
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
  fs::path dir;
  std::string input;
};
}  // namespace

TEST_F(Cli, ProcessFullPipelineWritesOutputAndReport) {
  const auto r = cli({"process", "-i", input, "-o", path("out.jsonl"), "--methods", "ds,km,hg"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(path("out.jsonl")));
  const auto report = nlohmann::json::parse(oracle::slurp(path("out.jsonl.report.json")));
  EXPECT_EQ(report.at("methods"), "DS+KM+HG");
  EXPECT_EQ(report.at("frames_processed"), 4);
}

TEST_F(Cli, UnknownMethodIsUsageErrorWithoutOutput) {
  const auto r = cli({"process", "-i", input, "-o", path("out.jsonl"), "--methods", "xx"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("xx"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(path("out.jsonl")));
  EXPECT_FALSE(fs::exists(path("out.jsonl.report.json")));
}

TEST_F(Cli, SingleMethod) {
  EXPECT_EQ(cli({"process", "-i", input, "-o", path("o.csv"), "--methods", "ds"}).code, 0);
  EXPECT_TRUE(fs::exists(path("o.csv")));
}

TEST_F(Cli, MissingInputIsDataError) {
  EXPECT_EQ(cli({"process", "-i", path("nope.jsonl"), "-o", path("o.jsonl")}).code, 2);
}

TEST_F(Cli, BadFlagsAreUsageErrors) {
  EXPECT_EQ(cli({}).code, 1);
  EXPECT_EQ(cli({"frobnicate"}).code, 1);
  EXPECT_EQ(cli({"process", "-i", input}).code, 1);
  EXPECT_EQ(cli({"process", "-i", input, "-o", path("o.jsonl"), "--eps", "-1"}).code, 1);
  EXPECT_FALSE(fs::exists(path("o.jsonl")));
}

TEST_F(Cli, ConfigFileWithFlagOverride) {
  std::ofstream(path("run.ini")) << "methods=hg\neps=0.5\n";
  auto r = cli({"process", "--config", path("run.ini"), "-i", input, "-o", path("a.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(oracle::slurp(path("a.jsonl.report.json"))).at("methods"), "HG");
  r = cli({"process", "--config", path("run.ini"), "-i", input, "-o", path("b.jsonl"), "--methods", "ds"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(oracle::slurp(path("b.jsonl.report.json"))).at("methods"), "DS");
}

TEST_F(Cli, SynthIsByteIdentical) {
  for (const char* name : {"a.jsonl", "b.jsonl"})
    ASSERT_EQ(cli({"synth", "-o", path(name), "--frames", "10", "--frame-size", "1100", "--seed", "7"}).code, 0);
  EXPECT_EQ(oracle::slurp(path("a.jsonl")), oracle::slurp(path("b.jsonl")));
  EXPECT_EQ(oracle::slurp(path("a.jsonl.truth.jsonl")), oracle::slurp(path("b.jsonl.truth.jsonl")));
  const auto frames = radarprep::load_frames(path("a.jsonl"));
  EXPECT_EQ(frames.frames.size(), 10u);
  EXPECT_EQ(frames.meta.frame_size % 5, 0u);
}

TEST_F(Cli, SynthInfeasibleIsDataError) {
  EXPECT_EQ(cli({"synth", "-o", path("x.jsonl"), "--human", "2000", "--frame-size", "1100"}).code, 2);
  EXPECT_EQ(cli({"synth", "-o", path("x.jsonl"), "--human", "abc"}).code, 1);
}

TEST_F(Cli, BenchTableShape) {
  const auto r = cli({"bench", "-i", input, "--reps", "3", "-o", path("b.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines(oracle::slurp(path("b.csv")));
  ASSERT_FALSE(rows.empty());
  EXPECT_EQ(rows[0], "methods,per_frame_seconds,stage,stage_seconds");
  std::vector<std::string> groups;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto name = rows[i].substr(0, rows[i].find(','));
    if (groups.empty() || groups.back() != name) groups.push_back(name);
    const auto rest = rows[i].substr(name.size() + 1);
    EXPECT_GT(std::stod(rest.substr(0, rest.find(','))), 0.0);
  }
  EXPECT_EQ(groups, (std::vector<std::string>{"KM", "DS", "HG", "KM+HG", "HG+DS", "DS+KM", "DS+KM+HG"}));
  EXPECT_EQ(cli({"bench", "-i", input, "--reps", "2"}).code, 1);
}

TEST_F(Cli, TuneTraceAndBest) {
  const auto r = cli({"tune", "-i", input, "-o", path("t.csv"), "--iterations", "8", "--initial", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines(oracle::slurp(path("t.csv")));
  ASSERT_EQ(rows.size(), 9u);
  EXPECT_EQ(rows[0], "iteration,q,r,p0,objective,best_so_far");
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double best = std::stod(rows[i].substr(rows[i].rfind(',') + 1));
    EXPECT_LE(best, prev);
    prev = best;
  }
  const auto best = nlohmann::json::parse(oracle::slurp(path("t.csv.best.json")));
  EXPECT_DOUBLE_EQ(best.at("objective").get<double>(), prev);
  EXPECT_EQ(cli({"tune", "-i", path("missing.jsonl"), "-o", path("u.csv")}).code, 2);
  EXPECT_EQ(cli({"tune", "-i", input, "-o", path("u.csv"), "--q-bounds", "5,1"}).code, 1);
}

TEST_F(Cli, InspectOutputs) {
  ASSERT_EQ(cli({"inspect", "-i", input, "--frame-id", "1", "--what", "costs", "-o", path("c.csv")}).code, 0);
  for (int s = 0; s < 4; ++s)
    EXPECT_TRUE(fs::exists(path("c." + std::to_string(s) + "-" + std::to_string(s + 1) + ".csv"))) << s;
  EXPECT_FALSE(fs::exists(path("c.4-5.csv")));

  ASSERT_EQ(cli({"inspect", "-i", input, "--frame-id", "1", "--what", "clusters", "-o", path("l.csv")}).code, 0);
  const auto labels = lines(oracle::slurp(path("l.csv")));
  EXPECT_EQ(labels[0], "segment_index,point_index,x,y,z,label");
  EXPECT_TRUE(std::any_of(labels.begin() + 1, labels.end(),
                          [](const std::string& l) { return l.ends_with(",-1"); }));

  ASSERT_EQ(cli({"inspect", "-i", input, "--frame-id", "1", "--what", "scores", "-o", path("s.csv")}).code, 0);
  const auto scores = lines(oracle::slurp(path("s.csv")));
  EXPECT_EQ(scores[0], "track_id,rmse,median_distance,selected");
  EXPECT_GE(scores.size(), 2u);

  for (const char* what : {"segments", "tracks"})
    EXPECT_EQ(cli({"inspect", "-i", input, "--frame-id", "0", "--what", what, "-o", path("x.csv")}).code, 0);
  EXPECT_EQ(cli({"inspect", "-i", input, "--frame-id", "99", "--what", "scores", "-o", path("y.csv")}).code, 2);
  EXPECT_EQ(cli({"inspect", "-i", input, "--frame-id", "0", "--what", "bogus", "-o", path("y.csv")}).code, 1);
  EXPECT_FALSE(fs::exists(path("y.csv")));
}
