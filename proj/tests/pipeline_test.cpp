#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "radarprep/benchmark.hpp"
#include "radarprep/pipeline.hpp"
#include "radarprep/synth.hpp"

using namespace radarprep;

namespace {
SyntheticScene scene(std::uint64_t seed, std::size_t objects = 2) {
  SceneConfig sc;
  sc.seed = seed;
  sc.clutter_objects = objects;
  return synthesize_scene(sc);
}

PipelineConfig with(MethodSet m, bool intermediates = false) {
  PipelineConfig pc;
  pc.methods = m;
  pc.emit_intermediates = intermediates;
  return pc;
}

// Fraction of human-labeled points among retained (precision) and of all
// human points retained (recall), pooled over frames.
std::pair<double, double> human_precision_recall(const SyntheticScene& s, const FrameSet& out) {
  std::size_t kept = 0, kept_human = 0, human = 0;
  for (std::size_t f = 0; f < out.frames.size(); ++f)
    for (std::size_t i = 0; i < out.frames[f].points.size(); ++i) {
      const bool is_human = s.truth[f].origin_labels[i] == Origin::kHuman;
      const bool retained = !(out.frames[f].points[i] == Point3{});
      human += is_human;
      kept += retained;
      kept_human += retained && is_human;
    }
  return {kept ? double(kept_human) / double(kept) : 0.0, human ? double(kept_human) / double(human) : 0.0};
}
}  // namespace

TEST(Pipeline, EveryMethodSetKeepsShapeAndNeverInventsPoints) {
  const auto s = scene(1);
  for (const auto& m : all_method_sets()) {
    const auto [out, report] = run_pipeline(s.frames, with(m));
    ASSERT_EQ(out.frames.size(), s.frames.frames.size()) << m.label();
    EXPECT_EQ(report.frames_processed, s.frames.frames.size());
    for (std::size_t f = 0; f < out.frames.size(); ++f) {
      const auto& in = s.frames.frames[f].points;
      const auto& o = out.frames[f].points;
      ASSERT_EQ(o.size(), in.size());
      std::size_t retained = 0;
      for (std::size_t i = 0; i < o.size(); ++i) {
        if (o[i] == Point3{}) continue;
        ++retained;
        EXPECT_EQ(o[i], in[i]) << m.label();
        EXPECT_GT(squared_norm(in[i]), 1e-6);
      }
      EXPECT_EQ(retained, report.retained_per_frame[f]);
    }
    for (const auto& [stage, secs] : report.per_stage_seconds) {
      EXPECT_TRUE(stage == "segmentation" || stage == "clustering" || stage == "association" ||
                  stage == "tracking" || stage == "selection")
          << stage;
      EXPECT_GE(secs, 0.0);
    }
  }
}

TEST(Pipeline, Deterministic) {
  const auto s = scene(2);
  for (const auto& m : all_method_sets()) {
    auto pc = with(m);
    const auto a = run_pipeline(s.frames, pc);
    pc.threads = 4;
    const auto b = run_pipeline(s.frames, pc);
    EXPECT_EQ(a.first, b.first) << m.label();
    EXPECT_EQ(a.second.frames_processed, b.second.frames_processed);
    EXPECT_EQ(a.second.retained_per_frame, b.second.retained_per_frame);
  }
}

TEST(Pipeline, EmptyInputIsAnError) { EXPECT_THROW(run_pipeline(FrameSet{}, {}), DataError); }

TEST(Pipeline, InvalidConfigIsUsageError) {
  EXPECT_THROW(run_pipeline(scene(0).frames, with(MethodSet{})), UsageError);
}

TEST(Pipeline, DbscanOnlyKeepsMostlyHuman) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SceneConfig sc;
    sc.seed = seed;
    sc.clutter_objects = 0;
    const auto s = synthesize_scene(sc);
    const auto [out, report] = run_pipeline(s.frames, with({.ds = true}));
    EXPECT_GE(human_precision_recall(s, out).first, 0.9) << "seed " << seed;
  }
}

TEST(Pipeline, FullBeatsGridOnlyOnHumanRecall) {
  int better = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto s = scene(seed);
    const double full = human_precision_recall(s, run_pipeline(s.frames, {}).first).second;
    const double grid = human_precision_recall(s, run_pipeline(s.frames, with({.hg = true})).first).second;
    better += full > grid;
  }
  EXPECT_GE(better, 40);
}

TEST(Pipeline, DatasetShapedRetention) {
  const auto s = scene(5);
  const auto [out, report] = run_pipeline(s.frames, {});
  EXPECT_GE(report.mean_retained_points, 60.0);
  EXPECT_LE(report.mean_retained_points, 300.0);
  EXPECT_EQ(report.fallback_frames, 0u);
}

TEST(Pipeline, MissingKeypointsUseFallback) {
  auto s = scene(6);
  for (auto& f : s.frames.frames) f.keypoints.reset();
  const auto [out, report] = run_pipeline(s.frames, {});
  EXPECT_EQ(report.fallback_frames, s.frames.frames.size());
  const auto json = report_to_json(report, MethodSet{.ds = true, .hg = true, .km = true}, false);
  EXPECT_TRUE(json.at("keypoint_fallback_used").get<bool>());
  EXPECT_FALSE(json.contains("per_stage_seconds"));
  EXPECT_TRUE(report_to_json(report, {.ds = true}, true).contains("per_stage_seconds"));
}

// One long track for the body and at least one short-lived clutter track: a
// dense blob is planted into the padding of the middle segment only.
TEST(Pipeline, TrackStructureOnSyntheticScene) {
  auto s = scene(4, 0);
  std::mt19937_64 gen(4);
  std::normal_distribution<double> g(0.0, 0.05);
  for (auto& f : s.frames.frames) {
    const std::size_t block_end = 3 * 220;  // last slots of segment 2 are padding
    for (std::size_t i = block_end - 20; i < block_end; ++i) {
      ASSERT_EQ(f.points[i], Point3{});
      f.points[i] = {-2.5 + g(gen), 5.0 + g(gen), 1.0 + g(gen)};
    }
  }
  const auto [out, report] = run_pipeline(s.frames, with({.ds = true, .hg = true, .km = true}, true));
  for (const auto& im : report.per_frame_outputs) {
    std::size_t longest = 0, shortest = 99;
    for (const auto& t : im.tracks) {
      longest = std::max(longest, t.nodes.size());
      shortest = std::min(shortest, t.nodes.size());
    }
    EXPECT_GE(longest, 4u);
    EXPECT_LE(shortest, 2u);
  }
}

TEST(Pipeline, IntermediatesAreConsistent) {
  const auto s = scene(3);
  const auto [out, report] = run_pipeline(s.frames, with({.ds = true, .hg = true, .km = true}, true));
  ASSERT_EQ(report.per_frame_outputs.size(), s.frames.frames.size());
  for (const auto& im : report.per_frame_outputs) {
    EXPECT_EQ(im.segments.size(), 5u);
    EXPECT_EQ(im.costs.size(), 4u);
    EXPECT_EQ(im.steps.size(), im.tracks.size());
    for (std::size_t k = 0; k < im.costs.size(); ++k) {
      EXPECT_EQ(im.costs[k].rows(), im.clusters[k].size());
      EXPECT_EQ(im.costs[k].cols(), im.clusters[k + 1].size());
    }
    EXPECT_FALSE(im.selected_track_ids.empty());
    EXPECT_LE(im.selected_track_ids.size(), 2u);
  }
}

TEST(Benchmark, ShapeAndStageCounts) {
  SceneConfig sc;
  sc.num_frames = 4;
  const auto frames = synthesize_scene(sc).frames;
  const auto rows = benchmark(frames, all_method_sets(), 3);
  ASSERT_EQ(rows.size(), 7u);
  const BenchmarkRow* full = nullptr;
  const BenchmarkRow* ds = nullptr;
  for (const auto& r : rows) {
    EXPECT_GT(r.per_frame_seconds, 0.0) << r.methods.label();
    if (r.methods.label() == "DS+KM+HG") full = &r;
    if (r.methods.label() == "DS") ds = &r;
  }
  ASSERT_TRUE(full && ds);
  EXPECT_GT(full->stage_seconds.size(), ds->stage_seconds.size());
  EXPECT_THROW(benchmark(frames, all_method_sets(), 2), UsageError);
}
