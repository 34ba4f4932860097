#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "radarprep/pipeline.hpp"
#include "radarprep/selection.hpp"
#include "radarprep/synth.hpp"

using namespace radarprep;

TEST(Rmse, Examples) {
  const std::vector<Vec2> p{{1, 2}, {3, 4}};
  EXPECT_EQ(rmse(p, p), 0.0);
  EXPECT_DOUBLE_EQ(rmse(std::vector<Vec2>{{0, 0}}, std::vector<Vec2>{{0, 2}}), 2.0);
  const std::vector<Vec2> a{{0, 0}, {0, 0}, {0, 0}}, b{{0, 0}, {3, 0}, {0, 4}};
  EXPECT_NEAR(rmse(a, b), 2.886751345948129, 1e-12);
}

TEST(Rmse, Errors) {
  const std::vector<Vec2> one{{0, 0}}, two{{0, 0}, {1, 1}};
  EXPECT_THROW(rmse(one, two), UsageError);
  EXPECT_THROW(rmse({}, {}), UsageError);
}

TEST(Rmse, Symmetric) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int t = 0; t < 100; ++t) {
    std::vector<Vec2> a, b;
    for (int i = 0; i < 7; ++i) {
      a.push_back({u(gen), u(gen)});
      b.push_back({u(gen), u(gen)});
    }
    EXPECT_EQ(rmse(a, b), rmse(b, a));
  }
}

TEST(KeypointMedian, Examples) {
  const std::vector<Point3> one{{1, 2, 3}};
  EXPECT_EQ(keypoint_median(one), (Point3{1, 2, 3}));
  const std::vector<Point3> two{{0, 0, 0}, {2, 2, 2}};
  EXPECT_EQ(keypoint_median(two), (Point3{1, 1, 1}));
  const std::vector<Point3> three{{0, 0, 0}, {1, 5, 1}, {2, 1, 9}};
  EXPECT_EQ(keypoint_median(three), (Point3{1, 1, 1}));
  EXPECT_THROW(keypoint_median({}), UsageError);
}

namespace {
struct Scene {
  std::vector<std::vector<Cluster>> clusters;
  std::vector<Track> tracks;
  Frame frame;
};

// Two tracks over three segments: track 0 near x=0, track 1 near x=3.
Scene two_track_scene() {
  Scene s;
  for (std::size_t seg = 0; seg < 3; ++seg) {
    std::vector<Cluster> row;
    for (int k = 0; k < 2; ++k) {
      Cluster c;
      c.segment_index = seg;
      const std::size_t base = s.frame.points.size();
      for (int i = 0; i < 2; ++i) {
        s.frame.points.push_back({3.0 * k + 0.1 * i, 2, 1});
        c.points.push_back(s.frame.points.back());
        c.source_indices.push_back(base + i);
      }
      c.centroid = centroid(c.points);
      row.push_back(c);
    }
    s.frame.points.push_back({0, 0, 0});  // padding
    s.clusters.push_back(row);
  }
  for (std::size_t k = 0; k < 2; ++k) {
    Track t;
    t.track_id = k;
    for (std::size_t seg = 0; seg < 3; ++seg) t.nodes.push_back({seg, k, s.clusters[seg][k].centroid});
    s.tracks.push_back(track_with_kf(t, {}).track);
  }
  return s;
}
}  // namespace

TEST(ScoreTracks, TrackOnTruthScoresZero) {
  auto s = two_track_scene();
  const std::vector<Point3> truth(3, s.clusters[0][0].centroid);
  const auto scores = score_tracks(s.tracks, truth);
  ASSERT_EQ(scores.size(), 2u);
  EXPECT_NEAR(scores[0].rmse, 0.0, 1e-12);
  EXPECT_NEAR(scores[0].median_distance, 0.0, 1e-12);
  EXPECT_NEAR(scores[1].median_distance, 3.0, 1e-12);
}

TEST(SelectHuman, SingleAndAgreeingArgmins) {
  auto s = two_track_scene();
  const std::vector<TrackScore> one{{1, 0.5, 0.5}};
  EXPECT_EQ(select_human(one, s.tracks, s.clusters, s.frame).selected_track_ids,
            (std::vector<std::size_t>{1}));
  const std::vector<TrackScore> agree{{0, 0.1, 0.1}, {1, 0.5, 0.5}};
  const auto sel = select_human(agree, s.tracks, s.clusters, s.frame);
  EXPECT_EQ(sel.selected_track_ids, (std::vector<std::size_t>{0}));
  EXPECT_EQ(sel.retained_indices, (std::vector<std::size_t>{0, 1, 5, 6, 10, 11}));
}

TEST(SelectHuman, DisagreeingArgminsMerge) {
  auto s = two_track_scene();
  const std::vector<TrackScore> split{{0, 0.1, 0.9}, {1, 0.5, 0.2}};
  const auto sel = select_human(split, s.tracks, s.clusters, s.frame);
  EXPECT_EQ(sel.selected_track_ids, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(sel.retained_indices.size(), 12u);
  EXPECT_EQ(sel.retained_points.size(), 12u);
}

TEST(SelectHuman, TiesGoToLowerId) {
  auto s = two_track_scene();
  const std::vector<TrackScore> tie{{1, 0.3, 0.3}, {0, 0.3, 0.3}};
  EXPECT_EQ(select_human(tie, s.tracks, s.clusters, s.frame).selected_track_ids,
            (std::vector<std::size_t>{0}));
}

TEST(SelectByTrackLength, PrefersLongerThenDenser) {
  auto s = two_track_scene();
  s.tracks[0].nodes.pop_back();
  auto sel = select_by_track_length(s.tracks, s.clusters, s.frame);
  EXPECT_TRUE(sel.used_fallback);
  EXPECT_EQ(sel.selected_track_ids, (std::vector<std::size_t>{1}));
}

TEST(ZeroOut, Examples) {
  auto s = two_track_scene();
  std::vector<std::size_t> all_nonnull;
  for (std::size_t i = 0; i < s.frame.points.size(); ++i)
    if (squared_norm(s.frame.points[i]) > 0) all_nonnull.push_back(i);
  EXPECT_EQ(zero_out(s.frame, all_nonnull), s.frame);
  const auto zeroed = zero_out(s.frame, std::vector<std::size_t>{});
  EXPECT_EQ(zeroed.points.size(), s.frame.points.size());
  for (const auto& p : zeroed.points) EXPECT_EQ(p, Point3{});
}

TEST(ZeroOut, NonZeroOutputIsRetainedSet) {
  auto s = two_track_scene();
  const std::vector<TrackScore> scores{{0, 0.1, 0.1}, {1, 0.5, 0.5}};
  const auto sel = select_human(scores, s.tracks, s.clusters, s.frame);
  const auto out = zero_out(s.frame, sel);
  ASSERT_EQ(out.points.size(), s.frame.points.size());
  std::vector<Point3> nonzero;
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    if (out.points[i] == Point3{}) continue;
    EXPECT_EQ(out.points[i], s.frame.points[i]);
    nonzero.push_back(out.points[i]);
  }
  EXPECT_EQ(nonzero, sel.retained_points);
}

// On synthetic scenes with extra reflectors the planted human track scores
// best on both measures.
TEST(ScoreTracks, PlantedHumanScoresBest) {
  std::size_t frames = 0, both_best = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SceneConfig sc;
    sc.seed = seed;
    sc.clutter_objects = 3;
    const auto scene = synthesize_scene(sc);
    PipelineConfig pc;
    pc.emit_intermediates = true;
    const auto [out, report] = run_pipeline(scene.frames, pc);
    for (std::size_t f = 0; f < out.frames.size(); ++f) {
      const auto& im = report.per_frame_outputs[f];
      const auto human = oracle::human_track(im, scene.truth[f].origin_labels);
      ++frames;
      bool best = true;
      const TrackScore* h = nullptr;
      for (const auto& sc2 : im.scores)
        if (sc2.track_id == human) h = &sc2;
      ASSERT_NE(h, nullptr);
      for (const auto& sc2 : im.scores)
        if (sc2.track_id != human && (sc2.rmse <= h->rmse || sc2.median_distance <= h->median_distance))
          best = false;
      both_best += best;
    }
  }
  EXPECT_GE(both_best, frames * 95 / 100) << both_best << " of " << frames;
}

TEST(SelectionProperty, TranslationLeavesDecisionUnchanged) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SceneConfig sc;
    sc.seed = seed;
    const auto scene = synthesize_scene(sc);
    FrameSet moved = scene.frames;
    const Point3 offset{0.75, -0.5, 0.25};
    for (auto& f : moved.frames) {
      for (auto& p : f.points)
        if (!(p == Point3{})) p += offset;
      for (auto& k : *f.keypoints) k += offset;
    }
    PipelineConfig pc;
    pc.emit_intermediates = true;
    const auto a = run_pipeline(scene.frames, pc).second;
    const auto b = run_pipeline(moved, pc).second;
    for (std::size_t f = 0; f < a.per_frame_outputs.size(); ++f)
      EXPECT_EQ(a.per_frame_outputs[f].selected_track_ids, b.per_frame_outputs[f].selected_track_ids)
          << "seed " << seed << " frame " << f;
  }
}
