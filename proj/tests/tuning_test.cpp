#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "radarprep/synth.hpp"
#include "radarprep/tuning.hpp"

using namespace radarprep;

namespace {
double bowl(const ParamVector& x) {
  double s = 0;
  for (double v : x) s += (v - 3) * (v - 3);
  return s;
}

constexpr double kBowlMax = 147.0;  // value at the far corner (10,10,10)

BoConfig bowl_config(std::uint64_t seed, std::size_t iterations) {
  BoConfig c;
  c.seed = seed;
  c.iterations = iterations;
  c.bounds = {{{0, 10}, {0, 10}, {0, 10}}};
  return c;
}
}  // namespace

TEST(Bo, QuadraticConvergesByFifteen) {
  int within = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto trace = bayes_optimize(bowl, bowl_config(seed, 15));
    // Gap to the optimum (0) relative to the objective's range over the box.
    within += trace.best.value <= 0.05 * kBowlMax;
  }
  EXPECT_GE(within, 45);
}

TEST(Bo, BeatsRandomSearchOnQuadratic) {
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto trace = bayes_optimize(bowl, bowl_config(seed, 15));
    Rng rng(seed);
    double random_best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 15; ++i) {
      ParamVector x;
      for (auto& v : x) v = rng.uniform(0, 10);
      random_best = std::min(random_best, bowl(x));
    }
    wins += trace.best.value <= random_best;
  }
  EXPECT_GE(wins, 40);
}

TEST(Bo, ConstantObjective) {
  const auto trace = bayes_optimize([](const ParamVector&) { return 4.25; }, BoConfig{});
  EXPECT_EQ(trace.best.value, 4.25);
  EXPECT_EQ(trace.evaluations.size(), 30u);
}

TEST(Bo, TraceInvariants) {
  auto one_d = [](const ParamVector& x) { return (x[0] - 40) * (x[0] - 40); };
  const auto trace = bayes_optimize(one_d, BoConfig{});
  const auto best = trace.best_so_far();
  ASSERT_EQ(best.size(), trace.evaluations.size());
  for (std::size_t i = 1; i < best.size(); ++i) EXPECT_LE(best[i], best[i - 1]);
  EXPECT_EQ(trace.best.value, best.back());
  const BoConfig def;
  for (const auto& e : trace.evaluations)
    for (std::size_t d = 0; d < kTunedDims; ++d) {
      EXPECT_GE(e.params[d], def.bounds[d].low);
      EXPECT_LE(e.params[d], def.bounds[d].high);
    }
}

TEST(Bo, Reproducible) {
  const auto a = bayes_optimize(bowl, bowl_config(5, 20));
  const auto b = bayes_optimize(bowl, bowl_config(5, 20));
  ASSERT_EQ(a.evaluations.size(), b.evaluations.size());
  for (std::size_t i = 0; i < a.evaluations.size(); ++i) {
    EXPECT_EQ(a.evaluations[i].params, b.evaluations[i].params);
    EXPECT_EQ(a.evaluations[i].value, b.evaluations[i].value);
  }
}

TEST(Bo, NanBecomesInfinity) {
  auto holey = [](const ParamVector& x) { return x[0] < 5 ? std::nan("") : bowl(x); };
  const auto trace = bayes_optimize(holey, bowl_config(1, 12));
  bool saw_inf = false;
  for (const auto& e : trace.evaluations) {
    EXPECT_FALSE(std::isnan(e.value));
    if (e.params[0] < 5) {
      EXPECT_TRUE(std::isinf(e.value));
      saw_inf = true;
    }
  }
  EXPECT_TRUE(saw_inf);
  EXPECT_TRUE(std::isfinite(trace.best.value));
}

TEST(Bo, InvalidConfig) {
  BoConfig c;
  c.bounds[1] = {1, 1};
  EXPECT_THROW(bayes_optimize(bowl, c), UsageError);
  c = BoConfig{};
  c.iterations = 3;
  EXPECT_THROW(bayes_optimize(bowl, c), UsageError);
}

namespace {
FrameSet noiseless_line_scene() {
  SceneConfig sc;
  sc.trajectory = TrajectoryKind::kLinear;
  sc.noise_sigma = 0.0;
  sc.clutter_points = 0;
  sc.clutter_objects = 0;
  sc.num_frames = 6;
  return synthesize_scene(sc).frames;
}
}  // namespace

TEST(KfObjective, NoiselessLineIsNearZero) {
  const auto frames = noiseless_line_scene();
  for (const KalmanParams& p : {KalmanParams{}, KalmanParams{.q = 1, .r = 0.5, .p0 = 1}})
    EXPECT_LT(kf_objective(frames, p, {}), 0.05);
}

TEST(KfObjective, Deterministic) {
  SceneConfig sc;
  sc.num_frames = 40;
  const auto frames = synthesize_scene(sc).frames;
  EXPECT_EQ(kf_objective(frames, {}, {}, 32, 3), kf_objective(frames, {}, {}, 32, 3));
  EXPECT_EQ(KfObjective(frames, {}, 32, 3).sampled_frames().size(), 32u);
}

TEST(KfObjective, HugeMeasurementNoiseIsWorse) {
  SceneConfig sc;
  sc.num_frames = 12;
  sc.trajectory = TrajectoryKind::kLinear;
  sc.speed = 2.0;
  const auto frames = synthesize_scene(sc).frames;
  KalmanParams deaf;
  deaf.r = 1e6;
  EXPECT_GT(kf_objective(frames, deaf, {}), kf_objective(frames, {}, {}));
}

TEST(KfObjective, NoTracksIsAnError) {
  FrameSet empty;
  empty.frames.push_back({0, std::vector<Point3>(1100), std::nullopt, std::nullopt});
  try {
    kf_objective(empty, {}, {});
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("objective undefined: no tracks"), std::string::npos);
  }
}
