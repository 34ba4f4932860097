#ifndef RADARPREP_SYNTH_HPP
#define RADARPREP_SYNTH_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "radarprep/core.hpp"
#include "radarprep/ingest.hpp"
#include "radarprep/segmentation.hpp"

namespace radarprep {

/// Seeded generator with distribution code that does not depend on the
/// standard library's (implementation-defined) distributions, so identical
/// seeds give identical streams everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v;
    do v = engine_();
    while (v >= limit);
    return v % n;
  }

  double normal() {
    if (spare_) {
      const double v = *spare_;
      spare_.reset();
      return v;
    }
    double u1;
    do u1 = uniform();
    while (u1 <= 0.0);
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    spare_ = radius * std::sin(2.0 * std::numbers::pi * u2);
    return radius * std::cos(2.0 * std::numbers::pi * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

enum class TrajectoryKind { kStationary, kLinear, kSinusoidal };

inline std::string to_string(TrajectoryKind k) {
  switch (k) {
    case TrajectoryKind::kStationary: return "stationary";
    case TrajectoryKind::kLinear: return "linear";
    case TrajectoryKind::kSinusoidal: return "sinusoidal";
  }
  return "?";
}

inline TrajectoryKind parse_trajectory(const std::string& s) {
  if (s == "stationary") return TrajectoryKind::kStationary;
  if (s == "linear") return TrajectoryKind::kLinear;
  if (s == "sinusoidal") return TrajectoryKind::kSinusoidal;
  throw UsageError("unknown trajectory '" + s + "' (expected stationary, linear, sinusoidal)");
}

/// Scene shaped like stacked radar frames: a single walking body, a few
/// compact static reflectors, uniform clutter and zero padding. Frames are
/// laid out as `time_steps` contiguous blocks, one per radar sweep window.
struct SceneConfig {
  std::size_t num_frames = 10;
  std::size_t frame_size = kDefaultFrameSize;
  std::size_t time_steps = kDefaultNumSegments;
  std::size_t human_min = 100;  // human points per frame, drawn uniformly
  std::size_t human_max = 250;
  std::size_t clutter_points = 40;  // uniform clutter per frame
  std::size_t clutter_objects = 2;
  std::size_t clutter_object_points = 50;  // per object per frame
  double clutter_object_sigma = 0.1;
  double min_object_clearance = 1.5;  // planar distance from the body path
  TrajectoryKind trajectory = TrajectoryKind::kSinusoidal;
  double speed = 0.5;          // m/s
  double step_seconds = 0.1;   // duration of one block
  double amplitude = 1.0;      // sinusoidal sway, meters
  double noise_sigma = 0.15;   // horizontal spread of body returns
  double vertical_stretch = 2.0;  // z spread = noise_sigma * vertical_stretch
  Point3 start{0.0, 2.5, 1.0};
  Point3 box_min{-3.0, 0.5, 0.0};
  Point3 box_max{3.0, 5.5, 2.5};
  bool keypoints = true;
  std::uint64_t seed = 0;
};

struct SyntheticScene {
  FrameSet frames;
  GroundTruth truth;
};

/// Body centroid at global step `t` (frame * time_steps + block).
inline Point3 body_position(const SceneConfig& c, double t) {
  const double tau = t * c.step_seconds;
  switch (c.trajectory) {
    case TrajectoryKind::kStationary:
      return c.start;
    case TrajectoryKind::kLinear:
      return {c.start.x + c.speed * tau, c.start.y, c.start.z};
    case TrajectoryKind::kSinusoidal: {
      const double omega = c.amplitude > 0 ? c.speed / c.amplitude : 0.0;
      return {c.start.x + c.amplitude * std::sin(omega * tau),
              c.start.y + 0.5 * c.amplitude * std::sin(0.5 * omega * tau), c.start.z};
    }
  }
  return c.start;
}

/// Seventeen-joint standing skeleton relative to the pelvis. Its componentwise
/// median is the pelvis itself.
inline const std::array<Point3, 17>& skeleton_offsets() {
  static const std::array<Point3, 17> k{{
      {0.0, 0.0, 0.70},   {0.0, 0.0, 0.50},   {-0.20, 0.0, 0.45}, {0.20, 0.0, 0.45},
      {-0.25, 0.0, 0.20}, {0.25, 0.0, 0.20},  {-0.25, 0.0, 0.0},  {0.25, 0.0, 0.0},
      {-0.10, 0.0, 0.0},  {0.10, 0.0, 0.0},   {-0.10, 0.0, -0.45}, {0.10, 0.0, -0.45},
      {-0.10, 0.0, -0.90}, {0.10, 0.0, -0.90}, {0.0, 0.0, 0.0},    {0.0, 0.0, 0.25},
      {0.0, 0.0, 0.40},
  }};
  return k;
}

namespace detail {

inline std::vector<std::size_t> spread(std::size_t total, std::size_t parts) {
  std::vector<std::size_t> out(parts, total / parts);
  for (std::size_t i = 0; i < total % parts; ++i) ++out[i];
  return out;
}

inline std::vector<Point3> place_objects(const SceneConfig& c, Rng& rng) {
  std::vector<Point3> path;
  const std::size_t steps = c.num_frames * c.time_steps;
  for (std::size_t t = 0; t < steps; ++t) path.push_back(body_position(c, static_cast<double>(t)));

  std::vector<Point3> objects;
  for (std::size_t attempt = 0; objects.size() < c.clutter_objects; ++attempt) {
    if (attempt > 10000) throw DataError("cannot place clutter objects clear of the body path");
    const Point3 cand{rng.uniform(c.box_min.x, c.box_max.x), rng.uniform(c.box_min.y, c.box_max.y),
                      rng.uniform(0.3, 2.0)};
    bool ok = true;
    for (const auto& p : path)
      if (planar_distance(xy(p), xy(cand)) < c.min_object_clearance) {
        ok = false;
        break;
      }
    for (const auto& o : objects)
      if (planar_distance(xy(o), xy(cand)) < 1.0) ok = false;
    if (ok) objects.push_back(cand);
  }
  return objects;
}

}  // namespace detail

inline void validate(const SceneConfig& c) {
  if (c.num_frames == 0) throw DataError("scene needs at least one frame");
  if (c.frame_size == 0 || c.time_steps == 0 || c.time_steps > c.frame_size)
    throw DataError("frame_size must be positive and >= time_steps");
  if (c.human_min > c.human_max) throw DataError("human point range is empty");
  const std::size_t worst = c.human_max + c.clutter_points + c.clutter_objects * c.clutter_object_points;
  if (worst > c.frame_size)
    throw DataError("infeasible scene: " + std::to_string(worst) + " non-padding points exceed frame size " +
                    std::to_string(c.frame_size));
  const auto blocks = segment_sizes(c.frame_size, c.time_steps);
  const auto human = detail::spread(c.human_max, c.time_steps);
  const auto clutter = detail::spread(c.clutter_points, c.time_steps);
  const auto object = detail::spread(c.clutter_object_points, c.time_steps);
  for (std::size_t s = 0; s < c.time_steps; ++s)
    if (human[s] + clutter[s] + c.clutter_objects * object[s] > blocks[s])
      throw DataError("infeasible scene: block " + std::to_string(s) + " overflows");
  if (c.noise_sigma < 0 || c.clutter_object_sigma < 0) throw DataError("spreads must be non-negative");
}

/// Deterministic in `config` (including the seed).
inline SyntheticScene synthesize_scene(const SceneConfig& c) {
  validate(c);
  Rng rng(c.seed);
  const auto objects = detail::place_objects(c, rng);
  const auto blocks = segment_sizes(c.frame_size, c.time_steps);
  const auto clutter_split = detail::spread(c.clutter_points, c.time_steps);
  const auto object_split = detail::spread(c.clutter_object_points, c.time_steps);
  const double z_sigma = c.noise_sigma * c.vertical_stretch;

  SyntheticScene scene;
  scene.frames.meta.frame_size = c.frame_size;
  scene.frames.meta.source = "synthetic";
  if (c.keypoints) scene.frames.meta.num_keypoints = skeleton_offsets().size();

  for (std::size_t f = 0; f < c.num_frames; ++f) {
    Frame frame;
    frame.frame_id = f;
    GroundTruthFrame gt;
    gt.frame_id = f;
    const std::size_t human_total =
        c.human_min + static_cast<std::size_t>(rng.below(c.human_max - c.human_min + 1));
    const auto human_split = detail::spread(human_total, c.time_steps);
    Point3 body_sum;

    for (std::size_t s = 0; s < c.time_steps; ++s) {
      const Point3 body = body_position(c, static_cast<double>(f * c.time_steps + s));
      body_sum += body;
      std::vector<std::pair<Point3, Origin>> real;
      for (std::size_t i = 0; i < human_split[s]; ++i)
        real.push_back({{body.x + c.noise_sigma * rng.normal(), body.y + c.noise_sigma * rng.normal(),
                         body.z + z_sigma * rng.normal()},
                        Origin::kHuman});
      for (const auto& o : objects)
        for (std::size_t i = 0; i < object_split[s]; ++i)
          real.push_back({{o.x + c.clutter_object_sigma * rng.normal(),
                           o.y + c.clutter_object_sigma * rng.normal(),
                           o.z + c.clutter_object_sigma * rng.normal()},
                          Origin::kClutter});
      for (std::size_t i = 0; i < clutter_split[s]; ++i)
        real.push_back({{rng.uniform(c.box_min.x, c.box_max.x), rng.uniform(c.box_min.y, c.box_max.y),
                         rng.uniform(c.box_min.z, c.box_max.z)},
                        Origin::kClutter});
      rng.shuffle(real);
      for (const auto& [p, origin] : real) {
        frame.points.push_back(p);
        gt.origin_labels.push_back(origin);
      }
      for (std::size_t i = real.size(); i < blocks[s]; ++i) {
        frame.points.push_back(Point3{});
        gt.origin_labels.push_back(Origin::kPadding);
      }
    }
    const double steps = static_cast<double>(c.time_steps);
    gt.body_centroid = {body_sum.x / steps, body_sum.y / steps, body_sum.z / steps};
    if (c.keypoints) {
      const Point3 mid = body_position(c, static_cast<double>(f * c.time_steps + c.time_steps / 2));
      std::vector<Point3> kp;
      for (const auto& off : skeleton_offsets()) kp.push_back(mid + off);
      frame.keypoints = std::move(kp);
    }
    scene.frames.frames.push_back(std::move(frame));
    scene.truth.push_back(std::move(gt));
  }
  return scene;
}

}  // namespace radarprep

#endif  // RADARPREP_SYNTH_HPP
