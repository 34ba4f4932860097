#ifndef RADARPREP_CORE_HPP
#define RADARPREP_CORE_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace radarprep {

/// Raised for malformed or inconsistent input data (bad files, infeasible configs).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for invalid arguments or configuration supplied by the caller.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr std::size_t kDefaultFrameSize = 1100;
inline constexpr std::size_t kDefaultNumSegments = 5;

/// A single radar return or keypoint, in meters.
struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Point3&, const Point3&) = default;

  Point3& operator+=(const Point3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  friend Point3 operator+(Point3 a, const Point3& b) { return a += b; }
  friend Point3 operator-(const Point3& a, const Point3& b) {
    return {a.x - b.x, a.y - b.y, a.z - b.z};
  }
  friend Point3 operator*(double s, const Point3& p) { return {s * p.x, s * p.y, s * p.z}; }
};

inline bool is_finite(const Point3& p) {
  return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z);
}

inline double squared_norm(const Point3& p) { return p.x * p.x + p.y * p.y + p.z * p.z; }

inline double euclidean_distance(const Point3& a, const Point3& b) {
  return std::sqrt(squared_norm(a - b));
}

/// Planar position, used by the Kalman filter and RMSE scoring.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline Vec2 xy(const Point3& p) { return {p.x, p.y}; }

inline double planar_distance(const Vec2& a, const Vec2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

/// A stacked radar sample. Point order is temporal and meaningful.
struct Frame {
  std::uint64_t frame_id = 0;
  std::vector<Point3> points;
  std::optional<std::vector<Point3>> keypoints;
  std::optional<int> action_label;

  friend bool operator==(const Frame&, const Frame&) = default;
};

/// A contiguous window of a frame. `source_indices[i]` is the index of
/// `points[i]` within the originating frame.
struct Segment {
  std::size_t segment_index = 0;
  std::vector<Point3> points;
  std::vector<std::size_t> source_indices;

  friend bool operator==(const Segment&, const Segment&) = default;
};

struct Cluster {
  int label = 0;
  std::size_t segment_index = 0;
  std::vector<Point3> points;
  std::vector<std::size_t> source_indices;  // frame-level indices, parallel to points
  Point3 centroid;
};

/// Componentwise arithmetic mean. Throws UsageError on empty input.
inline Point3 centroid(std::span<const Point3> points) {
  if (points.empty()) throw UsageError("centroid of empty point set");
  Point3 sum;
  for (const auto& p : points) sum += p;
  const double n = static_cast<double>(points.size());
  return {sum.x / n, sum.y / n, sum.z / n};
}

struct TrackNode {
  std::size_t segment_index = 0;
  std::size_t cluster_index = 0;  // index into that segment's cluster list
  Point3 observed_centroid;
};

struct KalmanHistoryEntry {
  Vec2 predicted;
  Vec2 filtered;
  double innovation_magnitude = 0.0;
};

/// Cross-segment chain of associated clusters. Nodes are strictly increasing
/// in segment_index.
struct Track {
  std::size_t track_id = 0;
  std::vector<TrackNode> nodes;
  std::optional<std::vector<KalmanHistoryEntry>> kalman_history;

  std::size_t first_segment() const { return nodes.front().segment_index; }
  std::size_t last_segment() const { return nodes.back().segment_index; }

  const TrackNode* node_at(std::size_t segment_index) const {
    for (const auto& n : nodes)
      if (n.segment_index == segment_index) return &n;
    return nullptr;
  }
};

/// Which of the three stages run: DBSCAN, Hungarian association, Kalman filtering.
struct MethodSet {
  bool ds = false;
  bool hg = false;
  bool km = false;

  bool any() const { return ds || hg || km; }
  friend bool operator==(const MethodSet&, const MethodSet&) = default;

  /// Short label, e.g. "DS+KM+HG".
  std::string label() const {
    if (ds && km && hg) return "DS+KM+HG";
    if (km && hg) return "KM+HG";
    if (hg && ds) return "HG+DS";
    if (ds && km) return "DS+KM";
    if (ds) return "DS";
    if (hg) return "HG";
    if (km) return "KM";
    return "none";
  }
};

/// The seven method combinations, in benchmark report order.
inline std::vector<MethodSet> all_method_sets() {
  return {
      {.ds = false, .hg = false, .km = true},  {.ds = true, .hg = false, .km = false},
      {.ds = false, .hg = true, .km = false},  {.ds = false, .hg = true, .km = true},
      {.ds = true, .hg = true, .km = false},   {.ds = true, .hg = false, .km = true},
      {.ds = true, .hg = true, .km = true},
  };
}

}  // namespace radarprep

#endif  // RADARPREP_CORE_HPP
