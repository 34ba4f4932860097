#ifndef RADARPREP_SELECTION_HPP
#define RADARPREP_SELECTION_HPP

#include <algorithm>
#include <cmath>
#include <set>
#include <span>
#include <vector>

#include "radarprep/core.hpp"

namespace radarprep {

struct TrackScore {
  std::size_t track_id = 0;
  double rmse = 0.0;
  double median_distance = 0.0;
};

struct Selection {
  std::vector<std::size_t> selected_track_ids;  // one or two ids, ascending
  std::vector<Point3> retained_points;
  std::vector<std::size_t> retained_indices;  // frame-level, ascending
  std::vector<TrackScore> scores;
  bool used_fallback = false;  // no keypoints: picked by track length
};

inline double rmse(std::span<const Vec2> predicted, std::span<const Vec2> actual) {
  if (predicted.size() != actual.size()) throw UsageError("rmse: length mismatch");
  if (predicted.empty()) throw UsageError("rmse: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double dx = predicted[i].x - actual[i].x;
    const double dy = predicted[i].y - actual[i].y;
    sum += dx * dx + dy * dy;
  }
  return std::sqrt(sum / static_cast<double>(predicted.size()));
}

/// Median of a non-empty sample; even counts average the middle two.
inline double median(std::vector<double> values) {
  if (values.empty()) throw UsageError("median of empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

inline Point3 keypoint_median(std::span<const Point3> keypoints) {
  if (keypoints.empty()) throw UsageError("keypoint_median: no keypoints");
  std::vector<double> xs, ys, zs;
  for (const auto& k : keypoints) {
    xs.push_back(k.x);
    ys.push_back(k.y);
    zs.push_back(k.z);
  }
  return {median(std::move(xs)), median(std::move(ys)), median(std::move(zs))};
}

/// Scores Kalman-filtered tracks against per-segment ground-truth medians.
/// rmse compares filtered xy; median_distance is the median 3-D distance of
/// observed centroids. Tracks without history or without any node inside the
/// ground-truth range are skipped.
inline std::vector<TrackScore> score_tracks(std::span<const Track> tracks,
                                            std::span<const Point3> truth_per_segment) {
  std::vector<TrackScore> scores;
  for (const auto& t : tracks) {
    if (!t.kalman_history || t.nodes.empty()) continue;
    std::vector<Vec2> filtered, actual;
    const auto& hist = *t.kalman_history;
    for (std::size_t k = 0; k < hist.size(); ++k) {
      const std::size_t seg = t.first_segment() + k;
      if (seg >= truth_per_segment.size()) break;
      filtered.push_back(hist[k].filtered);
      actual.push_back(xy(truth_per_segment[seg]));
    }
    std::vector<double> distances;
    for (const auto& n : t.nodes)
      if (n.segment_index < truth_per_segment.size())
        distances.push_back(euclidean_distance(n.observed_centroid, truth_per_segment[n.segment_index]));
    if (filtered.empty() || distances.empty()) continue;
    scores.push_back({t.track_id, rmse(filtered, actual), median(std::move(distances))});
  }
  return scores;
}

namespace detail {

inline void collect_track_points(const Track& t, const std::vector<std::vector<Cluster>>& clusters,
                                 std::set<std::size_t>& indices) {
  for (const auto& n : t.nodes) {
    const auto& cl = clusters.at(n.segment_index).at(n.cluster_index);
    indices.insert(cl.source_indices.begin(), cl.source_indices.end());
  }
}

inline void fill_retained(Selection& sel, const std::set<std::size_t>& indices, const Frame& frame) {
  sel.retained_indices.assign(indices.begin(), indices.end());
  sel.retained_points.clear();
  for (std::size_t i : sel.retained_indices) sel.retained_points.push_back(frame.points.at(i));
}

inline const Track& find_track(std::span<const Track> tracks, std::size_t id) {
  for (const auto& t : tracks)
    if (t.track_id == id) return t;
  throw UsageError("unknown track id " + std::to_string(id));
}

}  // namespace detail

/// Picks the best-rmse and best-median-distance tracks (ties to the lower id)
/// and merges them when they differ. `clusters[s][k]` must be the cluster a
/// track node references.
inline Selection select_human(std::span<const TrackScore> scores, std::span<const Track> tracks,
                              const std::vector<std::vector<Cluster>>& clusters,
                              const Frame& frame) {
  if (scores.empty()) throw UsageError("select_human: no scores");
  auto better = [](double a, std::size_t ida, double b, std::size_t idb) {
    return a < b || (a == b && ida < idb);
  };
  const TrackScore* by_rmse = &scores[0];
  const TrackScore* by_dist = &scores[0];
  for (const auto& s : scores) {
    if (better(s.rmse, s.track_id, by_rmse->rmse, by_rmse->track_id)) by_rmse = &s;
    if (better(s.median_distance, s.track_id, by_dist->median_distance, by_dist->track_id))
      by_dist = &s;
  }
  Selection sel;
  sel.scores.assign(scores.begin(), scores.end());
  sel.selected_track_ids.push_back(by_rmse->track_id);
  if (by_dist->track_id != by_rmse->track_id) sel.selected_track_ids.push_back(by_dist->track_id);
  std::sort(sel.selected_track_ids.begin(), sel.selected_track_ids.end());

  std::set<std::size_t> indices;
  for (std::size_t id : sel.selected_track_ids)
    detail::collect_track_points(detail::find_track(tracks, id), clusters, indices);
  detail::fill_retained(sel, indices, frame);
  return sel;
}

/// Keypoint-free selection: the track with the most nodes, then the most
/// points, then the lowest id.
inline Selection select_by_track_length(std::span<const Track> tracks,
                                        const std::vector<std::vector<Cluster>>& clusters,
                                        const Frame& frame) {
  Selection sel;
  sel.used_fallback = true;
  if (tracks.empty()) return sel;
  auto point_count = [&](const Track& t) {
    std::size_t n = 0;
    for (const auto& node : t.nodes) n += clusters.at(node.segment_index).at(node.cluster_index).points.size();
    return n;
  };
  const Track* best = &tracks[0];
  std::size_t best_points = point_count(*best);
  for (const auto& t : tracks.subspan(1)) {
    const std::size_t pts = point_count(t);
    if (t.nodes.size() > best->nodes.size() ||
        (t.nodes.size() == best->nodes.size() && pts > best_points)) {
      best = &t;
      best_points = pts;
    }
  }
  sel.selected_track_ids = {best->track_id};
  std::set<std::size_t> indices;
  detail::collect_track_points(*best, clusters, indices);
  detail::fill_retained(sel, indices, frame);
  return sel;
}

/// Frame of the same size with every point outside the retained set moved to
/// the origin.
inline Frame zero_out(const Frame& frame, std::span<const std::size_t> retained_indices) {
  Frame out = frame;
  std::vector<char> keep(frame.points.size(), 0);
  for (std::size_t i : retained_indices) keep.at(i) = 1;
  for (std::size_t i = 0; i < out.points.size(); ++i)
    if (!keep[i]) out.points[i] = Point3{};
  return out;
}

inline Frame zero_out(const Frame& frame, const Selection& selection) {
  return zero_out(frame, selection.retained_indices);
}

}  // namespace radarprep

#endif  // RADARPREP_SELECTION_HPP
