#ifndef RADARPREP_CLUSTERING_HPP
#define RADARPREP_CLUSTERING_HPP

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "radarprep/core.hpp"

namespace radarprep {

struct DbscanConfig {
  double eps = 0.4;
  std::size_t min_samples = 6;
  double alpha = 0.25;  // weight on the squared vertical difference

  void validate() const {
    if (!(eps > 0.0)) throw UsageError("dbscan eps must be positive");
    if (min_samples < 1) throw UsageError("dbscan min_samples must be >= 1");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw UsageError("dbscan alpha must lie in [0, 1]");
  }
};

inline constexpr int kNoise = -1;

/// Labels aligned with the input points plus the clusters they define.
/// Cluster ids are contiguous and ordered by first appearance in the input.
struct ClusterLabeling {
  std::vector<int> labels;
  std::vector<Cluster> clusters;
};

/// Euclidean distance with the squared z-difference scaled by `alpha`.
inline double weighted_distance(const Point3& p, const Point3& q, double alpha) {
  const double dx = p.x - q.x;
  const double dy = p.y - q.y;
  const double dz = p.z - q.z;
  return std::sqrt(dx * dx + dy * dy + alpha * dz * dz);
}

namespace detail {

inline std::vector<std::vector<std::size_t>> eps_neighborhoods(std::span<const Point3> points,
                                                               const DbscanConfig& config) {
  const std::size_t n = points.size();
  std::vector<std::vector<std::size_t>> nbrs(n);
  for (std::size_t i = 0; i < n; ++i) {
    nbrs[i].push_back(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      if (weighted_distance(points[i], points[j], config.alpha) <= config.eps) {
        nbrs[i].push_back(j);
        nbrs[j].push_back(i);
      }
    }
  }
  for (auto& v : nbrs) std::sort(v.begin(), v.end());
  return nbrs;
}

}  // namespace detail

/// Builds the Cluster list for a labeling. Cluster ids are renumbered by first
/// appearance so that id order matches input order.
inline ClusterLabeling make_labeling(std::span<const Point3> points, std::vector<int> raw_labels,
                                     std::span<const std::size_t> source_indices = {},
                                     std::size_t segment_index = 0) {
  ClusterLabeling out;
  std::vector<int> remap;
  out.labels.resize(raw_labels.size(), kNoise);
  for (std::size_t i = 0; i < raw_labels.size(); ++i) {
    const int raw = raw_labels[i];
    if (raw < 0) continue;
    if (static_cast<std::size_t>(raw) >= remap.size()) remap.resize(raw + 1, kNoise);
    if (remap[raw] == kNoise) {
      remap[raw] = static_cast<int>(out.clusters.size());
      Cluster c;
      c.label = remap[raw];
      c.segment_index = segment_index;
      out.clusters.push_back(std::move(c));
    }
    const int id = remap[raw];
    out.labels[i] = id;
    out.clusters[id].points.push_back(points[i]);
    out.clusters[id].source_indices.push_back(source_indices.empty() ? i : source_indices[i]);
  }
  for (auto& c : out.clusters) c.centroid = centroid(c.points);
  return out;
}

/// DBSCAN under weighted_distance. A point is core when its eps-neighborhood,
/// itself included, holds at least min_samples points. Clusters are seeded in
/// input order and expanded breadth-first; a border point reachable from
/// several clusters stays with the first one that claims it.
inline ClusterLabeling dbscan(std::span<const Point3> points, const DbscanConfig& config,
                              std::span<const std::size_t> source_indices = {},
                              std::size_t segment_index = 0) {
  config.validate();
  const std::size_t n = points.size();
  const auto nbrs = detail::eps_neighborhoods(points, config);

  constexpr int kUnvisited = -2;
  std::vector<int> labels(n, kUnvisited);
  int next_id = 0;
  std::deque<std::size_t> frontier;

  for (std::size_t seed = 0; seed < n; ++seed) {
    if (labels[seed] != kUnvisited) continue;
    if (nbrs[seed].size() < config.min_samples) {
      labels[seed] = kNoise;  // may still be claimed later as a border point
      continue;
    }
    const int id = next_id++;
    labels[seed] = id;
    frontier.assign({seed});
    while (!frontier.empty()) {
      const std::size_t p = frontier.front();
      frontier.pop_front();
      if (nbrs[p].size() < config.min_samples) continue;  // border: do not expand
      for (std::size_t q : nbrs[p]) {
        if (labels[q] == kUnvisited) {
          labels[q] = id;
          frontier.push_back(q);
        } else if (labels[q] == kNoise) {
          labels[q] = id;  // border point; never core, so nothing to expand
        }
      }
    }
  }
  return make_labeling(points, std::move(labels), source_indices, segment_index);
}

inline ClusterLabeling dbscan(const Segment& segment, const DbscanConfig& config) {
  return dbscan(segment.points, config, segment.source_indices, segment.segment_index);
}

/// Cluster with the most points; ties go to the lowest id. nullopt if all noise.
inline std::optional<Cluster> largest_cluster(const ClusterLabeling& labeling) {
  const Cluster* best = nullptr;
  for (const auto& c : labeling.clusters)
    if (best == nullptr || c.points.size() > best->points.size()) best = &c;
  if (best == nullptr) return std::nullopt;
  return *best;
}

}  // namespace radarprep

#endif  // RADARPREP_CLUSTERING_HPP
