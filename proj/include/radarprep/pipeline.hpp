#ifndef RADARPREP_PIPELINE_HPP
#define RADARPREP_PIPELINE_HPP

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "radarprep/association.hpp"
#include "radarprep/clustering.hpp"
#include "radarprep/core.hpp"
#include "radarprep/ingest.hpp"
#include "radarprep/segmentation.hpp"
#include "radarprep/selection.hpp"
#include "radarprep/tracking.hpp"

namespace radarprep {

enum class Stage { kSegmentation, kClustering, kAssociation, kTracking, kSelection };
inline constexpr std::array<Stage, 5> kAllStages{Stage::kSegmentation, Stage::kClustering,
                                                 Stage::kAssociation, Stage::kTracking,
                                                 Stage::kSelection};

inline const char* stage_name(Stage s) {
  switch (s) {
    case Stage::kSegmentation: return "segmentation";
    case Stage::kClustering: return "clustering";
    case Stage::kAssociation: return "association";
    case Stage::kTracking: return "tracking";
    case Stage::kSelection: return "selection";
  }
  return "?";
}

/// Seconds per stage; nullopt for stages that did not run.
using StageTimes = std::array<std::optional<double>, kAllStages.size()>;

struct PipelineConfig {
  MethodSet methods{.ds = true, .hg = true, .km = true};
  SegmentationConfig segmentation;
  DbscanConfig dbscan;
  KalmanParams kalman;
  double grid_cell = 0.5;  // pseudo-cluster cell size for HG/KM without DBSCAN
  bool emit_intermediates = false;
  std::size_t threads = 1;

  void validate() const {
    if (!methods.any()) throw UsageError("at least one of ds, hg, km must be enabled");
    if (segmentation.num_segments == 0) throw UsageError("num_segments must be positive");
    if (segmentation.null_threshold < 0) throw UsageError("null threshold must be non-negative");
    dbscan.validate();
    kalman.validate();
    if (!(grid_cell > 0)) throw UsageError("grid_cell must be positive");
  }
};

/// Everything computed for one frame; kept only with emit_intermediates.
struct FrameIntermediates {
  std::uint64_t frame_id = 0;
  std::vector<Segment> segments;
  std::vector<ClusterLabeling> labelings;       // per segment, when clusters exist
  std::vector<std::vector<Cluster>> clusters;   // per segment
  std::vector<CostMatrix> costs;                // consecutive segment pairs, HG only
  std::vector<Track> tracks;
  std::vector<std::vector<StepRecord>> steps;   // parallel to tracks, KM only
  std::vector<TrackScore> scores;
  std::vector<std::size_t> selected_track_ids;
};

struct FrameResult {
  Frame output;
  std::vector<std::size_t> retained_indices;
  bool used_fallback = false;
  StageTimes times{};
  FrameIntermediates intermediates;
};

struct PipelineReport {
  std::map<std::string, double> per_stage_seconds;
  std::size_t frames_processed = 0;
  double mean_retained_points = 0.0;
  std::size_t fallback_frames = 0;
  std::vector<std::size_t> retained_per_frame;
  std::vector<FrameIntermediates> per_frame_outputs;
};

/// Occupied cells of a `cell`-sized grid holding at least `min_samples`
/// points become pseudo-clusters; everything else is noise. Ids follow first
/// appearance, as with dbscan.
inline ClusterLabeling grid_partition(const Segment& segment, double cell, std::size_t min_samples) {
  using Key = std::array<long long, 3>;
  std::map<Key, std::vector<std::size_t>> cells;
  std::vector<Key> keys(segment.points.size());
  for (std::size_t i = 0; i < segment.points.size(); ++i) {
    const auto& p = segment.points[i];
    keys[i] = {static_cast<long long>(std::floor(p.x / cell)), static_cast<long long>(std::floor(p.y / cell)),
               static_cast<long long>(std::floor(p.z / cell))};
    cells[keys[i]].push_back(i);
  }
  std::map<Key, int> ids;
  std::vector<int> raw(segment.points.size(), kNoise);
  for (std::size_t i = 0; i < segment.points.size(); ++i) {
    if (cells[keys[i]].size() < min_samples) continue;
    auto [it, inserted] = ids.try_emplace(keys[i], static_cast<int>(ids.size()));
    raw[i] = it->second;
  }
  return make_labeling(segment.points, std::move(raw), segment.source_indices, segment.segment_index);
}

/// Greedy continuation without assignment: each track ending in the previous
/// segment, in id order, takes the nearest unclaimed cluster of the next one.
inline std::vector<Track> nearest_centroid_tracks(const std::vector<std::vector<Cluster>>& per_segment) {
  std::vector<Track> tracks;
  std::vector<std::size_t> tails;  // track ids ending at the previous segment
  for (std::size_t seg = 0; seg < per_segment.size(); ++seg) {
    const auto& current = per_segment[seg];
    std::vector<char> claimed(current.size(), 0);
    std::vector<std::size_t> next_tails;
    for (std::size_t id : tails) {
      const Point3 tail = tracks[id].nodes.back().observed_centroid;
      std::optional<std::size_t> best;
      double best_d = 0.0;
      for (std::size_t k = 0; k < current.size(); ++k) {
        if (claimed[k]) continue;
        const double d = euclidean_distance(tail, current[k].centroid);
        if (!best || d < best_d) {
          best = k;
          best_d = d;
        }
      }
      if (!best) continue;
      claimed[*best] = 1;
      tracks[id].nodes.push_back({seg, *best, current[*best].centroid});
      next_tails.push_back(id);
    }
    for (std::size_t k = 0; k < current.size(); ++k) {
      if (claimed[k]) continue;
      Track t;
      t.track_id = tracks.size();
      t.nodes.push_back({seg, k, current[k].centroid});
      next_tails.push_back(t.track_id);
      tracks.push_back(std::move(t));
    }
    std::sort(next_tails.begin(), next_tails.end());
    tails = std::move(next_tails);
  }
  return tracks;
}

namespace detail {

class StageTimer {
 public:
  StageTimer(StageTimes& times, Stage stage)
      : slot_(times[static_cast<std::size_t>(stage)]), start_(std::chrono::steady_clock::now()) {}
  ~StageTimer() {
    const std::chrono::duration<double> d = std::chrono::steady_clock::now() - start_;
    slot_ = slot_.value_or(0.0) + d.count();
  }
  StageTimer(const StageTimer&) = delete;
  StageTimer& operator=(const StageTimer&) = delete;

 private:
  std::optional<double>& slot_;
  std::chrono::steady_clock::time_point start_;
};

inline std::size_t track_point_count(const Track& t, const std::vector<std::vector<Cluster>>& clusters) {
  std::size_t n = 0;
  for (const auto& node : t.nodes) n += clusters[node.segment_index][node.cluster_index].points.size();
  return n;
}

inline void add_cluster(std::set<std::size_t>& keep, const Cluster& c) {
  keep.insert(c.source_indices.begin(), c.source_indices.end());
}

inline std::optional<double> mean_prediction_error(const std::vector<StepRecord>& steps) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& s : steps)
    if (s.prediction_error) {
      sum += *s.prediction_error;
      ++n;
    }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

}  // namespace detail

/// Runs the configured method combination on one frame.
inline FrameResult process_frame(const Frame& frame, const PipelineConfig& config) {
  const MethodSet m = config.methods;
  FrameResult res;
  FrameIntermediates& im = res.intermediates;
  im.frame_id = frame.frame_id;
  std::set<std::size_t> keep;

  {
    detail::StageTimer t(res.times, Stage::kSegmentation);
    im.segments = segment_and_filter(frame, config.segmentation);
  }
  const std::size_t nseg = im.segments.size();

  if (!m.ds && !m.hg) {
    // KM only: the whole segment's centroid is the observation stream.
    Track pseudo;
    {
      detail::StageTimer t(res.times, Stage::kClustering);
      for (const auto& s : im.segments) {
        if (s.points.empty()) continue;
        pseudo.nodes.push_back({s.segment_index, 0, centroid(s.points)});
      }
    }
    if (!pseudo.nodes.empty()) {
      KalmanTrackResult kf;
      {
        detail::StageTimer t(res.times, Stage::kTracking);
        kf = track_with_kf(pseudo, config.kalman);
      }
      detail::StageTimer t(res.times, Stage::kSelection);
      const auto& hist = *kf.track.kalman_history;
      for (std::size_t k = 0; k < hist.size(); ++k) {
        const auto& seg = im.segments[pseudo.first_segment() + k];
        for (std::size_t i = 0; i < seg.points.size(); ++i)
          if (planar_distance(xy(seg.points[i]), hist[k].filtered) <= config.kalman.gate)
            keep.insert(seg.source_indices[i]);
      }
      im.tracks.push_back(kf.track);
      im.steps.push_back(std::move(kf.steps));
    }
  } else {
    {
      detail::StageTimer t(res.times, Stage::kClustering);
      for (const auto& s : im.segments) {
        im.labelings.push_back(m.ds ? dbscan(s, config.dbscan)
                                    : grid_partition(s, config.grid_cell, config.dbscan.min_samples));
        im.clusters.push_back(im.labelings.back().clusters);
      }
    }

    if (m.ds && !m.hg && !m.km) {
      detail::StageTimer t(res.times, Stage::kSelection);
      for (const auto& l : im.labelings)
        if (auto c = largest_cluster(l)) detail::add_cluster(keep, *c);
    } else {
      {
        detail::StageTimer t(res.times, Stage::kAssociation);
        if (m.hg) {
          for (std::size_t s = 0; s + 1 < nseg; ++s)
            im.costs.push_back(cost_matrix(im.clusters[s], im.clusters[s + 1]));
          im.tracks = build_tracks(im.clusters);
        } else {
          im.tracks = nearest_centroid_tracks(im.clusters);
        }
      }
      if (m.km) {
        detail::StageTimer t(res.times, Stage::kTracking);
        for (auto& tr : im.tracks) {
          auto kf = track_with_kf(tr, config.kalman);
          tr = std::move(kf.track);
          im.steps.push_back(std::move(kf.steps));
        }
      }

      detail::StageTimer t(res.times, Stage::kSelection);
      if (!m.km) {
        // HG only / DS+HG: longest track.
        const auto sel = select_by_track_length(im.tracks, im.clusters, frame);
        im.selected_track_ids = sel.selected_track_ids;
        keep.insert(sel.retained_indices.begin(), sel.retained_indices.end());
      } else if (m.ds && !m.hg) {
        // DS+KM: every cluster the gate accepted, plus each track's first node.
        for (std::size_t k = 0; k < im.tracks.size(); ++k) {
          const auto& tr = im.tracks[k];
          detail::add_cluster(keep, im.clusters[tr.nodes.front().segment_index][tr.nodes.front().cluster_index]);
          for (const auto& step : im.steps[k]) {
            if (!step.observed) continue;
            const TrackNode* node = tr.node_at(step.segment_index);
            detail::add_cluster(keep, im.clusters[node->segment_index][node->cluster_index]);
          }
        }
      } else if (!m.ds) {
        // KM+HG: the track the filter predicts best.
        std::optional<std::size_t> best;
        double best_err = 0.0;
        for (std::size_t k = 0; k < im.tracks.size(); ++k) {
          const auto err = detail::mean_prediction_error(im.steps[k]);
          if (err && (!best || *err < best_err)) {
            best = k;
            best_err = *err;
          }
        }
        if (best) {
          im.selected_track_ids = {im.tracks[*best].track_id};
          for (const auto& node : im.tracks[*best].nodes)
            detail::add_cluster(keep, im.clusters[node.segment_index][node.cluster_index]);
        } else {
          const auto sel = select_by_track_length(im.tracks, im.clusters, frame);
          im.selected_track_ids = sel.selected_track_ids;
          keep.insert(sel.retained_indices.begin(), sel.retained_indices.end());
        }
      } else {
        // Full pipeline: keypoint-guided selection.
        if (frame.keypoints && !frame.keypoints->empty()) {
          const Point3 truth = keypoint_median(*frame.keypoints);
          const std::vector<Point3> per_segment(nseg, truth);
          im.scores = score_tracks(im.tracks, per_segment);
          if (!im.scores.empty()) {
            const auto sel = select_human(im.scores, im.tracks, im.clusters, frame);
            im.selected_track_ids = sel.selected_track_ids;
            keep.insert(sel.retained_indices.begin(), sel.retained_indices.end());
          }
        } else {
          const auto sel = select_by_track_length(im.tracks, im.clusters, frame);
          res.used_fallback = true;
          im.selected_track_ids = sel.selected_track_ids;
          keep.insert(sel.retained_indices.begin(), sel.retained_indices.end());
        }
      }
    }
  }

  {
    detail::StageTimer t(res.times, Stage::kSelection);
    res.retained_indices.assign(keep.begin(), keep.end());
    res.output = zero_out(frame, res.retained_indices);
  }
  return res;
}

/// Processes every frame (in parallel when config.threads > 1) and aggregates
/// in input order.
inline std::pair<FrameSet, PipelineReport> run_pipeline(const FrameSet& frames,
                                                        const PipelineConfig& config) {
  config.validate();
  if (frames.frames.empty()) throw DataError("run_pipeline: empty frame set");

  std::vector<FrameResult> results(frames.frames.size());
  const std::size_t workers = std::clamp<std::size_t>(config.threads, 1, frames.frames.size());
  if (workers == 1) {
    for (std::size_t i = 0; i < frames.frames.size(); ++i) results[i] = process_frame(frames.frames[i], config);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
          try {
            for (std::size_t i = next++; i < frames.frames.size(); i = next++)
              results[i] = process_frame(frames.frames[i], config);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  FrameSet out;
  out.meta = frames.meta;
  PipelineReport report;
  report.frames_processed = results.size();
  double retained_sum = 0.0;
  for (auto& r : results) {
    out.frames.push_back(std::move(r.output));
    report.retained_per_frame.push_back(r.retained_indices.size());
    retained_sum += static_cast<double>(r.retained_indices.size());
    if (r.used_fallback) ++report.fallback_frames;
    for (std::size_t s = 0; s < kAllStages.size(); ++s)
      if (r.times[s]) report.per_stage_seconds[stage_name(kAllStages[s])] += *r.times[s];
    if (config.emit_intermediates) report.per_frame_outputs.push_back(std::move(r.intermediates));
  }
  report.mean_retained_points = retained_sum / static_cast<double>(results.size());
  return {std::move(out), std::move(report)};
}

/// Report as JSON. Timings are left out unless asked for, so the file is
/// reproducible byte for byte.
inline nlohmann::ordered_json report_to_json(const PipelineReport& report, const MethodSet& methods,
                                             bool include_timings) {
  nlohmann::ordered_json j;
  j["methods"] = methods.label();
  j["frames_processed"] = report.frames_processed;
  j["mean_retained_points"] = report.mean_retained_points;
  j["fallback_frames"] = report.fallback_frames;
  j["keypoint_fallback_used"] = report.fallback_frames > 0;
  j["retained_per_frame"] = report.retained_per_frame;
  if (include_timings) {
    nlohmann::ordered_json stages = nlohmann::ordered_json::object();
    for (const auto& [k, v] : report.per_stage_seconds) stages[k] = v;
    j["per_stage_seconds"] = stages;
  }
  return j;
}

}  // namespace radarprep

#endif  // RADARPREP_PIPELINE_HPP
