#ifndef RADARPREP_EXPORT_HPP
#define RADARPREP_EXPORT_HPP

// CSV writers for intermediate results, for plotting outside this library.

#include <algorithm>
#include <ostream>
#include <span>
#include <vector>

#include "radarprep/association.hpp"
#include "radarprep/clustering.hpp"
#include "radarprep/ingest.hpp"
#include "radarprep/selection.hpp"
#include "radarprep/tracking.hpp"
#include "radarprep/tuning.hpp"

namespace radarprep {

inline void write_segments_csv(std::ostream& out, std::span<const Segment> segments) {
  out << "segment_index,point_index,x,y,z\n";
  for (const auto& s : segments)
    for (std::size_t i = 0; i < s.points.size(); ++i)
      out << s.segment_index << ',' << s.source_indices[i] << ',' << format_number(s.points[i].x) << ','
          << format_number(s.points[i].y) << ',' << format_number(s.points[i].z) << '\n';
}

/// One line per point with its cluster label (-1 = noise).
inline void write_labels_csv(std::ostream& out, std::span<const Segment> segments,
                             std::span<const ClusterLabeling> labelings) {
  out << "segment_index,point_index,x,y,z,label\n";
  for (std::size_t k = 0; k < segments.size() && k < labelings.size(); ++k) {
    const auto& s = segments[k];
    for (std::size_t i = 0; i < s.points.size(); ++i)
      out << s.segment_index << ',' << s.source_indices[i] << ',' << format_number(s.points[i].x) << ','
          << format_number(s.points[i].y) << ',' << format_number(s.points[i].z) << ','
          << labelings[k].labels[i] << '\n';
  }
}

/// Rows are clusters of the earlier segment, columns of the later one.
inline void write_cost_matrix_csv(std::ostream& out, const CostMatrix& m) {
  out << "row";
  for (std::size_t j = 0; j < m.cols(); ++j) out << ',' << j;
  out << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    out << i;
    for (std::size_t j = 0; j < m.cols(); ++j) out << ',' << format_number(m(i, j));
    out << '\n';
  }
}

/// Kalman step records of several tracks. The first covered segment of each
/// track is written as an initialization row with empty step fields.
inline void write_steps_csv(std::ostream& out, std::span<const Track> tracks,
                            std::span<const std::vector<StepRecord>> steps) {
  out << "track_id,segment_index,predicted_x,predicted_y,observed_x,observed_y,filtered_x,filtered_y,"
         "state_change,prediction_error\n";
  auto opt = [](std::ostream& o, const std::optional<double>& v) {
    if (v) o << format_number(*v);
  };
  for (std::size_t k = 0; k < tracks.size() && k < steps.size(); ++k) {
    const auto& t = tracks[k];
    const Vec2 first = xy(t.nodes.front().observed_centroid);
    out << t.track_id << ',' << t.first_segment() << ',' << format_number(first.x) << ','
        << format_number(first.y) << ',' << format_number(first.x) << ',' << format_number(first.y) << ','
        << format_number(first.x) << ',' << format_number(first.y) << ",,\n";
    for (const auto& s : steps[k]) {
      out << t.track_id << ',' << s.segment_index << ',' << format_number(s.predicted.x) << ','
          << format_number(s.predicted.y) << ',';
      if (s.observed) out << format_number(s.observed->x) << ',' << format_number(s.observed->y);
      else out << ',';
      out << ',' << format_number(s.filtered.x) << ',' << format_number(s.filtered.y) << ','
          << format_number(s.state_change) << ',';
      opt(out, s.prediction_error);
      out << '\n';
    }
  }
}

inline void write_scores_csv(std::ostream& out, std::span<const TrackScore> scores,
                             std::span<const std::size_t> selected) {
  out << "track_id,rmse,median_distance,selected\n";
  for (const auto& s : scores) {
    const bool sel = std::find(selected.begin(), selected.end(), s.track_id) != selected.end();
    out << s.track_id << ',' << format_number(s.rmse) << ',' << format_number(s.median_distance) << ','
        << (sel ? 1 : 0) << '\n';
  }
}

inline void write_trace_csv(std::ostream& out, const BoTrace& trace) {
  out << "iteration,q,r,p0,objective,best_so_far\n";
  const auto best = trace.best_so_far();
  for (std::size_t i = 0; i < trace.evaluations.size(); ++i) {
    const auto& e = trace.evaluations[i];
    out << (i + 1) << ',' << format_number(e.params[0]) << ',' << format_number(e.params[1]) << ','
        << format_number(e.params[2]) << ',' << format_number(e.value) << ',' << format_number(best[i])
        << '\n';
  }
}

}  // namespace radarprep

#endif  // RADARPREP_EXPORT_HPP
