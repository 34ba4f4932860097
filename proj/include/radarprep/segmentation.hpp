#ifndef RADARPREP_SEGMENTATION_HPP
#define RADARPREP_SEGMENTATION_HPP

#include <vector>

#include "radarprep/core.hpp"

namespace radarprep {

struct SegmentationConfig {
  std::size_t num_segments = kDefaultNumSegments;
  double null_threshold = 0.001;
};

/// Size of each window when `n` points are split into `k` segments. All but
/// the last get floor(n/k); the last absorbs the remainder.
inline std::vector<std::size_t> segment_sizes(std::size_t n, std::size_t k) {
  if (k == 0) throw UsageError("num_segments must be positive");
  std::vector<std::size_t> sizes(k, n / k);
  sizes.back() += n % k;
  return sizes;
}

/// Partitions the frame's point list into contiguous, ordered segments.
inline std::vector<Segment> split_frame(const Frame& frame, const SegmentationConfig& config) {
  if (config.num_segments == 0) throw UsageError("num_segments must be positive");
  if (frame.points.size() < config.num_segments)
    throw UsageError("frame " + std::to_string(frame.frame_id) + ": " +
                     std::to_string(frame.points.size()) + " points cannot fill " +
                     std::to_string(config.num_segments) + " segments");

  const auto sizes = segment_sizes(frame.points.size(), config.num_segments);
  std::vector<Segment> out(config.num_segments);
  std::size_t offset = 0;
  for (std::size_t s = 0; s < config.num_segments; ++s) {
    Segment& seg = out[s];
    seg.segment_index = s;
    seg.points.assign(frame.points.begin() + static_cast<std::ptrdiff_t>(offset),
                      frame.points.begin() + static_cast<std::ptrdiff_t>(offset + sizes[s]));
    seg.source_indices.resize(sizes[s]);
    for (std::size_t i = 0; i < sizes[s]; ++i) seg.source_indices[i] = offset + i;
    offset += sizes[s];
  }
  return out;
}

/// Keeps points with squared norm strictly above threshold². Order preserved.
inline Segment remove_null_points(const Segment& segment, double threshold) {
  if (threshold < 0.0) throw UsageError("null threshold must be non-negative");
  const double limit = threshold * threshold;
  Segment out;
  out.segment_index = segment.segment_index;
  out.points.reserve(segment.points.size());
  out.source_indices.reserve(segment.points.size());
  for (std::size_t i = 0; i < segment.points.size(); ++i) {
    if (squared_norm(segment.points[i]) > limit) {
      out.points.push_back(segment.points[i]);
      out.source_indices.push_back(segment.source_indices[i]);
    }
  }
  return out;
}

/// split_frame followed by per-segment null removal.
inline std::vector<Segment> segment_and_filter(const Frame& frame,
                                               const SegmentationConfig& config) {
  auto segments = split_frame(frame, config);
  for (auto& s : segments) s = remove_null_points(s, config.null_threshold);
  return segments;
}

}  // namespace radarprep

#endif  // RADARPREP_SEGMENTATION_HPP
