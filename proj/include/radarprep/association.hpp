#ifndef RADARPREP_ASSOCIATION_HPP
#define RADARPREP_ASSOCIATION_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "radarprep/core.hpp"

namespace radarprep {

/// Row-major cost matrix between the clusters of two consecutive segments.
class CostMatrix {
 public:
  CostMatrix() = default;
  CostMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), costs_(rows * cols, fill) {}
  CostMatrix(std::size_t rows, std::size_t cols, std::vector<double> costs)
      : rows_(rows), cols_(cols), costs_(std::move(costs)) {
    if (costs_.size() != rows_ * cols_) throw UsageError("cost matrix size mismatch");
  }
  /// Convenience for tests: nested row lists.
  static CostMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.front().size();
    CostMatrix m(r, c);
    for (std::size_t i = 0; i < r; ++i) {
      if (rows[i].size() != c) throw UsageError("ragged cost matrix");
      for (std::size_t j = 0; j < c; ++j) m(i, j) = rows[i][j];
    }
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return costs_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return costs_[i * cols_ + j]; }
  std::span<const double> data() const { return costs_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> costs_;
};

struct Assignment {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // sorted by row
  std::vector<std::size_t> unmatched_rows;
  std::vector<std::size_t> unmatched_cols;
  double total_cost = 0.0;
};

/// Unweighted 3-D Euclidean distances between cluster centroids.
inline CostMatrix cost_matrix(std::span<const Cluster> a, std::span<const Cluster> b) {
  CostMatrix m(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      m(i, j) = euclidean_distance(a[i].centroid, b[j].centroid);
  return m;
}

namespace detail {

/// Minimum-cost perfect matching on an n×n matrix via shortest augmenting
/// paths with dual potentials. Returns col assigned to each row.
inline std::vector<std::size_t> solve_square(const std::vector<double>& a, std::size_t n) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based indexing; index 0 is the virtual source column.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n);
  for (std::size_t j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

/// Optimal real-pair cost over the sub-matrix given by `rows` × `cols`, using
/// sentinel padding to square. Real matching size is min(|rows|, |cols|).
inline double optimal_subcost(const CostMatrix& m, std::span<const std::size_t> rows,
                              std::span<const std::size_t> cols, double sentinel) {
  const std::size_t n = std::max(rows.size(), cols.size());
  if (n == 0 || rows.empty() || cols.empty()) return 0.0;
  std::vector<double> a(n * n, sentinel);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) a[i * n + j] = m(rows[i], cols[j]);
  const auto match = solve_square(a, n);
  double total = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (match[i] < cols.size()) total += m(rows[i], cols[match[i]]);
  return total;
}

inline bool cost_equal(double a, double b) {
  return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace detail

/// Minimum-total-cost matching of size min(rows, cols). Rectangular inputs are
/// padded to square with sentinel (max entry + 1) × max(rows, cols); padded
/// pairs come back as unmatched. Among optimal matchings the lexicographically
/// smallest sorted pair list is returned.
inline Assignment hungarian_assign(const CostMatrix& m) {
  double max_entry = 0.0;
  for (double c : m.data()) {
    if (std::isnan(c) || c < 0.0 || !std::isfinite(c))
      throw UsageError("cost matrix entries must be finite and non-negative");
    max_entry = std::max(max_entry, c);
  }
  const std::size_t r = m.rows();
  const std::size_t c = m.cols();
  const double sentinel = (max_entry + 1.0) * static_cast<double>(std::max(r, c));

  std::vector<std::size_t> rows(r), cols(c);
  for (std::size_t i = 0; i < r; ++i) rows[i] = i;
  for (std::size_t j = 0; j < c; ++j) cols[j] = j;
  const double optimum = detail::optimal_subcost(m, rows, cols, sentinel);

  // Fix pairs row by row, taking the smallest column (or leaving the row
  // unmatched last) that still admits an optimal completion.
  Assignment out;
  std::vector<std::size_t> free_rows = rows;
  std::vector<std::size_t> free_cols = cols;
  std::size_t needed = std::min(r, c);
  double fixed_cost = 0.0;
  for (std::size_t i = 0; i < r && needed > 0; ++i) {
    free_rows.erase(std::find(free_rows.begin(), free_rows.end(), i));
    bool matched = false;
    for (std::size_t jpos = 0; jpos < free_cols.size(); ++jpos) {
      const std::size_t j = free_cols[jpos];
      std::vector<std::size_t> rest_cols = free_cols;
      rest_cols.erase(rest_cols.begin() + static_cast<std::ptrdiff_t>(jpos));
      if (std::min(free_rows.size(), rest_cols.size()) != needed - 1) continue;
      const double total =
          fixed_cost + m(i, j) + detail::optimal_subcost(m, free_rows, rest_cols, sentinel);
      if (detail::cost_equal(total, optimum)) {
        out.pairs.emplace_back(i, j);
        fixed_cost += m(i, j);
        free_cols = std::move(rest_cols);
        --needed;
        matched = true;
        break;
      }
    }
    if (!matched) out.unmatched_rows.push_back(i);
  }
  for (std::size_t i : free_rows) out.unmatched_rows.push_back(i);
  std::sort(out.unmatched_rows.begin(), out.unmatched_rows.end());
  out.unmatched_cols = free_cols;
  for (const auto& [i, j] : out.pairs) out.total_cost += m(i, j);
  return out;
}

/// Chains Hungarian assignments between consecutive segments into tracks.
/// Unmatched clusters start new tracks; a track whose tail goes unmatched is
/// frozen. Pairs costing more than max_link_cost (when set) count as unmatched.
inline std::vector<Track> build_tracks(const std::vector<std::vector<Cluster>>& per_segment,
                                       std::optional<double> max_link_cost = std::nullopt) {
  std::vector<Track> tracks;
  std::vector<std::size_t> tail_track;  // track id owning each cluster of the previous segment

  auto spawn = [&](std::size_t seg, std::size_t k, const Cluster& cl) {
    Track t;
    t.track_id = tracks.size();
    t.nodes.push_back({seg, k, cl.centroid});
    tracks.push_back(std::move(t));
    return tracks.back().track_id;
  };

  for (std::size_t seg = 0; seg < per_segment.size(); ++seg) {
    const auto& current = per_segment[seg];
    std::vector<std::size_t> owner(current.size(), 0);
    std::vector<char> linked(current.size(), 0);
    if (seg > 0 && !current.empty() && !per_segment[seg - 1].empty()) {
      const CostMatrix costs = cost_matrix(per_segment[seg - 1], current);
      const auto assignment = hungarian_assign(costs);
      for (const auto& [i, j] : assignment.pairs) {
        if (max_link_cost && costs(i, j) > *max_link_cost) continue;
        Track& t = tracks[tail_track[i]];
        t.nodes.push_back({seg, j, current[j].centroid});
        owner[j] = t.track_id;
        linked[j] = 1;
      }
    }
    for (std::size_t k = 0; k < current.size(); ++k)
      if (!linked[k]) owner[k] = spawn(seg, k, current[k]);
    tail_track = std::move(owner);
  }
  return tracks;
}

}  // namespace radarprep

#endif  // RADARPREP_ASSOCIATION_HPP
