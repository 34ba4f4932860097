#ifndef RADARPREP_TUNING_HPP
#define RADARPREP_TUNING_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "radarprep/association.hpp"
#include "radarprep/clustering.hpp"
#include "radarprep/ingest.hpp"
#include "radarprep/pipeline.hpp"
#include "radarprep/segmentation.hpp"
#include "radarprep/synth.hpp"
#include "radarprep/tracking.hpp"

namespace radarprep {

inline constexpr std::size_t kTunedDims = 3;  // q, r, p0
using ParamVector = std::array<double, kTunedDims>;

struct Bounds {
  double low = 0.0;
  double high = 1.0;
};

struct BoConfig {
  std::array<Bounds, kTunedDims> bounds{{{0.01, 100.0}, {0.001, 10.0}, {0.01, 100.0}}};
  std::size_t iterations = 30;  // total objective evaluations
  std::size_t initial_samples = 5;
  std::uint64_t seed = 0;
  std::size_t acquisition_starts = 64;
  double observation_noise = 1e-6;

  void validate() const {
    for (const auto& b : bounds)
      if (!(b.low < b.high)) throw UsageError("bounds must satisfy low < high");
    if (initial_samples == 0) throw UsageError("initial_samples must be positive");
    if (iterations < initial_samples) throw UsageError("iterations must be >= initial_samples");
  }
};

struct Evaluation {
  ParamVector params{};
  double value = 0.0;  // +inf when the objective returned NaN
};

struct BoTrace {
  std::vector<Evaluation> evaluations;
  Evaluation best;

  /// best_so_far[i] = min value over evaluations[0..i].
  std::vector<double> best_so_far() const {
    std::vector<double> out;
    double b = std::numeric_limits<double>::infinity();
    for (const auto& e : evaluations) {
      b = std::min(b, e.value);
      out.push_back(b);
    }
    return out;
  }
};

namespace detail {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

/// Gaussian-process surrogate on the unit cube: squared-exponential kernel,
/// unit signal variance on standardized targets, per-dimension length scales
/// from the median pairwise coordinate gap.
class GpSurrogate {
 public:
  GpSurrogate(const std::vector<ParamVector>& x, const std::vector<double>& y, double noise)
      : x_(x), noise_(noise) {
    const std::size_t n = x.size();
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : y) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    mean_ = mean;
    scale_ = var > 0 ? std::sqrt(var) : 1.0;
    ys_.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) ys_(static_cast<Eigen::Index>(i)) = (y[i] - mean_) / scale_;

    for (std::size_t d = 0; d < kTunedDims; ++d) {
      std::vector<double> gaps;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) gaps.push_back(std::abs(x[i][d] - x[j][d]));
      double ls = 0.5;
      if (!gaps.empty()) {
        std::nth_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2), gaps.end());
        ls = gaps[gaps.size() / 2];
      }
      length_[d] = std::clamp(ls, kMinLength, kMaxLength);
    }
    fit();
  }

  /// Log marginal likelihood of the standardized targets under the current
  /// length scales (up to a constant).
  double log_marginal_likelihood() const {
    if (llt_.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
    const Eigen::MatrixXd l = llt_.matrixL();
    return -0.5 * ys_.dot(alpha_) - l.diagonal().array().log().sum();
  }

  double kernel(const ParamVector& a, const ParamVector& b) const {
    double s = 0.0;
    for (std::size_t d = 0; d < kTunedDims; ++d) {
      const double u = (a[d] - b[d]) / length_[d];
      s += u * u;
    }
    return std::exp(-0.5 * s);
  }

  /// Posterior mean and standard deviation in objective units.
  std::pair<double, double> predict(const ParamVector& p) const {
    const std::size_t n = x_.size();
    Eigen::VectorXd ks(n);
    for (std::size_t i = 0; i < n; ++i) ks(i) = kernel(p, x_[i]);
    const double mu = ks.dot(alpha_);
    const Eigen::VectorXd v = llt_.matrixL().solve(ks);
    const double var = std::max(1.0 - v.squaredNorm(), 0.0);
    return {mean_ + scale_ * mu, scale_ * std::sqrt(var)};
  }

  /// Expected improvement below `best`.
  double expected_improvement(const ParamVector& p, double best) const {
    const auto [mu, sigma] = predict(p);
    if (sigma < 1e-12) return std::max(best - mu, 0.0);
    const double z = (best - mu) / sigma;
    return (best - mu) * normal_cdf(z) + sigma * normal_pdf(z);
  }

  const ParamVector& length_scales() const { return length_; }

 private:
  static constexpr double kMinLength = 1e-2;
  static constexpr double kMaxLength = 10.0;

  void fit() {
    const auto n = static_cast<Eigen::Index>(x_.size());
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) k(i, j) = kernel(x_[i], x_[j]);
    double jitter = noise_;
    for (int attempt = 0; attempt < 8; ++attempt) {
      llt_.compute(k + jitter * Eigen::MatrixXd::Identity(n, n));
      if (llt_.info() == Eigen::Success) break;
      jitter *= 10.0;
    }
    alpha_ = llt_.solve(ys_);
  }

  std::vector<ParamVector> x_;
  double noise_ = 1e-6;
  Eigen::VectorXd ys_;
  ParamVector length_{};
  double mean_ = 0.0;
  double scale_ = 1.0;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;
};

/// Coordinate descent on -EI from one start: probe ±step along each axis,
/// keep improvements, halve the step when nothing improves.
inline ParamVector coordinate_ascent(const GpSurrogate& gp, double best, ParamVector x) {
  double fx = gp.expected_improvement(x, best);
  for (double step = 0.25; step > 1e-4;) {
    bool improved = false;
    for (std::size_t d = 0; d < kTunedDims; ++d) {
      for (double dir : {-1.0, 1.0}) {
        ParamVector cand = x;
        cand[d] = std::clamp(cand[d] + dir * step, 0.0, 1.0);
        const double fc = gp.expected_improvement(cand, best);
        if (fc > fx) {
          x = cand;
          fx = fc;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return x;
}

inline std::vector<ParamVector> latin_hypercube(std::size_t n, Rng& rng) {
  std::vector<ParamVector> pts(n);
  for (std::size_t d = 0; d < kTunedDims; ++d) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    rng.shuffle(perm);
    for (std::size_t i = 0; i < n; ++i)
      pts[i][d] = (static_cast<double>(perm[i]) + rng.uniform()) / static_cast<double>(n);
  }
  return pts;
}

}  // namespace detail

/// Bayesian optimization over the box in `config.bounds`. Runs
/// `initial_samples` Latin-hypercube evaluations, then picks each further
/// point by maximizing expected improvement on a GP fitted to all finite
/// evaluations so far. Deterministic in the seed.
inline BoTrace bayes_optimize(const std::function<double(const ParamVector&)>& objective,
                              const BoConfig& config) {
  config.validate();
  Rng rng(config.seed);
  auto to_params = [&](const ParamVector& u) {
    ParamVector p;
    for (std::size_t d = 0; d < kTunedDims; ++d)
      p[d] = config.bounds[d].low + u[d] * (config.bounds[d].high - config.bounds[d].low);
    return p;
  };

  BoTrace trace;
  std::vector<ParamVector> unit_x;
  std::vector<double> finite_y;
  auto evaluate = [&](const ParamVector& u) {
    const ParamVector p = to_params(u);
    double v = objective(p);
    if (std::isnan(v)) v = std::numeric_limits<double>::infinity();
    trace.evaluations.push_back({p, v});
    if (std::isfinite(v)) {
      unit_x.push_back(u);
      finite_y.push_back(v);
    }
    if (trace.evaluations.size() == 1 || v < trace.best.value) trace.best = trace.evaluations.back();
  };

  for (const auto& u : detail::latin_hypercube(config.initial_samples, rng)) evaluate(u);

  while (trace.evaluations.size() < config.iterations) {
    ParamVector next{};
    if (finite_y.size() < 2) {
      for (auto& c : next) c = rng.uniform();
    } else {
      const detail::GpSurrogate gp(unit_x, finite_y, config.observation_noise);
      const double best = *std::min_element(finite_y.begin(), finite_y.end());
      double best_ei = -1.0;
      for (std::size_t s = 0; s < config.acquisition_starts; ++s) {
        ParamVector start{};
        if (s == 0) {
          start = unit_x[static_cast<std::size_t>(
              std::min_element(finite_y.begin(), finite_y.end()) - finite_y.begin())];
        } else {
          for (auto& c : start) c = rng.uniform();
        }
        const ParamVector cand = detail::coordinate_ascent(gp, best, start);
        const double ei = gp.expected_improvement(cand, best);
        if (ei > best_ei) {
          best_ei = ei;
          next = cand;
        }
      }
      const bool repeat = std::any_of(unit_x.begin(), unit_x.end(), [&](const ParamVector& u) {
        double d2 = 0.0;
        for (std::size_t d = 0; d < kTunedDims; ++d) d2 += (u[d] - next[d]) * (u[d] - next[d]);
        return d2 < 1e-12;
      });
      if (best_ei <= 0.0 || repeat)
        for (auto& c : next) c = rng.uniform();
    }
    evaluate(next);
  }
  return trace;
}

/// Mean Kalman prediction error over a fixed frame sample. Segmentation,
/// clustering and association do not depend on the filter parameters, so the
/// tracks are built once up front.
class KfObjective {
 public:
  KfObjective(const FrameSet& frames, const PipelineConfig& pipeline, std::size_t sample_size,
              std::uint64_t seed) {
    if (frames.frames.empty()) throw DataError("kf objective needs at least one frame");
    std::vector<std::size_t> idx(frames.frames.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    if (idx.size() > sample_size) {
      Rng rng(seed);
      for (std::size_t i = 0; i < sample_size; ++i)
        std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
      idx.resize(sample_size);
      std::sort(idx.begin(), idx.end());
    }
    sampled_ = idx;
    for (std::size_t i : idx) {
      const auto segments = segment_and_filter(frames.frames[i], pipeline.segmentation);
      std::vector<std::vector<Cluster>> clusters;
      for (const auto& s : segments) clusters.push_back(dbscan(s, pipeline.dbscan).clusters);
      for (auto& t : build_tracks(clusters))
        if (t.nodes.size() >= 2) tracks_.push_back(std::move(t));
    }
    gate_ = pipeline.kalman.gate;
    dt_ = pipeline.kalman.dt;
  }

  double operator()(const KalmanParams& params) const {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& t : tracks_)
      for (const auto& s : track_with_kf(t, params).steps)
        if (s.prediction_error) {
          sum += *s.prediction_error;
          ++n;
        }
    if (n == 0) throw DataError("objective undefined: no tracks");
    return sum / static_cast<double>(n);
  }

  double operator()(const ParamVector& qrp) const {
    return (*this)(KalmanParams{.q = qrp[0], .r = qrp[1], .p0 = qrp[2], .gate = gate_, .dt = dt_});
  }

  const std::vector<std::size_t>& sampled_frames() const { return sampled_; }

 private:
  std::vector<std::size_t> sampled_;
  std::vector<Track> tracks_;
  double gate_ = 2.0;
  double dt_ = 1.0;
};

/// One-shot form of KfObjective.
inline double kf_objective(const FrameSet& frames, const KalmanParams& params,
                           const PipelineConfig& pipeline, std::size_t sample_size = 32,
                           std::uint64_t seed = 0) {
  return KfObjective(frames, pipeline, sample_size, seed)(params);
}

}  // namespace radarprep

#endif  // RADARPREP_TUNING_HPP
