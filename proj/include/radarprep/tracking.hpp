#ifndef RADARPREP_TRACKING_HPP
#define RADARPREP_TRACKING_HPP

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "radarprep/core.hpp"

namespace radarprep {

/// Isotropic noise scales for the constant-velocity filter:
/// Q = q·I4, R = r·I2, P0 = p0·I4. `gate` is a planar distance in meters.
struct KalmanParams {
  double q = 29.41;
  double r = 0.081;
  double p0 = 14.64;
  double gate = 2.0;
  double dt = 1.0;

  void validate() const {
    if (!(q > 0 && r > 0 && p0 > 0 && gate > 0 && dt > 0))
      throw UsageError("kalman parameters q, r, p0, gate, dt must all be positive");
  }
};

using StateVector = Eigen::Vector4d;   // [x, y, vx, vy]
using StateCovariance = Eigen::Matrix4d;

struct KalmanState {
  StateVector x = StateVector::Zero();
  StateCovariance covariance = StateCovariance::Identity();

  Vec2 position() const { return {x(0), x(1)}; }
};

/// One predict(/update) step of track_with_kf. `observed` is empty when the
/// track had no cluster in this segment or the gate rejected it; in both
/// cases `filtered == predicted`. `prediction_error` is empty only when there
/// was nothing to compare against.
struct StepRecord {
  std::size_t segment_index = 0;
  Vec2 predicted;
  std::optional<Vec2> observed;
  Vec2 filtered;
  double state_change = 0.0;
  std::optional<double> prediction_error;
  bool gated_out = false;
};

namespace detail {

inline Eigen::Matrix4d transition(double dt) {
  Eigen::Matrix4d f = Eigen::Matrix4d::Identity();
  f(0, 2) = dt;
  f(1, 3) = dt;
  return f;
}

inline Eigen::Matrix<double, 2, 4> observation_model() {
  Eigen::Matrix<double, 2, 4> h = Eigen::Matrix<double, 2, 4>::Zero();
  h(0, 0) = 1.0;
  h(1, 1) = 1.0;
  return h;
}

}  // namespace detail

inline KalmanState kf_init(const Vec2& first_observation, const KalmanParams& params) {
  KalmanState s;
  s.x << first_observation.x, first_observation.y, 0.0, 0.0;
  s.covariance = params.p0 * StateCovariance::Identity();
  return s;
}

inline KalmanState kf_predict(const KalmanState& state, const KalmanParams& params) {
  const Eigen::Matrix4d f = detail::transition(params.dt);
  KalmanState out;
  out.x = f * state.x;
  out.covariance = f * state.covariance * f.transpose() + params.q * StateCovariance::Identity();
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  return out;
}

/// Standard update with H = [I2 0]. Returns the new state and the innovation
/// z - H·x.
inline std::pair<KalmanState, Vec2> kf_update(const KalmanState& state, const Vec2& observation,
                                              const KalmanParams& params) {
  const auto h = detail::observation_model();
  const Eigen::Vector2d z(observation.x, observation.y);
  const Eigen::Vector2d innovation = z - h * state.x;
  const Eigen::Matrix2d s = h * state.covariance * h.transpose() + params.r * Eigen::Matrix2d::Identity();
  Eigen::LDLT<Eigen::Matrix2d> ldlt(s);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.vectorD().minCoeff() <= 0.0)
    throw DataError("singular innovation covariance");
  // K = P Hᵀ S⁻¹, computed as (S⁻¹ H P)ᵀ since S and P are symmetric.
  const Eigen::Matrix<double, 4, 2> gain = ldlt.solve(h * state.covariance).transpose();

  KalmanState out;
  out.x = state.x + gain * innovation;
  out.covariance = (StateCovariance::Identity() - gain * h) * state.covariance;
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  return {out, Vec2{innovation(0), innovation(1)}};
}

struct KalmanTrackResult {
  Track track;  // input track with kalman_history filled
  std::vector<StepRecord> steps;
};

/// Filters a track's centroid xy from its first to last covered segment.
/// Each step predicts, then updates only if the track has an observation
/// there within `gate` of the prediction; otherwise it coasts.
inline KalmanTrackResult track_with_kf(const Track& track, const KalmanParams& params) {
  params.validate();
  if (track.nodes.empty()) throw UsageError("track_with_kf: empty track");

  KalmanTrackResult result{track, {}};
  std::vector<KalmanHistoryEntry> history;

  const auto& first = track.nodes.front();
  KalmanState state = kf_init(xy(first.observed_centroid), params);
  history.push_back({state.position(), state.position(), 0.0});

  std::size_t next_node = 1;
  for (std::size_t seg = track.first_segment() + 1; seg <= track.last_segment(); ++seg) {
    const TrackNode* node = nullptr;
    if (next_node < track.nodes.size() && track.nodes[next_node].segment_index == seg)
      node = &track.nodes[next_node++];

    const KalmanState predicted = kf_predict(state, params);
    StepRecord rec;
    rec.segment_index = seg;
    rec.predicted = predicted.position();

    KalmanState next = predicted;
    double innovation_norm = 0.0;
    if (node != nullptr) {
      const Vec2 obs = xy(node->observed_centroid);
      const double err = planar_distance(rec.predicted, obs);
      rec.prediction_error = err;
      if (err <= params.gate) {
        auto [updated, innovation] = kf_update(predicted, obs, params);
        next = updated;
        rec.observed = obs;
        innovation_norm = std::hypot(innovation.x, innovation.y);
      } else {
        rec.gated_out = true;
      }
    }
    rec.filtered = next.position();
    rec.state_change = (next.x - state.x).norm();
    history.push_back({rec.predicted, rec.filtered, innovation_norm});
    result.steps.push_back(rec);
    state = next;
  }
  result.track.kalman_history = std::move(history);
  return result;
}

}  // namespace radarprep

#endif  // RADARPREP_TRACKING_HPP
