#include "edgewatch/motion.hpp"

#include <cmath>

namespace edgewatch {

namespace {

void symmetrize(Matrix8& m) { m = 0.5 * (m + m.transpose()).eval(); }

Eigen::LLT<Matrix4> factor_checked(const Matrix4& s, double max_condition) {
  Eigen::LLT<Matrix4> llt(s);
  if (llt.info() != Eigen::Success) {
    throw DegenerateCovariance("innovation covariance is not positive definite");
  }
  const double rcond = llt.rcond();
  if (!(rcond > 0.0) || 1.0 / rcond > max_condition) {
    throw DegenerateCovariance("innovation covariance is numerically singular");
  }
  return llt;
}

}  // namespace

Vector4 to_vector(const Observation& obs) { return {obs.u, obs.v, obs.gamma, obs.h}; }

Observation to_observation(const Vector4& v) { return {v(0), v(1), v(2), v(3)}; }

KalmanFilter::KalmanFilter(KalmanConfig config) : config_(config) {
  transition_ = Matrix8::Identity();
  for (int i = 0; i < 4; ++i) transition_(i, 4 + i) = 1.0;
  observation_ = Matrix48::Zero();
  for (int i = 0; i < 4; ++i) observation_(i, i) = 1.0;
}

TrackState KalmanFilter::initiate(const Observation& obs) const {
  TrackState s;
  s.mean.head<4>() = to_vector(obs);
  s.mean.tail<4>().setZero();

  const double pos = config_.initial_position_factor * config_.position_weight * obs.h;
  const double vel = config_.initial_velocity_factor * config_.velocity_weight * obs.h;
  Vector8 std;
  std << pos, pos, config_.initial_position_factor * config_.aspect_position_std, pos, vel, vel,
      config_.initial_velocity_factor * config_.aspect_velocity_std, vel;
  s.covariance = std.array().square().matrix().asDiagonal();
  return s;
}

Matrix8 KalmanFilter::process_noise(const TrackState& state) const {
  const double h = state.mean(3);
  const double pos = config_.position_weight * h;
  const double vel = config_.velocity_weight * h;
  Vector8 std;
  std << pos, pos, config_.aspect_position_std, pos, vel, vel, config_.aspect_velocity_std, vel;
  return std.array().square().matrix().asDiagonal();
}

Matrix4 KalmanFilter::measurement_noise(const TrackState& state) const {
  const double pos = config_.position_weight * state.mean(3);
  Vector4 std(pos, pos, config_.aspect_position_std, pos);
  return (config_.measurement_noise_scale * std.array().square()).matrix().asDiagonal();
}

TrackState KalmanFilter::predict(const TrackState& state) const {
  TrackState out;
  out.mean = transition_ * state.mean;
  out.covariance =
      transition_ * state.covariance * transition_.transpose() + process_noise(state);
  symmetrize(out.covariance);
  return out;
}

MeasurementDistribution KalmanFilter::project(const TrackState& state) const {
  MeasurementDistribution md;
  md.mean = observation_ * state.mean;
  md.covariance = observation_ * state.covariance * observation_.transpose() +
                  measurement_noise(state);
  md.covariance = 0.5 * (md.covariance + md.covariance.transpose()).eval();
  factor_checked(md.covariance, config_.max_condition);
  return md;
}

TrackState KalmanFilter::update(const TrackState& state, const Observation& obs) const {
  const MeasurementDistribution md = project(state);
  const auto llt = factor_checked(md.covariance, config_.max_condition);

  // K = P H^T S^{-1}, solved as S K^T = H P.
  const Matrix48 ph_t_transposed = observation_ * state.covariance;
  const Eigen::Matrix<double, 8, 4> gain = llt.solve(ph_t_transposed).transpose();

  TrackState out;
  out.mean = state.mean + gain * (to_vector(obs) - md.mean);
  out.covariance = state.covariance - gain * md.covariance * gain.transpose();
  symmetrize(out.covariance);
  return out;
}

MahalanobisGate::MahalanobisGate(const MeasurementDistribution& md, double max_condition)
    : mean_(md.mean), llt_(factor_checked(md.covariance, max_condition)) {}

double MahalanobisGate::distance_sq(const Vector4& d) const {
  const Vector4 z = llt_.matrixL().solve(d - mean_);
  return z.squaredNorm();
}

double mahalanobis_sq(const MeasurementDistribution& md, const Observation& d) {
  return MahalanobisGate(md).distance_sq(to_vector(d));
}

}  // namespace edgewatch
