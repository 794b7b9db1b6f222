#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include "edgewatch/geometry.hpp"

namespace edgewatch {

using Vector4 = Eigen::Matrix<double, 4, 1>;
using Vector8 = Eigen::Matrix<double, 8, 1>;
using Matrix4 = Eigen::Matrix<double, 4, 4>;
using Matrix8 = Eigen::Matrix<double, 8, 8>;
using Matrix48 = Eigen::Matrix<double, 4, 8>;

/// Raised when an innovation covariance cannot be factorised safely.
class DegenerateCovariance : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mean is (u, v, gamma, h, du, dv, dgamma, dh); velocities are per frame.
struct TrackState {
  Vector8 mean = Vector8::Zero();
  Matrix8 covariance = Matrix8::Identity();
};

struct MeasurementDistribution {
  Vector4 mean = Vector4::Zero();
  Matrix4 covariance = Matrix4::Identity();
};

// Noise standard deviations for u, v and h scale with the box height.
struct KalmanConfig {
  double position_weight = 1.0 / 20.0;
  double velocity_weight = 1.0 / 160.0;
  double aspect_position_std = 1e-2;
  double aspect_velocity_std = 1e-5;
  double initial_position_factor = 2.0;
  double initial_velocity_factor = 10.0;
  /// Scales the measurement covariance; 1 in normal operation.
  double measurement_noise_scale = 1.0;
  double max_condition = 1e12;
};

Vector4 to_vector(const Observation& obs);
Observation to_observation(const Vector4& v);

/// Constant-velocity Kalman filter in (u, v, gamma, h) box space with a fixed
/// time step of one frame.
class KalmanFilter {
 public:
  explicit KalmanFilter(KalmanConfig config = {});

  TrackState initiate(const Observation& obs) const;
  TrackState predict(const TrackState& state) const;
  /// Throws DegenerateCovariance when S has condition number > max_condition.
  MeasurementDistribution project(const TrackState& state) const;
  TrackState update(const TrackState& state, const Observation& obs) const;

  Matrix8 process_noise(const TrackState& state) const;
  Matrix4 measurement_noise(const TrackState& state) const;

  const Matrix8& transition() const { return transition_; }
  const Matrix48& observation_matrix() const { return observation_; }
  const KalmanConfig& config() const { return config_; }

 private:
  KalmanConfig config_;
  Matrix8 transition_;
  Matrix48 observation_;
};

/// Cholesky factor of a measurement distribution's covariance, reused when one
/// track is compared against many detections.
class MahalanobisGate {
 public:
  MahalanobisGate(const MeasurementDistribution& md, double max_condition = 1e12);
  /// (d - y)^T S^{-1} (d - y)
  double distance_sq(const Vector4& d) const;

 private:
  Vector4 mean_;
  Eigen::LLT<Matrix4> llt_;
};

double mahalanobis_sq(const MeasurementDistribution& md, const Observation& d);

}  // namespace edgewatch
