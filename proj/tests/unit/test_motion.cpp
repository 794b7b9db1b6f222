#include <random>

#include "doctest.h"
#include "edgewatch/motion.hpp"
#include "oracles.hpp"

using namespace edgewatch;

namespace {

TrackState random_state(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(0.0, 600.0);
  std::uniform_real_distribution<double> h(20.0, 200.0);
  std::uniform_real_distribution<double> vel(-3.0, 3.0);
  TrackState s;
  s.mean << pos(rng), pos(rng), 0.4, h(rng), vel(rng), vel(rng), 0.0, vel(rng);
  s.covariance = oracle::random_spd<8>(rng, 0.5, 50.0);
  return s;
}

}  // namespace

TEST_CASE("initiate sets zero velocity and a diagonal covariance") {
  KalmanFilter kf;
  const TrackState s = kf.initiate({100, 50, 0.5, 40});
  Vector8 want;
  want << 100, 50, 0.5, 40, 0, 0, 0, 0;
  CHECK(s.mean == want);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j)
      if (i != j) CHECK(s.covariance(i, j) == 0.0);
  // 2 * (1/20) * 40 = 4
  CHECK(std::sqrt(s.covariance(0, 0)) == doctest::Approx(4.0));
  CHECK(std::sqrt(s.covariance(1, 1)) == doctest::Approx(4.0));
  CHECK(std::sqrt(s.covariance(3, 3)) == doctest::Approx(4.0));
}

TEST_CASE("predict applies constant velocity") {
  KalmanFilter kf;
  TrackState s;
  s.mean << 0, 0, 1, 10, 1, 0, 0, 0;
  s.covariance = Matrix8::Identity();
  const TrackState p = kf.predict(s);
  Vector8 want;
  want << 1, 0, 1, 10, 1, 0, 0, 0;
  CHECK((p.mean - want).norm() == 0.0);
  CHECK(p.covariance.trace() >= s.covariance.trace());

  s.mean << 7, 8, 1, 10, 0, 0, 0, 0;
  CHECK(kf.predict(s).mean.head<4>() == s.mean.head<4>());
}

TEST_CASE("project takes the mean's measured components") {
  KalmanFilter kf;
  TrackState s;
  s.mean << 5, 6, 1, 20, 3, 3, 0, 1;
  s.covariance = Matrix8::Identity();
  CHECK(kf.project(s).mean == Vector4(5, 6, 1, 20));
}

TEST_CASE("project with zero prior covariance returns R") {
  KalmanConfig cfg;
  cfg.aspect_position_std = 1.0;
  KalmanFilter kf(cfg);
  TrackState s;
  s.mean << 0, 0, 1, 20, 0, 0, 0, 0;  // position weight * h = 1, so R = I
  s.covariance = Matrix8::Zero();
  CHECK((kf.project(s).covariance - Matrix4::Identity()).norm() < 1e-15);
}

TEST_CASE("project matches a dense matrix product") {
  KalmanFilter kf;
  TrackState s;
  s.mean << 10, 10, 0.5, 80, 0, 0, 0, 0;
  s.covariance = Matrix8::Zero();
  for (int i = 0; i < 8; ++i) s.covariance(i, i) = i + 1;
  Eigen::Matrix<double, 4, 8> H = Eigen::Matrix<double, 4, 8>::Zero();
  for (int i = 0; i < 4; ++i) H(i, i) = 1;
  const Matrix4 want = H * s.covariance * H.transpose() + oracle::measurement_noise(80, 1.0 / 20, 1e-2, 1.0);
  CHECK(oracle::relative_error(kf.project(s).covariance, want) < 1e-14);
}

TEST_CASE("update with identity prior and noise halves the variance") {
  KalmanConfig cfg;
  cfg.aspect_position_std = 1.0;
  KalmanFilter kf(cfg);
  TrackState s;
  s.mean << 0, 0, 1, 20, 0, 0, 0, 0;
  s.covariance = Matrix8::Identity();
  const TrackState post = kf.update(s, {2, 0, 1, 20});
  for (int i = 0; i < 4; ++i) CHECK(post.covariance(i, i) == doctest::Approx(0.5));
  CHECK(post.mean(0) == doctest::Approx(1.0));
}

TEST_CASE("update at the predicted mean leaves the mean unchanged") {
  KalmanFilter kf;
  std::mt19937_64 rng(3);
  const TrackState s = random_state(rng);
  const TrackState post = kf.update(s, to_observation(Vector4(s.mean.head<4>())));
  CHECK(oracle::relative_error(post.mean, s.mean) < 1e-12);
}

TEST_CASE("update equals information-form conditioning") {
  KalmanFilter kf;
  std::mt19937_64 rng(17);
  std::normal_distribution<double> noise(0.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    const TrackState s = random_state(rng);
    const Vector4 z(s.mean(0) + noise(rng), s.mean(1) + noise(rng), s.mean(2) + 0.01 * noise(rng),
                    s.mean(3) + noise(rng));
    const TrackState post = kf.update(s, to_observation(z));
    const auto want = oracle::condition(s.mean, s.covariance, z,
                                        oracle::measurement_noise(s.mean(3), 1.0 / 20, 1e-2, 1.0));
    CHECK(oracle::relative_error(post.mean, want.mean) < 1e-9);
    CHECK(oracle::relative_error(post.covariance, want.cov) < 1e-9);
  }
}

TEST_CASE("covariance stays symmetric over long predict/update runs") {
  KalmanFilter kf;
  std::mt19937_64 rng(23);
  std::normal_distribution<double> noise(0.0, 2.0);
  TrackState s = kf.initiate({300, 200, 0.4, 90});
  for (int k = 0; k < 500; ++k) {
    s = kf.predict(s);
    if (k % 3 != 0) {
      s = kf.update(s, {300 + k + noise(rng), 200 + noise(rng), 0.4, 90 + noise(rng)});
    }
    CHECK((s.covariance - s.covariance.transpose()).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("mahalanobis hand values") {
  MeasurementDistribution md;
  md.mean = Vector4(1, 2, 0.5, 30);
  md.covariance = Matrix4::Identity();
  CHECK(mahalanobis_sq(md, {1, 2, 0.5, 30}) == 0.0);
  CHECK(mahalanobis_sq(md, {2, 2, 0.5, 30}) == doctest::Approx(1.0));
  md.covariance = 4.0 * Matrix4::Identity();
  CHECK(mahalanobis_sq(md, {3, 2, 0.5, 30}) == doctest::Approx(1.0));
}

TEST_CASE("mahalanobis is invariant under invertible affine maps") {
  std::mt19937_64 rng(29);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    MeasurementDistribution md;
    for (int i = 0; i < 4; ++i) md.mean(i) = 10 * g(rng);
    md.covariance = oracle::random_spd<4>(rng, 0.5, 20.0);
    Vector4 d;
    for (int i = 0; i < 4; ++i) d(i) = md.mean(i) + 3 * g(rng);
    Matrix4 A = oracle::random_spd<4>(rng, 0.5, 3.0);
    Vector4 b;
    for (int i = 0; i < 4; ++i) b(i) = g(rng);

    MeasurementDistribution mapped;
    mapped.mean = A * md.mean + b;
    mapped.covariance = A * md.covariance * A.transpose();
    const double before = mahalanobis_sq(md, to_observation(d));
    const double after = mahalanobis_sq(mapped, to_observation(Vector4(A * d + b)));
    CHECK(after == doctest::Approx(before).epsilon(1e-8));
    CHECK(before >= 0.0);
  }
}

TEST_CASE("degenerate innovation covariance is rejected") {
  MeasurementDistribution md;
  md.covariance = Matrix4::Zero();
  md.covariance(0, 0) = 1.0;
  CHECK_THROWS_AS(mahalanobis_sq(md, {0, 0, 1, 1}), DegenerateCovariance);

  KalmanConfig cfg;
  cfg.measurement_noise_scale = 0.0;
  KalmanFilter kf(cfg);
  TrackState s;
  s.mean << 0, 0, 1, 20, 0, 0, 0, 0;
  s.covariance = Matrix8::Zero();
  CHECK_THROWS_AS(kf.project(s), DegenerateCovariance);
}
