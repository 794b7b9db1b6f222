#include <random>

#include "doctest.h"
#include "edgewatch/association.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace edgewatch;

namespace {

Track make_track(TrackId id, const KalmanFilter& kf, const Observation& obs, const Descriptor& d) {
  Track t;
  t.id = id;
  t.state = kf.initiate(obs);
  t.gallery.push(d);
  return t;
}

Detection make_detection(const BoundingBox& box, const Descriptor& d) {
  Detection det;
  det.box = box;
  det.confidence = 0.9;
  det.descriptor = d;
  return det;
}

CostMatrix random_matrix(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dim(1, 5);
  std::uniform_real_distribution<double> cost(0.0, 10.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  const double infeasible_rate = coin(rng) * 0.6;
  CostMatrix m(static_cast<std::size_t>(dim(rng)), static_cast<std::size_t>(dim(rng)));
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c)
      if (coin(rng) >= infeasible_rate) m.at(r, c) = cost(rng);
  return m;
}

}  // namespace

TEST_CASE("combined cost endpoints and midpoint") {
  CHECK(combined_cost(3.7, 0.2, 1.0) == 3.7);
  CHECK(combined_cost(3.7, 0.2, 0.0) == 0.2);
  CHECK(combined_cost(1.0, 3.0, 0.5) == 2.0);
}

TEST_CASE("configuration validation names the field") {
  AssociationConfig cfg;
  cfg.lambda = 1.5;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("lambda"), std::invalid_argument);
  cfg = {};
  cfg.i_max = 0;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("i_max"), std::invalid_argument);
  cfg = {};
  cfg.max_cos_distance = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  CHECK_NOTHROW(AssociationConfig{}.validate());
}

TEST_CASE("cost matrix: exact match costs zero") {
  KalmanFilter kf;
  AssociationConfig cfg;
  const BoundingBox box{100, 100, 30, 80};
  const auto tracks = std::vector<Track>{make_track(1, kf, to_observation(box), Descriptor::basis(0))};
  const CostMatrix m = build_cost_matrix(tracks, {make_detection(box, Descriptor::basis(0))}, cfg, kf);
  REQUIRE(m.feasible(0, 0));
  CHECK(m.at(0, 0) == 0.0);
}

TEST_CASE("cost matrix: motion gate overrides appearance") {
  KalmanFilter kf;
  AssociationConfig cfg;
  const BoundingBox box{100, 100, 30, 80};
  const auto tracks = std::vector<Track>{make_track(1, kf, to_observation(box), Descriptor::basis(0))};
  const auto md = kf.project(tracks[0].state);
  // Shift u so that the squared distance is 100.
  const double shift = 10.0 * std::sqrt(md.covariance(0, 0));
  BoundingBox far = box;
  far.x += shift;
  CHECK(mahalanobis_sq(md, to_observation(far)) == doctest::Approx(100.0));
  const CostMatrix m = build_cost_matrix(tracks, {make_detection(far, Descriptor::basis(0))}, cfg, kf);
  CHECK_FALSE(m.feasible(0, 0));
}

TEST_CASE("cost matrix matches an entrywise recomputation") {
  KalmanFilter kf;
  AssociationConfig cfg;
  cfg.lambda = 0.3;
  cfg.max_cos_distance = 1.5;
  const std::vector<Track> tracks{make_track(1, kf, {100, 100, 0.4, 80}, Descriptor::basis(0)),
                                  make_track(2, kf, {104, 102, 0.4, 80}, Descriptor::basis(1))};
  const std::vector<Detection> dets{make_detection({86, 62, 32, 80}, Descriptor::basis(0)),
                                    make_detection({88, 60, 30, 80}, Descriptor::basis(1))};
  const CostMatrix m = build_cost_matrix(tracks, dets, cfg, kf);
  for (std::size_t l = 0; l < 2; ++l) {
    for (std::size_t k = 0; k < 2; ++k) {
      const auto& P = tracks[l].state.covariance;
      const Eigen::Matrix<double, 4, 4> S =
          P.topLeftCorner<4, 4>() + oracle::measurement_noise(tracks[l].state.mean(3), 1.0 / 20, 1e-2, 1.0);
      const Observation o = to_observation(dets[k].box);
      const Eigen::Matrix<double, 4, 1> r(o.u - tracks[l].state.mean(0), o.v - tracks[l].state.mean(1),
                                          o.gamma - tracks[l].state.mean(2), o.h - tracks[l].state.mean(3));
      const double motion = r.dot(S.inverse() * r);
      const double appearance = l == k ? 0.0 : 1.0;
      const bool feasible = motion <= cfg.mahalanobis_gate && appearance <= cfg.max_cos_distance;
      REQUIRE(m.feasible(l, k) == feasible);
      if (feasible) CHECK(m.at(l, k) == doctest::Approx(0.3 * motion + 0.7 * appearance));
    }
  }
}

TEST_CASE("cost matrix demands descriptors") {
  KalmanFilter kf;
  const std::vector<Track> tracks{make_track(1, kf, {100, 100, 0.4, 80}, Descriptor::basis(0))};
  Detection d;
  d.box = {85, 60, 30, 80};
  CHECK_THROWS_AS(build_cost_matrix(tracks, {d}, AssociationConfig{}, kf), AssociationError);
}

TEST_CASE("assign small cases") {
  CostMatrix one(1, 1);
  one.at(0, 0) = 4.0;
  CHECK(assign(one).matches.size() == 1);

  CostMatrix two(2, 2);
  two.at(0, 0) = 1;
  two.at(0, 1) = 10;
  two.at(1, 0) = 10;
  two.at(1, 1) = 1;
  const Assignment a = assign(two);
  REQUIRE(a.matches.size() == 2);
  CHECK(a.matches[0] == std::pair<std::size_t, std::size_t>{0, 0});
  CHECK(a.total_cost(two) == 2.0);

  CostMatrix none(2, 3);
  const Assignment b = assign(none);
  CHECK(b.matches.empty());
  CHECK(b.unmatched_rows.size() == 2);
  CHECK(b.unmatched_cols.size() == 3);

  const Assignment empty = assign(CostMatrix(0, 4));
  CHECK(empty.unmatched_cols.size() == 4);
}

TEST_CASE("assign prefers more feasible pairs over lower cost") {
  // Row 0 can take either column; row 1 only column 0.
  CostMatrix m(2, 2);
  m.at(0, 0) = 0.0;
  m.at(0, 1) = 9.0;
  m.at(1, 0) = 9.0;
  const Assignment a = assign(m);
  CHECK(a.matches.size() == 2);
  CHECK(a.total_cost(m) == 18.0);
}

TEST_CASE("assign matches exhaustive search") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    const CostMatrix m = random_matrix(rng);
    const Assignment a = assign(m);
    const auto want = oracle::brute_assignment(m);
    CHECK(a.matches.size() == want.pairs);
    CHECK(a.total_cost(m) == doctest::Approx(want.cost).epsilon(1e-12));
    for (const auto& [r, c] : a.matches) CHECK(m.feasible(r, c));
    CHECK(a.matches.size() + a.unmatched_rows.size() == m.rows());
    CHECK(a.matches.size() + a.unmatched_cols.size() == m.cols());
  }
}

TEST_CASE("first frame creates tentative tracks only") {
  Tracker tracker;
  std::vector<Detection> dets{make_detection({10, 10, 30, 80}, Descriptor::basis(0)),
                              make_detection({300, 10, 30, 80}, Descriptor::basis(1))};
  const FrameResult r = tracker.step(0, dets);
  CHECK(r.matches.empty());
  CHECK(r.new_tracks.size() == 2);
  CHECK(r.active_tracks.empty());
  CHECK_THROWS_AS(tracker.step(0, dets), AssociationError);
}

TEST_CASE("tracks confirm after n_init hits and backfill their history") {
  Tracker tracker;
  Detection d = make_detection({100, 100, 30, 80}, Descriptor::basis(0));
  FrameResult r;
  for (int f = 0; f < 3; ++f) {
    d.box.x += 2;
    r = tracker.step(f, {d});
  }
  REQUIRE(r.active_tracks.size() == 1);
  CHECK(r.active_tracks[0].backfill.size() == 3);
  CHECK(r.active_tracks[0].updated);
  d.box.x += 2;
  r = tracker.step(3, {d});
  CHECK(r.active_tracks[0].backfill.empty());
}

TEST_CASE("a tentative track is dropped on its first miss") {
  Tracker tracker;
  tracker.step(0, {make_detection({100, 100, 30, 80}, Descriptor::basis(0))});
  const FrameResult r = tracker.step(1, {});
  CHECK(r.deleted_tracks.size() == 1);
  CHECK(tracker.tracks().empty());
}

TEST_CASE("starved tracks are deleted at exactly i_max") {
  for (int i_max : {1, 2, 5, 30}) {
    CAPTURE(i_max);
    CHECK(fixture::starvation_deletion_step(i_max) == i_max);
  }
}

TEST_CASE("orthogonal appearance keeps identities through a crossing") {
  AssociationConfig cfg;
  for (std::uint64_t seed = 0; seed < 20; ++seed) CHECK(fixture::crossing_swaps(seed, cfg, true) == 0);
}
