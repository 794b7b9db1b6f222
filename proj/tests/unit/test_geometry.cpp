#include <algorithm>
#include <random>

#include "doctest.h"
#include "edgewatch/geometry.hpp"
#include "oracles.hpp"

using namespace edgewatch;

TEST_CASE("iou of hand-computed boxes") {
  const BoundingBox a{0, 0, 10, 10};
  CHECK(iou(a, a) == doctest::Approx(1.0));
  // Half overlap: intersection 50, union 150.
  CHECK(iou(a, {5, 0, 10, 10}) == doctest::Approx(1.0 / 3.0));
  CHECK(iou(a, {10, 0, 10, 10}) == 0.0);
  CHECK(iou(a, {20, 20, 5, 5}) == 0.0);
  // Containment: 4 / 100.
  CHECK(iou(a, {3, 3, 2, 2}) == doctest::Approx(0.04));
}

TEST_CASE("iou is symmetric and bounded") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 2000; ++i) {
    const auto a = oracle::random_box(rng);
    const auto b = oracle::random_box(rng);
    const double v = iou(a, b);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(v == iou(b, a));
  }
}

TEST_CASE("nms keeps the stronger of two overlapping boxes") {
  std::vector<Detection> dets(2);
  dets[0].box = {0, 0, 10, 10};
  dets[0].confidence = 0.6;
  dets[1].box = {1, 0, 10, 10};
  dets[1].confidence = 0.9;
  const auto kept = nms(dets, 0.3);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].confidence == 0.9);
}

TEST_CASE("nms threshold is strict") {
  std::vector<Detection> dets(2);
  dets[0].box = {0, 0, 10, 10};
  dets[0].confidence = 0.9;
  dets[1].box = {5, 0, 10, 10};
  dets[1].confidence = 0.8;
  // IoU is exactly 1/3: suppressed above, kept at the threshold.
  CHECK(nms(dets, 0.3).size() == 1);
  CHECK(nms(dets, 1.0 / 3.0).size() == 2);
}

TEST_CASE("nms equal confidences favour the lower index") {
  std::vector<Detection> dets(2);
  dets[0].box = {0, 0, 10, 10};
  dets[1].box = {0, 0, 10, 10};
  dets[0].confidence = dets[1].confidence = 0.5;
  dets[0].frame = 1;
  dets[1].frame = 2;
  const auto kept = nms(dets, 0.3);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].frame == 1);
}

TEST_CASE("nms matches the pairwise suppression oracle") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> count(0, 10);
  std::uniform_real_distribution<double> thr(0.0, 0.9);
  for (int trial = 0; trial < 500; ++trial) {
    const auto dets = oracle::random_detections(rng, count(rng));
    const double t = thr(rng);
    const auto got = nms(dets, t);
    const auto want = oracle::nms_reference(dets, t);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].box == dets[want[i]].box);
      CHECK(got[i].confidence == dets[want[i]].confidence);
    }
  }
}

TEST_CASE("nms output has no pair above the threshold") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const auto kept = nms(oracle::random_detections(rng, 10), 0.3);
    for (std::size_t i = 0; i < kept.size(); ++i) {
      for (std::size_t j = i + 1; j < kept.size(); ++j) CHECK(iou(kept[i].box, kept[j].box) <= 0.3);
    }
    CHECK(std::is_sorted(kept.begin(), kept.end(), [](const Detection& a, const Detection& b) {
      return a.confidence > b.confidence;
    }));
  }
}

TEST_CASE("box and observation convert both ways") {
  const BoundingBox b{10, 20, 30, 60};
  const Observation o = to_observation(b);
  CHECK(o.u == 25.0);
  CHECK(o.v == 50.0);
  CHECK(o.gamma == 0.5);
  CHECK(o.h == 60.0);
  const BoundingBox back = to_box(o);
  CHECK(back.x == doctest::Approx(b.x));
  CHECK(back.y == doctest::Approx(b.y));
  CHECK(back.w == doctest::Approx(b.w));
  CHECK(back.h == doctest::Approx(b.h));
}
