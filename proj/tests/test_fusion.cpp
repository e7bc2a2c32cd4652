#include <doctest.h>

#include <cmath>
#include <random>

#include "sts/error.hpp"
#include "sts/fusion.hpp"
#include "sts/scenes.hpp"
#include "sts/synthworld.hpp"

using namespace sts;

namespace {

DepthLogits random_logits(std::size_t bins, std::size_t h, std::size_t w, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  DepthLogits l{Tensor({bins, h, w}), 16};
  for (auto& v : l.data.values()) v = n(rng);
  return l;
}

DepthLogits zeros(std::size_t bins, std::size_t h, std::size_t w) { return {Tensor({bins, h, w}), 16}; }

double column_sum(const DepthDistribution& d, std::size_t i) {
  const std::size_t plane = d.height() * d.width();
  double s = 0.0;
  for (std::size_t k = 0; k < d.probs.dim(0); ++k) s += d.probs[k * plane + i];
  return s;
}

}  // namespace

TEST_CASE("fuse: zero stereo logits give softmax(mono) exactly") {
  const auto bins = make_sid(2.0, 58.0, 112);
  const DepthLogits mono = random_logits(112, 4, 5, 1, 3.0);
  const DepthDistribution fused = fuse(zeros(112, 4, 5), mono, bins);
  const DepthDistribution alone = to_distribution(mono, bins);
  for (std::size_t i = 0; i < fused.probs.size(); ++i) CHECK(fused.probs[i] == alone.probs[i]);
}

TEST_CASE("fuse: a one-hot stereo logit of 100 saturates") {
  const auto bins = make_ud(2.0, 58.0, 112);
  DepthLogits stereo = zeros(112, 1, 1);
  stereo.data[37] = 100.0;
  const DepthDistribution fused = fuse(stereo, zeros(112, 1, 1), bins);
  // 1 - 1e-30 is not representable in double, so check the complement instead.
  double rest = 0.0;
  for (std::size_t k = 0; k < 112; ++k)
    if (k != 37) rest += fused.probs[k];
  CHECK(rest < 1e-30);
  CHECK(fused.probs[37] == 1.0);
  CHECK(argmax_bins(fused)[0] == 37);
}

TEST_CASE("fuse: (1, 0) + (0, 1) over two bins is (0.5, 0.5)") {
  const auto bins = make_ud(2.0, 58.0, 2);
  DepthLogits stereo = zeros(2, 1, 1), mono = zeros(2, 1, 1);
  stereo.data[0] = 1.0;
  mono.data[1] = 1.0;
  const DepthDistribution fused = fuse(stereo, mono, bins);
  CHECK(fused.probs[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(fused.probs[1] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("fuse: shape mismatches are errors") {
  const auto bins = make_ud(2.0, 58.0, 4);
  try {
    fuse(zeros(4, 2, 2), zeros(4, 2, 3), bins);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kShape);
  }
  CHECK_THROWS_AS(fuse(zeros(3, 2, 2), zeros(3, 2, 2), bins), Error);
  DepthLogits other_stride = zeros(4, 2, 2);
  other_stride.stride = 4;
  CHECK_THROWS_AS(fuse(zeros(4, 2, 2), other_stride, bins), Error);
}

TEST_CASE("fuse: columns sum to one and stay non-negative, even for extreme logits") {
  const auto bins = make_sid(2.0, 58.0, 112);
  for (double scale : {1e-3, 1.0, 50.0, 1e4}) {
    const DepthDistribution d = fuse(random_logits(112, 6, 7, 2, scale), random_logits(112, 6, 7, 3, scale), bins);
    for (std::size_t i = 0; i < 42; ++i) CHECK(std::abs(column_sum(d, i) - 1.0) < 1e-6);
    for (double p : d.probs.values()) CHECK(p >= 0.0);
  }
}

TEST_CASE("fuse: per-pixel constant shifts leave the distribution unchanged") {
  const auto bins = make_sid(2.0, 58.0, 56);
  const DepthLogits stereo = random_logits(56, 3, 4, 4, 2.0);
  const DepthLogits mono = random_logits(56, 3, 4, 5, 2.0);
  DepthLogits shifted = stereo;
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-500.0, 500.0);
  for (std::size_t i = 0; i < 12; ++i) {
    const double c = u(rng);
    for (std::size_t k = 0; k < 56; ++k) shifted.data[k * 12 + i] += c;
  }
  const DepthDistribution a = fuse(stereo, mono, bins);
  const DepthDistribution b = fuse(shifted, mono, bins);
  const DepthDistribution c = fuse(mono, shifted, bins);
  for (std::size_t i = 0; i < a.probs.size(); ++i) {
    CHECK(std::abs(a.probs[i] - b.probs[i]) < 1e-9);
    CHECK(std::abs(a.probs[i] - c.probs[i]) < 1e-9);
  }
}

TEST_CASE("fuse: uniform stereo leaves the mono argmax in place") {
  const auto bins = make_sid(2.0, 58.0, 112);
  const DepthLogits mono = random_logits(112, 8, 8, 7);
  DepthLogits flat = zeros(112, 8, 8);
  for (auto& v : flat.data.values()) v = 0.73;
  const auto a = argmax_bins(fuse(flat, mono, bins));
  const auto b = argmax_bins(to_distribution(mono, bins));
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("argmax ties go to the lowest bin") {
  const auto bins = make_ud(2.0, 58.0, 5);
  const DepthDistribution d = to_distribution(zeros(5, 1, 1), bins);
  CHECK(argmax_bins(d)[0] == 0);
}

TEST_CASE("decode_depth examples") {
  const auto ud = make_ud(2.0, 58.0, 112);
  SUBCASE("one-hot at the bin centred on 20 m") {
    const DepthHypothesisSet exact(DepthMode::kUniform, 2.0, 58.0, {10.0, 20.0, 30.0});
    DepthDistribution d{Tensor({3, 1, 1}), exact, 16};
    d.probs[1] = 1.0;
    CHECK(decode_depth(d, DecodeMode::kArgmax)[0] == 20.0);
    CHECK(decode_depth(d, DecodeMode::kExpectation)[0] == 20.0);
  }
  SUBCASE("uniform over UD(2, 58, 112) has expectation 30 m") {
    const DepthDistribution d = to_distribution(zeros(112, 2, 2), ud);
    const Tensor depth = decode_depth(d, DecodeMode::kExpectation);
    for (double v : depth.values()) CHECK(v == doctest::Approx(30.0).epsilon(1e-12));
  }
  SUBCASE("(0.25, 0.75) over centres (10, 20) gives 17.5 m") {
    const DepthHypothesisSet two(DepthMode::kUniform, 5.0, 25.0, {10.0, 20.0});
    DepthDistribution d{Tensor({2, 1, 1}), two, 16};
    d.probs[0] = 0.25;
    d.probs[1] = 0.75;
    CHECK(decode_depth(d, DecodeMode::kExpectation)[0] == doctest::Approx(17.5));
    CHECK(decode_depth(d, DecodeMode::kArgmax)[0] == 20.0);
  }
}

TEST_CASE("parse_decode_mode") {
  CHECK(parse_decode_mode("argmax") == DecodeMode::kArgmax);
  CHECK(parse_decode_mode("expectation") == DecodeMode::kExpectation);
  CHECK_THROWS_AS(parse_decode_mode("median"), Error);
}

TEST_CASE("bce_depth_loss: a perfect one-hot prediction costs about nothing") {
  const auto bins = make_sid(2.0, 58.0, 112);
  Tensor gt({2, 3}, 12.0);
  const int k = bins.nearest_bin(12.0);
  DepthDistribution d{Tensor({112, 2, 3}), bins, 16};
  for (std::size_t i = 0; i < 6; ++i) d.probs[static_cast<std::size_t>(k) * 6 + i] = 1.0;
  const double loss = bce_depth_loss(d, gt);
  CHECK(loss > 0.0);
  CHECK(loss < 1e-6);
}

TEST_CASE("bce_depth_loss: uniform over 112 bins is about 0.0510") {
  const auto bins = make_sid(2.0, 58.0, 112);
  const DepthDistribution d = to_distribution(zeros(112, 3, 3), bins);
  const Tensor gt({3, 3}, 30.0);
  const double expected = -(std::log(1.0 / 112.0) + 111.0 * std::log(111.0 / 112.0)) / 112.0;
  CHECK(expected == doctest::Approx(0.0510).epsilon(1e-3));
  CHECK(bce_depth_loss(d, gt) == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("bce_depth_loss: GT outside the range is masked, an empty mask is an error") {
  const auto bins = make_sid(2.0, 58.0, 16);
  const DepthDistribution d = to_distribution(random_logits(16, 1, 3, 9), bins);
  Tensor gt({1, 3});
  gt[0] = 10.0;
  gt[1] = 70.0;   // beyond d_max
  gt[2] = 0.0;    // no data
  Tensor only({1, 3});
  only[0] = 10.0;
  CHECK(bce_depth_loss(d, gt) == bce_depth_loss(d, only));
  try {
    bce_depth_loss(d, Tensor({1, 3}));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kUndefinedMetric);
  }
}

TEST_CASE("moving lead vehicle: the mono oracle rescues cells stereo gets wrong") {
  // Directional check of the compensation property on one camera; the full-rig version is
  // an acceptance criterion.
  const SceneSpec scene = *preset_scene("moving_object", 7);
  const auto bins = make_sid(2.0, 58.0, 112);
  const RenderedFrame truth = render_camera(scene, 1, 0, 16);
  MonoQuality q;
  q.sigma_bins = 3.0;
  const DepthLogits mono = mono_oracle(truth.gt_depth, bins, q, scene.seed, 0, 16);
  // Stereo on a moving object matches at the wrong depth: model that as a confident wrong bin.
  DepthLogits stereo = zeros(112, truth.gt_depth.dim(0), truth.gt_depth.dim(1));
  const std::size_t plane = truth.gt_depth.size();
  for (std::size_t i = 0; i < plane; ++i) stereo.data[5 * plane + i] = 1.0;
  const Tensor fused = decode_depth(fuse(stereo, mono, bins), DecodeMode::kArgmax);
  const Tensor stereo_only = decode_depth(to_distribution(stereo, bins), DecodeMode::kArgmax);
  std::size_t moving = 0, better = 0;
  for (std::size_t i = 0; i < plane; ++i) {
    if (!truth.moving_mask[i]) continue;
    ++moving;
    const double gt = truth.gt_depth[i];
    better += std::abs(fused[i] - gt) <= std::abs(stereo_only[i] - gt);
  }
  REQUIRE(moving > 0);
  CHECK(better == moving);
}
