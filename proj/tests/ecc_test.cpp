/*
 * Copyright 2026 The annoqa Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "annoqa/ecc.hpp"

#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace annoqa {
namespace {

using testing::image_from;
using testing::smooth_texture;
using testing::uniform;

const BBox kRegion{28, 28, 72, 72};

Point2 recovered_shift(const EccResult& r) {
  const Point2 c = kRegion.center();
  const Point2 q = apply(r.warp, c);
  return {q.x - c.x, q.y - c.y};
}

GrayImage bilinear_shift(const GrayImage& img, double dx, double dy) {
  return image_from(img.width(), img.height(), [&](double x, double y) { return sample_bilinear(img, x - dx, y - dy); });
}

GrayImage affine_intensity(const GrayImage& img, double gain, double bias) {
  std::vector<double> px(img.pixels().begin(), img.pixels().end());
  for (double& v : px) v = gain * v + bias;
  return GrayImage(img.width(), img.height(), std::move(px));
}

TEST(Correlation, InvariantToGainAndBias) {
  std::mt19937_64 rng(3);
  std::vector<double> a(500), b(500);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = uniform(rng);
    b[i] = 0.5 * a[i] + 0.5 * uniform(rng);
  }
  const double rho = correlation_coefficient(a, b);
  for (double gain : {0.1, 0.8, 3.0}) {
    for (double bias : {-0.3, 0.0, 0.1}) {
      std::vector<double> c(b);
      for (double& v : c) v = gain * v + bias;
      EXPECT_NEAR(correlation_coefficient(a, c), rho, 1e-6);
    }
  }
  EXPECT_NEAR(correlation_coefficient(a, a), 1.0, 1e-12);
}

TEST(Ecc, SelfAlignment) {
  const GrayImage img = smooth_texture(128, 128, 1);
  const EccResult r = ecc_align(img, img, kRegion, Homography::identity(), EccConfig{});
  EXPECT_GE(r.rho, 0.999);
  EXPECT_LT(corner_error(r.warp, Homography::identity(), 128, 128), 1e-3);
}

TEST(Ecc, BilinearShiftTranslationModel) {
  const GrayImage templ = smooth_texture(128, 128, 2);
  const GrayImage target = bilinear_shift(templ, 4.0, -2.0);
  EccConfig cfg;
  cfg.model = WarpModel::kTranslation;
  const EccResult r = ecc_align(templ, target, kRegion, Homography::identity(), cfg);
  const Point2 s = recovered_shift(r);
  EXPECT_NEAR(s.x, 4.0, 0.25);
  EXPECT_NEAR(s.y, -2.0, 0.25);
  EXPECT_GE(r.rho, 0.99);

  const EccResult g = ecc_align(templ, affine_intensity(target, 0.8, 0.1), kRegion, Homography::identity(), cfg);
  const Point2 t = recovered_shift(g);
  EXPECT_NEAR(t.x, 4.0, 0.25);
  EXPECT_NEAR(t.y, -2.0, 0.25);
  EXPECT_NEAR(g.rho, r.rho, 1e-3);
}

TEST(Ecc, RhoTraceIsMonotone) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const GrayImage templ = smooth_texture(128, 128, seed);
    const GrayImage target = smooth_texture(128, 128, seed, 6.0, 3.5, -5.25);
    for (WarpModel m : {WarpModel::kTranslation, WarpModel::kAffine, WarpModel::kHomography}) {
      EccConfig cfg;
      cfg.model = m;
      EccResult r;
      try {
        r = ecc_align(templ, target, kRegion, Homography::identity(), cfg);
      } catch (const Error& e) {
        // A free homography from identity is allowed to fail; it must say so.
        EXPECT_EQ(m, WarpModel::kHomography);
        EXPECT_EQ(e.code(), ErrorCode::kNonConvergence);
        continue;
      }
      for (const auto& level : r.rho_trace) {
        for (std::size_t k = 1; k < level.size(); ++k) EXPECT_GE(level[k], level[k - 1] - 1e-6);
      }
    }
  }
}

TEST(Ecc, AffineRecoversRotation) {
  const double a = 2.0 * std::numbers::pi / 180.0;
  const Homography truth = Homography::similarity(a, 1.01, 2.0, -1.5, kRegion.center());
  const GrayImage templ = smooth_texture(128, 128, 8);
  // target(x) = templ(truth^-1 x)
  const Homography inv = invert(truth);
  const GrayImage target = image_from(128, 128, [&](double x, double y) {
    const Point2 p = apply(inv, {x, y});
    return detail::texture(p.x, p.y, 6.0, 8, 1.8);
  });
  const EccResult r = ecc_align(templ, target, kRegion, Homography::identity(), EccConfig{});
  for (Point2 c : {Point2{28, 28}, Point2{100, 28}, Point2{100, 100}, Point2{28, 100}}) {
    EXPECT_LT(distance(apply(r.warp, c), apply(truth, c)), 0.1);
  }
}

TEST(Ecc, InitIsUsed) {
  const GrayImage templ = smooth_texture(128, 128, 4);
  const GrayImage target = smooth_texture(128, 128, 4, 6.0, 14.0, 0.0);
  EccConfig cfg;
  cfg.model = WarpModel::kTranslation;
  cfg.pyramid_levels = 1;
  const EccResult r = ecc_align(templ, target, kRegion, Homography::translation(13.0, 0.5), cfg);
  const Point2 s = recovered_shift(r);
  EXPECT_NEAR(s.x, 14.0, 0.1);
  EXPECT_NEAR(s.y, 0.0, 0.1);
}

// A blurred target nearly 10 px away: plain gradient ascent from identity
// settles on a wrong peak, the coarse shift search does not.
TEST(Ecc, CoarseSearchWidensCaptureRange) {
  const double dx = -7.75, dy = -6.07;
  const GrayImage templ = smooth_texture(128, 128, 525, 12.0);
  const GrayImage target = gaussian_blur(smooth_texture(128, 128, 525, 12.0, dx, dy), 2.0);
  const EccResult r = ecc_align(templ, target, kRegion, Homography::identity(), EccConfig{});
  const Point2 s = recovered_shift(r);
  EXPECT_NEAR(s.x, dx, 0.1);
  EXPECT_NEAR(s.y, dy, 0.1);

  EccConfig plain;
  plain.coarse_search = 0.0;
  plain.min_rho = -1.0;
  const Point2 p = recovered_shift(ecc_align(templ, target, kRegion, Homography::identity(), plain));
  EXPECT_GT(std::hypot(p.x - dx, p.y - dy), 1.0);
}

TEST(Ecc, Errors) {
  const GrayImage img = smooth_texture(64, 64, 1);
  auto code = [&](const GrayImage& t, const BBox& region) {
    try {
      ecc_align(t, img, region, Homography::identity(), EccConfig{});
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kIo;
  };
  EXPECT_EQ(code(img, {0, 0, 7, 7}), ErrorCode::kRegionTooSmall);
  EXPECT_EQ(code(img, {60, 0, 10, 10}), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code(GrayImage(64, 64, 0.3), {8, 8, 32, 32}), ErrorCode::kDegenerateTemplate);
  // Uncorrelated target and a strict acceptance threshold.
  EccConfig strict;
  strict.min_rho = 0.99;
  strict.max_iterations = 3;
  EXPECT_THROW(ecc_align(img, testing::random_image(64, 64, 9), {8, 8, 40, 40}, Homography::identity(), strict), Error);
}

TEST(EccDetail, LevelMappingRoundTrip) {
  for (int level = 0; level < 4; ++level) {
    const Eigen::Matrix3d d = detail::level_to_base(level);
    const double s = std::ldexp(1.0, level);
    // Pixel 0 at level l covers base pixels [0, s).
    EXPECT_DOUBLE_EQ(d(0, 2), 0.5 * (s - 1.0));
    EXPECT_DOUBLE_EQ(d(0, 0), s);
  }
}

TEST(EccDetail, ParamRoundTrip) {
  Eigen::Matrix3d w;
  w << 1.01, 0.02, 3, -0.01, 0.99, -2, 1e-4, -2e-4, 1;
  EXPECT_TRUE(detail::params_to_warp(detail::warp_to_params(w, WarpModel::kHomography), WarpModel::kHomography)
                  .isApprox(w));
  const Eigen::Matrix3d t = detail::project_to_model(w, WarpModel::kTranslation, {50, 50});
  const Point2 c = apply(Homography(w), {50, 50});
  EXPECT_NEAR(t(0, 2), c.x - 50, 1e-12);
  EXPECT_NEAR(t(1, 2), c.y - 50, 1e-12);
}

TEST(WarpModelNames, RoundTrip) {
  for (WarpModel m : {WarpModel::kTranslation, WarpModel::kAffine, WarpModel::kHomography}) {
    EXPECT_EQ(parse_warp_model(to_string(m)), m);
  }
  EXPECT_THROW(parse_warp_model("euclid"), Error);
}

}  // namespace
}  // namespace annoqa
