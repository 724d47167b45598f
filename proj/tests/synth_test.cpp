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

#include "annoqa/synth.hpp"

#include <cmath>
#include <cstdint>
#include <numeric>

#include <gtest/gtest.h>

namespace annoqa {
namespace {

// Tiny frames keep long noise-model sweeps cheap.
ScenarioConfig tiny(int frames, std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.frames = frames;
  cfg.width = 48;
  cfg.height = 40;
  cfg.object_w = 10;
  cfg.object_h = 8;
  cfg.path.amplitude = {4.0, 3.0};
  cfg.path.period = 50.0;
  cfg.seed = seed;
  return cfg;
}

std::uint64_t fnv1a(std::uint64_t h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xFF;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t scenario_digest(const GroundTruthScenario& sc) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const GrayImage& f : sc.frames)
    for (double v : f.pixels()) h = fnv1a(h, static_cast<std::uint64_t>(std::lround(v * 65535.0)));
  for (const FrameAnnotation& a : sc.noisy) {
    h = fnv1a(h, static_cast<std::uint64_t>(std::llround(a.box->x * 1024.0)));
    h = fnv1a(h, static_cast<std::uint64_t>(std::llround(a.box->y * 1024.0)));
  }
  return h;
}

TEST(Generate, StaticCameraIsIdentity) {
  const GroundTruthScenario sc = generate(tiny(20, 1));
  for (const Homography& h : sc.true_camera) EXPECT_EQ(h.matrix(), Eigen::Matrix3d::Identity());
}

TEST(Generate, NoNoiseMeansTruthfulAnnotation) {
  ScenarioConfig cfg = tiny(30, 2);
  cfg.camera.translation_sigma = 1.0;
  const GroundTruthScenario sc = generate(cfg);
  ASSERT_EQ(sc.noisy.size(), 30u);
  EXPECT_TRUE(sc.outlier_frames.empty());
  for (std::size_t i = 0; i < sc.noisy.size(); ++i) {
    ASSERT_TRUE(sc.noisy[i].box.has_value());
    EXPECT_EQ(*sc.noisy[i].box, sc.true_boxes[i]);
  }
}

TEST(Generate, SequencesShareLengthAndNoisyBoxesKeepSize) {
  ScenarioConfig cfg = tiny(40, 3);
  cfg.jitter_sigma = 2.0;
  cfg.outlier_prob = 0.2;
  cfg.outlier_range = {5.0, 10.0};
  const GroundTruthScenario sc = generate(cfg);
  EXPECT_EQ(sc.frames.size(), 40u);
  EXPECT_EQ(sc.true_camera.size(), 40u);
  EXPECT_EQ(sc.true_centers.size(), 40u);
  EXPECT_EQ(sc.world_centers.size(), 40u);
  EXPECT_EQ(sc.true_boxes.size(), 40u);
  EXPECT_EQ(sc.noisy.size(), 40u);
  for (std::size_t i = 0; i < 40; ++i) {
    EXPECT_DOUBLE_EQ(sc.noisy[i].box->w, sc.true_boxes[i].w);
    EXPECT_DOUBLE_EQ(sc.noisy[i].box->h, sc.true_boxes[i].h);
  }
}

TEST(Generate, OutlierOffsetsLieInRange) {
  ScenarioConfig cfg = tiny(200, 4);
  cfg.outlier_prob = 0.3;
  cfg.outlier_range = {5.0, 9.0};
  const GroundTruthScenario sc = generate(cfg);
  std::vector<bool> injected(200, false);
  for (std::size_t i : sc.outlier_frames) injected[i] = true;
  for (std::size_t i = 0; i < 200; ++i) {
    const double d = distance(sc.noisy[i].box->center(), sc.true_centers[i]);
    if (injected[i]) {
      EXPECT_GE(d, 5.0 - 1e-9);
      EXPECT_LE(d, 9.0 + 1e-9);
    } else {
      EXPECT_LT(d, 1e-12);
    }
  }
}

TEST(Generate, OutlierCountMatchesBernoulliRate) {
  // 400 Bernoulli(0.05) draws: mean 20, sd sqrt(400 * 0.05 * 0.95) ~ 4.36.
  const double sd = std::sqrt(400.0 * 0.05 * 0.95);
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    ScenarioConfig cfg = tiny(400, seed);
    cfg.outlier_prob = 0.05;
    cfg.outlier_range = {50.0, 150.0};
    const GroundTruthScenario sc = generate(cfg);
    const double count = static_cast<double>(sc.outlier_frames.size());
    EXPECT_NEAR(count, 20.0, 3.0 * sd) << "seed " << seed;
    EXPECT_TRUE(std::is_sorted(sc.outlier_frames.begin(), sc.outlier_frames.end()));
    total += count;
  }
  // Mean over 50 seeds has sd ~ 0.62.
  EXPECT_NEAR(total / 50.0, 20.0, 3.0 * sd / std::sqrt(50.0));
}

TEST(Generate, BitDeterministic) {
  ScenarioConfig cfg = tiny(12, 5);
  cfg.camera.translation_sigma = 1.5;
  cfg.camera.rotation_sigma_deg = 0.3;
  cfg.jitter_sigma = 1.0;
  cfg.outlier_prob = 0.1;
  cfg.blur_frames[4] = 1.5;
  const GroundTruthScenario a = generate(cfg);
  const GroundTruthScenario b = generate(cfg);
  for (std::size_t i = 0; i < a.frames.size(); ++i) {
    EXPECT_EQ(a.frames[i], b.frames[i]);
    EXPECT_EQ(a.true_camera[i].row_major(), b.true_camera[i].row_major());
    EXPECT_EQ(*a.noisy[i].box, *b.noisy[i].box);
  }
  cfg.seed = 6;
  EXPECT_NE(generate(cfg).frames[0], a.frames[0]);
}

TEST(Generate, GoldenDigest) {
  ScenarioConfig cfg = tiny(6, 20200501);
  cfg.camera.translation_sigma = 1.0;
  cfg.camera.rotation_sigma_deg = 0.2;
  cfg.jitter_sigma = 1.0;
  cfg.outlier_prob = 0.2;
  cfg.outlier_range = {3.0, 6.0};
  cfg.blur_frames[2] = 2.0;
  EXPECT_EQ(scenario_digest(generate(cfg)), 0xBE0307FD989C7D2DULL);
}

TEST(Generate, CameraChainIsConsistent) {
  ScenarioConfig cfg = tiny(50, 7);
  cfg.camera.translation_sigma = 0.5;
  cfg.camera.rotation_sigma_deg = 0.2;
  cfg.camera.scale_sigma = 0.002;
  const GroundTruthScenario sc = generate(cfg);
  Homography chain = Homography::identity();
  for (std::size_t i = 1; i < sc.true_camera.size(); ++i) {
    chain = compose(chain, sc.camera_steps[i]);
    EXPECT_LT(corner_error(chain, sc.true_camera[i], cfg.width, cfg.height), 1e-9);
  }
}

TEST(Generate, TrueCentersAreWorldPathSeenThroughCamera) {
  ScenarioConfig cfg = tiny(30, 8);
  cfg.camera.translation_sigma = 0.5;
  const GroundTruthScenario sc = generate(cfg);
  for (std::size_t i = 0; i < 30; ++i) {
    const Point2 w = apply(sc.true_camera[i], sc.true_centers[i]);
    EXPECT_NEAR(w.x, sc.world_centers[i].x, 1e-9);
    EXPECT_NEAR(w.y, sc.world_centers[i].y, 1e-9);
    EXPECT_EQ(sc.true_boxes[i].center().x, sc.true_centers[i].x);
  }
}

TEST(Generate, ObjectStaysMostlyInside) {
  ScenarioConfig cfg = tiny(120, 9);
  cfg.camera.translation_sigma = 1.5;
  const GroundTruthScenario sc = generate(cfg);
  for (const BBox& b : sc.true_boxes) {
    const double ix = std::max(0.0, std::min(b.x + b.w, 48.0) - std::max(b.x, 0.0));
    const double iy = std::max(0.0, std::min(b.y + b.h, 40.0) - std::max(b.y, 0.0));
    EXPECT_GE(ix * iy / (b.w * b.h), 0.7);
  }
}

TEST(Generate, RendersCameraMotionAndObject) {
  // A pure translation step shifts the background by the same amount.
  ScenarioConfig cfg = tiny(2, 10);
  cfg.path.amplitude = {0.0, 0.0};
  cfg.camera.translation_sigma = 3.0;
  const GroundTruthScenario sc = generate(cfg);
  const Point2 t{sc.true_camera[1].matrix()(0, 2), sc.true_camera[1].matrix()(1, 2)};
  int checked = 0;
  for (int y = 2; y < 38; ++y) {
    for (int x = 2; x < 46; ++x) {
      const double sx = x + t.x, sy = y + t.y;
      if (sx < 2 || sy < 2 || sx > 45 || sy > 37) continue;
      const Point2 c = sc.world_centers[0];
      if (std::abs(sx - c.x) < 8 && std::abs(sy - c.y) < 7) continue;
      EXPECT_NEAR(sc.frames[1].at(x, y), detail::texture(sx, sy, cfg.texture_scale, detail::splitmix64(cfg.seed ^ 0xB6), 1.8),
                  1e-12);
      ++checked;
    }
  }
  EXPECT_GT(checked, 100);
  // The object core is dark-edged and textured, distinct from the background.
  const Point2 c = sc.true_centers[0];
  EXPECT_NEAR(sc.frames[0].at(static_cast<int>(c.x - 4.5), static_cast<int>(c.y)), 0.05, 0.2);
}

TEST(Generate, PixelsInUnitRange) {
  const GroundTruthScenario sc = generate(tiny(3, 11));
  for (const GrayImage& f : sc.frames) {
    for (double v : f.pixels()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Generate, PathKinds) {
  ScenarioConfig cfg = tiny(11, 12);
  cfg.path.kind = PathKind::kLine;
  cfg.path.velocity = {0.5, -0.25};
  GroundTruthScenario sc = generate(cfg);
  EXPECT_NEAR(sc.world_centers[10].x - sc.world_centers[0].x, 5.0, 1e-12);
  EXPECT_NEAR(sc.world_centers[10].y - sc.world_centers[0].y, -2.5, 1e-12);

  cfg.path.kind = PathKind::kSpline;
  cfg.path.knots = {{0, 20, 20}, {5, 25, 18}, {10, 22, 22}};
  sc = generate(cfg);
  EXPECT_NEAR(sc.world_centers[5].x, 25.0, 1e-12);
  EXPECT_NEAR(sc.world_centers[10].y, 22.0, 1e-12);

  cfg.path.knots.clear();
  cfg.path.knot_sigma = 2.0;
  sc = generate(cfg);
  EXPECT_FALSE(sc.config.path.knots.empty());
  EXPECT_EQ(parse_path_kind(to_string(PathKind::kSpline)), PathKind::kSpline);
  EXPECT_THROW(parse_path_kind("zigzag"), Error);
}

TEST(Generate, InvalidConfigs) {
  auto bad = [](auto mutate) {
    ScenarioConfig cfg = tiny(5, 0);
    mutate(cfg);
    EXPECT_THROW(generate(cfg), Error);
  };
  bad([](ScenarioConfig& c) { c.frames = 1; });
  bad([](ScenarioConfig& c) { c.outlier_prob = 1.5; });
  bad([](ScenarioConfig& c) { c.jitter_sigma = -1.0; });
  bad([](ScenarioConfig& c) { c.camera.rotation_sigma_deg = -0.1; });
  bad([](ScenarioConfig& c) { c.outlier_range = {10.0, 5.0}; });
  bad([](ScenarioConfig& c) { c.blur_frames[5] = 1.0; });
  bad([](ScenarioConfig& c) { c.width = 8; });
}

TEST(Evaluate, Examples) {
  ScenarioConfig cfg = tiny(40, 13);
  cfg.jitter_sigma = 2.0;
  cfg.outlier_prob = 0.2;
  cfg.outlier_range = {8.0, 12.0};
  const GroundTruthScenario sc = generate(cfg);

  Trajectory truth = make_trajectory(sc.true_boxes);
  PipelineOutputs exact;
  exact.corrected = &truth;
  const ScenarioMetrics m0 = evaluate(sc, exact);
  EXPECT_EQ(m0.corrected_rmse, 0.0);
  EXPECT_GT(m0.noisy_rmse, 0.0);
  EXPECT_EQ(m0.improvement_ratio, 0.0);

  PipelineOutputs same;
  same.corrected = &sc.noisy;
  EXPECT_DOUBLE_EQ(evaluate(sc, same).improvement_ratio, 1.0);

  std::vector<bool> flags(40, false);
  for (std::size_t i : sc.outlier_frames) flags[i] = true;
  ASSERT_FALSE(sc.outlier_frames.empty());
  flags[sc.outlier_frames.front()] = false;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < 40 && fp < 2; ++i) {
    if (!flags[i] && std::find(sc.outlier_frames.begin(), sc.outlier_frames.end(), i) == sc.outlier_frames.end()) {
      flags[i] = true;
      ++fp;
    }
  }
  PipelineOutputs flagged;
  flagged.flagged = &flags;
  const ScenarioMetrics mf = evaluate(sc, flagged);
  const double k = static_cast<double>(sc.outlier_frames.size());
  EXPECT_EQ(mf.false_negatives, 1u);
  EXPECT_EQ(mf.false_positives, 2u);
  EXPECT_DOUBLE_EQ(mf.recall, (k - 1.0) / k);
  EXPECT_DOUBLE_EQ(mf.precision, (k - 1.0) / (k + 1.0));

  std::vector<bool> short_flags(3, false);
  PipelineOutputs bad;
  bad.flagged = &short_flags;
  EXPECT_THROW(evaluate(sc, bad), Error);
}

TEST(Evaluate, CornerErrorOfTrueCameraIsZero) {
  ScenarioConfig cfg = tiny(10, 14);
  cfg.camera.translation_sigma = 1.0;
  const GroundTruthScenario sc = generate(cfg);
  AlignmentResult a;
  for (std::size_t i = 0; i < 10; ++i) {
    FrameAlignment f;
    f.frame_index = i;
    f.method = i ? AlignMethod::kKeypoint : AlignMethod::kFirst;
    f.cumulative = sc.true_camera[i];
    a.frames.push_back(f);
  }
  a.frames[7].method = AlignMethod::kFailed;
  PipelineOutputs out;
  out.alignment = &a;
  const ScenarioMetrics m = evaluate(sc, out);
  ASSERT_EQ(m.corner_error.size(), 10u);
  EXPECT_TRUE(std::isnan(m.corner_error[7]));
  EXPECT_LT(m.final_corner_error, 1e-9);
}

TEST(ReferenceScenario, MatchesDocumentedParameters) {
  const ScenarioConfig cfg = reference_scenario();
  EXPECT_EQ(cfg.frames, 400);
  EXPECT_EQ(cfg.width, 320);
  EXPECT_EQ(cfg.height, 240);
  EXPECT_EQ(cfg.jitter_sigma, 4.0);
  EXPECT_EQ(cfg.outlier_prob, 0.05);
  EXPECT_EQ(cfg.outlier_range.first, 50.0);
  EXPECT_EQ(cfg.outlier_range.second, 150.0);
  EXPECT_EQ(cfg.camera.translation_sigma, 3.0);
  EXPECT_EQ(cfg.blur_frames.size(), 6u);
  EXPECT_NO_THROW(cfg.validate());
}

}  // namespace
}  // namespace annoqa
