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

#include "annoqa/annotate.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace annoqa {
namespace {

using testing::uniform;

AlignmentResult identity_alignment(std::size_t n, int w = 320, int h = 240) {
  AlignmentResult a;
  a.width = w;
  a.height = h;
  for (std::size_t i = 0; i < n; ++i) {
    FrameAlignment f;
    f.frame_index = i;
    f.method = i == 0 ? AlignMethod::kFirst : AlignMethod::kKeypoint;
    a.frames.push_back(f);
  }
  return a;
}

AlignmentResult panning_alignment(std::size_t n) {
  AlignmentResult a = identity_alignment(n);
  for (std::size_t i = 1; i < n; ++i) {
    a.frames[i].pairwise = Homography::similarity(0.002 * std::sin(0.1 * i), 1.0 + 1e-4 * std::cos(0.2 * i),
                                                  -3.0, 1.0 + 0.5 * std::sin(0.05 * i), {160, 120});
    a.frames[i].cumulative = compose(a.frames[i - 1].cumulative, a.frames[i].pairwise);
  }
  return a;
}

Trajectory boxes_at(const std::vector<Point2>& centers, double w = 40, double h = 30) {
  Trajectory t;
  for (Point2 c : centers) t.push_back({BBox::centered(c, w, h), false});
  return t;
}

TEST(Reproject, IdentityAlignment) {
  CanonicalTrajectory c{Point2{1, 2}, std::nullopt, Point2{5, 6}};
  const CenterTrack r = reproject(c, identity_alignment(3));
  EXPECT_EQ(*r[0], (Point2{1, 2}));
  EXPECT_FALSE(r[1].has_value());
  EXPECT_EQ(*r[2], (Point2{5, 6}));
}

TEST(Reproject, RoundTripThroughCanonical) {
  const AlignmentResult a = panning_alignment(60);
  std::mt19937_64 rng(3);
  std::vector<Point2> centers;
  for (int i = 0; i < 60; ++i) centers.push_back({uniform(rng, 20, 300), uniform(rng, 20, 220)});
  Trajectory traj = boxes_at(centers);
  traj[7].box.reset();
  const CenterTrack back = reproject(to_canonical(a, traj), a);
  for (int i = 0; i < 60; ++i) {
    if (i == 7) {
      EXPECT_FALSE(back[i].has_value());
      continue;
    }
    EXPECT_LT(distance(*back[i], centers[i]), 1e-6);
  }
}

TEST(Reproject, FailedFramesAreAbsent) {
  AlignmentResult a = identity_alignment(4);
  a.frames[3].method = AlignMethod::kFailed;
  a.failed_at = 3;
  const CenterTrack r = reproject(CanonicalTrajectory(4, Point2{1, 1}), a);
  EXPECT_TRUE(r[2].has_value());
  EXPECT_FALSE(r[3].has_value());
  EXPECT_THROW(reproject(CanonicalTrajectory(3), a), Error);
}

TEST(Distances, Examples) {
  Trajectory traj = boxes_at({{60, 80}, {5, 5}, {0, 0}});
  traj[2].box.reset();
  const CenterTrack centers{Point2{0, 0}, Point2{5, 5}, Point2{1, 1}};
  const Distances d = distances(traj, centers);
  EXPECT_DOUBLE_EQ(*d[0], 100.0);
  EXPECT_DOUBLE_EQ(*d[1], 0.0);
  EXPECT_FALSE(d[2].has_value());
  EXPECT_THROW(distances(traj, CenterTrack(2)), Error);
}

TEST(FlagOutliers, StrictInequality) {
  const Distances d{100.0, 100.1, std::nullopt, 99.9};
  const OutlierReport r = flag_outliers(d);
  EXPECT_DOUBLE_EQ(r.threshold, 100.0);
  EXPECT_EQ(r.flagged, (std::vector<bool>{false, true, false, false}));
  EXPECT_EQ(r.evaluated, 3u);
  EXPECT_EQ(r.flagged_count, 1u);
}

TEST(FlagOutliers, AllAbsent) {
  const OutlierReport r = flag_outliers(Distances(5), 10.0);
  EXPECT_EQ(r.flagged_count, 0u);
  EXPECT_EQ(r.evaluated, 0u);
}

TEST(FlagOutliers, NonPositiveThreshold) {
  for (double t : {0.0, -1.0, std::numeric_limits<double>::quiet_NaN()}) {
    EXPECT_THROW(flag_outliers(Distances{1.0}, t), Error);
    EXPECT_THROW(correct(boxes_at({{1, 1}}), CenterTrack{Point2{1, 1}}, t), Error);
  }
}

TEST(SuccessRate, DirectCount) {
  const Distances d{5.0, 15.0, 25.0, std::nullopt};
  const std::vector<double> grid{10, 20, 30};
  const auto curve = success_rate_curve(d, grid);
  ASSERT_EQ(curve.size(), 3u);
  EXPECT_DOUBLE_EQ(curve[0].value, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(curve[1].value, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(curve[2].value, 1.0);
}

TEST(SuccessRate, BoundaryIsSuccessOnlyWhenStrictlyBelow) {
  const Distances d{10.0};
  const std::vector<double> grid{10.0, std::nextafter(10.0, 11.0)};
  const auto curve = success_rate_curve(d, grid);
  EXPECT_DOUBLE_EQ(curve[0].value, 0.0);
  EXPECT_DOUBLE_EQ(curve[1].value, 1.0);
}

TEST(SuccessRate, PerfectAgreement) {
  const Distances d(10, 0.0);
  const std::vector<double> grid{0.001, 1, 50};
  for (const auto& p : success_rate_curve(d, grid)) EXPECT_DOUBLE_EQ(p.value, 1.0);
}

TEST(SuccessRate, Errors) {
  const std::vector<double> empty;
  const std::vector<double> grid{1.0};
  EXPECT_THROW(success_rate_curve(Distances{1.0}, empty), Error);
  try {
    success_rate_curve(Distances(3), grid);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoEvaluableFrames);
  }
}

TEST(Correct, NothingExceeds) {
  const Trajectory traj = boxes_at({{10, 10}, {20, 20}});
  const CorrectionResult r = correct(traj, CenterTrack{Point2{11, 10}, Point2{20, 21}}, 5.0);
  EXPECT_EQ(r.corrected, traj);
  EXPECT_EQ(r.replaced, 0u);
  EXPECT_DOUBLE_EQ(r.replaced_fraction, 0.0);
}

TEST(Correct, SingleOutlierAmongHundred) {
  std::vector<Point2> centers;
  for (int i = 0; i < 100; ++i) centers.push_back({100.0 + i, 120.0});
  Trajectory traj = boxes_at(centers, 36, 22);
  traj[42].box = BBox::centered({142.0 + 200.0, 120.0}, 36, 22);
  CenterTrack smooth;
  for (Point2 c : centers) smooth.push_back(c);
  const CorrectionResult r = correct(traj, smooth, 100.0);
  EXPECT_EQ(r.replaced, 1u);
  EXPECT_TRUE(r.replaced_mask[42]);
  EXPECT_DOUBLE_EQ(r.replaced_fraction, 0.01);
  EXPECT_EQ(r.corrected[42].box->center(), (Point2{142, 120}));
  EXPECT_DOUBLE_EQ(r.corrected[42].box->w, 36);
  EXPECT_DOUBLE_EQ(r.corrected[42].box->h, 22);
}

TEST(Correct, DistanceEqualToThresholdIsKept) {
  const Trajectory traj = boxes_at({{0, 0}});
  const CorrectionResult r = correct(traj, CenterTrack{Point2{3, 4}}, 5.0);
  EXPECT_FALSE(r.replaced_mask[0]);
  const CorrectionResult s = correct(traj, CenterTrack{Point2{3, 4}}, std::nextafter(5.0, 0.0));
  EXPECT_TRUE(s.replaced_mask[0]);
}

// Exhaustive small cases over a grid of distances and thresholds.
TEST(QaRules, ExhaustiveSmallCases) {
  const std::vector<double> values{0.0, 1.0, 2.0, 2.5, 3.0, 5.0};
  const std::vector<double> taus{0.5, 1.0, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0};
  // Every assignment of 3 frames to one of the values or absent.
  const std::size_t options = values.size() + 1;
  for (std::size_t code = 0; code < options * options * options; ++code) {
    Distances d(3);
    Trajectory traj;
    CenterTrack centers;
    std::size_t c = code;
    for (int k = 0; k < 3; ++k) {
      const std::size_t pick = c % options;
      c /= options;
      if (pick < values.size()) {
        d[k] = values[pick];
        traj.push_back({BBox::centered({values[pick], 0.0}, 4, 4), false});
      } else {
        traj.push_back({std::nullopt, false});
      }
      centers.push_back(Point2{0.0, 0.0});
    }
    const bool any = d[0] || d[1] || d[2];
    double prev_rate = -1.0, prev_fraction = 2.0;
    for (double tau : taus) {
      const OutlierReport rep = flag_outliers(d, tau);
      const CorrectionResult cr = correct(traj, centers, tau);
      std::size_t evaluated = 0, below = 0;
      for (int k = 0; k < 3; ++k) {
        EXPECT_EQ(rep.flagged[k], d[k] && *d[k] > tau);
        EXPECT_EQ(rep.flagged[k], cr.replaced_mask[k]);
        if (traj[k].box) {
          EXPECT_EQ(cr.corrected[k].box->w, traj[k].box->w);
          EXPECT_EQ(cr.corrected[k].box->h, traj[k].box->h);
        }
        if (d[k]) {
          ++evaluated;
          below += *d[k] < tau;
        }
      }
      if (!any) continue;
      const std::vector<double> grid{tau};
      const double rate = success_rate_curve(d, grid)[0].value;
      EXPECT_DOUBLE_EQ(rate, static_cast<double>(below) / static_cast<double>(evaluated));
      EXPECT_GE(rate, prev_rate);
      EXPECT_LE(cr.replaced_fraction, prev_fraction);
      prev_rate = rate;
      prev_fraction = cr.replaced_fraction;
    }
  }
}

TEST(QaRules, RandomizedMonotonicity) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    Distances d(80);
    Trajectory traj;
    CenterTrack centers;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double v = std::floor(uniform(rng, 0, 40));
      if (uniform(rng) < 0.1) {
        traj.push_back({std::nullopt, false});
      } else {
        d[i] = v;
        traj.push_back({BBox::centered({v, 0}, 10, 10), false});
      }
      centers.push_back(Point2{0, 0});
    }
    std::vector<double> grid;
    for (double t = 0.5; t < 45; t += 0.5) grid.push_back(t);
    const auto curve = success_rate_curve(d, grid);
    for (std::size_t k = 1; k < curve.size(); ++k) EXPECT_GE(curve[k].value, curve[k - 1].value);
    const auto rows = replaced_stats(traj, centers, grid);
    for (std::size_t k = 1; k < rows.size(); ++k) EXPECT_LE(rows[k].fraction, rows[k - 1].fraction);
  }
}

TEST(ReplacedStats, InfiniteThresholdReplacesNothing) {
  const Trajectory traj = boxes_at({{0, 0}, {100, 100}});
  const std::vector<double> grid{30, 20, 10, 5, std::numeric_limits<double>::infinity()};
  const auto rows = replaced_stats(traj, CenterTrack{Point2{0, 7}, Point2{100, 125}}, grid);
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_DOUBLE_EQ(rows[0].fraction, 0.0);
  EXPECT_DOUBLE_EQ(rows[1].fraction, 0.5);
  EXPECT_DOUBLE_EQ(rows[3].fraction, 1.0);
  EXPECT_DOUBLE_EQ(rows[4].fraction, 0.0);
}

TEST(KeepHalfInside, Properties) {
  std::mt19937_64 rng(5);
  const FrameBounds bounds{320, 240};
  auto inside = [&](const BBox& b) {
    const double ix = std::max(0.0, std::min(b.x + b.w, bounds.width) - std::max(b.x, 0.0));
    const double iy = std::max(0.0, std::min(b.y + b.h, bounds.height) - std::max(b.y, 0.0));
    return ix * iy / (b.w * b.h);
  };
  for (int trial = 0; trial < 2000; ++trial) {
    const BBox b{uniform(rng, -300, 600), uniform(rng, -300, 500), uniform(rng, 5, 200), uniform(rng, 5, 200)};
    const BBox k = keep_half_inside(b, bounds);
    EXPECT_DOUBLE_EQ(k.w, b.w);
    EXPECT_DOUBLE_EQ(k.h, b.h);
    EXPECT_GE(inside(k), 0.5 - 1e-9);
    if (inside(b) >= 0.5) {
      EXPECT_EQ(k, b);
    }
  }
}

TEST(Correct, BoundsKeepReplacedBoxesVisible) {
  const Trajectory traj = boxes_at({{100, 100}});
  const CorrectionResult free = correct(traj, CenterTrack{Point2{-30, 100}}, 10.0);
  EXPECT_DOUBLE_EQ(free.corrected[0].box->center().x, -30.0);
  const CorrectionResult kept = correct(traj, CenterTrack{Point2{-30, 100}}, 10.0, FrameBounds{320, 240});
  EXPECT_DOUBLE_EQ(kept.corrected[0].box->x, -20.0);  // exactly half of the 40 px width inside
  EXPECT_DOUBLE_EQ(kept.corrected[0].box->w, 40.0);
}

TEST(Extrapolate, FullyAnnotatedIsUnchanged) {
  std::vector<Point2> c;
  for (int i = 0; i < 30; ++i) c.push_back({50.0 + i, 60.0});
  const Trajectory traj = boxes_at(c);
  EXPECT_EQ(extrapolate_missing(traj, identity_alignment(30), SmootherSpec{}), traj);
}

TEST(Extrapolate, LinearMotionEveryFifthFrame) {
  const std::size_t n = 101;
  Trajectory traj(n);
  for (std::size_t i = 0; i < n; i += 5) {
    traj[i].box = BBox::centered({20.0 + 1.3 * i, 200.0 - 0.7 * i}, 30.0 + 0.1 * i, 20);
  }
  for (SmoothMethod m : {SmoothMethod::kLowess, SmoothMethod::kSavitzkyGolay}) {
    SmootherSpec spec;
    spec.method = m;
    const Trajectory out = extrapolate_missing(traj, identity_alignment(n), spec);
    for (std::size_t i = 0; i < n; ++i) {
      ASSERT_TRUE(out[i].box.has_value()) << i;
      const Point2 c = out[i].box->center();
      EXPECT_LT(distance(c, {20.0 + 1.3 * i, 200.0 - 0.7 * i}), 0.5);
      EXPECT_NEAR(out[i].box->w, 30.0 + 0.1 * i, 1e-9);
      if (i % 5 == 0) {
        EXPECT_EQ(out[i], traj[i]);
      }
    }
  }
}

TEST(Extrapolate, MovingCameraUsesTheChain) {
  const AlignmentResult a = panning_alignment(61);
  Trajectory traj(61);
  // Static world point seen through a moving camera.
  const Point2 world{150, 110};
  for (std::size_t i = 0; i < 61; i += 4) traj[i].box = BBox::centered(apply(invert(a.frames[i].cumulative), world), 20, 20);
  const Trajectory out = extrapolate_missing(traj, a, SmootherSpec{});
  for (std::size_t i = 0; i < 61; ++i) {
    EXPECT_LT(distance(out[i].box->center(), apply(invert(a.frames[i].cumulative), world)), 1e-6);
  }
}

TEST(Extrapolate, FailedAndOccludedFramesStayEmpty) {
  const std::size_t n = 60;
  AlignmentResult a = identity_alignment(n);
  for (std::size_t i = 50; i < n; ++i) a.frames[i].method = AlignMethod::kFailed;
  a.failed_at = 50;
  Trajectory traj(n);
  for (std::size_t i = 0; i < n; i += 3) traj[i].box = BBox::centered({100.0 + i, 50}, 10, 10);
  traj[10].occluded = true;
  const Trajectory out = extrapolate_missing(traj, a, SmootherSpec{});
  EXPECT_FALSE(out[10].box.has_value());
  EXPECT_TRUE(out[11].box.has_value());
  EXPECT_TRUE(out[49].box.has_value());
  for (std::size_t i = 50; i < n; ++i) {
    if (i % 3) {
      EXPECT_FALSE(out[i].box.has_value()) << i;
    }
  }
}

TEST(Extrapolate, TooFewAnnotations) {
  Trajectory traj(30);
  traj[3].box = BBox{1, 1, 5, 5};
  traj[9].box = BBox{1, 1, 5, 5};
  EXPECT_THROW(extrapolate_missing(traj, identity_alignment(30), SmootherSpec{}), Error);
}

}  // namespace
}  // namespace annoqa
