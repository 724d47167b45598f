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

// Sequence registration to the first frame. Consecutive frames are linked
// by staged RANSAC tracking: the homography is estimated from the inlier
// keypoints carried over from the previous step, and the current frame's
// keypoints that agree with it become the inliers for the next step. When
// too few matches survive (typically motion blur) the pair is aligned by
// ECC on the previous annotation box instead, leaving the keypoint state
// untouched. A pair that neither method can register ends the chain.

#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "annoqa/ecc.hpp"
#include "annoqa/error.hpp"
#include "annoqa/features.hpp"
#include "annoqa/homography.hpp"
#include "annoqa/parallel.hpp"
#include "annoqa/raster.hpp"
#include "annoqa/types.hpp"

namespace annoqa {

/// Which keypoints are re-validated against a freshly estimated homography.
enum class InlierTest {
  /// Current-frame keypoints whose descriptor match in the previous frame
  /// reprojects within tolerance.
  kCurrentKeypoints,
  /// Previous-frame keypoints are projected forward and claim the nearest
  /// current keypoint within tolerance.
  kPreviousKeypoints,
};

struct AlignConfig {
  int keypoint_threshold = 20;
  int min_inliers = 8;
  double max_pairwise_reproj = 4.0;
  /// ECC template = previous box scaled by (1 + inflation) about its center.
  double ecc_box_inflation = 0.25;
  InlierTest inlier_test = InlierTest::kCurrentKeypoints;
  /// Drop keypoints inside the frame's annotated box, scaled by
  /// (1 + mask_inflation), so a moving object cannot pull the camera estimate.
  bool mask_annotation = false;
  double mask_inflation = 0.5;
  FeatureConfig feature;
  RansacConfig ransac;
  EccConfig ecc;

  void validate() const {
    if (keypoint_threshold < 4) throw Error(ErrorCode::kInvalidArgument, "keypoint_threshold must be >= 4");
    if (min_inliers < 4) throw Error(ErrorCode::kInvalidArgument, "min_inliers must be >= 4");
    if (!(max_pairwise_reproj > 0.0)) throw Error(ErrorCode::kInvalidArgument, "max_pairwise_reproj must be > 0");
    if (!(ecc_box_inflation >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "ecc_box_inflation must be >= 0");
    if (!(mask_inflation >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "mask_inflation must be >= 0");
    feature.validate();
    ransac.validate();
    ecc.validate();
  }
};

enum class AlignMethod { kFirst, kKeypoint, kEcc, kFailed };

constexpr std::string_view to_string(AlignMethod m) {
  switch (m) {
    case AlignMethod::kFirst: return "first";
    case AlignMethod::kKeypoint: return "keypoint";
    case AlignMethod::kEcc: return "ecc";
    case AlignMethod::kFailed: return "failed";
  }
  return "unknown";
}

inline AlignMethod parse_align_method(std::string_view s) {
  if (s == "first") return AlignMethod::kFirst;
  if (s == "keypoint") return AlignMethod::kKeypoint;
  if (s == "ecc") return AlignMethod::kEcc;
  if (s == "failed") return AlignMethod::kFailed;
  throw Error(ErrorCode::kParse, "unknown alignment method: " + std::string(s));
}

struct FrameAlignment {
  std::size_t frame_index = 0;
  Homography pairwise;    // frame i -> frame i-1
  Homography cumulative;  // frame i -> frame 0
  AlignMethod method = AlignMethod::kFirst;
  std::size_t inlier_count = 0;
  std::optional<double> rho;
  /// Fingerprint of the keypoint inlier state after this frame.
  std::uint64_t state_hash = 0;
};

struct AlignmentResult {
  std::vector<FrameAlignment> frames;
  std::optional<std::size_t> failed_at;
  int width = 0;
  int height = 0;
};

/// Detection and descriptors for one frame.
struct FrameFeatures {
  GrayImage smoothed;  // sigma 1 copy used for descriptors
  std::vector<Keypoint> keypoints;
  DescribedKeypoints described;
};

inline FrameFeatures extract_features(const GrayImage& img, const FeatureConfig& cfg,
                                     const std::optional<BBox>& mask = std::nullopt) {
  FrameFeatures f;
  f.smoothed = gaussian_blur(img, 1.0);
  f.keypoints = detect(img, cfg);
  if (mask) {
    const BBox& b = *mask;
    std::erase_if(f.keypoints, [&](const Keypoint& k) {
      return k.x >= b.x && k.x <= b.x + b.w && k.y >= b.y && k.y <= b.y + b.h;
    });
  }
  f.described = describe_smoothed(f.smoothed, f.keypoints, cfg);
  return f;
}

struct RsrtState {
  /// Inlier keypoints of the frame the state refers to.
  std::vector<Keypoint> inliers;

  std::uint64_t hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::uint64_t v) {
      for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xFF;
        h *= 1099511628211ULL;
      }
    };
    mix(inliers.size());
    for (const Keypoint& k : inliers) {
      mix(std::bit_cast<std::uint64_t>(k.x));
      mix(std::bit_cast<std::uint64_t>(k.y));
    }
    return h;
  }

  static RsrtState from_detection(const FrameFeatures& f) { return {f.keypoints}; }
};

struct RsrtStep {
  Homography pairwise;  // current -> previous
  RsrtState state;
  std::size_t inlier_count = 0;
  double mean_error = 0.0;
};

/// One staged-RANSAC step between consecutive frames.
inline RsrtStep align_pair_rsrt(const RsrtState& state, const FrameFeatures& prev,
                                const FrameFeatures& cur, const AlignConfig& cfg) {
  const DescribedKeypoints carried = describe_smoothed(prev.smoothed, state.inliers, cfg.feature);
  const std::vector<Match> matches =
      match(carried.descriptors, cur.described.descriptors, cfg.feature);
  if (static_cast<int>(matches.size()) < cfg.keypoint_threshold) {
    throw Error(ErrorCode::kInsufficientMatches,
                std::to_string(matches.size()) + " matches, need " + std::to_string(cfg.keypoint_threshold));
  }
  std::vector<PointPair> pairs;
  pairs.reserve(matches.size());
  for (const Match& m : matches) {
    const Keypoint& p = state.inliers[carried.index_map[m.idx_a]];
    const Keypoint& c = cur.keypoints[cur.described.index_map[m.idx_b]];
    pairs.push_back({{c.x, c.y}, {p.x, p.y}});
  }
  const RansacResult rr = estimate_ransac(pairs, cfg.ransac);
  if (static_cast<int>(rr.inlier_count) < cfg.min_inliers || rr.mean_error > cfg.max_pairwise_reproj) {
    throw Error(ErrorCode::kNoConsensus, "consensus of " + std::to_string(rr.inlier_count) + " pairs is too weak");
  }

  // Re-validate keypoints against the new homography.
  std::vector<bool> keep(cur.keypoints.size(), false);
  const double tol = cfg.max_pairwise_reproj;
  if (cfg.inlier_test == InlierTest::kCurrentKeypoints) {
    const std::vector<Match> all =
        match(cur.described.descriptors, prev.described.descriptors, cfg.feature);
    for (const Match& m : all) {
      const std::size_t ci = cur.described.index_map[m.idx_a];
      const Keypoint& c = cur.keypoints[ci];
      const Keypoint& p = prev.keypoints[prev.described.index_map[m.idx_b]];
      try {
        if (distance(apply(rr.h, {c.x, c.y}), {p.x, p.y}) <= tol) keep[ci] = true;
      } catch (const Error&) {
      }
    }
  } else {
    const Homography forward = invert(rr.h);
    for (const Keypoint& p : prev.keypoints) {
      Point2 q;
      try {
        q = apply(forward, {p.x, p.y});
      } catch (const Error&) {
        continue;
      }
      double best = tol;
      std::optional<std::size_t> best_i;
      for (std::size_t ci = 0; ci < cur.keypoints.size(); ++ci) {
        const double d = distance(q, {cur.keypoints[ci].x, cur.keypoints[ci].y});
        if (d <= best) {
          best = d;
          best_i = ci;
        }
      }
      if (best_i) keep[*best_i] = true;
    }
  }
  for (std::size_t k = 0; k < matches.size(); ++k) {
    if (rr.inliers[k]) keep[cur.described.index_map[matches[k].idx_b]] = true;
  }

  RsrtStep step;
  step.pairwise = rr.h;
  step.inlier_count = rr.inlier_count;
  step.mean_error = rr.mean_error;
  for (std::size_t ci = 0; ci < cur.keypoints.size(); ++ci)
    if (keep[ci]) step.state.inliers.push_back(cur.keypoints[ci]);
  return step;
}

/// Convenience overload on raw images.
inline RsrtStep align_pair_rsrt(const RsrtState& state, const GrayImage& prev_img,
                                const GrayImage& cur_img, const AlignConfig& cfg) {
  return align_pair_rsrt(state, extract_features(prev_img, cfg.feature),
                         extract_features(cur_img, cfg.feature), cfg);
}

/// Box scaled about its center and clipped to the image.
inline std::optional<BBox> ecc_region(const BBox& box, double inflation, int width, int height) {
  const double w = box.w * (1.0 + inflation);
  const double h = box.h * (1.0 + inflation);
  const Point2 c = box.center();
  const double x0 = std::max(0.0, c.x - 0.5 * w);
  const double y0 = std::max(0.0, c.y - 0.5 * h);
  const double x1 = std::min(static_cast<double>(width), c.x + 0.5 * w);
  const double y1 = std::min(static_cast<double>(height), c.y + 0.5 * h);
  if (!(x1 > x0) || !(y1 > y0)) return std::nullopt;
  return BBox{x0, y0, x1 - x0, y1 - y0};
}

/// Registers every frame to frame 0. Alignment failures are reported in the
/// result; only malformed input throws.
inline AlignmentResult align_sequence(std::span<const GrayImage> frames, const Trajectory& boxes,
                                      const AlignConfig& cfg, int jobs = 1) {
  cfg.validate();
  if (frames.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "alignment needs at least 2 frames");
  }
  require_same_length(boxes.size(), frames.size(), "annotation count differs from frame count");
  for (const GrayImage& f : frames) {
    if (f.width() != frames[0].width() || f.height() != frames[0].height()) {
      throw Error(ErrorCode::kInvalidArgument, "frames differ in size");
    }
  }

  const std::size_t n = frames.size();
  AlignmentResult result;
  result.width = frames[0].width();
  result.height = frames[0].height();

  // Features are extracted in batches ahead of the sequential chain.
  const std::size_t batch = static_cast<std::size_t>(std::max(1, jobs)) * 4;
  std::map<std::size_t, FrameFeatures> cache;
  auto features = [&](std::size_t i) -> const FrameFeatures& {
    auto it = cache.find(i);
    if (it != cache.end()) return it->second;
    while (!cache.empty() && cache.begin()->first + 1 < i) cache.erase(cache.begin());
    const std::size_t end = std::min(n, i + batch);
    std::vector<FrameFeatures> fresh(end - i);
    parallel_for(fresh.size(), jobs, [&](std::size_t k) {
      std::optional<BBox> mask;
      if (cfg.mask_annotation && boxes[i + k].box) {
        const BBox& b = *boxes[i + k].box;
        const double s = 1.0 + cfg.mask_inflation;
        mask = BBox::centered(b.center(), b.w * s, b.h * s);
      }
      fresh[k] = extract_features(frames[i + k], cfg.feature, mask);
    });
    for (std::size_t k = 0; k < fresh.size(); ++k) cache.emplace(i + k, std::move(fresh[k]));
    return cache.at(i);
  };

  RsrtState state = RsrtState::from_detection(features(0));
  bool stale = false;  // state predates an ECC span

  FrameAlignment first;
  first.frame_index = 0;
  first.method = AlignMethod::kFirst;
  first.inlier_count = state.inliers.size();
  first.state_hash = state.hash();
  result.frames.push_back(first);

  for (std::size_t i = 1; i < n; ++i) {
    const FrameAlignment& before = result.frames.back();
    FrameAlignment fa;
    fa.frame_index = i;

    bool registered = false;
    try {
      const RsrtState seed = stale ? RsrtState::from_detection(features(i - 1)) : state;
      RsrtStep step = align_pair_rsrt(seed, features(i - 1), features(i), cfg);
      state = std::move(step.state);
      stale = false;
      fa.pairwise = step.pairwise;
      fa.method = AlignMethod::kKeypoint;
      fa.inlier_count = step.inlier_count;
      registered = true;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInsufficientMatches && e.code() != ErrorCode::kNoConsensus) throw;
    }

    if (!registered && boxes[i - 1].box) {
      const std::optional<BBox> region =
          ecc_region(*boxes[i - 1].box, cfg.ecc_box_inflation, result.width, result.height);
      if (region) {
        std::optional<EccResult> best;
        // Constant camera velocity first, then identity.
        for (const Homography& init : {invert(before.pairwise), Homography::identity()}) {
          try {
            EccResult r = ecc_align(frames[i - 1], frames[i], *region, init, cfg.ecc);
            if (!best || r.rho > best->rho) best = std::move(r);
          } catch (const Error&) {
          }
          if (best && best->rho >= cfg.ecc.min_rho) break;
        }
        if (best && best->rho >= cfg.ecc.min_rho) {
          try {
            fa.pairwise = invert(best->warp);
            fa.method = AlignMethod::kEcc;
            fa.rho = best->rho;
            stale = true;
            registered = true;
          } catch (const Error&) {
          }
        }
      }
    }

    if (!registered) {
      result.failed_at = i;
      for (std::size_t j = i; j < n; ++j) {
        FrameAlignment failed;
        failed.frame_index = j;
        failed.method = AlignMethod::kFailed;
        failed.state_hash = state.hash();
        result.frames.push_back(failed);
      }
      break;
    }
    fa.cumulative = compose(before.cumulative, fa.pairwise);
    fa.state_hash = state.hash();
    result.frames.push_back(fa);
  }
  return result;
}

/// Maps annotation centers into frame-0 coordinates.
inline CanonicalTrajectory to_canonical(const AlignmentResult& alignment, const Trajectory& traj) {
  require_same_length(alignment.frames.size(), traj.size(), "trajectory length differs from alignment");
  CanonicalTrajectory out(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const FrameAlignment& fa = alignment.frames[i];
    if (!traj[i].box || fa.method == AlignMethod::kFailed) continue;
    try {
      out[i] = apply(fa.cumulative, traj[i].box->center());
    } catch (const Error&) {
    }
  }
  return out;
}

}  // namespace annoqa
