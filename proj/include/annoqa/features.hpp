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

// FAST-9 segment-test corners, BRIEF-style 256-bit descriptors and Hamming
// matching with ratio test and cross check.

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "annoqa/error.hpp"
#include "annoqa/raster.hpp"

namespace annoqa {

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double score = 0.0;

  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

struct Descriptor {
  std::array<std::uint64_t, 4> words{};

  bool bit(int i) const { return (words[i >> 6] >> (i & 63)) & 1u; }
  void set(int i) { words[i >> 6] |= std::uint64_t{1} << (i & 63); }
  void flip(int i) { words[i >> 6] ^= std::uint64_t{1} << (i & 63); }

  friend bool operator==(const Descriptor&, const Descriptor&) = default;
};

inline int hamming(const Descriptor& a, const Descriptor& b) {
  int d = 0;
  for (int i = 0; i < 4; ++i) d += std::popcount(a.words[i] ^ b.words[i]);
  return d;
}

struct Match {
  std::size_t idx_a = 0;
  std::size_t idx_b = 0;
  int distance = 0;
};

struct FeatureConfig {
  double detector_threshold = 0.06;
  int max_keypoints = 1000;
  double nms_radius = 5.0;
  double ratio_test = 0.8;
  bool cross_check = true;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(detector_threshold > 0.0)) throw Error(ErrorCode::kInvalidArgument, "detector threshold must be > 0");
    if (max_keypoints < 1) throw Error(ErrorCode::kInvalidArgument, "max_keypoints must be >= 1");
    if (!(nms_radius > 0.0)) throw Error(ErrorCode::kInvalidArgument, "nms radius must be > 0");
    if (!(ratio_test > 0.0 && ratio_test <= 1.0))
      throw Error(ErrorCode::kInvalidArgument, "ratio test must lie in (0,1]");
  }
};

/// Minimum distance from the image border for a keypoint to be described.
inline constexpr int kDescriptorBorder = 16;

namespace detail {

inline constexpr std::array<std::array<int, 2>, 16> kFastCircle{{
    {0, -3}, {1, -3}, {2, -2}, {3, -1}, {3, 0}, {3, 1}, {2, 2}, {1, 3},
    {0, 3}, {-1, 3}, {-2, 2}, {-3, 1}, {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3}}};

// Longest circular run of `state` in the 16 ring states.
inline int longest_arc(const std::array<int, 16>& states, int state) {
  int best = 0, run = 0;
  for (int i = 0; i < 32; ++i) {
    if (states[i & 15] == state) {
      best = std::max(best, ++run);
    } else {
      run = 0;
    }
  }
  return std::min(best, 16);
}

inline double standard_normal(std::mt19937_64& rng) {
  // Box-Muller on 53-bit uniforms; independent of <random> distributions.
  constexpr double kScale = 1.0 / 9007199254740992.0;
  const double u1 = (static_cast<double>(rng() >> 11) + 1.0) * kScale;
  const double u2 = static_cast<double>(rng() >> 11) * kScale;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

struct BriefPair {
  int x1, y1, x2, y2;
};

inline std::vector<BriefPair> brief_pattern(std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0xB51EFULL);
  constexpr double kSigma = 4.0;
  constexpr int kLimit = kDescriptorBorder - 1;
  auto draw = [&] {
    const double v = std::round(kSigma * standard_normal(rng));
    return static_cast<int>(std::clamp(v, -double(kLimit), double(kLimit)));
  };
  std::vector<BriefPair> pattern;
  pattern.reserve(256);
  while (pattern.size() < 256) {
    BriefPair p{draw(), draw(), draw(), draw()};
    if (p.x1 == p.x2 && p.y1 == p.y2) continue;
    pattern.push_back(p);
  }
  return pattern;
}

}  // namespace detail

/// FAST-9 corners: a contiguous arc of >= 9 of the 16 ring pixels all brighter
/// or all darker than the center by the threshold. Scored by summed absolute
/// contrast of the arc type, greedily non-max suppressed, strongest first.
inline std::vector<Keypoint> detect(const GrayImage& img, const FeatureConfig& cfg) {
  cfg.validate();
  const int w = img.width();
  const int h = img.height();
  if (w < 32 || h < 32) {
    throw Error(ErrorCode::kImageTooSmall, "detection needs at least 32x32 pixels");
  }
  const double t = cfg.detector_threshold;
  std::vector<Keypoint> candidates;
  std::array<int, 16> states{};
  for (int y = 3; y < h - 3; ++y) {
    for (int x = 3; x < w - 3; ++x) {
      const double c = img.at(x, y);
      // Any 9-arc covers at least two of the four compass pixels.
      int compass_bright = 0, compass_dark = 0;
      for (int k = 0; k < 16; k += 4) {
        const double p = img.at(x + detail::kFastCircle[k][0], y + detail::kFastCircle[k][1]);
        compass_bright += p > c + t;
        compass_dark += p < c - t;
      }
      if (compass_bright < 2 && compass_dark < 2) continue;
      double bright_sum = 0.0, dark_sum = 0.0;
      for (int k = 0; k < 16; ++k) {
        const double p = img.at(x + detail::kFastCircle[k][0], y + detail::kFastCircle[k][1]);
        if (p > c + t) {
          states[k] = 1;
          bright_sum += p - c;
        } else if (p < c - t) {
          states[k] = -1;
          dark_sum += c - p;
        } else {
          states[k] = 0;
        }
      }
      double score = -1.0;
      if (compass_bright >= 2 && detail::longest_arc(states, 1) >= 9) score = bright_sum;
      if (compass_dark >= 2 && detail::longest_arc(states, -1) >= 9) score = std::max(score, dark_sum);
      if (score >= 0.0) candidates.push_back({double(x), double(y), score});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Keypoint& a, const Keypoint& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  });

  // Greedy suppression on a bucket grid with cell size == radius.
  const double r = cfg.nms_radius;
  const int gw = static_cast<int>(std::ceil(w / r)) + 1;
  const int gh = static_cast<int>(std::ceil(h / r)) + 1;
  std::vector<std::vector<std::size_t>> grid(static_cast<std::size_t>(gw) * gh);
  std::vector<Keypoint> kept;
  for (const Keypoint& kp : candidates) {
    if (static_cast<int>(kept.size()) >= cfg.max_keypoints) break;
    const int cx = static_cast<int>(kp.x / r);
    const int cy = static_cast<int>(kp.y / r);
    bool suppressed = false;
    for (int dy = -1; dy <= 1 && !suppressed; ++dy) {
      for (int dx = -1; dx <= 1 && !suppressed; ++dx) {
        const int gx = cx + dx, gy = cy + dy;
        if (gx < 0 || gy < 0 || gx >= gw || gy >= gh) continue;
        for (std::size_t idx : grid[static_cast<std::size_t>(gy) * gw + gx]) {
          if (std::hypot(kept[idx].x - kp.x, kept[idx].y - kp.y) < r) {
            suppressed = true;
            break;
          }
        }
      }
    }
    if (suppressed) continue;
    grid[static_cast<std::size_t>(cy) * gw + cx].push_back(kept.size());
    kept.push_back(kp);
  }
  return kept;
}

struct DescribedKeypoints {
  std::vector<Descriptor> descriptors;
  /// index_map[i] is the position in the input keypoint sequence of
  /// descriptors[i]; keypoints too close to the border have no entry.
  std::vector<std::size_t> index_map;
};

inline bool describable(const GrayImage& img, const Keypoint& kp) {
  return kp.x >= kDescriptorBorder && kp.y >= kDescriptorBorder &&
         kp.x <= img.width() - 1 - kDescriptorBorder && kp.y <= img.height() - 1 - kDescriptorBorder;
}

/// Describes keypoints on an image that was already smoothed with sigma 1.
inline DescribedKeypoints describe_smoothed(const GrayImage& smoothed, std::span<const Keypoint> kps,
                                            const FeatureConfig& cfg) {
  const std::vector<detail::BriefPair> pattern = detail::brief_pattern(cfg.seed);
  DescribedKeypoints out;
  for (std::size_t i = 0; i < kps.size(); ++i) {
    const Keypoint& kp = kps[i];
    if (!describable(smoothed, kp)) continue;
    Descriptor d;
    for (int b = 0; b < 256; ++b) {
      const detail::BriefPair& p = pattern[b];
      const double a = sample_bilinear(smoothed, kp.x + p.x1, kp.y + p.y1);
      const double c = sample_bilinear(smoothed, kp.x + p.x2, kp.y + p.y2);
      if (a < c) d.set(b);
    }
    out.descriptors.push_back(d);
    out.index_map.push_back(i);
  }
  return out;
}

/// BRIEF-style descriptor: 256 intensity comparisons at Gaussian (sigma 4 px)
/// offsets fixed by cfg.seed, sampled on a sigma 1 blurred copy.
inline DescribedKeypoints describe(const GrayImage& img, std::span<const Keypoint> kps,
                                   const FeatureConfig& cfg) {
  return describe_smoothed(gaussian_blur(img, 1.0), kps, cfg);
}

/// Hamming nearest neighbour with ratio test (best < ratio * second best)
/// and optional mutual-nearest cross check.
inline std::vector<Match> match(std::span<const Descriptor> da, std::span<const Descriptor> db,
                                const FeatureConfig& cfg) {
  cfg.validate();
  std::vector<Match> out;
  if (da.empty() || db.empty()) return out;

  std::vector<std::size_t> best_for_b;
  if (cfg.cross_check) {
    best_for_b.assign(db.size(), std::numeric_limits<std::size_t>::max());
    for (std::size_t j = 0; j < db.size(); ++j) {
      int best = std::numeric_limits<int>::max();
      for (std::size_t i = 0; i < da.size(); ++i) {
        const int d = hamming(da[i], db[j]);
        if (d < best) {
          best = d;
          best_for_b[j] = i;
        }
      }
    }
  }
  for (std::size_t i = 0; i < da.size(); ++i) {
    int best = std::numeric_limits<int>::max();
    int second = std::numeric_limits<int>::max();
    std::size_t best_j = 0;
    for (std::size_t j = 0; j < db.size(); ++j) {
      const int d = hamming(da[i], db[j]);
      if (d < best) {
        second = best;
        best = d;
        best_j = j;
      } else if (d < second) {
        second = d;
      }
    }
    if (second != std::numeric_limits<int>::max() &&
        !(static_cast<double>(best) < cfg.ratio_test * static_cast<double>(second))) {
      continue;
    }
    if (cfg.cross_check && best_for_b[best_j] != i) continue;
    out.push_back({i, best_j, best});
  }
  return out;
}

}  // namespace annoqa
