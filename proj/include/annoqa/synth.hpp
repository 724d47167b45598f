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

// Deterministic synthetic tracking sequences with known ground truth: a
// value-noise background seen through a random-walk camera, a textured
// rectangle moving along a smooth path in frame-0 coordinates, and a
// simulated human annotation (Gaussian jitter plus sparse large outliers).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "annoqa/align.hpp"
#include "annoqa/error.hpp"
#include "annoqa/features.hpp"
#include "annoqa/homography.hpp"
#include "annoqa/raster.hpp"
#include "annoqa/types.hpp"

namespace annoqa {

enum class PathKind { kLine, kSinusoid, kSpline };

constexpr std::string_view to_string(PathKind k) {
  switch (k) {
    case PathKind::kLine: return "line";
    case PathKind::kSinusoid: return "sinusoid";
    case PathKind::kSpline: return "spline";
  }
  return "unknown";
}

inline PathKind parse_path_kind(std::string_view s) {
  if (s == "line") return PathKind::kLine;
  if (s == "sinusoid") return PathKind::kSinusoid;
  if (s == "spline") return PathKind::kSpline;
  throw Error(ErrorCode::kParse, "unknown object path: " + std::string(s));
}

struct CameraWalk {
  double translation_sigma = 0.0;   // px per frame, per axis
  double rotation_sigma_deg = 0.0;  // degrees per frame
  double scale_sigma = 0.0;         // log scale per frame
  double max_translation = std::numeric_limits<double>::infinity();  // px per frame, per axis
  double max_rotation_deg = std::numeric_limits<double>::infinity();
};

struct PathKnot {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
};

/// Object center in frame-0 coordinates as a function of the frame index.
struct ObjectPath {
  PathKind kind = PathKind::kSinusoid;
  std::optional<Point2> start;  // defaults to the image center
  Point2 velocity{0.0, 0.0};    // px per frame (line, and drift for sinusoid)
  Point2 amplitude{40.0, 25.0}; // sinusoid: x uses sin, y uses cos
  double period = 200.0;        // frames
  double phase = 0.0;           // radians
  double knot_spacing = 40.0;   // spline, frames between random knots
  double knot_sigma = 30.0;     // spline, px
  std::vector<PathKnot> knots;  // spline; drawn from the seed when empty
};

struct ScenarioConfig {
  int frames = 400;
  int width = 320;
  int height = 240;
  CameraWalk camera;
  ObjectPath path;
  double object_w = 48.0;
  double object_h = 36.0;
  double jitter_sigma = 0.0;  // px, per axis
  double outlier_prob = 0.0;
  std::pair<double, double> outlier_range{50.0, 150.0};
  std::map<int, double> blur_frames;  // frame index -> blur sigma
  double texture_scale = 6.0;         // px between background lattice points
  std::uint64_t seed = 0;

  void validate() const {
    if (frames < 2) throw Error(ErrorCode::kInvalidArgument, "scenario needs at least 2 frames");
    if (width < 32 || height < 32) throw Error(ErrorCode::kInvalidArgument, "scenario frames must be >= 32x32");
    if (!(outlier_prob >= 0.0 && outlier_prob <= 1.0))
      throw Error(ErrorCode::kInvalidArgument, "outlier_prob must lie in [0,1]");
    if (!(jitter_sigma >= 0.0) || !(camera.translation_sigma >= 0.0) || !(camera.rotation_sigma_deg >= 0.0) ||
        !(camera.scale_sigma >= 0.0))
      throw Error(ErrorCode::kInvalidArgument, "sigmas must be >= 0");
    if (!(outlier_range.first >= 0.0 && outlier_range.second >= outlier_range.first))
      throw Error(ErrorCode::kInvalidArgument, "outlier_range must satisfy 0 <= min <= max");
    if (!(object_w > 0.0 && object_h > 0.0)) throw Error(ErrorCode::kInvalidArgument, "object size must be > 0");
    if (!(texture_scale >= 2.0)) throw Error(ErrorCode::kInvalidArgument, "texture_scale must be >= 2");
    if (path.kind == PathKind::kSinusoid && !(path.period > 0.0))
      throw Error(ErrorCode::kInvalidArgument, "sinusoid period must be > 0");
    if (path.kind == PathKind::kSpline && path.knots.empty() && !(path.knot_spacing >= 1.0))
      throw Error(ErrorCode::kInvalidArgument, "knot_spacing must be >= 1");
    for (const auto& [frame, sigma] : blur_frames) {
      if (frame < 0 || frame >= frames) throw Error(ErrorCode::kInvalidArgument, "blur frame out of range");
      if (!(sigma >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "blur sigma must be >= 0");
    }
  }
};

/// The desk-scale reference sequence used by the end-to-end checks.
inline ScenarioConfig reference_scenario() {
  ScenarioConfig cfg;
  cfg.frames = 400;
  cfg.width = 320;
  cfg.height = 240;
  cfg.camera.translation_sigma = 3.0;
  cfg.camera.rotation_sigma_deg = 0.1;
  cfg.camera.scale_sigma = 0.001;
  cfg.path.kind = PathKind::kSinusoid;
  cfg.path.amplitude = {40.0, 25.0};
  cfg.path.period = 200.0;
  cfg.jitter_sigma = 4.0;
  cfg.outlier_prob = 0.05;
  cfg.outlier_range = {50.0, 150.0};
  for (int f : {120, 121, 122, 280, 281, 282}) cfg.blur_frames[f] = 3.0;
  cfg.seed = 20200501;
  return cfg;
}

struct GroundTruthScenario {
  ScenarioConfig config;  // knots filled in when drawn from the seed
  std::vector<GrayImage> frames;
  std::vector<Homography> true_camera;      // frame i -> frame 0
  std::vector<Homography> camera_steps;     // frame i -> frame i-1 (identity at 0)
  std::vector<Point2> true_centers;         // image coordinates
  std::vector<Point2> world_centers;        // frame-0 coordinates
  std::vector<BBox> true_boxes;
  Trajectory noisy;
  std::vector<std::size_t> outlier_frames;  // frames that received a large offset
  int resamples = 0;                        // camera walks rejected for losing the object
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline double lattice_value(std::int64_t ix, std::int64_t iy, std::uint64_t seed) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(ix));
  h = splitmix64(h ^ static_cast<std::uint64_t>(iy));
  return static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0);
}

inline double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

inline double value_noise(double x, double y, double spacing, std::uint64_t seed) {
  const double gx = x / spacing, gy = y / spacing;
  const double fx = std::floor(gx), fy = std::floor(gy);
  const auto ix = static_cast<std::int64_t>(fx), iy = static_cast<std::int64_t>(fy);
  const double u = fade(gx - fx), v = fade(gy - fy);
  const double a = lattice_value(ix, iy, seed), b = lattice_value(ix + 1, iy, seed);
  const double c = lattice_value(ix, iy + 1, seed), d = lattice_value(ix + 1, iy + 1, seed);
  return (1.0 - v) * ((1.0 - u) * a + u * b) + v * ((1.0 - u) * c + u * d);
}

// Two octaves, contrast-stretched into [0,1].
inline double texture(double x, double y, double spacing, std::uint64_t seed, double gain) {
  const double n = (value_noise(x, y, spacing, seed) + 0.5 * value_noise(x, y, 0.5 * spacing, seed + 1)) / 1.5;
  return std::clamp(0.5 + gain * (n - 0.5), 0.0, 1.0);
}

inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

inline Point2 catmull_rom(const std::vector<PathKnot>& knots, double t) {
  if (knots.size() == 1) return {knots[0].x, knots[0].y};
  std::size_t k = 0;
  while (k + 2 < knots.size() && knots[k + 1].t <= t) ++k;
  const PathKnot& p1 = knots[k];
  const PathKnot& p2 = knots[k + 1];
  const PathKnot& p0 = k > 0 ? knots[k - 1] : p1;
  const PathKnot& p3 = k + 2 < knots.size() ? knots[k + 2] : p2;
  const double s = std::clamp((t - p1.t) / (p2.t - p1.t), 0.0, 1.0);
  auto interp = [s](double a, double b, double c, double d) {
    return 0.5 * (2.0 * b + (-a + c) * s + (2.0 * a - 5.0 * b + 4.0 * c - d) * s * s +
                  (-a + 3.0 * b - 3.0 * c + d) * s * s * s);
  };
  return {interp(p0.x, p1.x, p2.x, p3.x), interp(p0.y, p1.y, p2.y, p3.y)};
}

inline Point2 path_point(const ObjectPath& path, Point2 start, double t) {
  switch (path.kind) {
    case PathKind::kLine: return {start.x + path.velocity.x * t, start.y + path.velocity.y * t};
    case PathKind::kSinusoid: {
      const double a = 2.0 * std::numbers::pi * t / path.period + path.phase;
      return {start.x + path.velocity.x * t + path.amplitude.x * std::sin(a),
              start.y + path.velocity.y * t + path.amplitude.y * std::cos(a)};
    }
    case PathKind::kSpline: return catmull_rom(path.knots, t);
  }
  return start;
}

inline double inside_fraction(const BBox& b, int width, int height) {
  const double ix = std::max(0.0, std::min(b.x + b.w, double(width)) - std::max(b.x, 0.0));
  const double iy = std::max(0.0, std::min(b.y + b.h, double(height)) - std::max(b.y, 0.0));
  return ix * iy / (b.w * b.h);
}

}  // namespace detail

/// Renders the scenario. Camera walks that push the object below 70 %
/// visibility are redrawn from the next sub-seed.
inline GroundTruthScenario generate(ScenarioConfig cfg) {
  cfg.validate();
  GroundTruthScenario sc;
  const Point2 image_center{0.5 * (cfg.width - 1), 0.5 * (cfg.height - 1)};
  const Point2 start = cfg.path.start.value_or(image_center);
  const std::size_t n = static_cast<std::size_t>(cfg.frames);

  if (cfg.path.kind == PathKind::kSpline && cfg.path.knots.empty()) {
    std::mt19937_64 rng(detail::splitmix64(cfg.seed ^ 0x5B11E));
    for (double t = 0.0;; t += cfg.path.knot_spacing) {
      const double sx = t == 0.0 ? 0.0 : cfg.path.knot_sigma * detail::standard_normal(rng);
      const double sy = t == 0.0 ? 0.0 : cfg.path.knot_sigma * detail::standard_normal(rng);
      cfg.path.knots.push_back({t, start.x + sx, start.y + sy});
      if (t >= cfg.frames - 1) break;
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    sc.world_centers.push_back(detail::path_point(cfg.path, start, static_cast<double>(i)));
  }

  constexpr int kMaxAttempts = 500;
  bool ok = false;
  for (int attempt = 0; attempt < kMaxAttempts && !ok; ++attempt) {
    std::mt19937_64 rng(detail::splitmix64(cfg.seed ^ (0xCA3E7AULL + static_cast<std::uint64_t>(attempt) * 7919ULL)));
    sc.true_camera.assign(1, Homography::identity());
    sc.camera_steps.assign(1, Homography::identity());
    const double deg = std::numbers::pi / 180.0;
    for (std::size_t i = 1; i < n; ++i) {
      const double tx = std::clamp(cfg.camera.translation_sigma * detail::standard_normal(rng),
                                   -cfg.camera.max_translation, cfg.camera.max_translation);
      const double ty = std::clamp(cfg.camera.translation_sigma * detail::standard_normal(rng),
                                   -cfg.camera.max_translation, cfg.camera.max_translation);
      const double rot = std::clamp(cfg.camera.rotation_sigma_deg * detail::standard_normal(rng),
                                    -cfg.camera.max_rotation_deg, cfg.camera.max_rotation_deg);
      const double scale = std::exp(cfg.camera.scale_sigma * detail::standard_normal(rng));
      const Homography step = Homography::similarity(rot * deg, scale, tx, ty, image_center);
      sc.camera_steps.push_back(step);
      sc.true_camera.push_back(compose(sc.true_camera.back(), step));
    }
    ok = true;
    sc.true_centers.clear();
    sc.true_boxes.clear();
    for (std::size_t i = 0; i < n && ok; ++i) {
      const Point2 c = apply(invert(sc.true_camera[i]), sc.world_centers[i]);
      const BBox box = BBox::centered(c, cfg.object_w, cfg.object_h);
      ok = detail::inside_fraction(box, cfg.width, cfg.height) >= 0.7;
      sc.true_centers.push_back(c);
      sc.true_boxes.push_back(box);
    }
    if (!ok) ++sc.resamples;
  }
  if (!ok) {
    throw Error(ErrorCode::kInvalidArgument, "could not keep the object inside the frame; reduce camera motion");
  }

  // Rendering.
  const std::uint64_t bg_seed = detail::splitmix64(cfg.seed ^ 0xB6);
  const std::uint64_t obj_seed = detail::splitmix64(cfg.seed ^ 0x0B1);
  const double hw = 0.5 * cfg.object_w, hh = 0.5 * cfg.object_h;
  sc.frames.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Matrix3d& m = sc.true_camera[i].matrix();
    const Point2 oc = sc.world_centers[i];
    std::vector<double> px(static_cast<std::size_t>(cfg.width) * cfg.height);
    for (int y = 0; y < cfg.height; ++y) {
      for (int x = 0; x < cfg.width; ++x) {
        const double w = m(2, 0) * x + m(2, 1) * y + m(2, 2);
        const double qx = (m(0, 0) * x + m(0, 1) * y + m(0, 2)) / w;
        const double qy = (m(1, 0) * x + m(1, 1) * y + m(1, 2)) / w;
        const double lx = qx - oc.x, ly = qy - oc.y;
        // Edges get linear pixel coverage so sub-pixel motion is not quantized.
        const double inside = std::min(hw - std::abs(lx), hh - std::abs(ly));
        const double alpha = std::clamp(inside + 0.5, 0.0, 1.0);
        double v = alpha < 1.0 ? detail::texture(qx, qy, cfg.texture_scale, bg_seed, 1.8) : 0.0;
        if (alpha > 0.0) {
          const double core = std::clamp(inside - 2.0 + 0.5, 0.0, 1.0);
          double obj = 0.05;
          if (core > 0.0) obj += core * (detail::texture(lx + 1000.0, ly + 1000.0, 5.0, obj_seed, 2.2) - 0.05);
          v += alpha * (obj - v);
        }
        px[static_cast<std::size_t>(y) * cfg.width + x] = v;
      }
    }
    GrayImage frame(cfg.width, cfg.height, std::move(px));
    const auto blur = cfg.blur_frames.find(static_cast<int>(i));
    if (blur != cfg.blur_frames.end() && blur->second > 0.0) frame = gaussian_blur(frame, blur->second);
    sc.frames.push_back(std::move(frame));
  }

  // Simulated annotation. Every draw happens for every frame so the noise of
  // one frame never depends on the outcome of another.
  std::mt19937_64 noise_rng(detail::splitmix64(cfg.seed ^ 0xA11));
  for (std::size_t i = 0; i < n; ++i) {
    const double jx = detail::standard_normal(noise_rng);
    const double jy = detail::standard_normal(noise_rng);
    const double u = detail::uniform01(noise_rng);
    const double mag = detail::uniform01(noise_rng);
    const double ang = detail::uniform01(noise_rng);
    Point2 c{sc.true_centers[i].x + cfg.jitter_sigma * jx, sc.true_centers[i].y + cfg.jitter_sigma * jy};
    if (u < cfg.outlier_prob) {
      const double r = cfg.outlier_range.first + mag * (cfg.outlier_range.second - cfg.outlier_range.first);
      const double a = 2.0 * std::numbers::pi * ang;
      c.x += r * std::cos(a);
      c.y += r * std::sin(a);
      sc.outlier_frames.push_back(i);
    }
    sc.noisy.push_back({BBox::centered(c, cfg.object_w, cfg.object_h), false});
  }
  sc.config = std::move(cfg);
  return sc;
}

struct ScenarioMetrics {
  std::vector<double> corner_error;  // per frame, px; NaN where not registered
  double final_corner_error = std::numeric_limits<double>::quiet_NaN();
  double noisy_rmse = 0.0;
  double corrected_rmse = 0.0;
  double improvement_ratio = 1.0;  // corrected / noisy
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  double precision = 1.0;
  double recall = 1.0;
  std::map<std::string, double> timings_ms;
};

/// RMSE of annotation centers against the true centers over annotated frames.
inline double center_rmse(const Trajectory& traj, std::span<const Point2> truth) {
  require_same_length(traj.size(), truth.size(), "trajectory length differs from ground truth");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (!traj[i].box) continue;
    const double d = distance(traj[i].box->center(), truth[i]);
    sum += d * d;
    ++count;
  }
  return count ? std::sqrt(sum / static_cast<double>(count)) : 0.0;
}

struct PipelineOutputs {
  const AlignmentResult* alignment = nullptr;
  const Trajectory* corrected = nullptr;
  const std::vector<bool>* flagged = nullptr;
  std::map<std::string, double> timings_ms;
};

inline ScenarioMetrics evaluate(const GroundTruthScenario& sc, const PipelineOutputs& out) {
  const std::size_t n = sc.frames.size();
  ScenarioMetrics m;
  m.timings_ms = out.timings_ms;
  if (out.alignment) {
    require_same_length(out.alignment->frames.size(), n, "alignment length differs from scenario");
    m.corner_error.assign(n, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < n; ++i) {
      const FrameAlignment& fa = out.alignment->frames[i];
      if (fa.method == AlignMethod::kFailed) continue;
      m.corner_error[i] = corner_error(fa.cumulative, sc.true_camera[i], sc.config.width, sc.config.height);
    }
    m.final_corner_error = m.corner_error.back();
  }
  m.noisy_rmse = center_rmse(sc.noisy, sc.true_centers);
  m.corrected_rmse = m.noisy_rmse;
  if (out.corrected) m.corrected_rmse = center_rmse(*out.corrected, sc.true_centers);
  m.improvement_ratio = m.noisy_rmse > 0.0 ? m.corrected_rmse / m.noisy_rmse : 1.0;
  if (out.flagged) {
    require_same_length(out.flagged->size(), n, "flag mask length differs from scenario");
    std::vector<bool> injected(n, false);
    for (std::size_t i : sc.outlier_frames) injected[i] = true;
    for (std::size_t i = 0; i < n; ++i) {
      const bool f = (*out.flagged)[i];
      m.true_positives += f && injected[i];
      m.false_positives += f && !injected[i];
      m.false_negatives += !f && injected[i];
    }
    const std::size_t flagged = m.true_positives + m.false_positives;
    const std::size_t positives = m.true_positives + m.false_negatives;
    m.precision = flagged ? static_cast<double>(m.true_positives) / static_cast<double>(flagged) : 1.0;
    m.recall = positives ? static_cast<double>(m.true_positives) / static_cast<double>(positives) : 1.0;
  }
  return m;
}

}  // namespace annoqa
