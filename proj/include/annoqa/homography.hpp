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

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "annoqa/error.hpp"

namespace annoqa {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct PointPair {
  Point2 src;
  Point2 dst;
};

/// 3x3 projective transform. Stored normalized: m(2,2) == 1 when that entry
/// is usable, otherwise unit Frobenius norm with non-negative trace.
class Homography {
 public:
  Homography() : m_(Eigen::Matrix3d::Identity()) {}

  explicit Homography(const Eigen::Matrix3d& m) : m_(normalized(m)) {
    if (!m_.allFinite()) {
      throw Error(ErrorCode::kInvalidArgument, "homography has non-finite entries");
    }
    if (std::abs(m_.determinant()) <= 1e-12) {
      throw Error(ErrorCode::kSingularMatrix, "homography is not invertible");
    }
  }

  static Homography identity() { return Homography(); }

  static Homography translation(double tx, double ty) {
    Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
    m(0, 2) = tx;
    m(1, 2) = ty;
    return Homography(m);
  }

  static Homography scaling(double sx, double sy) {
    Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
    m(0, 0) = sx;
    m(1, 1) = sy;
    return Homography(m);
  }

  /// Rotation (radians) and isotropic scale about `center`, then translation.
  static Homography similarity(double angle, double scale, double tx, double ty,
                               Point2 center = {}) {
    const double c = scale * std::cos(angle);
    const double s = scale * std::sin(angle);
    Eigen::Matrix3d m;
    m << c, -s, center.x - c * center.x + s * center.y + tx,
        s, c, center.y - s * center.x - c * center.y + ty,
        0, 0, 1;
    return Homography(m);
  }

  /// Row-major 9-vector, the serialized form.
  static Homography from_row_major(std::span<const double> v) {
    if (v.size() != 9) {
      throw Error(ErrorCode::kInvalidArgument, "homography needs 9 entries");
    }
    Eigen::Matrix3d m;
    m << v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8];
    return Homography(m);
  }

  std::array<double, 9> row_major() const {
    return {m_(0, 0), m_(0, 1), m_(0, 2), m_(1, 0), m_(1, 1),
            m_(1, 2), m_(2, 0), m_(2, 1), m_(2, 2)};
  }

  const Eigen::Matrix3d& matrix() const noexcept { return m_; }

  static Eigen::Matrix3d normalized(const Eigen::Matrix3d& m) {
    const double norm = m.norm();
    if (norm > 0.0 && std::abs(m(2, 2)) > 1e-12 * norm) return m / m(2, 2);
    if (norm == 0.0) return m;
    Eigen::Matrix3d out = m / norm;
    if (out.trace() < 0.0) out = -out;
    return out;
  }

 private:
  Eigen::Matrix3d m_;
};

inline Point2 apply(const Homography& h, Point2 p) {
  const Eigen::Matrix3d& m = h.matrix();
  const double w = m(2, 0) * p.x + m(2, 1) * p.y + m(2, 2);
  if (std::abs(w) < 1e-12) {
    throw Error(ErrorCode::kPointAtInfinity, "point maps to infinity");
  }
  return {(m(0, 0) * p.x + m(0, 1) * p.y + m(0, 2)) / w,
          (m(1, 0) * p.x + m(1, 1) * p.y + m(1, 2)) / w};
}

/// compose(a, b) applies b first, then a.
inline Homography compose(const Homography& a, const Homography& b) {
  return Homography(Eigen::Matrix3d(a.matrix() * b.matrix()));
}

inline Homography invert(const Homography& h) {
  const Eigen::Matrix3d& m = h.matrix();
  const double det = m.determinant();
  if (!(std::abs(det) > 1e-12)) {
    throw Error(ErrorCode::kSingularMatrix, "cannot invert singular homography");
  }
  return Homography(Eigen::Matrix3d(m.inverse()));
}

/// Largest displacement of the four corners of [0,w]x[0,h] between two maps.
inline double corner_error(const Homography& a, const Homography& b, double width,
                           double height) {
  double worst = 0.0;
  for (Point2 c : {Point2{0, 0}, Point2{width, 0}, Point2{0, height}, Point2{width, height}}) {
    worst = std::max(worst, distance(apply(a, c), apply(b, c)));
  }
  return worst;
}

namespace detail {

// Translate to the centroid and scale so the mean distance is sqrt(2).
inline Eigen::Matrix3d hartley_transform(std::span<const Point2> pts) {
  double cx = 0.0, cy = 0.0;
  for (const Point2& p : pts) {
    cx += p.x;
    cy += p.y;
  }
  cx /= static_cast<double>(pts.size());
  cy /= static_cast<double>(pts.size());
  double mean = 0.0;
  for (const Point2& p : pts) mean += std::hypot(p.x - cx, p.y - cy);
  mean /= static_cast<double>(pts.size());
  if (!(mean > 1e-12)) {
    throw Error(ErrorCode::kDegenerateConfiguration, "all points coincide");
  }
  const double s = std::sqrt(2.0) / mean;
  Eigen::Matrix3d t;
  t << s, 0, -s * cx, 0, s, -s * cy, 0, 0, 1;
  return t;
}

inline Point2 transform_point(const Eigen::Matrix3d& t, Point2 p) {
  return {t(0, 0) * p.x + t(0, 1) * p.y + t(0, 2), t(1, 0) * p.x + t(1, 1) * p.y + t(1, 2)};
}

inline bool collinear(Point2 a, Point2 b, Point2 c, double tol) {
  const double cross = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
  const double scale = std::max({distance(a, b), distance(a, c), distance(b, c), 1e-300});
  return std::abs(cross) <= tol * scale * scale;
}

inline bool has_collinear_triple(std::span<const Point2> quad, double tol = 1e-9) {
  for (std::size_t i = 0; i < quad.size(); ++i)
    for (std::size_t j = i + 1; j < quad.size(); ++j)
      for (std::size_t k = j + 1; k < quad.size(); ++k)
        if (collinear(quad[i], quad[j], quad[k], tol)) return true;
  return false;
}

}  // namespace detail

/// Normalized direct linear transform; least squares for more than 4 pairs.
inline Homography estimate_dlt(std::span<const PointPair> pairs) {
  const std::size_t n = pairs.size();
  if (n < 4) {
    throw Error(ErrorCode::kInsufficientPairs, "DLT needs at least 4 point pairs");
  }
  std::vector<Point2> src(n), dst(n);
  for (std::size_t i = 0; i < n; ++i) {
    src[i] = pairs[i].src;
    dst[i] = pairs[i].dst;
    if (!std::isfinite(src[i].x) || !std::isfinite(src[i].y) || !std::isfinite(dst[i].x) ||
        !std::isfinite(dst[i].y)) {
      throw Error(ErrorCode::kInvalidArgument, "non-finite point coordinates");
    }
  }
  if (n == 4 && (detail::has_collinear_triple(src) || detail::has_collinear_triple(dst))) {
    throw Error(ErrorCode::kDegenerateConfiguration, "collinear minimal set");
  }
  const Eigen::Matrix3d ts = detail::hartley_transform(src);
  const Eigen::Matrix3d td = detail::hartley_transform(dst);

  Eigen::MatrixXd a(2 * n, 9);
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 p = detail::transform_point(ts, src[i]);
    const Point2 q = detail::transform_point(td, dst[i]);
    a.row(2 * i) << -p.x, -p.y, -1, 0, 0, 0, q.x * p.x, q.x * p.y, q.x;
    a.row(2 * i + 1) << 0, 0, 0, -p.x, -p.y, -1, q.y * p.x, q.y * p.y, q.y;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  // Rank 8 is required for a unique solution.
  if (sv.size() < 8 || !(sv(7) > 1e-10 * sv(0))) {
    throw Error(ErrorCode::kDegenerateConfiguration, "rank-deficient DLT system");
  }
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  const Eigen::Matrix3d m = td.inverse() * hn * ts;
  try {
    return Homography(m);
  } catch (const Error&) {
    throw Error(ErrorCode::kDegenerateConfiguration, "DLT produced a singular homography");
  }
}

struct RansacConfig {
  int max_iterations = 2000;
  double inlier_threshold = 3.0;
  double confidence = 0.995;
  std::uint64_t seed = 0;

  void validate() const {
    if (max_iterations < 1) throw Error(ErrorCode::kInvalidArgument, "max_iterations must be >= 1");
    if (!(inlier_threshold > 0.0)) throw Error(ErrorCode::kInvalidArgument, "inlier threshold must be > 0");
    if (!(confidence > 0.0 && confidence < 1.0))
      throw Error(ErrorCode::kInvalidArgument, "confidence must lie in (0,1)");
  }
};

struct RansacResult {
  Homography h;
  std::vector<bool> inliers;
  std::size_t inlier_count = 0;
  double mean_error = 0.0;  // mean reprojection error over inliers, pixels
  int iterations = 0;
};

namespace detail {

// Unbiased draw in [0, n) that does not depend on the standard library's
// distribution implementation.
inline std::size_t draw_index(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t range = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return static_cast<std::size_t>(v % range);
}

struct Consensus {
  std::size_t count = 0;
  double sse = std::numeric_limits<double>::infinity();
};

inline Consensus score(const Homography& h, std::span<const PointPair> pairs, double threshold,
                       std::vector<bool>* mask) {
  Consensus c{0, 0.0};
  const double t2 = threshold * threshold;
  if (mask) mask->assign(pairs.size(), false);
  const Eigen::Matrix3d& m = h.matrix();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Point2 p = pairs[i].src;
    const double w = m(2, 0) * p.x + m(2, 1) * p.y + m(2, 2);
    if (std::abs(w) < 1e-12) continue;
    const double dx = (m(0, 0) * p.x + m(0, 1) * p.y + m(0, 2)) / w - pairs[i].dst.x;
    const double dy = (m(1, 0) * p.x + m(1, 1) * p.y + m(1, 2)) / w - pairs[i].dst.y;
    const double e2 = dx * dx + dy * dy;
    if (e2 < t2) {
      ++c.count;
      c.sse += e2;
      if (mask) (*mask)[i] = true;
    }
  }
  return c;
}

inline bool better(const Consensus& a, const Consensus& b) {
  return a.count > b.count || (a.count == b.count && a.sse < b.sse);
}

}  // namespace detail

/// Hypothesize-and-verify over minimal 4-point samples with adaptive
/// iteration count; the winning consensus set is refit with DLT.
inline RansacResult estimate_ransac(std::span<const PointPair> pairs, const RansacConfig& cfg) {
  cfg.validate();
  const std::size_t n = pairs.size();
  if (n < 4) {
    throw Error(ErrorCode::kInsufficientPairs, "RANSAC needs at least 4 point pairs");
  }
  std::mt19937_64 rng(cfg.seed);
  Homography best_h;
  detail::Consensus best;
  bool have_model = false;
  long long needed = cfg.max_iterations;
  int it = 0;
  std::array<PointPair, 4> sample;
  std::array<Point2, 4> quad_src, quad_dst;
  for (; it < needed && it < cfg.max_iterations; ++it) {
    std::array<std::size_t, 4> idx{};
    for (int k = 0; k < 4; ++k) {
      bool fresh;
      do {
        idx[k] = detail::draw_index(rng, n);
        fresh = true;
        for (int j = 0; j < k; ++j) fresh = fresh && idx[j] != idx[k];
      } while (!fresh);
      sample[k] = pairs[idx[k]];
      quad_src[k] = sample[k].src;
      quad_dst[k] = sample[k].dst;
    }
    if (detail::has_collinear_triple(quad_src, 1e-6) ||
        detail::has_collinear_triple(quad_dst, 1e-6)) {
      continue;
    }
    Homography h;
    try {
      h = estimate_dlt(sample);
    } catch (const Error&) {
      continue;
    }
    const detail::Consensus c = detail::score(h, pairs, cfg.inlier_threshold, nullptr);
    if (!have_model || detail::better(c, best)) {
      best = c;
      best_h = h;
      have_model = true;
      const double w = static_cast<double>(c.count) / static_cast<double>(n);
      const double p_all = std::pow(w, 4);
      if (p_all >= 1.0) {
        needed = it + 1;
      } else if (p_all > 0.0) {
        const double k = std::log(1.0 - cfg.confidence) / std::log(1.0 - p_all);
        if (k < static_cast<double>(cfg.max_iterations)) {
          needed = static_cast<long long>(std::ceil(k));
        }
      }
    }
  }
  if (!have_model || best.count < 4) {
    throw Error(ErrorCode::kNoConsensus, "RANSAC found no consensus of 4 or more pairs");
  }

  std::vector<bool> mask;
  detail::score(best_h, pairs, cfg.inlier_threshold, &mask);
  // Refit on the consensus set until the set stops changing.
  for (int round = 0; round < 5; ++round) {
    std::vector<PointPair> consensus;
    for (std::size_t i = 0; i < n; ++i)
      if (mask[i]) consensus.push_back(pairs[i]);
    Homography refit;
    try {
      refit = estimate_dlt(consensus);
    } catch (const Error&) {
      break;
    }
    std::vector<bool> refit_mask;
    const detail::Consensus c = detail::score(refit, pairs, cfg.inlier_threshold, &refit_mask);
    if (c.count < best.count) break;
    const bool unchanged = refit_mask == mask;
    best = c;
    best_h = refit;
    mask = std::move(refit_mask);
    if (unchanged) break;
  }

  RansacResult out;
  out.h = best_h;
  out.inliers = std::move(mask);
  out.inlier_count = best.count;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (out.inliers[i]) total += distance(apply(best_h, pairs[i].src), pairs[i].dst);
  }
  out.mean_error = best.count ? total / static_cast<double>(best.count) : 0.0;
  out.iterations = it;
  return out;
}

}  // namespace annoqa
