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

// Enhanced correlation coefficient (ECC) template alignment, forward
// additive, coarse to fine over a 2x2 box pyramid.
//
// The warp maps template coordinates into target coordinates: the template
// pixel at p is compared against target(W(p)).

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "annoqa/error.hpp"
#include "annoqa/homography.hpp"
#include "annoqa/raster.hpp"
#include "annoqa/types.hpp"

namespace annoqa {

enum class WarpModel { kTranslation, kAffine, kHomography };

constexpr int parameter_count(WarpModel m) {
  switch (m) {
    case WarpModel::kTranslation: return 2;
    case WarpModel::kAffine: return 6;
    case WarpModel::kHomography: return 8;
  }
  return 0;
}

constexpr std::string_view to_string(WarpModel m) {
  switch (m) {
    case WarpModel::kTranslation: return "translation";
    case WarpModel::kAffine: return "affine";
    case WarpModel::kHomography: return "homography";
  }
  return "unknown";
}

inline WarpModel parse_warp_model(std::string_view s) {
  if (s == "translation") return WarpModel::kTranslation;
  if (s == "affine") return WarpModel::kAffine;
  if (s == "homography") return WarpModel::kHomography;
  throw Error(ErrorCode::kParse, "unknown warp model: " + std::string(s));
}

struct EccConfig {
  int max_iterations = 50;
  double epsilon = 1e-4;
  int pyramid_levels = 3;
  WarpModel model = WarpModel::kAffine;
  /// Refine an affine result with a full homography on the finest level.
  /// Off by default: on box-sized regions the extra perspective terms
  /// extrapolate poorly to the rest of the frame.
  bool promote_to_homography = false;
  /// Affine model only: before refining, the coarsest level tries integer
  /// shifts of the initial warp within this radius (base-level px), then
  /// solves for a shift alone. Widens the capture range; 0 disables.
  double coarse_search = 8.0;
  double min_rho = 0.6;

  void validate() const {
    if (max_iterations < 1) throw Error(ErrorCode::kInvalidArgument, "ecc max_iterations must be >= 1");
    if (!(coarse_search >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "ecc coarse_search must be >= 0");
    if (!(epsilon > 0.0)) throw Error(ErrorCode::kInvalidArgument, "ecc epsilon must be > 0");
    if (pyramid_levels < 1) throw Error(ErrorCode::kInvalidArgument, "ecc pyramid_levels must be >= 1");
  }
};

struct EccResult {
  Homography warp;
  double rho = -1.0;
  bool converged = false;
  int iterations = 0;
  /// Accepted correlation values per solve, coarsest level first.
  std::vector<std::vector<double>> rho_trace;
};

/// Zero-mean normalized correlation of two equally sized samples.
inline double correlation_coefficient(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) {
    throw Error(ErrorCode::kLengthMismatch, "correlation needs equal non-empty samples");
  }
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(a.size());
  mb /= static_cast<double>(b.size());
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

namespace detail {

inline Eigen::VectorXd warp_to_params(const Eigen::Matrix3d& w, WarpModel model) {
  Eigen::VectorXd p(parameter_count(model));
  switch (model) {
    case WarpModel::kTranslation: p << w(0, 2), w(1, 2); break;
    case WarpModel::kAffine: p << w(0, 0), w(0, 1), w(0, 2), w(1, 0), w(1, 1), w(1, 2); break;
    case WarpModel::kHomography:
      p << w(0, 0), w(0, 1), w(0, 2), w(1, 0), w(1, 1), w(1, 2), w(2, 0), w(2, 1);
      break;
  }
  return p;
}

inline Eigen::Matrix3d params_to_warp(const Eigen::VectorXd& p, WarpModel model) {
  Eigen::Matrix3d w = Eigen::Matrix3d::Identity();
  switch (model) {
    case WarpModel::kTranslation:
      w(0, 2) = p(0);
      w(1, 2) = p(1);
      break;
    case WarpModel::kAffine:
      w << p(0), p(1), p(2), p(3), p(4), p(5), 0, 0, 1;
      break;
    case WarpModel::kHomography:
      w << p(0), p(1), p(2), p(3), p(4), p(5), p(6), p(7), 1;
      break;
  }
  return w;
}

// Closest member of the model family, judged at the region center.
inline Eigen::Matrix3d project_to_model(const Eigen::Matrix3d& w, WarpModel model, Point2 center) {
  Eigen::Matrix3d m = Homography::normalized(w);
  switch (model) {
    case WarpModel::kHomography: return m;
    case WarpModel::kAffine:
      if (m(2, 0) != 0.0 || m(2, 1) != 0.0) {
        // First-order expansion of the projective map about the center.
        const double d = m(2, 0) * center.x + m(2, 1) * center.y + m(2, 2);
        const double px = (m(0, 0) * center.x + m(0, 1) * center.y + m(0, 2)) / d;
        const double py = (m(1, 0) * center.x + m(1, 1) * center.y + m(1, 2)) / d;
        Eigen::Matrix3d a = Eigen::Matrix3d::Identity();
        a(0, 0) = (m(0, 0) - px * m(2, 0)) / d;
        a(0, 1) = (m(0, 1) - px * m(2, 1)) / d;
        a(1, 0) = (m(1, 0) - py * m(2, 0)) / d;
        a(1, 1) = (m(1, 1) - py * m(2, 1)) / d;
        a(0, 2) = px - a(0, 0) * center.x - a(0, 1) * center.y;
        a(1, 2) = py - a(1, 0) * center.x - a(1, 1) * center.y;
        return a;
      }
      return m;
    case WarpModel::kTranslation: {
      const double d = m(2, 0) * center.x + m(2, 1) * center.y + m(2, 2);
      Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
      t(0, 2) = (m(0, 0) * center.x + m(0, 1) * center.y + m(0, 2)) / d - center.x;
      t(1, 2) = (m(1, 0) * center.x + m(1, 1) * center.y + m(1, 2)) / d - center.y;
      return t;
    }
  }
  return m;
}

// Level-l pixel coordinates to level-0 coordinates for 2x2 box pyramids.
inline Eigen::Matrix3d level_to_base(int level) {
  const double s = std::ldexp(1.0, level);
  const double o = 0.5 * (s - 1.0);
  Eigen::Matrix3d d;
  d << s, 0, o, 0, s, o, 0, 0, 1;
  return d;
}

struct EccLevel {
  const GrayImage* target;
  GradientPair grad;
  std::vector<Point2> points;     // template pixel positions at this level
  std::vector<double> templ;      // template intensities at those positions
};

struct EccEvaluation {
  double rho = -1.0;
  std::size_t valid = 0;
  Eigen::MatrixXd jac;            // valid x n
  Eigen::VectorXd iwz;            // zero-mean warped target
  Eigen::VectorXd tz;             // zero-mean template (valid subset)
};

inline EccEvaluation evaluate_warp(const EccLevel& lvl, const Eigen::Matrix3d& w, WarpModel model) {
  const int n = parameter_count(model);
  const GrayImage& tgt = *lvl.target;
  const double xmax = tgt.width() - 1.0, ymax = tgt.height() - 1.0;
  EccEvaluation ev;
  const std::size_t np = lvl.points.size();
  ev.jac.resize(static_cast<Eigen::Index>(np), n);
  ev.iwz.resize(static_cast<Eigen::Index>(np));
  ev.tz.resize(static_cast<Eigen::Index>(np));
  Eigen::Index k = 0;
  for (std::size_t i = 0; i < np; ++i) {
    const double x = lvl.points[i].x, y = lvl.points[i].y;
    const double d = w(2, 0) * x + w(2, 1) * y + w(2, 2);
    if (!(std::abs(d) > 1e-12)) continue;
    const double xw = (w(0, 0) * x + w(0, 1) * y + w(0, 2)) / d;
    const double yw = (w(1, 0) * x + w(1, 1) * y + w(1, 2)) / d;
    if (!(xw >= 0.0 && yw >= 0.0 && xw <= xmax && yw <= ymax)) continue;
    const double gx = sample_bilinear(lvl.grad.gx, xw, yw);
    const double gy = sample_bilinear(lvl.grad.gy, xw, yw);
    ev.iwz(k) = sample_bilinear(tgt, xw, yw);
    ev.tz(k) = lvl.templ[i];
    switch (model) {
      case WarpModel::kTranslation:
        ev.jac(k, 0) = gx;
        ev.jac(k, 1) = gy;
        break;
      case WarpModel::kAffine:
        ev.jac.row(k) << gx * x, gx * y, gx, gy * x, gy * y, gy;
        break;
      case WarpModel::kHomography: {
        const double inv = 1.0 / d;
        ev.jac.row(k) << gx * x * inv, gx * y * inv, gx * inv, gy * x * inv, gy * y * inv, gy * inv,
            -(gx * xw + gy * yw) * x * inv, -(gx * xw + gy * yw) * y * inv;
        break;
      }
    }
    ++k;
  }
  ev.valid = static_cast<std::size_t>(k);
  ev.jac.conservativeResize(k, n);
  ev.iwz.conservativeResize(k);
  ev.tz.conservativeResize(k);
  if (k < 2 * n || static_cast<std::size_t>(k) * 2 < np) {
    ev.rho = -1.0;
    ev.valid = 0;
    return ev;
  }
  ev.iwz.array() -= ev.iwz.mean();
  ev.tz.array() -= ev.tz.mean();
  const double ni = ev.iwz.norm(), nt = ev.tz.norm();
  ev.rho = (ni > 0.0 && nt > 0.0) ? ev.tz.dot(ev.iwz) / (ni * nt) : 0.0;
  return ev;
}

struct SolveOutcome {
  Eigen::Matrix3d warp;
  double rho = -1.0;
  bool converged = false;
  int iterations = 0;
  std::vector<double> trace;
};

inline SolveOutcome solve_level(const EccLevel& lvl, Eigen::Matrix3d warp, WarpModel model,
                                const EccConfig& cfg) {
  SolveOutcome out;
  EccEvaluation cur = evaluate_warp(lvl, warp, model);
  out.warp = warp;
  out.rho = cur.rho;
  if (cur.valid == 0) return out;
  out.trace.push_back(cur.rho);
  Eigen::VectorXd params = warp_to_params(warp, model);
  for (int it = 0; it < cfg.max_iterations; ++it) {
    out.iterations = it + 1;
    const Eigen::MatrixXd hess = cur.jac.transpose() * cur.jac;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    if (ldlt.info() != Eigen::Success) break;
    const Eigen::VectorXd gw = cur.jac.transpose() * cur.iwz;
    const Eigen::VectorXd gt = cur.jac.transpose() * cur.tz;
    const Eigen::VectorXd hgw = ldlt.solve(gw);
    const double num = cur.iwz.squaredNorm() - gw.dot(hgw);
    const double den = cur.tz.dot(cur.iwz) - gt.dot(hgw);
    double lambda;
    if (den > 0.0) {
      lambda = num / den;
    } else {
      // Correlation would be minimized; take the step that restores a
      // positive correlation instead.
      const double tt = cur.tz.squaredNorm() - gt.dot(ldlt.solve(gt));
      if (!(tt > 0.0) || !(num > 0.0)) break;
      lambda = std::sqrt(num / tt);
    }
    const Eigen::VectorXd err = lambda * cur.tz - cur.iwz;
    Eigen::VectorXd delta = ldlt.solve(cur.jac.transpose() * err);
    if (!delta.allFinite()) break;

    bool accepted = false;
    for (int attempt = 0; attempt <= 5; ++attempt) {
      const Eigen::VectorXd trial_params = params + delta;
      Eigen::Matrix3d trial_warp = params_to_warp(trial_params, model);
      if (model == WarpModel::kTranslation) {
        // Shift only; the linear part of the starting warp is kept.
        trial_warp = warp;
        trial_warp(0, 2) = trial_params(0);
        trial_warp(1, 2) = trial_params(1);
      }
      EccEvaluation trial = evaluate_warp(lvl, trial_warp, model);
      if (trial.valid > 0 && trial.rho >= cur.rho - 1e-6) {
        params = trial_params;
        out.warp = trial_warp;
        cur = std::move(trial);
        accepted = true;
        break;
      }
      delta *= 0.5;
    }
    if (!accepted) break;
    out.rho = cur.rho;
    out.trace.push_back(cur.rho);
    if (delta.norm() < cfg.epsilon) {
      out.converged = true;
      break;
    }
  }
  return out;
}

inline EccLevel make_level(const GrayImage& templ, const GrayImage& target, const BBox& region,
                           int level) {
  EccLevel lvl{&target, gradients(target), {}, {}};
  // Template pixels whose base-level position lies inside the region.
  const double s = std::ldexp(1.0, level);
  const double o = 0.5 * (s - 1.0);
  const int x0 = std::max(0, static_cast<int>(std::ceil((region.x - o) / s)));
  const int y0 = std::max(0, static_cast<int>(std::ceil((region.y - o) / s)));
  const int x1 = std::min(templ.width() - 1, static_cast<int>(std::floor((region.x + region.w - 1.0 - o) / s)));
  const int y1 = std::min(templ.height() - 1, static_cast<int>(std::floor((region.y + region.h - 1.0 - o) / s)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      lvl.points.push_back({double(x), double(y)});
      lvl.templ.push_back(templ.at(x, y));
    }
  }
  return lvl;
}

}  // namespace detail

/// Maximizes the zero-mean normalized correlation between the template
/// region and the warped target. `init` maps template to target coordinates.
inline EccResult ecc_align(const GrayImage& templ, const GrayImage& target, const BBox& region,
                           const Homography& init, const EccConfig& cfg) {
  cfg.validate();
  if (!region.valid() || region.x < 0.0 || region.y < 0.0 ||
      region.x + region.w > templ.width() || region.y + region.h > templ.height()) {
    throw Error(ErrorCode::kInvalidArgument, "template region must lie inside the template image");
  }
  if (region.w * region.h < 64.0) {
    throw Error(ErrorCode::kRegionTooSmall, "template region smaller than 64 px^2");
  }

  // Keep at least 12 px on the short side of the region at the coarsest level.
  int levels = 1;
  while (levels < cfg.pyramid_levels &&
         std::min(region.w, region.h) / std::ldexp(1.0, levels) >= 12.0 &&
         std::min(target.width(), target.height()) / std::ldexp(1.0, levels) >= 16.0) {
    ++levels;
  }
  std::vector<GrayImage> templ_pyr{templ}, target_pyr{target};
  for (int l = 1; l < levels; ++l) {
    templ_pyr.push_back(downsample2(templ_pyr.back()));
    target_pyr.push_back(downsample2(target_pyr.back()));
  }

  {
    const detail::EccLevel base = detail::make_level(templ, target, region, 0);
    double mean = 0.0;
    for (double v : base.templ) mean += v;
    mean /= static_cast<double>(base.templ.size());
    double var = 0.0;
    for (double v : base.templ) var += (v - mean) * (v - mean);
    var /= static_cast<double>(base.templ.size());
    if (!(var > 1e-10)) {
      throw Error(ErrorCode::kDegenerateTemplate, "template region has no intensity variance");
    }
  }

  const Point2 center = region.center();
  Eigen::Matrix3d warp0 = detail::project_to_model(init.matrix(), cfg.model, center);
  EccResult result;
  bool finest_converged = false;
  int iterations = 0;
  double rho = -1.0;
  for (int l = levels - 1; l >= 0; --l) {
    const Eigen::Matrix3d d = detail::level_to_base(l);
    const Eigen::Matrix3d d_inv = d.inverse();
    const detail::EccLevel lvl = detail::make_level(templ_pyr[l], target_pyr[l], region, l);
    if (l == levels - 1 && cfg.coarse_search > 0.0 && cfg.model == WarpModel::kAffine) {
      const Eigen::Matrix3d start = d_inv * warp0 * d;
      Eigen::Matrix3d best = start;
      double best_rho = detail::evaluate_warp(lvl, start, WarpModel::kTranslation).rho;
      const int r = static_cast<int>(std::ceil(cfg.coarse_search / std::ldexp(1.0, l)));
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          if (dx == 0 && dy == 0) continue;
          Eigen::Matrix3d trial = start;
          trial(0, 2) += dx;
          trial(1, 2) += dy;
          const double rho_t = detail::evaluate_warp(lvl, trial, WarpModel::kTranslation).rho;
          if (rho_t > best_rho) {
            best_rho = rho_t;
            best = trial;
          }
        }
      }
      detail::SolveOutcome t = detail::solve_level(lvl, best, WarpModel::kTranslation, cfg);
      if (!t.trace.empty()) warp0 = Homography::normalized(d * t.warp * d_inv);
      iterations += t.iterations;
      result.rho_trace.push_back(std::move(t.trace));
    }
    detail::SolveOutcome s = detail::solve_level(lvl, d_inv * warp0 * d, cfg.model, cfg);
    warp0 = Homography::normalized(d * s.warp * d_inv);
    iterations += s.iterations;
    rho = s.rho;
    result.rho_trace.push_back(std::move(s.trace));
    if (l == 0) finest_converged = s.converged;
  }
  if (cfg.model == WarpModel::kAffine && cfg.promote_to_homography) {
    const detail::EccLevel lvl = detail::make_level(templ, target, region, 0);
    detail::SolveOutcome s = detail::solve_level(lvl, warp0, WarpModel::kHomography, cfg);
    iterations += s.iterations;
    if (s.rho >= rho - 1e-6 && s.rho > -1.0) {
      warp0 = Homography::normalized(s.warp);
      rho = s.rho;
      finest_converged = finest_converged || s.converged;
    }
    result.rho_trace.push_back(std::move(s.trace));
  }

  if (!std::isfinite(rho) || rho <= -1.0) {
    throw Error(ErrorCode::kNonConvergence, "ECC warp left the target image");
  }
  if (!finest_converged && rho < cfg.min_rho) {
    throw Error(ErrorCode::kNonConvergence, "ECC did not converge and correlation is below min_rho");
  }
  try {
    result.warp = Homography(warp0);
  } catch (const Error&) {
    throw Error(ErrorCode::kNonConvergence, "ECC produced a singular warp");
  }
  result.rho = rho;
  result.converged = finest_converged;
  result.iterations = iterations;
  return result;
}

}  // namespace annoqa
