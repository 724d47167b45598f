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

// Annotation audit: reprojection of smoothed canonical centers, outlier
// flags, success-rate curves, re-centering corrections and gap filling.
//
// One decision rule is shared by flagging and correction: a frame is an
// outlier iff its center distance is strictly greater than the threshold.
// A frame counts as a success iff the distance is strictly smaller.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "annoqa/align.hpp"
#include "annoqa/error.hpp"
#include "annoqa/smooth.hpp"
#include "annoqa/types.hpp"

namespace annoqa {

using Distances = std::vector<std::optional<double>>;

struct OutlierReport {
  Distances distance;
  std::vector<bool> flagged;
  double threshold = 0.0;
  std::size_t evaluated = 0;
  std::size_t flagged_count = 0;
};

struct CorrectionResult {
  Trajectory corrected;
  std::vector<bool> replaced_mask;
  std::size_t replaced = 0;
  std::size_t evaluable = 0;
  double replaced_fraction = 0.0;
};

struct CurvePoint {
  double threshold = 0.0;
  double value = 0.0;
};

/// Frame size used to keep re-centered boxes at least half visible.
struct FrameBounds {
  double width = 0.0;
  double height = 0.0;
};

/// Canonical centers mapped back into each frame through the inverse chain.
inline CenterTrack reproject(const CanonicalTrajectory& smoothed, const AlignmentResult& alignment) {
  require_same_length(smoothed.size(), alignment.frames.size(), "canonical length differs from alignment");
  CenterTrack out(smoothed.size());
  for (std::size_t i = 0; i < smoothed.size(); ++i) {
    const FrameAlignment& fa = alignment.frames[i];
    if (!smoothed[i] || fa.method == AlignMethod::kFailed) continue;
    try {
      out[i] = apply(invert(fa.cumulative), *smoothed[i]);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kPointAtInfinity) throw;
    }
  }
  return out;
}

inline Distances distances(const Trajectory& traj, const CenterTrack& centers) {
  require_same_length(traj.size(), centers.size(), "annotation length differs from centers");
  Distances d(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (traj[i].box && centers[i]) d[i] = distance(traj[i].box->center(), *centers[i]);
  }
  return d;
}

inline void require_positive_threshold(double tau) {
  if (!(tau > 0.0) || std::isnan(tau)) {
    throw Error(ErrorCode::kInvalidArgument, "threshold must be > 0");
  }
}

/// Intermediate tracks of one audit pass.
struct SmoothedTrack {
  CanonicalTrajectory canonical;
  CanonicalTrajectory smoothed;
  CenterTrack reprojected;
  Distances distance;
};

/// to_canonical, smoothing, reprojection and distances in one call.
inline SmoothedTrack smooth_and_reproject(const AlignmentResult& alignment, const Trajectory& traj,
                                          const SmootherSpec& spec) {
  SmoothedTrack t;
  t.canonical = to_canonical(alignment, traj);
  t.smoothed = smooth_canonical(t.canonical, spec);
  t.reprojected = reproject(t.smoothed, alignment);
  t.distance = distances(traj, t.reprojected);
  return t;
}

inline bool exceeds(const std::optional<double>& d, double tau) { return d && *d > tau; }

inline OutlierReport flag_outliers(const Distances& d, double threshold = 100.0) {
  require_positive_threshold(threshold);
  OutlierReport r;
  r.distance = d;
  r.threshold = threshold;
  r.flagged.assign(d.size(), false);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!d[i]) continue;
    ++r.evaluated;
    if (exceeds(d[i], threshold)) {
      r.flagged[i] = true;
      ++r.flagged_count;
    }
  }
  return r;
}

/// rate(tau) = #(distance < tau) / #(distance present).
inline std::vector<CurvePoint> success_rate_curve(const Distances& d, std::span<const double> thresholds) {
  if (thresholds.empty()) throw Error(ErrorCode::kInvalidArgument, "threshold grid is empty");
  for (double t : thresholds) require_positive_threshold(t);
  std::vector<double> present;
  for (const auto& v : d)
    if (v) present.push_back(*v);
  if (present.empty()) throw Error(ErrorCode::kNoEvaluableFrames, "no frame has both annotation and smoothed center");
  std::sort(present.begin(), present.end());
  std::vector<CurvePoint> curve;
  for (double t : thresholds) {
    const auto below = std::lower_bound(present.begin(), present.end(), t) - present.begin();
    curve.push_back({t, static_cast<double>(below) / static_cast<double>(present.size())});
  }
  return curve;
}

namespace detail {

// Smallest shift of [lo, lo+len) so that at least `frac` of it overlaps [0, limit).
inline double shift_into(double lo, double len, double limit, double frac) {
  const double need = std::min(frac * len, limit);
  const double overlap = std::max(0.0, std::min(lo + len, limit) - std::max(lo, 0.0));
  if (overlap >= need) return lo;
  if (lo < 0.0) return need - len;
  return limit - need;
}

inline double overlap_fraction(double lo, double len, double limit) {
  return std::max(0.0, std::min(lo + len, limit) - std::max(lo, 0.0)) / len;
}

}  // namespace detail

/// Translates (never resizes) a box so at least half its area is inside.
inline BBox keep_half_inside(BBox box, FrameBounds bounds) {
  const double fx = detail::overlap_fraction(box.x, box.w, bounds.width);
  const double fy = detail::overlap_fraction(box.y, box.h, bounds.height);
  if (fx * fy >= 0.5) return box;
  const double ax = std::sqrt(0.5);
  if (fx >= ax || fy >= ax) {
    // Fix the worse axis given the better one.
    if (fx >= fy) {
      box.y = detail::shift_into(box.y, box.h, bounds.height, std::min(1.0, 0.5 / fx));
    } else {
      box.x = detail::shift_into(box.x, box.w, bounds.width, std::min(1.0, 0.5 / fy));
    }
    if (detail::overlap_fraction(box.x, box.w, bounds.width) *
            detail::overlap_fraction(box.y, box.h, bounds.height) >= 0.5 - 1e-12) {
      return box;
    }
  }
  box.x = detail::shift_into(box.x, box.w, bounds.width, ax);
  box.y = detail::shift_into(box.y, box.h, bounds.height, ax);
  return box;
}

/// Re-centers boxes whose center distance exceeds the threshold on the
/// smoothed center, keeping their size.
inline CorrectionResult correct(const Trajectory& traj, const CenterTrack& centers, double threshold,
                                std::optional<FrameBounds> bounds = std::nullopt) {
  require_positive_threshold(threshold);
  const Distances d = distances(traj, centers);
  CorrectionResult r;
  r.corrected = traj;
  r.replaced_mask.assign(traj.size(), false);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (!d[i]) continue;
    ++r.evaluable;
    if (!exceeds(d[i], threshold)) continue;
    const BBox& old = *traj[i].box;
    BBox moved = BBox::centered(*centers[i], old.w, old.h);
    if (bounds) moved = keep_half_inside(moved, *bounds);
    r.corrected[i].box = moved;
    r.replaced_mask[i] = true;
    ++r.replaced;
  }
  r.replaced_fraction = r.evaluable ? static_cast<double>(r.replaced) / static_cast<double>(r.evaluable) : 0.0;
  return r;
}

struct ReplacedRow {
  double threshold = 0.0;
  std::size_t replaced = 0;
  std::size_t evaluable = 0;
  double fraction = 0.0;
};

inline std::vector<ReplacedRow> replaced_stats(const Trajectory& traj, const CenterTrack& centers,
                                               std::span<const double> thresholds) {
  std::vector<ReplacedRow> rows;
  for (double t : thresholds) {
    const CorrectionResult r = correct(traj, centers, t);
    rows.push_back({t, r.replaced, r.evaluable, r.replaced_fraction});
  }
  return rows;
}

/// Fills frames without an annotation (and not marked occluded) with a box
/// centered on the smoothed canonical trajectory evaluated at that frame,
/// sized by linear interpolation between the nearest annotated neighbours.
inline Trajectory extrapolate_missing(const Trajectory& traj, const AlignmentResult& alignment,
                                      const SmootherSpec& spec) {
  require_same_length(traj.size(), alignment.frames.size(), "annotation length differs from alignment");
  const CanonicalTrajectory canonical = to_canonical(alignment, traj);

  std::vector<std::int64_t> queries;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (!traj[i].box && !traj[i].occluded && alignment.frames[i].method != AlignMethod::kFailed) {
      queries.push_back(static_cast<std::int64_t>(i));
    }
  }
  Trajectory out = traj;
  if (queries.empty()) return out;

  std::vector<std::size_t> annotated;
  for (std::size_t i = 0; i < traj.size(); ++i)
    if (traj[i].box) annotated.push_back(i);

  // Frames beyond the smoother's reach stay empty.
  std::int64_t lo = 0, hi = 0;
  bool any = false;
  for (std::size_t i = 0; i < canonical.size(); ++i) {
    if (!canonical[i]) continue;
    if (!any) lo = static_cast<std::int64_t>(i);
    hi = static_cast<std::int64_t>(i);
    any = true;
  }
  if (!any) throw Error(ErrorCode::kTooFewPoints, "no annotated frame could be registered");
  std::vector<std::int64_t> reachable;
  for (std::int64_t q : queries)
    if (q >= lo - spec.window && q <= hi + spec.window) reachable.push_back(q);
  if (reachable.empty()) return out;

  const std::vector<Point2> centers = evaluate_canonical(canonical, reachable, spec);
  for (std::size_t k = 0; k < reachable.size(); ++k) {
    const std::size_t i = static_cast<std::size_t>(reachable[k]);
    Point2 c;
    try {
      c = apply(invert(alignment.frames[i].cumulative), centers[k]);
    } catch (const Error&) {
      continue;
    }
    const auto after = std::lower_bound(annotated.begin(), annotated.end(), i);
    double w, h;
    if (after == annotated.end()) {
      w = traj[annotated.back()].box->w;
      h = traj[annotated.back()].box->h;
    } else if (after == annotated.begin()) {
      w = traj[*after].box->w;
      h = traj[*after].box->h;
    } else {
      const std::size_t a = *(after - 1), b = *after;
      const double f = static_cast<double>(i - a) / static_cast<double>(b - a);
      w = (1.0 - f) * traj[a].box->w + f * traj[b].box->w;
      h = (1.0 - f) * traj[a].box->h + f * traj[b].box->h;
    }
    out[i].box = BBox::centered(c, w, h);
  }
  return out;
}

}  // namespace annoqa
