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

#include <cmath>
#include <optional>
#include <vector>

#include "annoqa/error.hpp"
#include "annoqa/homography.hpp"

namespace annoqa {

/// Axis-aligned box, top-left corner plus size, in pixels.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  bool valid() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) && std::isfinite(h) &&
           w > 0.0 && h > 0.0;
  }
  Point2 center() const { return {x + 0.5 * w, y + 0.5 * h}; }

  static BBox centered(Point2 c, double w, double h) {
    return {c.x - 0.5 * w, c.y - 0.5 * h, w, h};
  }

  friend bool operator==(const BBox&, const BBox&) = default;
};

struct FrameAnnotation {
  std::optional<BBox> box;
  /// Dataset marks the target as absent/occluded in this frame.
  bool occluded = false;

  friend bool operator==(const FrameAnnotation&, const FrameAnnotation&) = default;
};

/// One entry per frame of the sequence, in image coordinates.
using Trajectory = std::vector<FrameAnnotation>;

/// Per-frame optional centers; in frame-0 coordinates when canonical.
using CenterTrack = std::vector<std::optional<Point2>>;
using CanonicalTrajectory = CenterTrack;

inline Trajectory make_trajectory(const std::vector<BBox>& boxes) {
  Trajectory t;
  t.reserve(boxes.size());
  for (const BBox& b : boxes) t.push_back({b, false});
  return t;
}

inline CenterTrack centers_of(const Trajectory& traj) {
  CenterTrack out(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i)
    if (traj[i].box) out[i] = traj[i].box->center();
  return out;
}

inline void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw Error(ErrorCode::kLengthMismatch, what);
}

}  // namespace annoqa
