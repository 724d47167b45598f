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

// Plain-text artifacts: CSV tables, the raw-vs-smoothed SVG overlay and
// the multi-sequence summary.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "annoqa/annotate.hpp"
#include "annoqa/error.hpp"
#include "annoqa/io.hpp"

namespace annoqa {

inline std::string canonical_csv(const CanonicalTrajectory& raw, const CanonicalTrajectory& smoothed) {
  require_same_length(raw.size(), smoothed.size(), "raw and smoothed tracks differ in length");
  std::string out = "frame,x,y,smoothed_x,smoothed_y\n";
  auto cell = [](const std::optional<Point2>& p, bool x) { return p ? format_real(x ? p->x : p->y) : std::string(); };
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out += std::to_string(i) + "," + cell(raw[i], true) + "," + cell(raw[i], false) + "," + cell(smoothed[i], true) +
           "," + cell(smoothed[i], false) + "\n";
  }
  return out;
}

inline std::string curve_csv(const std::vector<CurvePoint>& curve) {
  std::string out = "threshold,success_rate\n";
  for (const CurvePoint& p : curve) out += format_real(p.threshold) + "," + format_real(p.value) + "\n";
  return out;
}

inline std::string replaced_csv(const std::vector<ReplacedRow>& rows) {
  std::string out = "threshold,replaced,evaluable,replaced_fraction\n";
  for (const ReplacedRow& r : rows) {
    out += format_real(r.threshold) + "," + std::to_string(r.replaced) + "," + std::to_string(r.evaluable) + "," +
           format_real(r.fraction) + "\n";
  }
  return out;
}

/// Two stacked panels, canonical x(t) and y(t). Raw centers are dots
/// (flagged ones red), the smoothed track is a line.
inline std::string trajectory_svg(const CanonicalTrajectory& raw, const CanonicalTrajectory& smoothed,
                                  const std::vector<bool>& flagged, const std::string& comment = {}) {
  require_same_length(raw.size(), smoothed.size(), "raw and smoothed tracks differ in length");
  constexpr double kW = 800, kPanelH = 240, kMargin = 40;
  const std::size_t n = raw.size();
  std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  if (!comment.empty()) svg += "<!-- " + comment + " -->\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + format_real(kW) + "\" height=\"" +
         format_real(2 * kPanelH + 3 * kMargin) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  auto fmt = [](double v) { return format_real(std::round(v * 100.0) / 100.0); };
  for (int axis = 0; axis < 2; ++axis) {
    auto value = [axis](const Point2& p) { return axis == 0 ? p.x : p.y; };
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto* track : {&raw, &smoothed}) {
        if (!(*track)[i]) continue;
        lo = std::min(lo, value(*(*track)[i]));
        hi = std::max(hi, value(*(*track)[i]));
      }
    }
    if (!(hi >= lo)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-9) lo -= 1.0, hi += 1.0;
    const double top = kMargin + axis * (kPanelH + kMargin);
    auto sx = [&](std::size_t i) { return kMargin + (kW - 2 * kMargin) * (n > 1 ? double(i) / double(n - 1) : 0.5); };
    auto sy = [&](double v) { return top + kPanelH * (1.0 - (v - lo) / (hi - lo)); };
    svg += "<g>\n<rect x=\"" + fmt(kMargin) + "\" y=\"" + fmt(top) + "\" width=\"" + fmt(kW - 2 * kMargin) +
           "\" height=\"" + fmt(kPanelH) + "\" fill=\"none\" stroke=\"#888\"/>\n";
    svg += "<text x=\"" + fmt(kMargin) + "\" y=\"" + fmt(top - 6) + "\" font-size=\"12\">canonical " +
           (axis == 0 ? "x" : "y") + " [" + fmt(lo) + ", " + fmt(hi) + "] px</text>\n";
    std::string path;
    for (std::size_t i = 0; i < n; ++i) {
      if (!smoothed[i]) continue;
      path += (path.empty() ? "M" : " L") + fmt(sx(i)) + " " + fmt(sy(value(*smoothed[i])));
    }
    if (!path.empty()) svg += "<path d=\"" + path + "\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>\n";
    for (std::size_t i = 0; i < n; ++i) {
      if (!raw[i]) continue;
      const bool f = i < flagged.size() && flagged[i];
      svg += "<circle cx=\"" + fmt(sx(i)) + "\" cy=\"" + fmt(sy(value(*raw[i]))) + "\" r=\"" + (f ? "3" : "1.5") +
             "\" fill=\"" + (f ? "#d62728" : "#444") + "\"/>\n";
    }
    svg += "</g>\n";
  }
  svg += "</svg>\n";
  return svg;
}

// ---------------------------------------------------------------------------
// Multi-sequence summary

struct SequenceStats {
  std::string name;
  std::string method;  // smoother
  std::vector<CurvePoint> curve;
  std::vector<ReplacedRow> replaced;
};

struct MethodSummary {
  std::string method;
  std::size_t sequences = 0;
  std::vector<CurvePoint> mean_curve;
  /// Mean of the per-sequence fractions.
  std::vector<ReplacedRow> mean_replaced;
  /// Frames replaced over frames evaluable, pooled across sequences.
  std::vector<ReplacedRow> pooled_replaced;
};

/// Groups sequences by smoother and averages curves and replaced-% rows.
/// Sequences of one group must share their threshold grids; sequences
/// without a success curve (correction runs) only join the replaced rows.
inline std::vector<MethodSummary> summarize(const std::vector<SequenceStats>& seqs) {
  std::map<std::string, std::vector<const SequenceStats*>> groups;
  for (const SequenceStats& s : seqs) groups[s.method].push_back(&s);
  std::vector<MethodSummary> out;
  for (const auto& [method, members] : groups) {
    MethodSummary m;
    m.method = method;
    m.sequences = members.size();

    const SequenceStats* curve_ref = nullptr;
    std::size_t with_curve = 0;
    for (const SequenceStats* s : members) {
      if (s->curve.empty()) continue;
      if (!curve_ref) curve_ref = s;
      ++with_curve;
      bool same = s->curve.size() == curve_ref->curve.size();
      for (std::size_t k = 0; same && k < s->curve.size(); ++k)
        same = s->curve[k].threshold == curve_ref->curve[k].threshold;
      if (!same) throw Error(ErrorCode::kLengthMismatch, "success-curve grids differ for method " + method);
    }
    if (curve_ref) {
      for (std::size_t k = 0; k < curve_ref->curve.size(); ++k) {
        double sum = 0.0;
        for (const SequenceStats* s : members)
          if (!s->curve.empty()) sum += s->curve[k].value;
        m.mean_curve.push_back({curve_ref->curve[k].threshold, sum / static_cast<double>(with_curve)});
      }
    }

    const SequenceStats& first = *members.front();
    for (const SequenceStats* s : members) {
      bool same = s->replaced.size() == first.replaced.size();
      for (std::size_t k = 0; same && k < s->replaced.size(); ++k)
        same = s->replaced[k].threshold == first.replaced[k].threshold;
      if (!same) throw Error(ErrorCode::kLengthMismatch, "replaced-% grids differ for method " + method);
    }
    const double count = static_cast<double>(members.size());
    for (std::size_t k = 0; k < first.replaced.size(); ++k) {
      double frac = 0.0;
      ReplacedRow pooled{first.replaced[k].threshold, 0, 0, 0.0};
      for (const SequenceStats* s : members) {
        frac += s->replaced[k].fraction;
        pooled.replaced += s->replaced[k].replaced;
        pooled.evaluable += s->replaced[k].evaluable;
      }
      pooled.fraction = pooled.evaluable ? double(pooled.replaced) / double(pooled.evaluable) : 0.0;
      m.mean_replaced.push_back({first.replaced[k].threshold, pooled.replaced, pooled.evaluable, frac / count});
      m.pooled_replaced.push_back(pooled);
    }
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace annoqa
