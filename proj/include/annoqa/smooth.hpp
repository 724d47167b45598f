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

// Trajectory smoothers over possibly gappy series: moving average,
// Gaussian kernel, Savitzky-Golay and lowess. Windows are measured in
// frames; absent samples never take part in a local fit.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "annoqa/error.hpp"
#include "annoqa/types.hpp"

namespace annoqa {

enum class SmoothMethod { kMovMean, kGaussian, kSavitzkyGolay, kLowess };

constexpr std::string_view to_string(SmoothMethod m) {
  switch (m) {
    case SmoothMethod::kMovMean: return "movmean";
    case SmoothMethod::kGaussian: return "gaussian";
    case SmoothMethod::kSavitzkyGolay: return "savitzky_golay";
    case SmoothMethod::kLowess: return "lowess";
  }
  return "unknown";
}

inline SmoothMethod parse_smooth_method(std::string_view s) {
  if (s == "movmean") return SmoothMethod::kMovMean;
  if (s == "gaussian") return SmoothMethod::kGaussian;
  if (s == "sg" || s == "savitzky_golay" || s == "savitzky-golay") return SmoothMethod::kSavitzkyGolay;
  if (s == "lowess") return SmoothMethod::kLowess;
  throw Error(ErrorCode::kParse, "unknown smoother: " + std::string(s));
}

struct SmootherSpec {
  SmoothMethod method = SmoothMethod::kLowess;
  int window = 11;          // frames, movmean and Savitzky-Golay
  double sigma = 2.0;       // frames, gaussian
  int poly_order = 2;       // Savitzky-Golay
  double fraction = 0.1;    // lowess neighbourhood as a share of present points
  int robust_iters = 2;     // lowess bisquare passes

  void validate() const {
    if (window < 3 || window % 2 == 0)
      throw Error(ErrorCode::kInvalidArgument, "window must be odd and >= 3");
    if (poly_order < 0 || poly_order >= window)
      throw Error(ErrorCode::kInvalidArgument, "poly_order must lie in [0, window)");
    if (!(sigma > 0.0) || !std::isfinite(sigma))
      throw Error(ErrorCode::kInvalidArgument, "sigma must be > 0");
    if (!(fraction > 0.0 && fraction <= 1.0))
      throw Error(ErrorCode::kInvalidArgument, "fraction must lie in (0,1]");
    if (robust_iters < 0) throw Error(ErrorCode::kInvalidArgument, "robust_iters must be >= 0");
  }

  /// Present samples required before any smoothing is attempted.
  std::size_t min_points() const {
    switch (method) {
      case SmoothMethod::kMovMean:
      case SmoothMethod::kSavitzkyGolay: return static_cast<std::size_t>(window);
      default: return 5;
    }
  }
};

struct Series {
  std::vector<std::int64_t> t;
  std::vector<double> v;
  std::vector<bool> present;

  std::size_t size() const { return t.size(); }

  void validate() const {
    if (v.size() != t.size() || present.size() != t.size())
      throw Error(ErrorCode::kLengthMismatch, "series fields differ in length");
    for (std::size_t i = 1; i < t.size(); ++i)
      if (t[i] <= t[i - 1]) throw Error(ErrorCode::kInvalidArgument, "series timestamps must increase");
  }

  /// Dense series t = 0..n-1 from optional values.
  static Series from_optional(std::span<const std::optional<double>> values) {
    Series s;
    for (std::size_t i = 0; i < values.size(); ++i) {
      s.t.push_back(static_cast<std::int64_t>(i));
      s.v.push_back(values[i].value_or(0.0));
      s.present.push_back(values[i].has_value());
    }
    return s;
  }
};

namespace detail {

// Present samples plus lowess robustness weights.
class LocalSmoother {
 public:
  LocalSmoother(const Series& s, const SmootherSpec& spec) : spec_(spec) {
    spec.validate();
    s.validate();
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!s.present[i]) continue;
      if (!std::isfinite(s.v[i])) throw Error(ErrorCode::kInvalidArgument, "non-finite series value");
      t_.push_back(static_cast<double>(s.t[i]));
      v_.push_back(s.v[i]);
    }
    if (t_.size() < spec.min_points()) {
      throw Error(ErrorCode::kTooFewPoints,
                  "smoother needs " + std::to_string(spec.min_points()) + " present points, got " +
                      std::to_string(t_.size()));
    }
    robust_.assign(t_.size(), 1.0);
    if (spec.method == SmoothMethod::kLowess) fit_robust_weights();
  }

  double tmin() const { return t_.front(); }
  double tmax() const { return t_.back(); }
  std::span<const double> times() const { return t_; }

  /// `at_sample` selects the boundary handling used when smoothing a
  /// sample in place; evaluation at arbitrary times uses a centered window.
  double estimate(double q, bool at_sample) const {
    switch (spec_.method) {
      case SmoothMethod::kMovMean: return movmean(q, at_sample);
      case SmoothMethod::kGaussian: return gaussian(q);
      case SmoothMethod::kSavitzkyGolay: return savitzky_golay(q);
      case SmoothMethod::kLowess: return lowess(q);
    }
    return 0.0;
  }

 private:
  std::size_t nearest(double q) const {
    const auto it = std::lower_bound(t_.begin(), t_.end(), q);
    if (it == t_.end()) return t_.size() - 1;
    const std::size_t j = static_cast<std::size_t>(it - t_.begin());
    if (j > 0 && q - t_[j - 1] <= t_[j] - q) return j - 1;
    return j;
  }

  // Indices of the k present samples closest to q; ties favour earlier t.
  std::vector<std::size_t> k_nearest(double q, std::size_t k) const {
    k = std::min(k, t_.size());
    const auto it = std::lower_bound(t_.begin(), t_.end(), q);
    std::ptrdiff_t right = it - t_.begin();
    std::ptrdiff_t left = right - 1;
    std::vector<std::size_t> out;
    while (out.size() < k) {
      const bool has_l = left >= 0;
      const bool has_r = right < static_cast<std::ptrdiff_t>(t_.size());
      if (has_l && (!has_r || q - t_[left] <= t_[right] - q)) {
        out.push_back(static_cast<std::size_t>(left--));
      } else {
        out.push_back(static_cast<std::size_t>(right++));
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  std::vector<std::size_t> in_interval(double lo, double hi) const {
    std::vector<std::size_t> out;
    for (auto it = std::lower_bound(t_.begin(), t_.end(), lo); it != t_.end() && *it <= hi; ++it) {
      out.push_back(static_cast<std::size_t>(it - t_.begin()));
    }
    return out;
  }

  double movmean(double q, bool at_sample) const {
    double half = spec_.window / 2;
    if (at_sample) half = std::max(0.0, std::min({half, q - tmin(), tmax() - q}));
    std::vector<std::size_t> idx = in_interval(q - half, q + half);
    if (idx.empty()) idx.push_back(nearest(q));
    double sum = 0.0;
    for (std::size_t i : idx) sum += v_[i];
    return sum / static_cast<double>(idx.size());
  }

  double gaussian(double q) const {
    const double radius = std::ceil(3.0 * spec_.sigma);
    std::vector<std::size_t> idx = in_interval(q - radius, q + radius);
    if (idx.empty()) idx.push_back(nearest(q));
    double num = 0.0, den = 0.0;
    for (std::size_t i : idx) {
      const double d = t_[i] - q;
      const double w = std::exp(-0.5 * d * d / (spec_.sigma * spec_.sigma));
      num += w * v_[i];
      den += w;
    }
    return num / den;
  }

  // Weighted least-squares polynomial in (t - q)/scale, evaluated at q.
  double local_poly(double q, std::span<const std::size_t> idx, std::span<const double> weights,
                    int degree, double scale) const {
    const Eigen::Index n = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd a(n, degree + 1);
    Eigen::VectorXd b(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      const double u = (t_[idx[r]] - q) / scale;
      const double sw = std::sqrt(weights[r]);
      double p = 1.0;
      for (int c = 0; c <= degree; ++c) {
        a(r, c) = sw * p;
        p *= u;
      }
      b(r) = sw * v_[idx[r]];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < degree + 1) {
      if (degree == 0) throw Error(ErrorCode::kTooFewPoints, "local fit has no weighted support");
      return local_poly(q, idx, weights, degree - 1, scale);
    }
    return qr.solve(b)(0);
  }

  double savitzky_golay(double q) const {
    const double half = spec_.window / 2;
    double lo = q - half, hi = q + half;
    // Asymmetric window at the ends of the data.
    if (tmax() - tmin() >= 2.0 * half) {
      if (lo < tmin()) {
        lo = tmin();
        hi = tmin() + 2.0 * half;
      } else if (hi > tmax()) {
        hi = tmax();
        lo = tmax() - 2.0 * half;
      }
    }
    const std::size_t need = static_cast<std::size_t>(spec_.poly_order) + 1;
    std::vector<std::size_t> idx = in_interval(lo, hi);
    if (idx.size() < need) idx = k_nearest(q, need);
    const std::vector<double> ones(idx.size(), 1.0);
    return local_poly(q, idx, ones, spec_.poly_order, std::max(half, 1.0));
  }

  std::size_t lowess_k() const {
    const auto k = static_cast<std::size_t>(std::ceil(spec_.fraction * static_cast<double>(t_.size())));
    return std::min(t_.size(), std::max<std::size_t>(5, k));
  }

  double lowess(double q) const {
    const std::vector<std::size_t> idx = k_nearest(q, lowess_k());
    double h = 0.0;
    for (std::size_t i : idx) h = std::max(h, std::abs(t_[i] - q));
    std::vector<std::size_t> support;
    std::vector<double> weights;
    for (std::size_t i : idx) {
      const double u = h > 0.0 ? std::abs(t_[i] - q) / h : 0.0;
      const double tri = u < 1.0 ? std::pow(1.0 - u * u * u, 3) : 0.0;
      const double w = tri * robust_[i];
      if (w > 0.0) {
        support.push_back(i);
        weights.push_back(w);
      }
    }
    if (support.empty()) {
      // Every neighbour was rejected as an outlier; fall back to distance weights.
      for (std::size_t i : idx) {
        const double u = h > 0.0 ? std::abs(t_[i] - q) / h : 0.0;
        if (u < 1.0) {
          support.push_back(i);
          weights.push_back(std::pow(1.0 - u * u * u, 3));
        }
      }
    }
    return local_poly(q, support, weights, 1, std::max(h, 1.0));
  }

  void fit_robust_weights() {
    // Residuals at rounding level count as exact; the tolerance follows the
    // data spread so shifting or scaling the series does not change weights.
    double mean = 0.0;
    for (double v : v_) mean += v;
    mean /= static_cast<double>(v_.size());
    double spread = 0.0;
    for (double v : v_) spread += std::abs(v - mean);
    spread /= static_cast<double>(v_.size());
    for (int pass = 0; pass < spec_.robust_iters; ++pass) {
      std::vector<double> abs_res(t_.size());
      for (std::size_t i = 0; i < t_.size(); ++i) abs_res[i] = std::abs(v_[i] - lowess(t_[i]));
      std::vector<double> sorted = abs_res;
      const std::size_t mid = sorted.size() / 2;
      std::nth_element(sorted.begin(), sorted.begin() + mid, sorted.end());
      double median = sorted[mid];
      if (sorted.size() % 2 == 0) {
        median = 0.5 * (median + *std::max_element(sorted.begin(), sorted.begin() + mid));
      }
      const double tol = 1e-7 * spread;
      const double scale = 6.0 * median;
      for (std::size_t i = 0; i < t_.size(); ++i) {
        if (median > tol) {
          const double u = abs_res[i] / scale;
          robust_[i] = u < 1.0 ? (1.0 - u * u) * (1.0 - u * u) : 0.0;
        } else {
          robust_[i] = abs_res[i] <= tol ? 1.0 : 0.0;
        }
      }
    }
  }

  SmootherSpec spec_;
  std::vector<double> t_;
  std::vector<double> v_;
  std::vector<double> robust_;
};

}  // namespace detail

/// Smoothed values at the same timestamps; absent samples stay absent.
inline Series smooth_series(const Series& s, const SmootherSpec& spec) {
  const detail::LocalSmoother sm(s, spec);
  Series out = s;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.present[i]) out.v[i] = sm.estimate(static_cast<double>(s.t[i]), true);
  }
  return out;
}

/// Evaluates the local fit at arbitrary frame indices, up to one window
/// beyond the first and last present samples.
inline std::vector<double> evaluate_at(const Series& s, std::span<const std::int64_t> query_t,
                                       const SmootherSpec& spec) {
  const detail::LocalSmoother sm(s, spec);
  std::vector<double> out;
  out.reserve(query_t.size());
  for (std::int64_t q : query_t) {
    const double qd = static_cast<double>(q);
    if (qd < sm.tmin() - spec.window || qd > sm.tmax() + spec.window) {
      throw Error(ErrorCode::kOutOfRange, "query frame " + std::to_string(q) + " is outside the data range");
    }
    out.push_back(sm.estimate(qd, false));
  }
  return out;
}

namespace detail {

inline std::pair<Series, Series> split_axes(const CenterTrack& traj) {
  std::vector<std::optional<double>> xs(traj.size()), ys(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (traj[i]) {
      xs[i] = traj[i]->x;
      ys[i] = traj[i]->y;
    }
  }
  return {Series::from_optional(xs), Series::from_optional(ys)};
}

}  // namespace detail

/// Smooths x(t) and y(t) independently with the same spec.
inline CanonicalTrajectory smooth_canonical(const CanonicalTrajectory& traj, const SmootherSpec& spec) {
  const auto [xs, ys] = detail::split_axes(traj);
  const Series sx = smooth_series(xs, spec);
  const Series sy = smooth_series(ys, spec);
  CanonicalTrajectory out(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (traj[i]) out[i] = Point2{sx.v[i], sy.v[i]};
  }
  return out;
}

/// Center estimates for arbitrary frames from a canonical trajectory.
inline std::vector<Point2> evaluate_canonical(const CanonicalTrajectory& traj,
                                              std::span<const std::int64_t> query_t,
                                              const SmootherSpec& spec) {
  const auto [xs, ys] = detail::split_axes(traj);
  const std::vector<double> vx = evaluate_at(xs, query_t, spec);
  const std::vector<double> vy = evaluate_at(ys, query_t, spec);
  std::vector<Point2> out(query_t.size());
  for (std::size_t i = 0; i < query_t.size(); ++i) out[i] = {vx[i], vy[i]};
  return out;
}

}  // namespace annoqa
