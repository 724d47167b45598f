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

// Grayscale raster with intensities in [0,1]: bilinear sampling, gradients,
// separable Gaussian blur and the 2x2 box pyramid used by ECC.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "annoqa/error.hpp"

namespace annoqa {

class GrayImage {
 public:
  GrayImage() = default;

  GrayImage(int width, int height, double fill = 0.0)
      : GrayImage(width, height,
                  std::vector<double>(checked_area(width, height), fill)) {}

  GrayImage(int width, int height, std::vector<double> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (data_.size() != checked_area(width, height)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "image data length does not match width*height");
    }
    for (double v : data_) {
      if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
        throw Error(ErrorCode::kInvalidArgument,
                    "image intensity outside [0,1]: " + std::to_string(v));
      }
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return data_.empty(); }

  double at(int x, int y) const noexcept {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }

  std::span<const double> pixels() const noexcept { return data_; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  static std::size_t checked_area(int width, int height) {
    if (width <= 0 || height <= 0) {
      throw Error(ErrorCode::kInvalidArgument, "image dimensions must be positive");
    }
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

/// Real-valued raster without the [0,1] constraint (derivatives, scratch).
struct Field {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  double at(int x, int y) const noexcept {
    return data[static_cast<std::size_t>(y) * width + x];
  }
};

struct GradientPair {
  Field gx;
  Field gy;
};

namespace detail {

template <typename Raster>
double bilinear(const Raster& img, int width, int height, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(width - 1));
  y = std::clamp(y, 0.0, static_cast<double>(height - 1));
  const int x0 = std::min(static_cast<int>(x), width - 1);
  const int y0 = std::min(static_cast<int>(y), height - 1);
  const int x1 = std::min(x0 + 1, width - 1);
  const int y1 = std::min(y0 + 1, height - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = (1.0 - fx) * img.at(x0, y0) + fx * img.at(x1, y0);
  const double bottom = (1.0 - fx) * img.at(x0, y1) + fx * img.at(x1, y1);
  return (1.0 - fy) * top + fy * bottom;
}

// Half-sample symmetric reflection: ... 1 0 | 0 1 2 ... n-1 | n-1 n-2 ...
inline int reflect_index(int i, int n) {
  const int period = 2 * n;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

inline std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

}  // namespace detail

/// Clamp-to-edge bilinear interpolation; exact at integer coordinates.
inline double sample_bilinear(const GrayImage& img, double x, double y) {
  return detail::bilinear(img, img.width(), img.height(), x, y);
}

inline double sample_bilinear(const Field& f, double x, double y) {
  return detail::bilinear(f, f.width, f.height, x, y);
}

/// Central differences in the interior, one-sided differences on the border.
inline GradientPair gradients(const GrayImage& img) {
  const int w = img.width();
  const int h = img.height();
  if (w < 3 || h < 3) {
    throw Error(ErrorCode::kImageTooSmall, "gradients need at least 3x3 pixels");
  }
  GradientPair g{{w, h, std::vector<double>(img.pixels().size())},
                 {w, h, std::vector<double>(img.pixels().size())}};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * w + x;
      if (x == 0) {
        g.gx.data[idx] = img.at(1, y) - img.at(0, y);
      } else if (x == w - 1) {
        g.gx.data[idx] = img.at(w - 1, y) - img.at(w - 2, y);
      } else {
        g.gx.data[idx] = 0.5 * (img.at(x + 1, y) - img.at(x - 1, y));
      }
      if (y == 0) {
        g.gy.data[idx] = img.at(x, 1) - img.at(x, 0);
      } else if (y == h - 1) {
        g.gy.data[idx] = img.at(x, h - 1) - img.at(x, h - 2);
      } else {
        g.gy.data[idx] = 0.5 * (img.at(x, y + 1) - img.at(x, y - 1));
      }
    }
  }
  return g;
}

/// Separable Gaussian blur, radius ceil(3*sigma), mirrored borders. The
/// half-sample reflection makes the blur operator doubly stochastic, so both
/// constant images and total intensity are preserved.
inline GrayImage gaussian_blur(const GrayImage& img, double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::kInvalidArgument, "blur sigma must be >= 0");
  }
  if (sigma == 0.0) return img;
  const std::vector<double> k = detail::gaussian_kernel(sigma);
  const int radius = static_cast<int>(k.size() / 2);
  const int w = img.width();
  const int h = img.height();
  std::vector<double> tmp(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        acc += k[i + radius] * img.at(detail::reflect_index(x + i, w), y);
      }
      tmp[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  std::vector<double> out(tmp.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        acc += k[i + radius] *
               tmp[static_cast<std::size_t>(detail::reflect_index(y + i, h)) * w + x];
      }
      out[static_cast<std::size_t>(y) * w + x] = std::clamp(acc, 0.0, 1.0);
    }
  }
  return GrayImage(w, h, std::move(out));
}

/// 2x2 box downsampling; odd trailing rows/columns are dropped.
inline GrayImage downsample2(const GrayImage& img) {
  const int w = std::max(1, img.width() / 2);
  const int h = std::max(1, img.height() / 2);
  std::vector<double> out(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int sx = std::min(2 * x, img.width() - 1);
      const int sy = std::min(2 * y, img.height() - 1);
      const int sx1 = std::min(sx + 1, img.width() - 1);
      const int sy1 = std::min(sy + 1, img.height() - 1);
      out[static_cast<std::size_t>(y) * w + x] =
          0.25 * (img.at(sx, sy) + img.at(sx1, sy) + img.at(sx, sy1) + img.at(sx1, sy1));
    }
  }
  return GrayImage(w, h, std::move(out));
}

/// Luma conversion for 8-bit RGB triplets.
inline double luma(unsigned char r, unsigned char g, unsigned char b) {
  return (0.299 * r + 0.587 * g + 0.114 * b) / 255.0;
}

}  // namespace annoqa
