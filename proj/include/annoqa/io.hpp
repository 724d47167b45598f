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

// Dataset files: box annotations (one `x,y,w,h` per line), GOT-10k style
// absence labels, binary/ASCII PGM frames and frame directory listing.

#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "annoqa/error.hpp"
#include "annoqa/raster.hpp"
#include "annoqa/types.hpp"

namespace annoqa {

/// Shortest decimal form that round-trips; stable across runs.
inline std::string format_real(double v) {
  if (std::isnan(v)) return "NaN";
  if (v == 0.0) return "0";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  auto sep = [](char c) { return c == ',' || c == ';' || std::isspace(static_cast<unsigned char>(c)); };
  while (i < line.size()) {
    while (i < line.size() && sep(line[i])) ++i;
    const std::size_t start = i;
    while (i < line.size() && !sep(line[i])) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

inline double parse_real(std::string_view s, std::size_t line_no) {
  const std::string tmp(s);
  char* end = nullptr;
  const double v = std::strtod(tmp.c_str(), &end);
  if (end != tmp.c_str() + tmp.size()) {
    throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": not a number: '" + tmp + "'");
  }
  return v;
}

inline std::vector<std::string> lines_of(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(start, end - start));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    start = end + 1;
  }
  // Trailing blank lines carry no frames.
  while (!lines.empty() && split_fields(lines.back()).empty()) lines.pop_back();
  return lines;
}

}  // namespace detail

/// Comma- or whitespace-separated boxes, one frame per line. Rows with
/// non-positive or NaN size (e.g. `0,0,0,0`) are absent annotations.
inline Trajectory parse_annotations(std::string_view text) {
  Trajectory traj;
  const std::vector<std::string> lines = detail::lines_of(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto fields = detail::split_fields(lines[i]);
    if (fields.empty()) {
      traj.push_back({});
      continue;
    }
    if (fields.size() != 4) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(i + 1) + ": expected 4 values, got " +
                                         std::to_string(fields.size()));
    }
    BBox b{detail::parse_real(fields[0], i + 1), detail::parse_real(fields[1], i + 1),
           detail::parse_real(fields[2], i + 1), detail::parse_real(fields[3], i + 1)};
    FrameAnnotation a;
    if (b.valid()) a.box = b;
    traj.push_back(a);
  }
  return traj;
}

inline std::string format_annotations(const Trajectory& traj) {
  std::string out;
  for (const FrameAnnotation& a : traj) {
    if (a.box) {
      out += format_real(a.box->x) + "," + format_real(a.box->y) + "," + format_real(a.box->w) + "," +
             format_real(a.box->h) + "\n";
    } else {
      out += "0,0,0,0\n";
    }
  }
  return out;
}

/// Applies a 0/1 per-frame absence file (1 = target absent or occluded).
inline void apply_absence(Trajectory& traj, std::string_view text) {
  const std::vector<std::string> lines = detail::lines_of(text);
  if (lines.size() != traj.size()) {
    throw Error(ErrorCode::kLengthMismatch, "absence file has " + std::to_string(lines.size()) +
                                                " lines for " + std::to_string(traj.size()) + " frames");
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto fields = detail::split_fields(lines[i]);
    if (fields.size() != 1 || (fields[0] != "0" && fields[0] != "1")) {
      throw Error(ErrorCode::kParse, "absence line " + std::to_string(i + 1) + " must be 0 or 1");
    }
    traj[i].occluded = fields[0] == "1";
  }
}

inline Trajectory load_annotations(const std::filesystem::path& path) {
  return parse_annotations(read_text_file(path));
}

// ---------------------------------------------------------------------------
// PGM

inline GrayImage decode_pgm(std::string_view bytes) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() -> long {
    skip_space();
    const std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (pos == start) throw Error(ErrorCode::kParse, "malformed PGM header");
    return std::stol(std::string(bytes.substr(start, pos - start)));
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '2')) {
    throw Error(ErrorCode::kParse, "not a PGM file");
  }
  const bool binary = bytes[1] == '5';
  pos = 2;
  const long w = read_int(), h = read_int(), maxval = read_int();
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) throw Error(ErrorCode::kParse, "bad PGM dimensions");
  std::vector<double> data(static_cast<std::size_t>(w) * h);
  if (binary) {
    ++pos;  // single whitespace after maxval
    const std::size_t bpp = maxval > 255 ? 2 : 1;
    if (bytes.size() < pos + data.size() * bpp) throw Error(ErrorCode::kParse, "truncated PGM data");
    for (std::size_t i = 0; i < data.size(); ++i) {
      unsigned v = static_cast<unsigned char>(bytes[pos + i * bpp]);
      if (bpp == 2) v = (v << 8) | static_cast<unsigned char>(bytes[pos + i * bpp + 1]);
      data[i] = std::min(1.0, static_cast<double>(v) / static_cast<double>(maxval));
    }
  } else {
    for (double& d : data) d = std::min(1.0, static_cast<double>(read_int()) / static_cast<double>(maxval));
  }
  return GrayImage(static_cast<int>(w), static_cast<int>(h), std::move(data));
}

/// 8-bit binary PGM.
inline std::string encode_pgm(const GrayImage& img) {
  std::string out = "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  out.reserve(out.size() + img.pixels().size());
  for (double v : img.pixels()) out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
  return out;
}

// ---------------------------------------------------------------------------
// Frame directories

/// Filename order with embedded numbers compared by value (frame2 < frame10).
inline bool natural_less(std::string_view a, std::string_view b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const bool da = std::isdigit(static_cast<unsigned char>(a[i]));
    const bool db = std::isdigit(static_cast<unsigned char>(b[j]));
    if (da && db) {
      std::size_t ie = i, je = j;
      while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
      while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
      std::string_view na = a.substr(i, ie - i), nb = b.substr(j, je - j);
      while (na.size() > 1 && na.front() == '0') na.remove_prefix(1);
      while (nb.size() > 1 && nb.front() == '0') nb.remove_prefix(1);
      if (na.size() != nb.size()) return na.size() < nb.size();
      if (na != nb) return na < nb;
      if (ie - i != je - j) return ie - i < je - j;
      i = ie;
      j = je;
    } else {
      if (a[i] != b[j]) return a[i] < b[j];
      ++i;
      ++j;
    }
  }
  return a.size() - i < b.size() - j;
}

inline std::vector<std::filesystem::path> list_frames(const std::filesystem::path& dir,
                                                      const std::vector<std::string>& extensions) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw Error(ErrorCode::kIo, "not a directory: " + dir.string());
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (std::find(extensions.begin(), extensions.end(), ext) != extensions.end()) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return natural_less(a.filename().string(), b.filename().string());
  });
  return out;
}

}  // namespace annoqa
