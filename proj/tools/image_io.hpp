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

// Frame decoding for the command-line tool: PGM natively, PNG through
// libpng's simplified API with grayscale conversion on load.

#pragma once

#include <png.h>

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "annoqa/error.hpp"
#include "annoqa/io.hpp"
#include "annoqa/raster.hpp"

namespace annoqa::cli {

inline GrayImage decode_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    throw Error(ErrorCode::kIo, "cannot decode " + path.string() + ": " + image.message);
  }
  // Color sources are read as RGB and reduced with fixed luma weights rather
  // than libpng's own conversion.
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    throw Error(ErrorCode::kIo, "cannot decode " + path.string() + ": " + image.message);
  }
  const int w = static_cast<int>(image.width), h = static_cast<int>(image.height);
  std::vector<double> px(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (color) {
      const png_byte* rgb = &buffer[3 * i];
      px[i] = std::clamp((0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2]) / 255.0, 0.0, 1.0);
    } else {
      px[i] = buffer[i] / 255.0;
    }
  }
  return GrayImage(w, h, std::move(px));
}

inline GrayImage load_frame(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".png") return decode_png(path);
  try {
    return decode_pgm(read_text_file(path));
  } catch (const Error& e) {
    // A malformed frame is unreadable input rather than a bad annotation file.
    throw Error(ErrorCode::kIo, path.string() + ": " + e.what());
  }
}

inline const std::vector<std::string>& frame_extensions() {
  static const std::vector<std::string> kExt{".pgm", ".png"};
  return kExt;
}

}  // namespace annoqa::cli
