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

// JSON forms of configs, alignment results, scenarios and QA reports.
// Readers start from defaults and override the keys that are present, so
// hand-written config files may stay short.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "annoqa/align.hpp"
#include "annoqa/annotate.hpp"
#include "annoqa/error.hpp"
#include "annoqa/smooth.hpp"
#include "annoqa/synth.hpp"

namespace annoqa {

using Json = nlohmann::ordered_json;

namespace detail {

template <typename T>
void read_key(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("key '") + key + "': " + e.what());
  }
}

inline void require_object(const Json& j, const char* what) {
  if (!j.is_object()) throw Error(ErrorCode::kParse, std::string(what) + " must be a JSON object");
}

inline Json point_json(Point2 p) { return Json::array({p.x, p.y}); }

inline Point2 point_from(const Json& j) {
  if (!j.is_array() || j.size() != 2) throw Error(ErrorCode::kParse, "point must be [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace detail

inline Json parse_json(std::string_view text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, e.what());
  }
}

/// Two-space indented with a trailing newline.
inline std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Geometry

inline Json to_json(const Homography& h) {
  Json a = Json::array();
  for (double v : h.row_major()) a.push_back(v);
  return a;
}

inline Homography homography_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 9) throw Error(ErrorCode::kParse, "homography must be 9 numbers");
  std::array<double, 9> v{};
  for (std::size_t i = 0; i < 9; ++i) {
    if (!j[i].is_number()) throw Error(ErrorCode::kParse, "homography entries must be numbers");
    v[i] = j[i].get<double>();
  }
  return Homography::from_row_major(v);
}

inline Json to_json(const BBox& b) { return Json::array({b.x, b.y, b.w, b.h}); }

// ---------------------------------------------------------------------------
// Configs

inline Json to_json(const FeatureConfig& c) {
  return Json{{"detector_threshold", c.detector_threshold}, {"max_keypoints", c.max_keypoints},
              {"nms_radius", c.nms_radius},                 {"ratio_test", c.ratio_test},
              {"cross_check", c.cross_check},               {"seed", c.seed}};
}

inline FeatureConfig feature_config_from_json(const Json& j) {
  detail::require_object(j, "feature config");
  FeatureConfig c;
  detail::read_key(j, "detector_threshold", c.detector_threshold);
  detail::read_key(j, "max_keypoints", c.max_keypoints);
  detail::read_key(j, "nms_radius", c.nms_radius);
  detail::read_key(j, "ratio_test", c.ratio_test);
  detail::read_key(j, "cross_check", c.cross_check);
  detail::read_key(j, "seed", c.seed);
  return c;
}

inline Json to_json(const RansacConfig& c) {
  return Json{{"max_iterations", c.max_iterations},
              {"inlier_threshold", c.inlier_threshold},
              {"confidence", c.confidence},
              {"seed", c.seed}};
}

inline RansacConfig ransac_config_from_json(const Json& j) {
  detail::require_object(j, "ransac config");
  RansacConfig c;
  detail::read_key(j, "max_iterations", c.max_iterations);
  detail::read_key(j, "inlier_threshold", c.inlier_threshold);
  detail::read_key(j, "confidence", c.confidence);
  detail::read_key(j, "seed", c.seed);
  return c;
}

inline Json to_json(const EccConfig& c) {
  return Json{{"max_iterations", c.max_iterations},
              {"epsilon", c.epsilon},
              {"pyramid_levels", c.pyramid_levels},
              {"model", std::string(to_string(c.model))},
              {"promote_to_homography", c.promote_to_homography},
              {"coarse_search", c.coarse_search},
              {"min_rho", c.min_rho}};
}

inline EccConfig ecc_config_from_json(const Json& j) {
  detail::require_object(j, "ecc config");
  EccConfig c;
  detail::read_key(j, "max_iterations", c.max_iterations);
  detail::read_key(j, "epsilon", c.epsilon);
  detail::read_key(j, "pyramid_levels", c.pyramid_levels);
  std::string model(to_string(c.model));
  detail::read_key(j, "model", model);
  c.model = parse_warp_model(model);
  detail::read_key(j, "promote_to_homography", c.promote_to_homography);
  detail::read_key(j, "coarse_search", c.coarse_search);
  detail::read_key(j, "min_rho", c.min_rho);
  return c;
}

inline Json to_json(const AlignConfig& c) {
  return Json{{"keypoint_threshold", c.keypoint_threshold},
              {"min_inliers", c.min_inliers},
              {"max_pairwise_reproj", c.max_pairwise_reproj},
              {"ecc_box_inflation", c.ecc_box_inflation},
              {"inlier_test", c.inlier_test == InlierTest::kCurrentKeypoints ? "current" : "previous"},
              {"mask_annotation", c.mask_annotation},
              {"mask_inflation", c.mask_inflation},
              {"feature", to_json(c.feature)},
              {"ransac", to_json(c.ransac)},
              {"ecc", to_json(c.ecc)}};
}

inline AlignConfig align_config_from_json(const Json& j) {
  detail::require_object(j, "align config");
  AlignConfig c;
  detail::read_key(j, "keypoint_threshold", c.keypoint_threshold);
  detail::read_key(j, "min_inliers", c.min_inliers);
  detail::read_key(j, "max_pairwise_reproj", c.max_pairwise_reproj);
  detail::read_key(j, "ecc_box_inflation", c.ecc_box_inflation);
  std::string test = "current";
  detail::read_key(j, "inlier_test", test);
  if (test == "current") {
    c.inlier_test = InlierTest::kCurrentKeypoints;
  } else if (test == "previous") {
    c.inlier_test = InlierTest::kPreviousKeypoints;
  } else {
    throw Error(ErrorCode::kParse, "inlier_test must be 'current' or 'previous'");
  }
  detail::read_key(j, "mask_annotation", c.mask_annotation);
  detail::read_key(j, "mask_inflation", c.mask_inflation);
  if (j.contains("feature")) c.feature = feature_config_from_json(j["feature"]);
  if (j.contains("ransac")) c.ransac = ransac_config_from_json(j["ransac"]);
  if (j.contains("ecc")) c.ecc = ecc_config_from_json(j["ecc"]);
  return c;
}

inline Json to_json(const SmootherSpec& s) {
  return Json{{"method", std::string(to_string(s.method))}, {"window", s.window},
              {"sigma", s.sigma},                            {"poly_order", s.poly_order},
              {"fraction", s.fraction},                      {"robust_iters", s.robust_iters}};
}

inline SmootherSpec smoother_spec_from_json(const Json& j) {
  detail::require_object(j, "smoother spec");
  SmootherSpec s;
  std::string method(to_string(s.method));
  detail::read_key(j, "method", method);
  s.method = parse_smooth_method(method);
  detail::read_key(j, "window", s.window);
  detail::read_key(j, "sigma", s.sigma);
  detail::read_key(j, "poly_order", s.poly_order);
  detail::read_key(j, "fraction", s.fraction);
  detail::read_key(j, "robust_iters", s.robust_iters);
  return s;
}

// ---------------------------------------------------------------------------
// Alignment

inline Json to_json(const AlignmentResult& r) {
  Json frames = Json::array();
  for (const FrameAlignment& f : r.frames) {
    frames.push_back(Json{{"index", f.frame_index},
                          {"method", std::string(to_string(f.method))},
                          {"pairwise", to_json(f.pairwise)},
                          {"cumulative", to_json(f.cumulative)},
                          {"inliers", f.inlier_count},
                          {"rho", f.rho ? Json(*f.rho) : Json(nullptr)},
                          {"state_hash", f.state_hash}});
  }
  return Json{{"width", r.width},
              {"height", r.height},
              {"failed_at", r.failed_at ? Json(*r.failed_at) : Json(nullptr)},
              {"frames", std::move(frames)}};
}

inline AlignmentResult alignment_from_json(const Json& j) {
  detail::require_object(j, "alignment");
  if (!j.contains("frames") || !j["frames"].is_array()) throw Error(ErrorCode::kParse, "alignment needs a frames array");
  AlignmentResult r;
  detail::read_key(j, "width", r.width);
  detail::read_key(j, "height", r.height);
  if (j.contains("failed_at") && !j["failed_at"].is_null()) r.failed_at = j["failed_at"].get<std::size_t>();
  try {
    for (const Json& f : j["frames"]) {
      FrameAlignment fa;
      fa.frame_index = f.at("index").get<std::size_t>();
      fa.method = parse_align_method(f.at("method").get<std::string>());
      fa.pairwise = homography_from_json(f.at("pairwise"));
      fa.cumulative = homography_from_json(f.at("cumulative"));
      detail::read_key(f, "inliers", fa.inlier_count);
      if (f.contains("rho") && !f["rho"].is_null()) fa.rho = f["rho"].get<double>();
      detail::read_key(f, "state_hash", fa.state_hash);
      r.frames.push_back(fa);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("alignment frame: ") + e.what());
  }
  return r;
}

// ---------------------------------------------------------------------------
// Scenarios

inline Json to_json(const ScenarioConfig& c) {
  Json blur = Json::object();
  for (const auto& [frame, sigma] : c.blur_frames) blur[std::to_string(frame)] = sigma;
  Json knots = Json::array();
  for (const PathKnot& k : c.path.knots) knots.push_back(Json::array({k.t, k.x, k.y}));
  Json path{{"kind", std::string(to_string(c.path.kind))},
            {"velocity", detail::point_json(c.path.velocity)},
            {"amplitude", detail::point_json(c.path.amplitude)},
            {"period", c.path.period},
            {"phase", c.path.phase},
            {"knot_spacing", c.path.knot_spacing},
            {"knot_sigma", c.path.knot_sigma},
            {"knots", std::move(knots)}};
  if (c.path.start) path["start"] = detail::point_json(*c.path.start);
  auto finite_or_null = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
  return Json{{"frames", c.frames},
              {"width", c.width},
              {"height", c.height},
              {"camera",
               {{"translation_sigma", c.camera.translation_sigma},
                {"rotation_sigma_deg", c.camera.rotation_sigma_deg},
                {"scale_sigma", c.camera.scale_sigma},
                {"max_translation", finite_or_null(c.camera.max_translation)},
                {"max_rotation_deg", finite_or_null(c.camera.max_rotation_deg)}}},
              {"path", std::move(path)},
              {"object_w", c.object_w},
              {"object_h", c.object_h},
              {"jitter_sigma", c.jitter_sigma},
              {"outlier_prob", c.outlier_prob},
              {"outlier_range", Json::array({c.outlier_range.first, c.outlier_range.second})},
              {"blur_frames", std::move(blur)},
              {"texture_scale", c.texture_scale},
              {"seed", c.seed}};
}

inline ScenarioConfig scenario_config_from_json(const Json& j) {
  detail::require_object(j, "scenario config");
  ScenarioConfig c;
  detail::read_key(j, "frames", c.frames);
  detail::read_key(j, "width", c.width);
  detail::read_key(j, "height", c.height);
  if (j.contains("camera")) {
    const Json& cam = j["camera"];
    detail::require_object(cam, "camera");
    detail::read_key(cam, "translation_sigma", c.camera.translation_sigma);
    detail::read_key(cam, "rotation_sigma_deg", c.camera.rotation_sigma_deg);
    detail::read_key(cam, "scale_sigma", c.camera.scale_sigma);
    if (cam.contains("max_translation") && !cam["max_translation"].is_null())
      detail::read_key(cam, "max_translation", c.camera.max_translation);
    if (cam.contains("max_rotation_deg") && !cam["max_rotation_deg"].is_null())
      detail::read_key(cam, "max_rotation_deg", c.camera.max_rotation_deg);
  }
  if (j.contains("path")) {
    const Json& p = j["path"];
    detail::require_object(p, "path");
    std::string kind(to_string(c.path.kind));
    detail::read_key(p, "kind", kind);
    c.path.kind = parse_path_kind(kind);
    if (p.contains("start") && !p["start"].is_null()) c.path.start = detail::point_from(p["start"]);
    if (p.contains("velocity")) c.path.velocity = detail::point_from(p["velocity"]);
    if (p.contains("amplitude")) c.path.amplitude = detail::point_from(p["amplitude"]);
    detail::read_key(p, "period", c.path.period);
    detail::read_key(p, "phase", c.path.phase);
    detail::read_key(p, "knot_spacing", c.path.knot_spacing);
    detail::read_key(p, "knot_sigma", c.path.knot_sigma);
    if (p.contains("knots")) {
      for (const Json& k : p["knots"]) {
        if (!k.is_array() || k.size() != 3) throw Error(ErrorCode::kParse, "knot must be [t, x, y]");
        c.path.knots.push_back({k[0].get<double>(), k[1].get<double>(), k[2].get<double>()});
      }
    }
  }
  detail::read_key(j, "object_w", c.object_w);
  detail::read_key(j, "object_h", c.object_h);
  detail::read_key(j, "jitter_sigma", c.jitter_sigma);
  detail::read_key(j, "outlier_prob", c.outlier_prob);
  if (j.contains("outlier_range")) {
    const Json& r = j["outlier_range"];
    if (!r.is_array() || r.size() != 2) throw Error(ErrorCode::kParse, "outlier_range must be [min, max]");
    c.outlier_range = {r[0].get<double>(), r[1].get<double>()};
  }
  if (j.contains("blur_frames")) {
    const Json& b = j["blur_frames"];
    detail::require_object(b, "blur_frames");
    for (const auto& [key, value] : b.items()) {
      try {
        c.blur_frames[std::stoi(key)] = value.get<double>();
      } catch (const std::exception&) {
        throw Error(ErrorCode::kParse, "blur_frames entry '" + key + "' is malformed");
      }
    }
  }
  detail::read_key(j, "texture_scale", c.texture_scale);
  detail::read_key(j, "seed", c.seed);
  return c;
}

/// Everything the generator knows except the pixels.
inline Json ground_truth_json(const GroundTruthScenario& sc) {
  Json cams = Json::array(), centers = Json::array(), world = Json::array(), boxes = Json::array();
  for (const Homography& h : sc.true_camera) cams.push_back(to_json(h));
  for (Point2 p : sc.true_centers) centers.push_back(detail::point_json(p));
  for (Point2 p : sc.world_centers) world.push_back(detail::point_json(p));
  for (const BBox& b : sc.true_boxes) boxes.push_back(to_json(b));
  return Json{{"config", to_json(sc.config)},
              {"true_camera", std::move(cams)},
              {"true_centers", std::move(centers)},
              {"world_centers", std::move(world)},
              {"true_boxes", std::move(boxes)},
              {"outlier_frames", sc.outlier_frames},
              {"outlier_count", sc.outlier_frames.size()},
              {"camera_resamples", sc.resamples}};
}

inline Json to_json(const ScenarioMetrics& m) {
  Json corner = Json::array();
  for (double e : m.corner_error) corner.push_back(std::isfinite(e) ? Json(e) : Json(nullptr));
  Json timings = Json::object();
  for (const auto& [k, v] : m.timings_ms) timings[k] = v;
  return Json{{"final_corner_error", std::isfinite(m.final_corner_error) ? Json(m.final_corner_error) : Json(nullptr)},
              {"noisy_rmse", m.noisy_rmse},
              {"corrected_rmse", m.corrected_rmse},
              {"improvement_ratio", m.improvement_ratio},
              {"true_positives", m.true_positives},
              {"false_positives", m.false_positives},
              {"false_negatives", m.false_negatives},
              {"precision", m.precision},
              {"recall", m.recall},
              {"corner_error", std::move(corner)},
              {"timings_ms", std::move(timings)}};
}

// ---------------------------------------------------------------------------
// QA reports

inline Json to_json(const OutlierReport& r) {
  Json flagged = Json::array(), dist = Json::array();
  for (std::size_t i = 0; i < r.flagged.size(); ++i)
    if (r.flagged[i]) flagged.push_back(i);
  for (const auto& d : r.distance) dist.push_back(d ? Json(*d) : Json(nullptr));
  return Json{{"threshold", r.threshold},
              {"evaluated", r.evaluated},
              {"flagged_count", r.flagged_count},
              {"flagged", std::move(flagged)},
              {"distance", std::move(dist)}};
}

inline Json to_json(const CorrectionResult& r) {
  Json replaced = Json::array();
  for (std::size_t i = 0; i < r.replaced_mask.size(); ++i)
    if (r.replaced_mask[i]) replaced.push_back(i);
  return Json{{"replaced", r.replaced},
              {"evaluable", r.evaluable},
              {"replaced_fraction", r.replaced_fraction},
              {"replaced_frames", std::move(replaced)}};
}

inline Json to_json(const std::vector<ReplacedRow>& rows) {
  Json a = Json::array();
  for (const ReplacedRow& r : rows) {
    a.push_back(Json{{"threshold", r.threshold},
                     {"replaced", r.replaced},
                     {"evaluable", r.evaluable},
                     {"replaced_fraction", r.fraction}});
  }
  return a;
}

}  // namespace annoqa
