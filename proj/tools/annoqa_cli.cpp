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

// annoqa command-line tool.
//
// Exit codes: 0 success, 1 unreadable input, 2 usage or parse error,
// 3 alignment failed part-way (partial output is still written).

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "annoqa/align.hpp"
#include "annoqa/annotate.hpp"
#include "annoqa/io.hpp"
#include "annoqa/json_io.hpp"
#include "annoqa/parallel.hpp"
#include "annoqa/report.hpp"
#include "annoqa/smooth.hpp"
#include "annoqa/synth.hpp"
#include "image_io.hpp"

namespace fs = std::filesystem;

namespace annoqa::cli {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitUsage = 2;
constexpr int kExitAlignment = 3;

constexpr const char* kBuiltinReference = "builtin:reference";

int exit_code_for(ErrorCode code) { return code == ErrorCode::kIo ? kExitInput : kExitUsage; }

const std::vector<double>& default_tau_grid() {
  static const std::vector<double> kGrid{5, 10, 15, 20, 25, 30, 40, 50, 60, 70, 80, 90, 100};
  return kGrid;
}

/// Everything that determines a run's outputs. Serialized as the manifest.
struct RunOptions {
  std::string command;
  std::vector<std::pair<std::string, std::string>> inputs;  // role, path
  AlignConfig align;
  SmootherSpec smoother;
  double tau = 100.0;
  std::vector<double> tau_grid = default_tau_grid();
  bool keep_inside = true;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  bool deterministic = false;

  std::optional<std::string> input(std::string_view role) const {
    for (const auto& [r, p] : inputs)
      if (r == role) return p;
    return std::nullopt;
  }
  std::string required_input(std::string_view role) const {
    auto p = input(role);
    if (!p) throw Error(ErrorCode::kInvalidArgument, "missing input: " + std::string(role));
    return *p;
  }
};

// ---------------------------------------------------------------------------
// Manifest

std::uint64_t fnv1a(std::uint64_t h, std::string_view bytes) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* kDigits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = kDigits[v & 0xF];
  return s;
}

Json input_digest(const std::string& path) {
  if (path.rfind("builtin:", 0) == 0) return nullptr;
  std::error_code ec;
  std::uint64_t h = 0xCBF29CE484222325ULL;
  if (fs::is_directory(path, ec)) {
    for (const fs::path& f : list_frames(path, frame_extensions())) {
      h = fnv1a(h, f.filename().string());
      h = fnv1a(h, read_text_file(f));
    }
    return hex64(h);
  }
  if (!fs::is_regular_file(path, ec)) return nullptr;
  return hex64(fnv1a(h, read_text_file(path)));
}

Json manifest_json(const RunOptions& o, const std::map<std::string, double>& timings) {
  Json inputs = Json::array();
  for (const auto& [role, path] : o.inputs) {
    inputs.push_back(Json{{"role", role}, {"path", path}, {"fnv1a64", input_digest(path)}});
  }
  Json grid = Json::array();
  for (double t : o.tau_grid) grid.push_back(t);
  Json m{{"tool", "annoqa"},
         {"version", ANNOQA_VERSION},
         {"command", o.command},
         {"inputs", std::move(inputs)},
         {"config",
          {{"align", to_json(o.align)},
           {"smoother", to_json(o.smoother)},
           {"tau", o.tau},
           {"tau_grid", std::move(grid)},
           {"keep_inside", o.keep_inside},
           {"seed", o.seed ? Json(*o.seed) : Json(nullptr)},
           {"jobs", o.jobs}}},
         {"deterministic", o.deterministic}};
  if (!o.deterministic) {
    Json t = Json::object();
    for (const auto& [k, v] : timings) t[k] = v;
    m["timings_ms"] = std::move(t);
  }
  return m;
}

RunOptions options_from_manifest(const Json& m) {
  detail::require_object(m, "manifest");
  RunOptions o;
  try {
    o.command = m.at("command").get<std::string>();
    for (const Json& in : m.at("inputs")) o.inputs.emplace_back(in.at("role").get<std::string>(), in.at("path").get<std::string>());
    const Json& c = m.at("config");
    o.align = align_config_from_json(c.at("align"));
    o.smoother = smoother_spec_from_json(c.at("smoother"));
    o.tau = c.at("tau").get<double>();
    o.tau_grid = c.at("tau_grid").get<std::vector<double>>();
    o.keep_inside = c.at("keep_inside").get<bool>();
    if (!c.at("seed").is_null()) o.seed = c.at("seed").get<std::uint64_t>();
    o.jobs = c.at("jobs").get<int>();
    o.deterministic = m.at("deterministic").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("manifest: ") + e.what());
  }
  return o;
}

// ---------------------------------------------------------------------------
// Run context

class Run {
 public:
  Run(RunOptions opt, fs::path out) : opt_(std::move(opt)), out_(std::move(out)) {
    check_output_dir();
    fs::create_directories(out_);
  }

  const RunOptions& opt() const { return opt_; }
  const fs::path& out() const { return out_; }

  void write(const std::string& name, std::string_view content) const { write_text_file(out_ / name, content); }
  void write_json(const std::string& name, const Json& j) const { write(name, dump_json(j)); }

  template <typename Fn>
  auto timed(const std::string& stage, Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    auto finish = [&] {
      timings_[stage] += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    };
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      finish();
    } else {
      auto r = fn();
      finish();
      return r;
    }
  }

  void write_manifest() const { write_json("manifest.json", manifest_json(opt_, timings_)); }

  std::string svg_comment() const {
    if (opt_.deterministic) return {};
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return std::string("generated ") + buf;
  }

 private:
  void check_output_dir() const {
    const fs::path target = fs::weakly_canonical(fs::absolute(out_));
    for (const auto& [role, path] : opt_.inputs) {
      if (path.rfind("builtin:", 0) == 0) continue;
      const fs::path in = fs::weakly_canonical(fs::absolute(path));
      std::error_code ec;
      const fs::path dir = fs::is_directory(in, ec) ? in : in.parent_path();
      if (target == in || target == dir) {
        throw Error(ErrorCode::kInvalidArgument,
                    "output directory " + out_.string() + " must differ from the location of input " + path);
      }
    }
  }

  RunOptions opt_;
  fs::path out_;
  std::map<std::string, double> timings_;
};

Trajectory load_trajectory(const RunOptions& o) {
  Trajectory traj = load_annotations(o.required_input("annotations"));
  if (auto absence = o.input("absence")) apply_absence(traj, read_text_file(*absence));
  return traj;
}

AlignmentResult load_alignment(const RunOptions& o) {
  return alignment_from_json(parse_json(read_text_file(o.required_input("alignment"))));
}

std::string points_csv(const CenterTrack& track) {
  std::string out = "frame,x,y\n";
  for (std::size_t i = 0; i < track.size(); ++i) {
    out += std::to_string(i) + ",";
    if (track[i]) out += format_real(track[i]->x) + "," + format_real(track[i]->y);
    else out += ",";
    out += "\n";
  }
  return out;
}

Json curve_json(const std::vector<CurvePoint>& curve) {
  Json a = Json::array();
  for (const CurvePoint& p : curve) a.push_back(Json{{"threshold", p.threshold}, {"success_rate", p.value}});
  return a;
}

std::vector<CurvePoint> curve_from_json(const Json& j) {
  std::vector<CurvePoint> c;
  for (const Json& p : j) c.push_back({p.at("threshold").get<double>(), p.at("success_rate").get<double>()});
  return c;
}

std::vector<ReplacedRow> replaced_from_json(const Json& j) {
  std::vector<ReplacedRow> rows;
  for (const Json& r : j) {
    rows.push_back({r.at("threshold").get<double>(), r.at("replaced").get<std::size_t>(),
                    r.at("evaluable").get<std::size_t>(), r.at("replaced_fraction").get<double>()});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Commands

int cmd_align(Run& run) {
  const RunOptions& o = run.opt();
  const auto paths = list_frames(o.required_input("frames"), frame_extensions());
  if (paths.size() < 2) {
    throw Error(ErrorCode::kIo, "need at least 2 frames in " + o.required_input("frames") + ", found " +
                                    std::to_string(paths.size()));
  }
  std::vector<GrayImage> frames(paths.size());
  run.timed("load", [&] { parallel_for(paths.size(), o.jobs, [&](std::size_t i) { frames[i] = load_frame(paths[i]); }); });
  const Trajectory traj = load_trajectory(o);
  if (traj.size() != frames.size()) {
    throw Error(ErrorCode::kLengthMismatch, "annotation file has " + std::to_string(traj.size()) + " rows for " +
                                                std::to_string(frames.size()) + " frames");
  }
  const AlignmentResult result = run.timed("align", [&] { return align_sequence(frames, traj, o.align, o.jobs); });
  run.write_json("alignment.json", to_json(result));
  run.write("canonical.csv", points_csv(to_canonical(result, traj)));
  run.write_manifest();
  if (result.failed_at) {
    std::cerr << "annoqa: alignment failed at frame " << *result.failed_at << "; partial output written\n";
    return kExitAlignment;
  }
  return kExitOk;
}

struct Audit {
  AlignmentResult alignment;
  Trajectory traj;
  SmoothedTrack track;
  std::vector<ReplacedRow> replaced;
};

Audit audit(Run& run) {
  const RunOptions& o = run.opt();
  Audit a;
  a.alignment = load_alignment(o);
  a.traj = load_trajectory(o);
  require_same_length(a.traj.size(), a.alignment.frames.size(), "annotation rows differ from aligned frames");
  a.track = run.timed("smooth", [&] { return smooth_and_reproject(a.alignment, a.traj, o.smoother); });
  a.replaced = replaced_stats(a.traj, a.track.reprojected, o.tau_grid);
  return a;
}

int cmd_qa(Run& run) {
  const RunOptions& o = run.opt();
  require_positive_threshold(o.tau);
  const Audit a = audit(run);
  const OutlierReport report = flag_outliers(a.track.distance, o.tau);
  const std::vector<CurvePoint> curve = success_rate_curve(a.track.distance, o.tau_grid);
  run.write_json("report.json", Json{{"tau", o.tau},
                                     {"smoother", to_json(o.smoother)},
                                     {"outliers", to_json(report)},
                                     {"success_curve", curve_json(curve)},
                                     {"replaced_grid", to_json(a.replaced)}});
  run.write("curve.csv", curve_csv(curve));
  run.write("replaced.csv", replaced_csv(a.replaced));
  run.write("trajectory.csv", canonical_csv(a.track.canonical, a.track.smoothed));
  run.write("overlay.svg", trajectory_svg(a.track.canonical, a.track.smoothed, report.flagged, run.svg_comment()));
  run.write_manifest();
  return kExitOk;
}

int cmd_correct(Run& run) {
  const RunOptions& o = run.opt();
  require_positive_threshold(o.tau);
  const Audit a = audit(run);
  std::optional<FrameBounds> bounds;
  if (o.keep_inside && a.alignment.width > 0 && a.alignment.height > 0)
    bounds = FrameBounds{double(a.alignment.width), double(a.alignment.height)};
  const CorrectionResult r = correct(a.traj, a.track.reprojected, o.tau, bounds);
  run.write("corrected.txt", format_annotations(r.corrected));
  run.write_json("correction.json", Json{{"tau", o.tau},
                                         {"smoother", to_json(o.smoother)},
                                         {"result", to_json(r)},
                                         {"replaced_grid", to_json(a.replaced)}});
  run.write("replaced.csv", replaced_csv(a.replaced));
  run.write_manifest();
  return kExitOk;
}

int cmd_extrapolate(Run& run) {
  const RunOptions& o = run.opt();
  const AlignmentResult alignment = load_alignment(o);
  const Trajectory traj = load_trajectory(o);
  const Trajectory filled = run.timed("extrapolate", [&] { return extrapolate_missing(traj, alignment, o.smoother); });
  Json filled_frames = Json::array(), missing = Json::array();
  for (std::size_t i = 0; i < filled.size(); ++i) {
    if (!traj[i].box && filled[i].box) filled_frames.push_back(i);
    if (!filled[i].box) missing.push_back(i);
  }
  run.write("filled.txt", format_annotations(filled));
  run.write_json("extrapolation.json", Json{{"smoother", to_json(o.smoother)},
                                            {"filled_frames", std::move(filled_frames)},
                                            {"missing_frames", std::move(missing)}});
  run.write_manifest();
  return kExitOk;
}

int cmd_synth(Run& run) {
  const RunOptions& o = run.opt();
  const std::string source = o.required_input("config");
  ScenarioConfig cfg =
      source == kBuiltinReference ? reference_scenario() : scenario_config_from_json(parse_json(read_text_file(source)));
  if (o.seed) cfg.seed = *o.seed;
  const GroundTruthScenario sc = run.timed("generate", [&] { return generate(cfg); });
  const fs::path frames_dir = run.out() / "frames";
  fs::create_directories(frames_dir);
  run.timed("write", [&] {
    parallel_for(sc.frames.size(), o.jobs, [&](std::size_t i) {
      char name[32];
      std::snprintf(name, sizeof name, "frame_%06zu.pgm", i);
      write_text_file(frames_dir / name, encode_pgm(sc.frames[i]));
    });
  });
  run.write("groundtruth.txt", format_annotations(sc.noisy));
  run.write_json("ground_truth.json", ground_truth_json(sc));
  run.write_manifest();
  return kExitOk;
}

int cmd_report(Run& run) {
  const RunOptions& o = run.opt();
  std::vector<std::string> dirs;
  for (const auto& [role, path] : o.inputs)
    if (role == "run") dirs.push_back(path);
  if (dirs.empty()) throw Error(ErrorCode::kInvalidArgument, "report needs at least one run directory");
  std::vector<SequenceStats> seqs(dirs.size());
  parallel_for(dirs.size(), o.jobs, [&](std::size_t k) {
    const fs::path dir(dirs[k]);
    const fs::path qa = dir / "report.json", corr = dir / "correction.json";
    std::error_code ec;
    const fs::path file = fs::exists(qa, ec) ? qa : corr;
    const Json j = parse_json(read_text_file(file));
    SequenceStats& s = seqs[k];
    const fs::path norm = dir.lexically_normal();
    s.name = (norm.has_filename() ? norm.filename() : norm.parent_path().filename()).string();
    try {
      s.method = j.at("smoother").at("method").get<std::string>();
      if (j.contains("success_curve")) s.curve = curve_from_json(j["success_curve"]);
      s.replaced = replaced_from_json(j.at("replaced_grid"));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kParse, file.string() + ": " + e.what());
    }
  });
  const std::vector<MethodSummary> summary = summarize(seqs);
  Json seq_json = Json::array(), method_json = Json::array();
  for (const SequenceStats& s : seqs) {
    seq_json.push_back(Json{{"name", s.name}, {"method", s.method}, {"success_curve", curve_json(s.curve)},
                            {"replaced_grid", to_json(s.replaced)}});
  }
  std::string curve_rows = "method,threshold,mean_success_rate\n";
  std::string replaced_rows = "method,threshold,mean_replaced_fraction,pooled_replaced_fraction\n";
  for (const MethodSummary& m : summary) {
    method_json.push_back(Json{{"method", m.method},
                               {"sequences", m.sequences},
                               {"mean_success_curve", curve_json(m.mean_curve)},
                               {"mean_replaced", to_json(m.mean_replaced)},
                               {"pooled_replaced", to_json(m.pooled_replaced)}});
    for (const CurvePoint& p : m.mean_curve)
      curve_rows += m.method + "," + format_real(p.threshold) + "," + format_real(p.value) + "\n";
    for (std::size_t k = 0; k < m.mean_replaced.size(); ++k) {
      replaced_rows += m.method + "," + format_real(m.mean_replaced[k].threshold) + "," +
                       format_real(m.mean_replaced[k].fraction) + "," + format_real(m.pooled_replaced[k].fraction) + "\n";
    }
  }
  run.write_json("summary.json", Json{{"sequences", std::move(seq_json)}, {"methods", std::move(method_json)}});
  run.write("summary_curve.csv", curve_rows);
  run.write("summary_replaced.csv", replaced_rows);
  run.write_manifest();
  return kExitOk;
}

int dispatch(const RunOptions& o, const fs::path& out) {
  Run run(o, out);
  if (o.command == "align") return cmd_align(run);
  if (o.command == "qa") return cmd_qa(run);
  if (o.command == "correct") return cmd_correct(run);
  if (o.command == "extrapolate") return cmd_extrapolate(run);
  if (o.command == "synth") return cmd_synth(run);
  if (o.command == "report") return cmd_report(run);
  throw Error(ErrorCode::kParse, "unknown command in manifest: " + o.command);
}

std::string absolute_path(const std::string& p) { return fs::weakly_canonical(fs::absolute(p)).string(); }

// ---------------------------------------------------------------------------
// Argument parsing

struct Flags {
  std::string out;
  int jobs = 1;
  bool deterministic = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> smoother;
  std::optional<int> window;
  std::optional<double> sigma;
  std::optional<int> order;
  std::optional<double> fraction;
  double tau = 100.0;
  std::vector<double> tau_grid;
  bool no_keep_inside = false;
  std::optional<int> keypoint_threshold;
  std::optional<double> ecc_inflation;
  bool mask_annotation = false;
  std::string align_config;
  std::string frames, annotations, alignment, absence, config, manifest;
  bool reference = false;
  std::vector<std::string> runs;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--out,-o", f.out, "Output directory (must differ from every input location)")->required();
  cmd->add_option("--jobs,-j", f.jobs, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_flag("--deterministic", f.deterministic, "Omit timestamps and timings from outputs");
  cmd->add_option("--seed", f.seed, "Seed for sampling (RANSAC, descriptors, scenario)");
}

void add_smoother(CLI::App* cmd, Flags& f) {
  cmd->add_option("--smoother", f.smoother, "movmean | gaussian | sg | lowess");
  cmd->add_option("--window", f.window, "Window in frames (odd)");
  cmd->add_option("--sigma", f.sigma, "Gaussian sigma in frames");
  cmd->add_option("--order", f.order, "Savitzky-Golay polynomial order");
  cmd->add_option("--fraction", f.fraction, "LOWESS neighbourhood fraction");
}

void add_tau(CLI::App* cmd, Flags& f) {
  cmd->add_option("--tau", f.tau, "Center-distance threshold in pixels")->capture_default_str();
  cmd->add_option("--tau-grid", f.tau_grid, "Comma-separated thresholds for curves and replaced-% rows")
      ->delimiter(',');
}

void add_annotations(CLI::App* cmd, Flags& f) {
  cmd->add_option("--absence", f.absence, "Per-frame 0/1 absence file");
}

RunOptions build_options(const std::string& command, const Flags& f, SmoothMethod default_smoother) {
  RunOptions o;
  o.command = command;
  o.jobs = f.jobs;
  o.deterministic = f.deterministic;
  o.seed = f.seed;
  o.tau = f.tau;
  if (!f.tau_grid.empty()) o.tau_grid = f.tau_grid;
  o.keep_inside = !f.no_keep_inside;
  if (!f.align_config.empty()) o.align = align_config_from_json(parse_json(read_text_file(f.align_config)));
  if (f.keypoint_threshold) o.align.keypoint_threshold = *f.keypoint_threshold;
  if (f.ecc_inflation) o.align.ecc_box_inflation = *f.ecc_inflation;
  if (f.mask_annotation) o.align.mask_annotation = true;
  if (f.seed) {
    o.align.feature.seed = *f.seed;
    o.align.ransac.seed = *f.seed;
  }
  o.smoother.method = f.smoother ? parse_smooth_method(*f.smoother) : default_smoother;
  if (f.window) o.smoother.window = *f.window;
  if (f.sigma) o.smoother.sigma = *f.sigma;
  if (f.order) o.smoother.poly_order = *f.order;
  if (f.fraction) o.smoother.fraction = *f.fraction;
  o.smoother.validate();
  o.align.validate();

  auto add = [&](const char* role, const std::string& p) {
    if (!p.empty()) o.inputs.emplace_back(role, absolute_path(p));
  };
  add("frames", f.frames);
  add("alignment", f.alignment);
  add("annotations", f.annotations);
  add("absence", f.absence);
  if (command == "synth") {
    if (f.reference == !f.config.empty())
      throw Error(ErrorCode::kInvalidArgument, "synth needs exactly one of CONFIG or --reference");
    o.inputs.emplace_back("config", f.reference ? std::string(kBuiltinReference) : absolute_path(f.config));
  }
  for (const std::string& r : f.runs) add("run", r);
  return o;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Audit and correct bounding-box annotations of video sequences"};
  app.set_version_flag("--version", ANNOQA_VERSION);
  app.require_subcommand(1);
  Flags f;

  CLI::App* align = app.add_subcommand("align", "Register every frame to the first and map annotations there");
  align->add_option("frames", f.frames, "Directory of PGM/PNG frames")->required();
  align->add_option("annotations", f.annotations, "Annotation file, one x,y,w,h row per frame")->required();
  add_annotations(align, f);
  align->add_option("--keypoint-threshold", f.keypoint_threshold, "Matches needed before ECC takes over (default 20)");
  align->add_option("--ecc-inflation", f.ecc_inflation, "ECC template box inflation (default 0.25)");
  align->add_flag("--mask-annotation", f.mask_annotation, "Ignore keypoints inside the annotated object");
  align->add_option("--config", f.align_config, "JSON file with alignment settings");
  add_common(align, f);

  auto audit_cmd = [&](const char* name, const char* help, bool with_tau) {
    CLI::App* c = app.add_subcommand(name, help);
    c->add_option("alignment", f.alignment, "alignment.json written by 'align'")->required();
    c->add_option("annotations", f.annotations, "Annotation file")->required();
    add_annotations(c, f);
    add_smoother(c, f);
    if (with_tau) add_tau(c, f);
    add_common(c, f);
    return c;
  };
  audit_cmd("qa", "Flag outliers and compute the success-rate curve", true);
  CLI::App* corr = audit_cmd("correct", "Re-center outlier boxes on the smoothed trajectory", true);
  corr->add_flag("--no-keep-inside", f.no_keep_inside, "Do not shift corrected boxes back into the frame");
  CLI::App* extra = audit_cmd("extrapolate", "Fill frames without annotation (default smoother sg)", false);

  CLI::App* synth = app.add_subcommand("synth", "Render a synthetic scenario with ground truth");
  synth->add_option("config", f.config, "Scenario JSON file");
  synth->add_flag("--reference", f.reference, "Use the built-in reference scenario");
  add_common(synth, f);

  CLI::App* report = app.add_subcommand("report", "Summarize qa/correct runs of several sequences");
  report->add_option("runs", f.runs, "Run directories")->required();
  add_common(report, f);

  CLI::App* rerun = app.add_subcommand("rerun", "Repeat a run from its manifest.json");
  rerun->add_option("manifest", f.manifest, "manifest.json of an earlier run")->required();
  rerun->add_option("--out,-o", f.out, "Output directory")->required();
  rerun->add_flag("--deterministic", f.deterministic, "Force deterministic output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    RunOptions o;
    if (rerun->parsed()) {
      o = options_from_manifest(parse_json(read_text_file(f.manifest)));
      o.deterministic = o.deterministic || f.deterministic;
    } else {
      CLI::App* cmd = app.get_subcommands().front();
      const SmoothMethod def = cmd == extra ? SmoothMethod::kSavitzkyGolay : SmoothMethod::kLowess;
      o = build_options(cmd->get_name(), f, def);
    }
    return dispatch(o, f.out);
  } catch (const Error& e) {
    std::cerr << "annoqa: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "annoqa: " << e.what() << "\n";
    return kExitInput;
  }
}

}  // namespace
}  // namespace annoqa::cli

int main(int argc, char** argv) { return annoqa::cli::run_cli(argc, argv); }
