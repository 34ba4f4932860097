#ifndef RADARPREP_TOOLS_CLI_APP_HPP
#define RADARPREP_TOOLS_CLI_APP_HPP

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "radarprep/benchmark.hpp"
#include "radarprep/export.hpp"
#include "radarprep/ingest.hpp"
#include "radarprep/pipeline.hpp"
#include "radarprep/synth.hpp"
#include "radarprep/tuning.hpp"

namespace radarprep::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Parses "ds,hg,km" style lists. Throws UsageError naming the bad token.
inline MethodSet parse_methods(const std::string& text) {
  MethodSet m;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok == "ds") m.ds = true;
    else if (tok == "hg") m.hg = true;
    else if (tok == "km") m.km = true;
    else throw UsageError("unknown method '" + tok + "' (expected ds, hg, km)");
  }
  if (!m.any()) throw UsageError("--methods must name at least one of ds, hg, km");
  return m;
}

namespace detail {

struct PipelineFlags {
  std::string methods = "ds,km,hg";
  std::size_t segments = kDefaultNumSegments;
  double null_threshold = 0.001;
  double eps = 0.4;
  std::size_t min_samples = 6;
  double alpha = 0.25;
  double q = 29.41;
  double r = 0.081;
  double p0 = 14.64;
  double gate = 2.0;
  double grid_cell = 0.5;
  std::size_t threads = 0;

  void attach(CLI::App& app) {
    app.add_option("--methods", methods, "Comma list over ds,hg,km")->capture_default_str();
    app.add_option("--segments", segments, "Segments per frame")->capture_default_str();
    app.add_option("--null-threshold", null_threshold, "Zero-padding norm threshold")->capture_default_str();
    app.add_option("--eps", eps, "DBSCAN neighborhood radius")->capture_default_str();
    app.add_option("--min-samples", min_samples, "DBSCAN core-point count")->capture_default_str();
    app.add_option("--alpha", alpha, "DBSCAN vertical weight")->capture_default_str();
    app.add_option("--q", q, "Kalman process-noise scale")->capture_default_str();
    app.add_option("--r", r, "Kalman measurement-noise scale")->capture_default_str();
    app.add_option("--p0", p0, "Kalman initial covariance scale")->capture_default_str();
    app.add_option("--gate", gate, "Kalman gating distance (m)")->capture_default_str();
    app.add_option("--grid-cell", grid_cell, "Grid cell size for HG/KM without DBSCAN")->capture_default_str();
    app.add_option("--threads", threads, "Worker threads (0 = hardware concurrency)");
  }

  PipelineConfig config() const {
    PipelineConfig c;
    c.methods = parse_methods(methods);
    c.segmentation = {segments, null_threshold};
    c.dbscan = {eps, min_samples, alpha};
    c.kalman = {.q = q, .r = r, .p0 = p0, .gate = gate, .dt = 1.0};
    c.grid_cell = grid_cell;
    c.threads = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
    c.validate();
    return c;
  }
};

inline std::filesystem::path with_suffix(const std::filesystem::path& p, const std::string& suffix) {
  return std::filesystem::path(p.string() + suffix);
}

/// Inserts `tag` before the extension: out.csv → out.<tag>.csv.
inline std::filesystem::path tagged(const std::filesystem::path& p, const std::string& tag) {
  return p.parent_path() / (p.stem().string() + "." + tag + p.extension().string());
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out.flush()) throw DataError("write to " + path.string() + " failed");
}

inline std::pair<std::size_t, std::size_t> parse_range(const std::string& s) {
  const auto dash = s.find('-');
  try {
    if (dash == std::string::npos) {
      const auto v = static_cast<std::size_t>(std::stoull(s));
      return {v, v};
    }
    return {static_cast<std::size_t>(std::stoull(s.substr(0, dash))),
            static_cast<std::size_t>(std::stoull(s.substr(dash + 1)))};
  } catch (const std::exception&) {
    throw UsageError("expected N or MIN-MAX, got '" + s + "'");
  }
}

inline Bounds parse_bounds(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw UsageError("bounds must be LOW,HIGH: '" + s + "'");
  try {
    return {std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))};
  } catch (const std::exception&) {
    throw UsageError("bounds must be LOW,HIGH: '" + s + "'");
  }
}

/// Splices `--config FILE` entries in as `--key=value` arguments right after
/// the subcommand, skipping keys already given on the command line.
inline std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::optional<std::string> file;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) file = args[i + 1];
    else if (args[i].starts_with("--config=")) file = args[i].substr(9);
  }
  if (!file || args.empty()) return args;

  std::ifstream in(*file);
  if (!in) throw DataError("cannot open config " + *file + ": " + std::strerror(errno));
  auto trim = [](std::string t) {
    const auto a = t.find_first_not_of(" \t\r\"");
    const auto b = t.find_last_not_of(" \t\r\"");
    return a == std::string::npos ? std::string{} : t.substr(a, b - a + 1);
  };
  auto given = [&](const std::string& key) {
    return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == "--" + key || a.starts_with("--" + key + "=");
    });
  };
  std::vector<std::string> extra;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw DataError(*file + ": line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    if (key == "config") continue;
    if (!given(key)) extra.push_back("--" + key + "=" + trim(line.substr(eq + 1)));
  }
  std::vector<std::string> out{args.front()};
  out.insert(out.end(), extra.begin(), extra.end());
  out.insert(out.end(), args.begin() + 1, args.end());
  return out;
}

}  // namespace detail

/// Entry point shared by the executable and the tests.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Radar point-cloud preprocessing: segmentation, DBSCAN, Hungarian association, "
               "Kalman tracking and human-cluster selection"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_help_all_flag("--help-all");

  // process
  auto* process = app.add_subcommand("process", "Run a method combination over a frame file");
  std::string config_path;  // consumed by expand_config before parsing
  process->add_option("--config", config_path, "key=value file; flags override it");
  std::string p_input, p_output;
  bool p_timings = false;
  detail::PipelineFlags p_flags;
  process->add_option("--input,-i", p_input, "Input frames (.jsonl or .csv)")->required();
  process->add_option("--output,-o", p_output, "Processed frames (.jsonl or .csv)")->required();
  process->add_flag("--timings", p_timings, "Include per-stage seconds in the report");
  p_flags.attach(*process);

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic scene with ground truth");
  synth->add_option("--config", config_path, "key=value file; flags override it");
  SceneConfig scene;
  std::string s_output, s_truth, s_human = "100-250", s_trajectory = "sinusoidal";
  bool s_no_keypoints = false;
  synth->add_option("--output,-o", s_output, "Frame file (.jsonl or .csv)")->required();
  synth->add_option("--truth", s_truth, "Ground-truth JSONL (default <output>.truth.jsonl)");
  synth->add_option("--frames", scene.num_frames)->capture_default_str();
  synth->add_option("--frame-size", scene.frame_size)->capture_default_str();
  synth->add_option("--time-steps", scene.time_steps, "Sweep blocks per frame")->capture_default_str();
  synth->add_option("--human", s_human, "Human points per frame: N or MIN-MAX")->capture_default_str();
  synth->add_option("--clutter", scene.clutter_points, "Uniform clutter points per frame")->capture_default_str();
  synth->add_option("--objects", scene.clutter_objects, "Static clutter reflectors")->capture_default_str();
  synth->add_option("--object-points", scene.clutter_object_points, "Points per reflector per frame")
      ->capture_default_str();
  synth->add_option("--trajectory", s_trajectory, "stationary, linear or sinusoidal")->capture_default_str();
  synth->add_option("--speed", scene.speed, "Body speed (m/s)")->capture_default_str();
  synth->add_option("--noise", scene.noise_sigma, "Body spread sigma (m)")->capture_default_str();
  synth->add_option("--seed", scene.seed)->capture_default_str();
  synth->add_flag("--no-keypoints", s_no_keypoints, "Omit ground-truth keypoints");

  // bench
  auto* bench = app.add_subcommand("bench", "Time all seven method combinations");
  bench->add_option("--config", config_path, "key=value file; flags override it");
  std::string b_input, b_output;
  std::size_t b_reps = 5;
  detail::PipelineFlags b_flags;
  bench->add_option("--input,-i", b_input)->required();
  bench->add_option("--output,-o", b_output, "CSV path (default stdout)");
  bench->add_option("--reps", b_reps, "Repetitions per method set (>= 3)")->capture_default_str();
  b_flags.attach(*bench);

  // tune
  auto* tune = app.add_subcommand("tune", "Bayesian optimization of the Kalman noise scales");
  tune->add_option("--config", config_path, "key=value file; flags override it");
  std::string t_input, t_output, t_best, t_qb = "0.01,100", t_rb = "0.001,10", t_pb = "0.01,100";
  BoConfig bo;
  std::size_t t_sample = 32;
  detail::PipelineFlags t_flags;
  tune->add_option("--input,-i", t_input)->required();
  tune->add_option("--output,-o", t_output, "Trace CSV")->required();
  tune->add_option("--best", t_best, "Best parameters JSON (default <output>.best.json)");
  tune->add_option("--iterations", bo.iterations)->capture_default_str();
  tune->add_option("--initial", bo.initial_samples, "Space-filling evaluations")->capture_default_str();
  tune->add_option("--seed", bo.seed)->capture_default_str();
  tune->add_option("--q-bounds", t_qb)->capture_default_str();
  tune->add_option("--r-bounds", t_rb)->capture_default_str();
  tune->add_option("--p0-bounds", t_pb)->capture_default_str();
  tune->add_option("--sample-frames", t_sample, "Frames sampled for the objective")->capture_default_str();
  t_flags.attach(*tune);

  // inspect
  auto* inspect = app.add_subcommand("inspect", "Dump one frame's intermediates as CSV");
  inspect->add_option("--config", config_path, "key=value file; flags override it");
  std::string i_input, i_output, i_what;
  std::uint64_t i_frame = 0;
  detail::PipelineFlags i_flags;
  inspect->add_option("--input,-i", i_input)->required();
  inspect->add_option("--output,-o", i_output, "CSV path (costs: one file per segment pair)")->required();
  inspect->add_option("--frame-id", i_frame)->required();
  inspect->add_option("--what", i_what)
      ->required()
      ->check(CLI::IsMember({"segments", "clusters", "costs", "tracks", "scores"}));
  i_flags.attach(*inspect);

  std::vector<std::string> expanded;
  try {
    expanded = detail::expand_config(args);
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (process->parsed()) {
      const PipelineConfig cfg = p_flags.config();
      const FrameSet frames = load_frames(p_input);
      const auto [processed, report] = run_pipeline(frames, cfg);
      write_frames(processed, p_output);
      detail::write_text(detail::with_suffix(p_output, ".report.json"),
                         report_to_json(report, cfg.methods, p_timings).dump(2) + "\n");
      out << "processed " << report.frames_processed << " frames, mean retained points "
          << report.mean_retained_points << "\n";
    } else if (synth->parsed()) {
      std::tie(scene.human_min, scene.human_max) = detail::parse_range(s_human);
      scene.trajectory = parse_trajectory(s_trajectory);
      scene.keypoints = !s_no_keypoints;
      const auto result = synthesize_scene(scene);
      write_frames(result.frames, s_output);
      write_ground_truth(result.truth, s_truth.empty() ? detail::with_suffix(s_output, ".truth.jsonl")
                                                       : std::filesystem::path(s_truth));
      out << "wrote " << result.frames.frames.size() << " frames\n";
    } else if (bench->parsed()) {
      if (b_reps < 3) throw UsageError("--reps must be at least 3");
      PipelineConfig base = b_flags.config();
      const FrameSet frames = load_frames(b_input);
      const auto rows = benchmark(frames, all_method_sets(), b_reps, base);
      std::ostringstream csv;
      write_benchmark_csv(csv, rows);
      if (b_output.empty()) out << csv.str();
      else detail::write_text(b_output, csv.str());
    } else if (tune->parsed()) {
      bo.bounds = {detail::parse_bounds(t_qb), detail::parse_bounds(t_rb), detail::parse_bounds(t_pb)};
      bo.validate();
      const PipelineConfig cfg = t_flags.config();
      const FrameSet frames = load_frames(t_input);
      const KfObjective objective(frames, cfg, t_sample, bo.seed);
      const auto trace = bayes_optimize([&](const ParamVector& p) { return objective(p); }, bo);
      std::ostringstream csv;
      write_trace_csv(csv, trace);
      detail::write_text(t_output, csv.str());
      nlohmann::ordered_json best;
      best["q"] = trace.best.params[0];
      best["r"] = trace.best.params[1];
      best["p0"] = trace.best.params[2];
      best["objective"] = trace.best.value;
      best["iterations"] = trace.evaluations.size();
      best["seed"] = bo.seed;
      detail::write_text(t_best.empty() ? detail::with_suffix(t_output, ".best.json")
                                        : std::filesystem::path(t_best),
                         best.dump(2) + "\n");
      out << "best objective " << trace.best.value << "\n";
    } else if (inspect->parsed()) {
      PipelineConfig cfg = i_flags.config();
      cfg.emit_intermediates = true;
      const FrameSet frames = load_frames(i_input);
      const Frame* frame = nullptr;
      for (const auto& f : frames.frames)
        if (f.frame_id == i_frame) frame = &f;
      if (frame == nullptr) throw DataError("frame " + std::to_string(i_frame) + " not found");
      const auto res = process_frame(*frame, cfg);
      const auto& im = res.intermediates;
      std::ostringstream csv;
      if (i_what == "segments") {
        write_segments_csv(csv, im.segments);
      } else if (i_what == "clusters") {
        write_labels_csv(csv, im.segments, im.labelings);
      } else if (i_what == "tracks") {
        write_steps_csv(csv, im.tracks, im.steps);
      } else if (i_what == "scores") {
        write_scores_csv(csv, im.scores, im.selected_track_ids);
      } else {
        for (std::size_t s = 0; s < im.costs.size(); ++s) {
          std::ostringstream one;
          write_cost_matrix_csv(one, im.costs[s]);
          detail::write_text(detail::tagged(i_output, std::to_string(s) + "-" + std::to_string(s + 1)), one.str());
        }
        out << "wrote " << im.costs.size() << " cost matrices\n";
        return kExitOk;
      }
      detail::write_text(i_output, csv.str());
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

inline int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args);
}

}  // namespace radarprep::cli

#endif  // RADARPREP_TOOLS_CLI_APP_HPP
