#ifndef RADARPREP_BENCHMARK_HPP
#define RADARPREP_BENCHMARK_HPP

#include <chrono>
#include <ostream>
#include <string>
#include <vector>

#include "radarprep/ingest.hpp"
#include "radarprep/pipeline.hpp"
#include "radarprep/selection.hpp"

namespace radarprep {

struct BenchmarkRow {
  MethodSet methods;
  double per_frame_seconds = 0.0;  // median over repetitions
  std::vector<std::pair<Stage, double>> stage_seconds;  // per frame, median over repetitions
};

/// Times each method set over `repetitions` single-threaded passes and
/// reports per-frame medians.
inline std::vector<BenchmarkRow> benchmark(const FrameSet& frames, const std::vector<MethodSet>& method_sets,
                                           std::size_t repetitions, PipelineConfig base = {}) {
  if (repetitions < 3) throw UsageError("benchmark needs at least 3 repetitions");
  if (frames.frames.empty()) throw DataError("benchmark: empty frame set");
  base.threads = 1;
  base.emit_intermediates = false;
  const double nframes = static_cast<double>(frames.frames.size());

  // Repetitions are interleaved across method sets so that drift in machine
  // load affects every set alike.
  std::vector<std::vector<double>> totals(method_sets.size());
  std::vector<std::vector<std::vector<double>>> per_stage(method_sets.size(),
                                                          std::vector<std::vector<double>>(kAllStages.size()));
  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    for (std::size_t m = 0; m < method_sets.size(); ++m) {
      PipelineConfig cfg = base;
      cfg.methods = method_sets[m];
      const auto start = std::chrono::steady_clock::now();
      const auto [out, report] = run_pipeline(frames, cfg);
      const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - start;
      totals[m].push_back(wall.count() / nframes);
      for (std::size_t s = 0; s < kAllStages.size(); ++s) {
        auto it = report.per_stage_seconds.find(stage_name(kAllStages[s]));
        if (it != report.per_stage_seconds.end()) per_stage[m][s].push_back(it->second / nframes);
      }
    }
  }

  std::vector<BenchmarkRow> rows;
  for (std::size_t m = 0; m < method_sets.size(); ++m) {
    BenchmarkRow row;
    row.methods = method_sets[m];
    row.per_frame_seconds = median(totals[m]);
    for (std::size_t s = 0; s < kAllStages.size(); ++s)
      if (!per_stage[m][s].empty()) row.stage_seconds.emplace_back(kAllStages[s], median(per_stage[m][s]));
    rows.push_back(std::move(row));
  }
  return rows;
}

/// CSV with one line per (method set, stage).
inline void write_benchmark_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows) {
  out << "methods,per_frame_seconds,stage,stage_seconds\n";
  for (const auto& r : rows)
    for (const auto& [stage, secs] : r.stage_seconds)
      out << r.methods.label() << ',' << format_number(r.per_frame_seconds) << ',' << stage_name(stage) << ','
          << format_number(secs) << '\n';
}

}  // namespace radarprep

#endif  // RADARPREP_BENCHMARK_HPP
