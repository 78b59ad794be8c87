#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "legfg/config.hpp"
#include "legfg/estimator.hpp"
#include "legfg/eval.hpp"
#include "legfg/synthdata.hpp"

namespace legfg {

/// Sections: [experiment] (model, seeds, shapes, output, threads, keep_outputs),
/// [gait], [noise], [proposed], [baseline], [eval].
struct ExperimentManifest {
  std::string model = "quadruped";  ///< built-in name or path (relative to the manifest)
  std::vector<std::uint64_t> seeds = {1};
  std::vector<PathShape> shapes = {PathShape::Straight, PathShape::Diagonal, PathShape::Turn, PathShape::ZigZag};
  /// Output directory as written in the manifest; resolving it is up to the
  /// caller. Not part of toConfig, so runs into different places compare equal.
  std::string output = "compare";
  int threads = 1;  ///< not part of toConfig either
  /// Write logs, estimates and metrics of every cell below the output directory.
  bool keep_outputs = false;
  KeyValueConfig gait;  ///< flat GaitSpec keys, without model/shape/seed
  EstimatorConfig proposed;
  EstimatorConfig baseline = [] {
    EstimatorConfig c;
    c.mode = EstimatorMode::Baseline;
    return c;
  }();
  EvalConfig eval;

  /// `base_dir` anchors a relative model path.
  static ExperimentManifest FromConfig(const KeyValueConfig& config, const std::string& base_dir = "");
  static ExperimentManifest Load(const std::string& path);
  /// Every field with defaults expanded, readable by FromConfig.
  KeyValueConfig toConfig() const;
  void validate() const;

  GaitSpec cellSpec(PathShape shape, std::uint64_t seed) const;
};

struct ModeOutcome {
  bool ok = false;
  bool converged = false;
  std::string error;
  double ape = 0.0;  ///< RMSE
  double rpe = 0.0;  ///< RMSE
  std::string series;
};

struct ExperimentCell {
  PathShape shape = PathShape::Straight;
  std::uint64_t seed = 0;
  std::string error;  ///< synthesis failure
  ModeOutcome proposed;
  ModeOutcome baseline;

  bool ok() const { return error.empty() && proposed.ok && baseline.ok; }
};

struct ShapeSummary {
  PathShape shape = PathShape::Straight;
  int cells = 0;
  int failed = 0;
  /// Medians over the successful cells; NaN when none.
  double baseline_ape = 0.0;
  double baseline_rpe = 0.0;
  double proposed_ape = 0.0;
  double proposed_rpe = 0.0;
  /// (baseline − proposed) / baseline in %; NaN below the floor.
  double ape_improvement = 0.0;
  double rpe_improvement = 0.0;
};

struct ExperimentResult {
  ExperimentManifest manifest;
  std::vector<ExperimentCell> cells;  ///< shape-major, seeds in manifest order

  std::vector<ShapeSummary> summaries() const;
  /// One row per shape: baseline APE, baseline RPE, proposed APE, proposed
  /// RPE, APE improvement.
  std::string summaryTable() const;
  std::string cellTable() const;
  std::string seriesText(std::uint64_t seed) const;
  int failedCells() const;
};

/// Baseline metric below which an improvement is not reported.
inline constexpr double kImprovementFloor = 1e-6;

ExperimentCell runCell(const ExperimentManifest& manifest, PathShape shape, std::uint64_t seed,
                       const std::string& output_dir = "");

/// Runs every (shape, seed) cell. A failing stage is recorded in its cell and
/// the run continues. Writes config.txt, summary.txt, cells.txt and one
/// series_seed_<n>.txt per seed when `output_dir` is not empty.
ExperimentResult runExperiment(const ExperimentManifest& manifest, const std::string& output_dir = "");

}  // namespace legfg
