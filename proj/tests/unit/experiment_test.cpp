#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "legfg/experiment.hpp"

using namespace legfg;
namespace fs = std::filesystem;

namespace {

KeyValueConfig shortManifest(const std::string& shapes = "zigzag") {
  return KeyValueConfig::Parse("[experiment]\nseeds = 3\nshapes = " + shapes +
                               "\n[gait]\nduration = 3\nramp_time = 0.75\n");
}

fs::path freshDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  return dir;
}

std::vector<std::string> dataRows(const std::string& table) {
  std::vector<std::string> rows;
  std::istringstream in(table);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line[0] != '#' && line.rfind("shape", 0) != 0) rows.push_back(line);
  }
  return rows;
}

}  // namespace

TEST(Experiment, ManifestDefaultsAndOverrides) {
  const auto m = ExperimentManifest::FromConfig(KeyValueConfig::Parse(
      "[experiment]\nseeds = 1, 2, 5\nshapes = turn\n[noise]\njoint_sigma = 0.002\n[proposed]\nfk.rot_sigma = "
      "0.01\n[eval]\nrpe_delta = 0.5\n"));
  EXPECT_EQ(m.seeds, (std::vector<std::uint64_t>{1, 2, 5}));
  ASSERT_EQ(m.shapes.size(), 1u);
  EXPECT_EQ(m.shapes[0], PathShape::Turn);
  EXPECT_EQ(m.proposed.mode, EstimatorMode::Proposed);
  EXPECT_EQ(m.baseline.mode, EstimatorMode::Baseline);
  EXPECT_EQ(m.proposed.fk_rot_sigma, 0.01);
  EXPECT_EQ(m.baseline.fk_rot_sigma, EstimatorConfig{}.fk_rot_sigma);
  EXPECT_EQ(m.eval.rpe_delta, 0.5);
  const GaitSpec spec = m.cellSpec(PathShape::Turn, 5);
  EXPECT_EQ(spec.seed, 5u);
  EXPECT_EQ(spec.noise.joint_sigma, 0.002);
}

TEST(Experiment, DefaultManifestComparesBothModes) {
  const ExperimentManifest m;
  EXPECT_EQ(m.proposed.mode, EstimatorMode::Proposed);
  EXPECT_EQ(m.baseline.mode, EstimatorMode::Baseline);
  ExperimentManifest same_mode;
  same_mode.baseline.mode = EstimatorMode::Proposed;
  same_mode.seeds = {2};
  same_mode.shapes = {PathShape::Straight};
  same_mode.gait.set("duration", "2");
  same_mode.gait.set("ramp_time", "0.5");
  const ExperimentCell c = runCell(same_mode, PathShape::Straight, 2);
  ASSERT_TRUE(c.ok());
  EXPECT_NE(c.proposed.ape, c.baseline.ape);
}

TEST(Experiment, ManifestRejectsBadInput) {
  EXPECT_THROW(ExperimentManifest::FromConfig(KeyValueConfig::Parse("[experiment]\nseeds =\n")), ValidationError);
  EXPECT_THROW(ExperimentManifest::FromConfig(KeyValueConfig::Parse("[sim]\nx = 1\n")), ValidationError);
  EXPECT_THROW(ExperimentManifest::FromConfig(KeyValueConfig::Parse("seeds = 1\n")), ValidationError);
  EXPECT_THROW(ExperimentManifest::FromConfig(KeyValueConfig::Parse("[experiment]\nseeds = -1\n")), ValidationError);
  EXPECT_THROW(ExperimentManifest::FromConfig(KeyValueConfig::Parse("[gait]\nshape = turn\n")), ValidationError);
  EXPECT_THROW(ExperimentManifest::FromConfig(KeyValueConfig::Parse("[proposed]\nmode = baseline\n")),
               ValidationError);
  EXPECT_THROW(ExperimentManifest::FromConfig(KeyValueConfig::Parse("[gait]\nduty_factor = 1.5\n")),
               ValidationError);
  EXPECT_THROW(ExperimentManifest::FromConfig(KeyValueConfig::Parse("[experiment]\nmodel = no/such.urdf\n")),
               IoError);
}

TEST(Experiment, RelativeModelPathFollowsManifest) {
  const auto m = ExperimentManifest::FromConfig(KeyValueConfig::Parse("[experiment]\nmodel = quadruped.urdf\n"),
                                                LEGFG_MODEL_DIR);
  EXPECT_EQ(fs::path(m.model), fs::path(LEGFG_MODEL_DIR) / "quadruped.urdf");
}

TEST(Experiment, ResolvedConfigRoundTrips) {
  const auto m = ExperimentManifest::FromConfig(shortManifest("straight,turn"));
  const KeyValueConfig resolved = m.toConfig();
  EXPECT_TRUE(resolved.has("gait.step_length"));
  EXPECT_TRUE(resolved.has("noise.gyro_density"));
  EXPECT_TRUE(resolved.has("proposed.fk.rot_sigma"));
  EXPECT_TRUE(resolved.has("eval.rpe_delta"));
  EXPECT_EQ(ExperimentManifest::FromConfig(resolved).toConfig().toText(), resolved.toText());
}

TEST(Experiment, SingleCellTableHasFiveNumericColumns) {
  const auto m = ExperimentManifest::FromConfig(shortManifest());
  const ExperimentResult r = runExperiment(m);
  ASSERT_EQ(r.cells.size(), 1u);
  EXPECT_TRUE(r.cells[0].ok()) << r.cellTable();
  const auto rows = dataRows(r.summaryTable());
  ASSERT_EQ(rows.size(), 1u);
  std::istringstream row(rows[0]);
  std::string shape;
  row >> shape;
  EXPECT_EQ(shape, "zigzag");
  int numbers = 0;
  for (std::string cell; row >> cell; ++numbers) EXPECT_NO_THROW(std::stod(cell)) << cell;
  EXPECT_EQ(numbers, 5);
}

TEST(Experiment, ZeroNoiseReportsImprovementAsNa) {
  KeyValueConfig c = shortManifest("straight");
  c.set("noise.enabled", "false");
  const ExperimentResult r = runExperiment(ExperimentManifest::FromConfig(c));
  const auto s = r.summaries();
  ASSERT_EQ(s.size(), 1u);
  EXPECT_LT(s[0].baseline_ape, 1e-6);
  EXPECT_LT(s[0].proposed_ape, 1e-6);
  EXPECT_TRUE(std::isnan(s[0].ape_improvement));
  EXPECT_NE(dataRows(r.summaryTable())[0].find("n/a"), std::string::npos);
}

TEST(Experiment, StageFailureIsRecordedPerCell) {
  KeyValueConfig c = shortManifest("straight,turn");
  c.set("proposed.keyframe_rate", "30");
  const ExperimentResult r = runExperiment(ExperimentManifest::FromConfig(c));
  ASSERT_EQ(r.cells.size(), 2u);
  EXPECT_EQ(r.failedCells(), 2);
  for (const auto& cell : r.cells) {
    EXPECT_FALSE(cell.proposed.ok);
    EXPECT_TRUE(cell.baseline.ok);
    EXPECT_NE(cell.proposed.error.find("keyframe_rate"), std::string::npos);
  }
  EXPECT_NE(r.summaryTable().find("failed_cells=2"), std::string::npos);
  EXPECT_NE(r.cellTable().find("failed"), std::string::npos);
}

TEST(Experiment, OutputsAreByteIdenticalAcrossRunsAndThreads) {
  KeyValueConfig c = shortManifest("straight,diagonal");
  c.set("experiment.seeds", "1,2");
  const auto m1 = ExperimentManifest::FromConfig(c);
  c.set("experiment.threads", "4");
  const auto m4 = ExperimentManifest::FromConfig(c);
  const fs::path a = freshDir("legfg_experiment_a"), b = freshDir("legfg_experiment_b");
  runExperiment(m1, a.string());
  runExperiment(m4, b.string());
  for (const char* f : {"config.txt", "summary.txt", "cells.txt", "series_seed_1.txt", "series_seed_2.txt"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(readTextFile((a / f).string()), readTextFile((b / f).string())) << f;
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Experiment, KeepOutputsWritesCellDirectories) {
  KeyValueConfig c = shortManifest("straight");
  c.set("experiment.keep_outputs", "true");
  const fs::path dir = freshDir("legfg_experiment_keep");
  runExperiment(ExperimentManifest::FromConfig(c), dir.string());
  const fs::path cell = dir / "straight_seed3";
  EXPECT_TRUE(fs::exists(cell / "log" / "imu.txt"));
  EXPECT_TRUE(fs::exists(cell / "log" / "meta.txt"));
  for (const char* mode : {"proposed", "baseline"}) {
    EXPECT_TRUE(fs::exists(cell / mode / "estimate.txt"));
    EXPECT_TRUE(fs::exists(cell / mode / "config.txt"));
    EXPECT_TRUE(fs::exists(cell / mode / "metrics.txt"));
  }
  fs::remove_all(dir);
}
