#include "legfg/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include "legfg/errors.hpp"

namespace legfg {

namespace fs = std::filesystem;

namespace {

const std::set<std::string> kSections = {"experiment", "gait", "noise", "proposed", "baseline", "eval"};
const std::set<std::string> kExperimentKeys = {"model", "seeds", "shapes", "output", "threads", "keep_outputs"};

KeyValueConfig flatten(const std::map<std::string, std::string>& entries, const std::string& prefix = "") {
  KeyValueConfig c;
  for (const auto& [k, v] : entries) c.set(prefix + k, v);
  return c;
}

EstimatorConfig estimatorSection(const KeyValueConfig& config, const std::string& section, EstimatorMode mode) {
  const auto entries = config.section(section);
  if (entries.count("mode")) throw ValidationError("[" + section + "] must not set 'mode'");
  EstimatorConfig c;
  try {
    c = EstimatorConfig::FromConfig(flatten(entries));
  } catch (const ValidationError& e) {
    throw ValidationError("[" + section + "] " + e.what());
  }
  c.mode = mode;
  return c;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6e", v);
  return buf;
}

std::string fmtPercent(double v) {
  if (std::isnan(v)) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.3f", v);
  return buf;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double improvement(double baseline, double proposed) {
  if (std::isnan(baseline) || std::isnan(proposed) || baseline < kImprovementFloor) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return 100.0 * (baseline - proposed) / baseline;
}

std::string oneLine(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

ModeOutcome runMode(const TrajectoryLog& log, const RobotModel& model, const EstimatorConfig& config,
                    const EvalConfig& eval, const std::string& dir) {
  ModeOutcome out;
  try {
    const EstimatedTrajectory est = estimate(log, model, config);
    out.converged = est.converged();
    const MetricReport report = evaluateTrajectories(log.ground_truth, est.trajectory(), eval);
    out.ape = report.ape.rmse;
    out.rpe = report.rpe.rmse;
    out.series = report.seriesText();
    out.ok = true;
    if (!dir.empty()) {
      writeEstimate(est, config, dir);
      writeTextFile((fs::path(dir) / "metrics.txt").string(), report.toText());
      writeTextFile((fs::path(dir) / "series.txt").string(), report.seriesText());
    }
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = oneLine(e.what());
  }
  return out;
}

}  // namespace

ExperimentManifest ExperimentManifest::FromConfig(const KeyValueConfig& config, const std::string& base_dir) {
  for (const auto& [key, value] : config.entries()) {
    const auto dot = key.find('.');
    const std::string section = dot == std::string::npos ? "" : key.substr(0, dot);
    if (!kSections.count(section)) {
      throw ValidationError(section.empty() ? "manifest key '" + key + "' lies outside any section"
                                            : "unknown manifest section [" + section + "]");
    }
  }
  ExperimentManifest m;
  for (const auto& [key, value] : config.section("experiment")) {
    if (!kExperimentKeys.count(key)) throw ValidationError("unknown [experiment] field '" + key + "'");
  }
  m.model = config.getString("experiment.model", m.model);
  if (builtinModelText(m.model).empty() && !base_dir.empty() && fs::path(m.model).is_relative()) {
    m.model = (fs::path(base_dir) / m.model).lexically_normal().string();
  }
  if (config.has("experiment.seeds")) {
    m.seeds.clear();
    for (const auto& s : config.getList("experiment.seeds")) {
      try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(s, &used);
        if (used != s.size() || s.front() == '-') throw std::invalid_argument(s);
        m.seeds.push_back(v);
      } catch (const std::exception&) {
        throw ValidationError("field 'seeds': '" + s + "' is not a non-negative integer");
      }
    }
  }
  if (config.has("experiment.shapes")) {
    m.shapes.clear();
    for (const auto& s : config.getList("experiment.shapes")) m.shapes.push_back(shapeFromString(s));
  }
  m.output = config.getString("experiment.output", m.output);
  m.threads = config.getInt("experiment.threads", m.threads);
  m.keep_outputs = config.getBool("experiment.keep_outputs", m.keep_outputs);

  for (const auto& [k, v] : config.section("gait")) {
    if (k == "model" || k == "shape" || k == "seed") {
      throw ValidationError("[gait] field '" + k + "' belongs in [experiment]");
    }
    if (k.rfind("noise.", 0) == 0) throw ValidationError("[gait] field '" + k + "' belongs in [noise]");
    m.gait.set(k, v);
  }
  for (const auto& [k, v] : config.section("noise")) m.gait.set("noise." + k, v);

  m.proposed = estimatorSection(config, "proposed", EstimatorMode::Proposed);
  m.baseline = estimatorSection(config, "baseline", EstimatorMode::Baseline);
  m.eval = EvalConfig::FromConfig(flatten(config.section("eval")));
  m.validate();
  return m;
}

ExperimentManifest ExperimentManifest::Load(const std::string& path) {
  return FromConfig(KeyValueConfig::Load(path), fs::path(path).parent_path().string());
}

GaitSpec ExperimentManifest::cellSpec(PathShape shape, std::uint64_t seed) const {
  KeyValueConfig c = gait;
  c.set("model", model);
  c.set("shape", toString(shape));
  c.set("seed", std::to_string(seed));
  return GaitSpec::FromConfig(c);
}

void ExperimentManifest::validate() const {
  if (seeds.empty()) throw ValidationError("field 'seeds' must not be empty");
  if (shapes.empty()) throw ValidationError("field 'shapes' must not be empty");
  if (output.empty()) throw ValidationError("field 'output' must not be empty");
  if (threads < 1) throw ValidationError("field 'threads' must be at least 1");
  if (builtinModelText(model).empty() && !fs::exists(model)) {
    throw IoError("model file not found: " + model);
  }
  for (PathShape s : shapes) cellSpec(s, seeds.front());
  proposed.validate();
  baseline.validate();
  eval.validate();
}

KeyValueConfig ExperimentManifest::toConfig() const {
  KeyValueConfig c;
  c.set("experiment.model", model);
  std::string list;
  for (std::size_t i = 0; i < seeds.size(); ++i) list += (i ? "," : "") + std::to_string(seeds[i]);
  c.set("experiment.seeds", list);
  list.clear();
  for (std::size_t i = 0; i < shapes.size(); ++i) list += (i ? "," : "") + toString(shapes[i]);
  c.set("experiment.shapes", list);
  c.set("experiment.keep_outputs", keep_outputs ? "true" : "false");
  const KeyValueConfig spec = cellSpec(shapes.front(), seeds.front()).toConfig();
  for (const auto& [k, v] : spec.entries()) {
    if (k == "model" || k == "shape" || k == "seed") continue;
    if (k.rfind("noise.", 0) == 0) {
      c.set(k, v);
    } else {
      c.set("gait." + k, v);
    }
  }
  const KeyValueConfig p = proposed.toConfig(), b = baseline.toConfig(), e = eval.toConfig();
  for (const auto& [k, v] : p.entries()) {
    if (k != "mode") c.set("proposed." + k, v);
  }
  for (const auto& [k, v] : b.entries()) {
    if (k != "mode") c.set("baseline." + k, v);
  }
  for (const auto& [k, v] : e.entries()) c.set("eval." + k, v);
  return c;
}

ExperimentCell runCell(const ExperimentManifest& manifest, PathShape shape, std::uint64_t seed,
                       const std::string& output_dir) {
  ExperimentCell cell;
  cell.shape = shape;
  cell.seed = seed;
  TrajectoryLog log;
  RobotModel model;
  try {
    model = resolveModel(manifest.model);
    log = synthesize(manifest.cellSpec(shape, seed), model);
  } catch (const std::exception& e) {
    cell.error = oneLine(e.what());
    cell.proposed.error = cell.baseline.error = "not run";
    return cell;
  }
  std::string pdir, bdir;
  if (!output_dir.empty()) {
    const fs::path root = fs::path(output_dir) / (toString(shape) + "_seed" + std::to_string(seed));
    writeLog(log, (root / "log").string());
    pdir = (root / "proposed").string();
    bdir = (root / "baseline").string();
  }
  EstimatorConfig proposed = manifest.proposed, baseline = manifest.baseline;
  proposed.mode = EstimatorMode::Proposed;
  baseline.mode = EstimatorMode::Baseline;
  cell.proposed = runMode(log, model, proposed, manifest.eval, pdir);
  cell.baseline = runMode(log, model, baseline, manifest.eval, bdir);
  return cell;
}

ExperimentResult runExperiment(const ExperimentManifest& manifest, const std::string& output_dir) {
  manifest.validate();
  ExperimentResult result;
  result.manifest = manifest;
  for (PathShape shape : manifest.shapes) {
    for (std::uint64_t seed : manifest.seeds) {
      ExperimentCell c;
      c.shape = shape;
      c.seed = seed;
      result.cells.push_back(c);
    }
  }
  if (!output_dir.empty()) {
    fs::create_directories(output_dir);
    writeTextFile((fs::path(output_dir) / "config.txt").string(), manifest.toConfig().toText());
  }
  const std::string cell_root = manifest.keep_outputs ? output_dir : "";

  // Cells are independent; each writes only its own slot and directory.
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < result.cells.size(); i = next++) {
      result.cells[i] = runCell(manifest, result.cells[i].shape, result.cells[i].seed, cell_root);
    }
  };
  const int n = std::min<int>(manifest.threads, static_cast<int>(result.cells.size()));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  if (!output_dir.empty()) {
    const fs::path root(output_dir);
    writeTextFile((root / "summary.txt").string(), result.summaryTable());
    writeTextFile((root / "cells.txt").string(), result.cellTable());
    for (std::uint64_t seed : manifest.seeds) {
      writeTextFile((root / ("series_seed_" + std::to_string(seed) + ".txt")).string(), result.seriesText(seed));
    }
  }
  return result;
}

std::vector<ShapeSummary> ExperimentResult::summaries() const {
  std::vector<ShapeSummary> out;
  for (PathShape shape : manifest.shapes) {
    ShapeSummary s;
    s.shape = shape;
    std::vector<double> ba, br, pa, pr;
    for (const auto& c : cells) {
      if (c.shape != shape) continue;
      ++s.cells;
      if (!c.ok()) {
        ++s.failed;
        continue;
      }
      ba.push_back(c.baseline.ape);
      br.push_back(c.baseline.rpe);
      pa.push_back(c.proposed.ape);
      pr.push_back(c.proposed.rpe);
    }
    s.baseline_ape = median(ba);
    s.baseline_rpe = median(br);
    s.proposed_ape = median(pa);
    s.proposed_rpe = median(pr);
    s.ape_improvement = improvement(s.baseline_ape, s.proposed_ape);
    s.rpe_improvement = improvement(s.baseline_rpe, s.proposed_rpe);
    out.push_back(s);
  }
  return out;
}

int ExperimentResult::failedCells() const {
  return static_cast<int>(std::count_if(cells.begin(), cells.end(), [](const auto& c) { return !c.ok(); }));
}

std::string ExperimentResult::summaryTable() const {
  const auto rows = summaries();
  std::ostringstream os;
  std::string seeds;
  for (std::size_t i = 0; i < manifest.seeds.size(); ++i) seeds += (i ? "," : "") + std::to_string(manifest.seeds[i]);
  os << "# median RMSE over seeds " << seeds << "\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-10s %14s %14s %14s %14s %12s\n", "shape", "baseline_ape", "baseline_rpe",
                "proposed_ape", "proposed_rpe", "improve_pct");
  os << line;
  double sum_ape = 0.0, sum_rpe = 0.0;
  int n_ape = 0, n_rpe = 0;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-10s %14s %14s %14s %14s %12s\n", toString(r.shape).c_str(),
                  fmt(r.baseline_ape).c_str(), fmt(r.baseline_rpe).c_str(), fmt(r.proposed_ape).c_str(),
                  fmt(r.proposed_rpe).c_str(), fmtPercent(r.ape_improvement).c_str());
    os << line;
    if (!std::isnan(r.ape_improvement)) sum_ape += r.ape_improvement, ++n_ape;
    if (!std::isnan(r.rpe_improvement)) sum_rpe += r.rpe_improvement, ++n_rpe;
  }
  os << "# mean_ape_improvement_pct=" << fmtPercent(n_ape ? sum_ape / n_ape : std::nan("")) << '\n';
  os << "# mean_rpe_improvement_pct=" << fmtPercent(n_rpe ? sum_rpe / n_rpe : std::nan("")) << '\n';
  os << "# failed_cells=" << failedCells() << '\n';
  return os.str();
}

std::string ExperimentResult::cellTable() const {
  std::ostringstream os;
  os << "# shape seed mode status converged ape rpe error\n";
  for (const auto& c : cells) {
    for (const auto* mode : {"baseline", "proposed"}) {
      const ModeOutcome& m = std::string(mode) == "proposed" ? c.proposed : c.baseline;
      os << toString(c.shape) << ' ' << c.seed << ' ' << mode << ' ';
      if (!c.error.empty()) {
        os << "failed - - - synth: " << c.error << '\n';
      } else if (!m.ok) {
        os << "failed - - - " << m.error << '\n';
      } else {
        os << "ok " << (m.converged ? "true" : "false") << ' ' << formatDouble(m.ape) << ' ' << formatDouble(m.rpe)
           << " -\n";
      }
    }
  }
  return os.str();
}

std::string ExperimentResult::seriesText(std::uint64_t seed) const {
  std::ostringstream os;
  for (const auto& c : cells) {
    if (c.seed != seed) continue;
    for (const auto* mode : {"baseline", "proposed"}) {
      const ModeOutcome& m = std::string(mode) == "proposed" ? c.proposed : c.baseline;
      std::istringstream lines(m.series);
      for (std::string l; std::getline(lines, l);) os << toString(c.shape) << ' ' << mode << ' ' << l << '\n';
    }
  }
  return os.str();
}

}  // namespace legfg
