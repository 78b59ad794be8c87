#include "legfg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "legfg/config.hpp"
#include "legfg/errors.hpp"

namespace legfg {

Pose Alignment::planarTransform() const { return Pose(rotZ(yaw), Vector3(x, y, 0.0)); }

EvalConfig EvalConfig::FromConfig(const KeyValueConfig& config) {
  EvalConfig c;
  const std::set<std::string> known = {"rpe_delta", "translation_only", "max_time_offset"};
  for (const auto& [key, value] : config.entries()) {
    if (!known.count(key)) throw ValidationError("unknown eval field '" + key + "'");
  }
  c.rpe_delta = config.getDouble("rpe_delta", c.rpe_delta);
  c.translation_only = config.getBool("translation_only", c.translation_only);
  c.max_time_offset = config.getDouble("max_time_offset", c.max_time_offset);
  c.validate();
  return c;
}

KeyValueConfig EvalConfig::toConfig() const {
  KeyValueConfig c;
  c.set("rpe_delta", formatDouble(rpe_delta));
  c.set("translation_only", translation_only ? "true" : "false");
  c.set("max_time_offset", formatDouble(max_time_offset));
  return c;
}

void EvalConfig::validate() const {
  if (!(rpe_delta > 0.0)) throw ValidationError("field 'rpe_delta' must be positive");
  if (!(max_time_offset >= 0.0)) throw ValidationError("field 'max_time_offset' must be non-negative");
}

AlignedPair associate(const Trajectory& reference, const Trajectory& estimate, double max_time_offset) {
  AlignedPair out;
  if (reference.empty() || estimate.empty()) {
    out.unmatched_reference = reference.size();
    out.unmatched_estimate = estimate.size();
    return out;
  }
  double tol = max_time_offset;
  if (tol <= 0.0) {
    std::vector<double> gaps;
    for (std::size_t i = 1; i < reference.size(); ++i) gaps.push_back(reference[i].t - reference[i - 1].t);
    if (gaps.empty()) {
      tol = 1e-9;
    } else {
      std::nth_element(gaps.begin(), gaps.begin() + static_cast<long>(gaps.size() / 2), gaps.end());
      tol = 0.5 * gaps[gaps.size() / 2];
    }
  }
  std::vector<bool> used(reference.size(), false);
  std::size_t r = 0;
  for (const auto& e : estimate) {
    while (r + 1 < reference.size() && std::abs(reference[r + 1].t - e.t) <= std::abs(reference[r].t - e.t)) ++r;
    if (std::abs(reference[r].t - e.t) <= tol && !used[r]) {
      used[r] = true;
      out.reference.push_back(reference[r]);
      out.estimate.push_back(e);
    } else {
      ++out.unmatched_estimate;
    }
  }
  out.unmatched_reference = static_cast<std::size_t>(std::count(used.begin(), used.end(), false));
  return out;
}

Alignment planarAlignment(const Trajectory& reference, const Trajectory& estimate) {
  const std::size_t n = reference.size();
  Eigen::Vector2d cr = Eigen::Vector2d::Zero(), ce = Eigen::Vector2d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    cr += reference[i].pose.translation().head<2>();
    ce += estimate[i].pose.translation().head<2>();
  }
  cr /= static_cast<double>(n);
  ce /= static_cast<double>(n);
  double dot = 0.0, cross = 0.0, spread = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector2d r = reference[i].pose.translation().head<2>() - cr;
    const Eigen::Vector2d e = estimate[i].pose.translation().head<2>() - ce;
    dot += e.dot(r);
    cross += e.x() * r.y() - e.y() * r.x();
    spread += e.squaredNorm();
  }
  Alignment a;
  a.yaw = spread > 1e-24 ? std::atan2(cross, dot) : 0.0;
  const Eigen::Vector2d t = cr - Eigen::Rotation2Dd(a.yaw) * ce;
  a.x = t.x();
  a.y = t.y();
  return a;
}

AlignedPair align(const Trajectory& reference, const Trajectory& estimate, double max_time_offset) {
  AlignedPair pair = associate(reference, estimate, max_time_offset);
  if (pair.reference.size() < 2) {
    throw ValidationError("alignment needs at least 2 matched timestamps, got " + std::to_string(pair.reference.size()));
  }
  pair.alignment = planarAlignment(pair.reference, pair.estimate);
  const Pose G = pair.alignment.planarTransform();
  double zr = 0.0, ze = 0.0;
  for (auto& s : pair.estimate) {
    s.pose = G * s.pose;
    ze += s.pose.translation().z();
  }
  for (const auto& s : pair.reference) zr += s.pose.translation().z();
  zr /= static_cast<double>(pair.reference.size());
  ze /= static_cast<double>(pair.estimate.size());
  for (auto& s : pair.reference) s.pose.translation().z() -= zr;
  for (auto& s : pair.estimate) s.pose.translation().z() -= ze;
  pair.alignment.reference_z_mean = zr;
  pair.alignment.estimate_z_mean = ze;
  return pair;
}

double poseDeviation(const Pose& reference, const Pose& estimate, bool translation_only) {
  if (translation_only) return (estimate.translation() - reference.translation()).norm();
  return ((reference.inverse() * estimate).matrix() - Matrix4::Identity()).norm();
}

MetricSeries summarize(std::vector<double> times, std::vector<double> values) {
  MetricSeries s;
  s.times = std::move(times);
  s.values = std::move(values);
  if (s.values.empty()) return s;
  double sq = 0.0, sum = 0.0;
  for (double v : s.values) {
    sq += v * v;
    sum += v;
    s.max = std::max(s.max, v);
  }
  const double n = static_cast<double>(s.values.size());
  s.rmse = std::sqrt(sq / n);
  s.mean = sum / n;
  return s;
}

MetricSeries ape(const AlignedPair& pair, bool translation_only) {
  std::vector<double> t, v;
  for (std::size_t i = 0; i < pair.reference.size(); ++i) {
    t.push_back(pair.reference[i].t);
    v.push_back(poseDeviation(pair.reference[i].pose, pair.estimate[i].pose, translation_only));
  }
  return summarize(std::move(t), std::move(v));
}

MetricSeries rpe(const AlignedPair& pair, double delta, bool translation_only) {
  const Trajectory& ref = pair.reference;
  if (ref.size() < 2 || ref.back().t - ref.front().t < delta - 1e-9) {
    throw ValidationError("trajectory duration must exceed the RPE spacing of " + formatDouble(delta) + " s");
  }
  // Pairing tolerance: half the median spacing.
  std::vector<double> gaps;
  for (std::size_t i = 1; i < ref.size(); ++i) gaps.push_back(ref[i].t - ref[i - 1].t);
  std::nth_element(gaps.begin(), gaps.begin() + static_cast<long>(gaps.size() / 2), gaps.end());
  const double tol = 0.5 * gaps[gaps.size() / 2];

  std::vector<double> t, v;
  std::size_t j = 0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double target = ref[i].t + delta;
    while (j + 1 < ref.size() && std::abs(ref[j + 1].t - target) <= std::abs(ref[j].t - target)) ++j;
    if (j <= i || std::abs(ref[j].t - target) > tol) continue;
    const Pose rel_ref = ref[i].pose.inverse() * ref[j].pose;
    const Pose rel_est = pair.estimate[i].pose.inverse() * pair.estimate[j].pose;
    t.push_back(ref[i].t);
    v.push_back(poseDeviation(rel_ref, rel_est, translation_only));
  }
  if (v.empty()) throw ValidationError("no RPE pairs at a spacing of " + formatDouble(delta) + " s");
  return summarize(std::move(t), std::move(v));
}

MetricReport evaluateTrajectories(const Trajectory& reference, const Trajectory& estimate, const EvalConfig& config) {
  config.validate();
  MetricReport r;
  r.config = config;
  r.pair = align(reference, estimate, config.max_time_offset);
  r.ape = ape(r.pair, config.translation_only);
  r.rpe = rpe(r.pair, config.rpe_delta, config.translation_only);
  return r;
}

std::string MetricReport::toText() const {
  std::ostringstream os;
  os << "matched=" << pair.reference.size() << '\n';
  os << "unmatched_reference=" << pair.unmatched_reference << '\n';
  os << "unmatched_estimate=" << pair.unmatched_estimate << '\n';
  os << "align_yaw=" << formatDouble(pair.alignment.yaw) << '\n';
  os << "align_x=" << formatDouble(pair.alignment.x) << '\n';
  os << "align_y=" << formatDouble(pair.alignment.y) << '\n';
  os << "reference_z_mean=" << formatDouble(pair.alignment.reference_z_mean) << '\n';
  os << "estimate_z_mean=" << formatDouble(pair.alignment.estimate_z_mean) << '\n';
  os << "translation_only=" << (config.translation_only ? "true" : "false") << '\n';
  os << "ape_rmse=" << formatDouble(ape.rmse) << '\n';
  os << "ape_mean=" << formatDouble(ape.mean) << '\n';
  os << "ape_max=" << formatDouble(ape.max) << '\n';
  os << "rpe_delta=" << formatDouble(config.rpe_delta) << '\n';
  os << "rpe_pairs=" << rpe.size() << '\n';
  os << "rpe_rmse=" << formatDouble(rpe.rmse) << '\n';
  os << "rpe_mean=" << formatDouble(rpe.mean) << '\n';
  os << "rpe_max=" << formatDouble(rpe.max) << '\n';
  return os.str();
}

std::string MetricReport::seriesText() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < ape.size(); ++i) os << "ape " << formatDouble(ape.times[i]) << ' ' << formatDouble(ape.values[i]) << '\n';
  for (std::size_t i = 0; i < rpe.size(); ++i) os << "rpe " << formatDouble(rpe.times[i]) << ' ' << formatDouble(rpe.values[i]) << '\n';
  return os.str();
}

}  // namespace legfg
