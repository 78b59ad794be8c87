#include "legfg/estimator.hpp"

#include <cmath>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>

#include "legfg/baseline.hpp"
#include "legfg/errors.hpp"
#include "legfg/priors.hpp"

namespace legfg {

namespace {

constexpr double kTimeTolerance = 1e-6;

Vector6 sigmas6(double rot, double trans) {
  Vector6 s;
  s << Vector3::Constant(rot), Vector3::Constant(trans);
  return s;
}

/// Table of typed config fields shared by parsing and printing.
struct FieldTable {
  std::vector<std::pair<std::string, std::function<void(const std::string&)>>> setters;
  std::vector<std::pair<std::string, std::function<std::string()>>> getters;

  void number(const std::string& key, double& v) {
    setters.emplace_back(key, [&v, key](const std::string& s) { v = parseDouble(s, key); });
    getters.emplace_back(key, [&v] { return formatDouble(v); });
  }
  void integer(const std::string& key, int& v) {
    setters.emplace_back(key, [&v, key](const std::string& s) {
      const double d = parseDouble(s, key);
      if (d != std::floor(d)) throw ValidationError("field '" + key + "' must be an integer");
      v = static_cast<int>(d);
    });
    getters.emplace_back(key, [&v] { return std::to_string(v); });
  }
  void flag(const std::string& key, bool& v) {
    setters.emplace_back(key, [&v, key](const std::string& s) {
      if (s == "true" || s == "1" || s == "yes" || s == "on") {
        v = true;
      } else if (s == "false" || s == "0" || s == "no" || s == "off") {
        v = false;
      } else {
        throw ValidationError("field '" + key + "' must be true or false, got '" + s + "'");
      }
    });
    getters.emplace_back(key, [&v] { return std::string(v ? "true" : "false"); });
  }
  void vector(const std::string& key, Vector3& v) {
    setters.emplace_back(key, [&v, key](const std::string& s) { v = parseVector3(s, key); });
    getters.emplace_back(key, [&v] { return formatVector3(v); });
  }
};

FieldTable fields(EstimatorConfig& c) {
  FieldTable t;
  t.number("keyframe_rate", c.keyframe_rate);
  t.number("imu.gyro_density", c.imu.gyro_density);
  t.number("imu.accel_density", c.imu.accel_density);
  t.number("imu.gyro_bias_walk", c.imu.gyro_bias_walk);
  t.number("imu.accel_bias_walk", c.imu.accel_bias_walk);
  t.vector("imu.gravity", c.imu.gravity);
  t.number("fk.rot_sigma", c.fk_rot_sigma);
  t.number("fk.trans_sigma", c.fk_trans_sigma);
  t.number("baseline.rot_sigma", c.baseline_rot_sigma);
  t.number("baseline.trans_sigma", c.baseline_trans_sigma);
  t.flag("baseline.calibrated", c.baseline_calibrated);
  t.number("contact.sigma", c.contact_sigma);
  t.number("contact.rot_sigma", c.contact_rot_sigma);
  t.flag("prior.enabled", c.prior_enabled);
  t.number("prior.pose_sigma", c.prior_pose_sigma);
  t.number("prior.velocity_sigma", c.prior_velocity_sigma);
  t.number("prior.bias_sigma", c.prior_bias_sigma);
  t.flag("bias_chain", c.bias_chain);
  t.integer("incremental_window", c.incremental_window);
  t.integer("segmentation.debounce_on", c.segmentation.debounce_on);
  t.integer("segmentation.debounce_off", c.segmentation.debounce_off);
  t.integer("segmentation.min_phase_keyframes", c.segmentation.min_phase_keyframes);
  t.number("lm.lambda_initial", c.lm.lambda_initial);
  t.number("lm.lambda_factor", c.lm.lambda_factor);
  t.number("lm.lambda_max", c.lm.lambda_max);
  t.number("lm.rtol", c.lm.rtol);
  t.number("lm.xtol", c.lm.xtol);
  t.integer("lm.max_iterations", c.lm.max_iterations);
  return t;
}

void requirePositive(double v, const std::string& field) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ValidationError("field '" + field + "' must be positive, got " + formatDouble(v));
  }
}

double logKeyframeRate(const TrajectoryLog& log) {
  auto it = log.meta.find("keyframe_rate");
  return it == log.meta.end() ? 50.0 : parseDouble(it->second, "keyframe_rate");
}

/// IMU samples held over [t_i, t_{i+1}); the last one for the previous period.
PreintegratedImu preintegrate(const std::vector<ImuSample>& imu, std::size_t& cursor, double t0, double t1,
                              const ImuNoiseParams& noise, const ImuBias& bias) {
  PreintegratedImu pim(noise, bias);
  const auto end_of = [&imu](std::size_t i) {
    if (i + 1 < imu.size()) return imu[i + 1].t;
    return imu.size() > 1 ? imu[i].t + (imu[i].t - imu[i - 1].t) : imu[i].t;
  };
  while (cursor + 1 < imu.size() && imu[cursor + 1].t <= t0) ++cursor;
  for (std::size_t i = cursor; i < imu.size() && imu[i].t < t1; ++i) {
    const double a = std::max(t0, imu[i].t);
    const double b = std::min(t1, end_of(i));
    if (b - a > 1e-12) pim.integrate(imu[i], b - a);
  }
  return pim;
}

}  // namespace

std::string toString(EstimatorMode mode) { return mode == EstimatorMode::Proposed ? "proposed" : "baseline"; }

EstimatorMode modeFromString(const std::string& text) {
  if (text == "proposed") return EstimatorMode::Proposed;
  if (text == "baseline") return EstimatorMode::Baseline;
  throw ValidationError("field 'mode': unknown estimator mode '" + text + "' (expected proposed or baseline)");
}

EstimatorConfig EstimatorConfig::FromConfig(const KeyValueConfig& config) {
  EstimatorConfig c;
  FieldTable table = fields(c);
  std::set<std::string> known = {"mode"};
  if (auto v = config.find("mode")) c.mode = modeFromString(*v);
  for (auto& [key, set] : table.setters) {
    known.insert(key);
    if (auto v = config.find(key)) set(*v);
  }
  for (const auto& [key, value] : config.entries()) {
    if (!known.count(key)) throw ValidationError("unknown estimator field '" + key + "'");
  }
  c.validate();
  return c;
}

KeyValueConfig EstimatorConfig::toConfig() const {
  EstimatorConfig copy = *this;
  FieldTable table = fields(copy);
  KeyValueConfig out;
  out.set("mode", toString(mode));
  for (auto& [key, get] : table.getters) out.set(key, get());
  return out;
}

void EstimatorConfig::validate() const {
  if (keyframe_rate < 0.0 || !std::isfinite(keyframe_rate)) {
    throw ValidationError("field 'keyframe_rate' must be positive (or 0 for the log's rate)");
  }
  imu.validate();
  requirePositive(fk_rot_sigma, "fk.rot_sigma");
  requirePositive(fk_trans_sigma, "fk.trans_sigma");
  requirePositive(baseline_rot_sigma, "baseline.rot_sigma");
  requirePositive(baseline_trans_sigma, "baseline.trans_sigma");
  requirePositive(contact_sigma, "contact.sigma");
  requirePositive(contact_rot_sigma, "contact.rot_sigma");
  requirePositive(prior_pose_sigma, "prior.pose_sigma");
  requirePositive(prior_velocity_sigma, "prior.velocity_sigma");
  requirePositive(prior_bias_sigma, "prior.bias_sigma");
  if (incremental_window < 0) throw ValidationError("field 'incremental_window' must be non-negative");
  segmentation.validate();
  requirePositive(lm.lambda_initial, "lm.lambda_initial");
  if (!(lm.lambda_factor > 1.0)) throw ValidationError("field 'lm.lambda_factor' must exceed 1");
  requirePositive(lm.lambda_max, "lm.lambda_max");
  requirePositive(lm.rtol, "lm.rtol");
  requirePositive(lm.xtol, "lm.xtol");
  if (lm.max_iterations < 1) throw ValidationError("field 'lm.max_iterations' must be at least 1");
}

Trajectory EstimatedTrajectory::trajectory() const {
  Trajectory out;
  for (const auto& s : states) out.push_back({s.t, s.pose});
  return out;
}

EstimationProblem buildProblem(const TrajectoryLog& log, const RobotModel& model, const EstimatorConfig& config) {
  config.validate();
  if (log.imu.empty() || log.joints.empty() || log.contacts.empty()) {
    throw ValidationError("log is empty (needs IMU, joint and contact samples)");
  }
  const std::set<std::string> logged(log.joint_names.begin(), log.joint_names.end());
  for (const auto& name : model.chainJointNames()) {
    if (!logged.count(name)) throw ValidationError("joint '" + name + "' of the model is missing from the log");
  }
  if (log.joints.size() < 2) throw ValidationError("log needs at least two joint samples");

  EstimationProblem p;
  const double kf_rate = config.keyframe_rate > 0.0 ? config.keyframe_rate : logKeyframeRate(log);
  requirePositive(kf_rate, "keyframe_rate");
  const double span = log.joints.back().t - log.joints.front().t;
  if (!(span > 0.0)) throw ValidationError("joint timestamps must increase");
  const double sample_rate = static_cast<double>(log.joints.size() - 1) / span;
  const double ratio = sample_rate / kf_rate;
  const long stride = std::lround(ratio);
  if (stride < 1) throw ValidationError("field 'keyframe_rate' exceeds the joint sample rate");
  if (std::abs(ratio - static_cast<double>(stride)) > 1e-6 * ratio) {
    throw ValidationError("field 'keyframe_rate' must divide the joint sample rate " + formatDouble(sample_rate));
  }
  for (std::size_t s = 0; s < log.joints.size(); s += static_cast<std::size_t>(stride)) {
    p.keyframe_samples.push_back(s);
    p.keyframe_times.push_back(log.joints[s].t);
  }
  const int K = p.keyframeCount();
  if (K < 2) throw ValidationError("log is too short for two keyframes");
  if (log.imu.front().t > p.keyframe_times.front() + kTimeTolerance) {
    throw ValidationError("IMU stream starts after the first keyframe");
  }

  const int legs = model.legCount();
  p.phases = segmentPhases(log.contacts, p.keyframe_times, legs, config.segmentation);
  if (p.phases.empty()) {
    throw ValidationError("no stance phases in the log; the graph would be gauge-deficient beyond the prior");
  }
  p.phase_at.assign(static_cast<std::size_t>(K), std::vector<int>(static_cast<std::size_t>(legs), -1));
  for (std::size_t i = 0; i < p.phases.size(); ++i) {
    const ContactPhase& ph = p.phases[i];
    for (int k = ph.start_keyframe; k <= ph.end_keyframe; ++k) {
      p.phase_at[static_cast<std::size_t>(k)][static_cast<std::size_t>(ph.leg)] = static_cast<int>(i);
    }
  }

  // Prior mean.
  p.prior_state.pose = Pose();
  for (const auto& g : log.ground_truth) {
    if (std::abs(g.t - p.keyframe_times.front()) < kTimeTolerance) {
      p.prior_state.pose = g.pose;
      break;
    }
  }
  p.prior_state.velocity = log.initialVelocity();
  p.prior_bias = ImuBias();

  FactorGraph& g = p.graph;
  if (config.prior_enabled) {
    g.emplace<PosePriorFactor>(basePoseKey(0), p.prior_state.pose, GaussianNoise::Isotropic(6, config.prior_pose_sigma));
    g.emplace<VectorPriorFactor>(velocityKey(0), p.prior_state.velocity,
                                 GaussianNoise::Isotropic(3, config.prior_velocity_sigma));
    g.emplace<VectorPriorFactor>(biasKey(0), p.prior_bias.vector(), GaussianNoise::Isotropic(6, config.prior_bias_sigma));
  }

  std::size_t cursor = 0;
  for (int k = 0; k + 1 < K; ++k) {
    const double t0 = p.keyframe_times[static_cast<std::size_t>(k)];
    const double t1 = p.keyframe_times[static_cast<std::size_t>(k + 1)];
    PreintegratedImu pim = preintegrate(log.imu, cursor, t0, t1, config.imu, p.prior_bias);
    if (std::abs(pim.deltaT() - (t1 - t0)) > kTimeTolerance) {
      throw ValidationError("IMU stream does not cover the keyframe interval starting at t=" + formatDouble(t0));
    }
    p.preintegrated_time += pim.deltaT();
    const Key bias = biasKey(config.bias_chain ? k : 0);
    g.emplace<ImuFactor>(basePoseKey(k), velocityKey(k), basePoseKey(k + 1), velocityKey(k + 1), bias, pim);
    if (config.bias_chain) g.emplace<BiasWalkFactor>(biasKey(k), biasKey(k + 1), config.imu, t1 - t0);
    p.preintegrations.push_back(std::move(pim));
  }

  const GaussianNoise fk_noise = GaussianNoise::FromSigmas(sigmas6(config.fk_rot_sigma, config.fk_trans_sigma));
  const GaussianNoise lumped_noise =
      GaussianNoise::FromSigmas(sigmas6(config.baseline_rot_sigma, config.baseline_trans_sigma));
  const GaussianNoise point_noise = GaussianNoise::Isotropic(3, config.contact_sigma);
  const GaussianNoise flat_noise = GaussianNoise::FromSigmas(sigmas6(config.contact_rot_sigma, config.contact_sigma));
  const Matrix6 per_joint_cov = sigmas6(config.fk_rot_sigma, config.fk_trans_sigma).array().square().matrix().asDiagonal();

  for (int k = 0; k < K; ++k) {
    const JointAngles angles = log.anglesAt(p.keyframe_samples[static_cast<std::size_t>(k)]);
    for (int f = 0; f < legs; ++f) {
      const int phase = p.phase_at[static_cast<std::size_t>(k)][static_cast<std::size_t>(f)];
      if (phase < 0) continue;
      const LegChain& chain = model.leg(f);
      const int J = static_cast<int>(chain.joints.size());
      const std::vector<double> q = chainAngles(chain, angles);
      const Key foot = linkKey(k, f, J);
      if (config.mode == EstimatorMode::Proposed) {
        for (int j = 1; j <= J; ++j) {
          const Key parent = j == 1 ? basePoseKey(k) : linkKey(k, f, j - 1);
          g.emplace<JointFkFactor>(parent, linkKey(k, f, j), chain.joints[static_cast<std::size_t>(j - 1)],
                                   q[static_cast<std::size_t>(j - 1)], fk_noise);
        }
      } else {
        Pose fk;
        for (int j = 0; j < J; ++j) fk = fk * jointTransform(chain.joints[static_cast<std::size_t>(j)], q[static_cast<std::size_t>(j)]);
        const GaussianNoise noise = config.baseline_calibrated
                                        ? GaussianNoise::FromCovariance(composedChainCovariance(chain, q, per_joint_cov))
                                        : lumped_noise;
        g.emplace<LumpedFkFactor>(basePoseKey(k), foot, fk, noise);
      }
      const Key landmark = landmarkKey(p.phases[static_cast<std::size_t>(phase)].landmark);
      if (chain.foot_type == FootType::Point) {
        g.emplace<PointContactFactor>(foot, landmark, point_noise);
      } else {
        g.emplace<FlatContactFactor>(foot, landmark, flat_noise);
      }
    }
  }

  p.initial = initializeValues(log, model, config, p);
  g.checkKeys(p.initial);
  return p;
}

Values valuesFromStates(const TrajectoryLog& log, const RobotModel& model, const EstimatorConfig& config,
                        const EstimationProblem& problem, const std::vector<NavState>& states, const ImuBias& bias) {
  const int K = problem.keyframeCount();
  if (static_cast<int>(states.size()) != K) throw ValidationError("state count differs from keyframe count");
  Values v;
  for (int k = 0; k < K; ++k) {
    v.insert(basePoseKey(k), states[static_cast<std::size_t>(k)].pose);
    v.insert(velocityKey(k), states[static_cast<std::size_t>(k)].velocity);
    if (k == 0 || config.bias_chain) v.insert(biasKey(k), Vector6(bias.vector()));
  }
  std::vector<std::vector<Pose>> foot_world(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    const Pose& X = states[static_cast<std::size_t>(k)].pose;
    const JointAngles angles = log.anglesAt(problem.keyframe_samples[static_cast<std::size_t>(k)]);
    for (int f = 0; f < model.legCount(); ++f) {
      const std::vector<Pose> links = fkChainLinks(model, f, angles);
      foot_world[static_cast<std::size_t>(k)].push_back(X * links.back());
      if (problem.phase_at[static_cast<std::size_t>(k)][static_cast<std::size_t>(f)] < 0) continue;
      const int J = static_cast<int>(links.size());
      if (config.mode == EstimatorMode::Proposed) {
        for (int j = 1; j <= J; ++j) v.insert(linkKey(k, f, j), X * links[static_cast<std::size_t>(j - 1)]);
      } else {
        v.insert(linkKey(k, f, J), X * links.back());
      }
    }
  }
  for (const ContactPhase& ph : problem.phases) {
    const Pose& foot = foot_world[static_cast<std::size_t>(ph.start_keyframe)][static_cast<std::size_t>(ph.leg)];
    if (model.leg(ph.leg).foot_type == FootType::Point) {
      v.insert(landmarkKey(ph.landmark), foot.translation());
    } else {
      v.insert(landmarkKey(ph.landmark), foot);
    }
  }
  return v;
}

Values initializeValues(const TrajectoryLog& log, const RobotModel& model, const EstimatorConfig& config,
                        const EstimationProblem& problem) {
  std::vector<NavState> states{problem.prior_state};
  for (const auto& pim : problem.preintegrations) {
    NavState next = pim.predict(states.back(), problem.prior_bias);
    next.pose.rotation() = orthonormalize(next.pose.rotation());
    states.push_back(next);
  }
  return valuesFromStates(log, model, config, problem, states, problem.prior_bias);
}

Values groundTruthValues(const TrajectoryLog& log, const RobotModel& model, const EstimatorConfig& config,
                         const EstimationProblem& problem) {
  if (log.ground_truth_velocity.size() != log.ground_truth.size()) {
    throw ValidationError("ground-truth velocities are not available for this log");
  }
  std::vector<NavState> states;
  std::size_t g = 0;
  for (double t : problem.keyframe_times) {
    while (g < log.ground_truth.size() && log.ground_truth[g].t < t - kTimeTolerance) ++g;
    if (g == log.ground_truth.size() || std::abs(log.ground_truth[g].t - t) > kTimeTolerance) {
      throw ValidationError("no ground-truth pose at keyframe t=" + formatDouble(t));
    }
    states.push_back({log.ground_truth[g].pose, log.ground_truth_velocity[g]});
  }
  return valuesFromStates(log, model, config, problem, states, log.trueBias());
}

Values incrementalInitialization(const TrajectoryLog& log, const RobotModel& model, const EstimatorConfig& config,
                                 const EstimationProblem& problem) {
  const int K = problem.keyframeCount();
  Values current = problem.initial;
  if (config.incremental_window < 2) return current;

  // Keyframe at which each variable first appears.
  auto keyframeOf = [&problem](const Key& key) {
    if (key.kind == VariableKind::ContactPoint) {
      return problem.phases[static_cast<std::size_t>(key.time)].start_keyframe;
    }
    return key.kind == VariableKind::Bias && key.time == 0 ? 0 : key.time;
  };

  for (int window = config.incremental_window; window < K; window *= 2) {
    FactorGraph sub;
    for (const FactorPtr& f : problem.graph) {
      bool inside = true;
      for (const Key& key : f->keys()) inside = inside && keyframeOf(key) < window;
      if (inside) sub.add(f);
    }
    Values sub_values;
    for (const auto& [key, value] : current) {
      if (keyframeOf(key) < window) sub_values.insert(key, value);
    }
    const LmResult solved = optimize(sub, sub_values, config.lm);

    // Keep the solved prefix; predict the rest with the solved bias.
    const auto bias_key = biasKey(config.bias_chain ? window - 1 : 0);
    const ImuBias bias = ImuBias::FromVector(solved.values.vector6(bias_key));
    std::vector<NavState> states;
    for (int k = 0; k < window; ++k) {
      states.push_back({solved.values.pose(basePoseKey(k)), solved.values.vector3(velocityKey(k))});
    }
    for (int k = window; k < K; ++k) {
      NavState next = problem.preintegrations[static_cast<std::size_t>(k - 1)].predict(states.back(), bias);
      next.pose.rotation() = orthonormalize(next.pose.rotation());
      states.push_back(next);
    }
    current = valuesFromStates(log, model, config, problem, states, bias);
    for (const auto& [key, value] : solved.values) current.update(key, value);
  }
  return current;
}

EstimatedTrajectory extractEstimate(const EstimationProblem& problem, const EstimatorConfig& config,
                                    const Values& values) {
  EstimatedTrajectory out;
  out.mode = config.mode;
  out.factor_count = problem.graph.size();
  out.variable_count = values.size();
  for (int k = 0; k < problem.keyframeCount(); ++k) {
    RobotState s;
    s.t = problem.keyframe_times[static_cast<std::size_t>(k)];
    s.pose = values.pose(basePoseKey(k));
    s.velocity = values.vector3(velocityKey(k));
    s.bias = ImuBias::FromVector(values.vector6(biasKey(config.bias_chain ? k : 0)));
    out.states.push_back(s);
  }
  for (const ContactPhase& ph : problem.phases) {
    out.landmarks.push_back({ph.landmark, ph.leg, ph.start_keyframe, ph.end_keyframe, values.at(landmarkKey(ph.landmark))});
  }
  return out;
}

EstimatedTrajectory estimate(const TrajectoryLog& log, const RobotModel& model, const EstimatorConfig& config) {
  const EstimationProblem problem = buildProblem(log, model, config);
  const LmResult result = optimize(problem.graph, incrementalInitialization(log, model, config, problem), config.lm);
  EstimatedTrajectory out = extractEstimate(problem, config, result.values);
  out.report = result.report;
  return out;
}

std::string formatReport(const EstimatedTrajectory& r) {
  std::ostringstream os;
  os << "mode=" << toString(r.mode) << '\n';
  os << "status=" << toString(r.report.status) << '\n';
  os << "converged=" << (r.converged() ? "true" : "false") << '\n';
  os << "iterations=" << r.report.iterations << '\n';
  os << "accepted_steps=" << r.report.accepted_steps << '\n';
  os << "initial_objective=" << formatDouble(r.report.initial_objective) << '\n';
  os << "final_objective=" << formatDouble(r.report.final_objective) << '\n';
  os << "keyframes=" << r.states.size() << '\n';
  os << "factors=" << r.factor_count << '\n';
  os << "variables=" << r.variable_count << '\n';
  os << "landmarks=" << r.landmarks.size() << '\n';
  if (!r.states.empty()) {
    os << "gyro_bias=" << formatVector3(r.states.back().bias.gyro) << '\n';
    os << "accel_bias=" << formatVector3(r.states.back().bias.accel) << '\n';
  }
  return os.str();
}

void writeEstimate(const EstimatedTrajectory& result, const EstimatorConfig& config, const std::string& directory) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw IoError("cannot create directory '" + directory + "': " + ec.message());
  const std::filesystem::path dir(directory);
  writeTum(result.trajectory(), (dir / "estimate.txt").string());
  writeTextFile((dir / "report.txt").string(), formatReport(result));
  writeTextFile((dir / "convergence.txt").string(), result.report.toText());
  writeTextFile((dir / "config.txt").string(), config.toConfig().toText());
  std::ostringstream os;
  for (const auto& l : result.landmarks) {
    os << l.id << ' ' << l.leg << ' ' << l.start_keyframe << ' ' << l.end_keyframe;
    if (const auto* p = std::get_if<Vector3>(&l.value)) {
      os << ' ' << formatVector3(*p);
    } else if (const auto* T = std::get_if<Pose>(&l.value)) {
      const Eigen::Quaterniond q = T->quaternion();
      os << ' ' << formatVector3(T->translation()) << ' ' << formatDouble(q.x()) << ' ' << formatDouble(q.y()) << ' '
         << formatDouble(q.z()) << ' ' << formatDouble(q.w());
    }
    os << '\n';
  }
  writeTextFile((dir / "landmarks.txt").string(), os.str());
}

}  // namespace legfg
