#include "legfg/legfg.h"

#include <filesystem>
#include <new>
#include <sstream>
#include <string>

#include "legfg/config.hpp"
#include "legfg/contact.hpp"
#include "legfg/errors.hpp"
#include "legfg/estimator.hpp"
#include "legfg/eval.hpp"
#include "legfg/experiment.hpp"
#include "legfg/synthdata.hpp"
#include "legfg/trajectory_log.hpp"

struct legfg_config {
  legfg::KeyValueConfig value;
};
struct legfg_model {
  legfg::RobotModel value;
};
struct legfg_log {
  legfg::TrajectoryLog value;
};
struct legfg_trajectory {
  legfg::Trajectory value;
};
struct legfg_string {
  std::string value;
};

namespace {

thread_local std::string g_last_error;

legfg_status fail(legfg_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs `body`, translating exceptions into status codes.
template <class F>
legfg_status guarded(F&& body) {
  g_last_error.clear();
  try {
    return body();
  } catch (const legfg::ValidationError& e) {
    return fail(LEGFG_ERR_VALIDATION, e.what());
  } catch (const legfg::SolverError& e) {
    return fail(LEGFG_ERR_SOLVER, e.what());
  } catch (const legfg::IoError& e) {
    return fail(LEGFG_ERR_IO, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(LEGFG_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(LEGFG_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(LEGFG_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(LEGFG_ERR_INTERNAL, "unknown error");
  }
}

legfg_status nullArgument(const char* name) { return fail(LEGFG_ERR_INVALID_ARGUMENT, std::string(name) + " is null"); }

void giveString(legfg_string** out, std::string text) {
  if (out) *out = new legfg_string{std::move(text)};
}

legfg::KeyValueConfig configOrEmpty(const legfg_config* c) { return c ? c->value : legfg::KeyValueConfig{}; }

legfg_status runEstimate(const legfg_log* log, const legfg_model* model, const legfg_config* estimator,
                         const char* directory, legfg_trajectory** out, legfg_string** report) {
  if (out) *out = nullptr;
  if (report) *report = nullptr;
  if (!log) return nullArgument("log");
  if (!model) return nullArgument("model");
  return guarded([&] {
    const auto config = legfg::EstimatorConfig::FromConfig(configOrEmpty(estimator));
    const auto result = legfg::estimate(log->value, model->value, config);
    if (directory) legfg::writeEstimate(result, config, directory);
    if (out) *out = new legfg_trajectory{result.trajectory()};
    giveString(report, legfg::formatReport(result));
    if (!result.converged()) {
      return fail(LEGFG_ERR_SOLVER, "optimizer stopped before convergence (" + legfg::toString(result.report.status) + ")");
    }
    return LEGFG_OK;
  });
}

}  // namespace

extern "C" {

const char* legfg_last_error(void) { return g_last_error.c_str(); }

const char* legfg_version(void) { return "1.0.0"; }

const char* legfg_string_data(const legfg_string* s) { return s ? s->value.c_str() : ""; }

void legfg_string_destroy(legfg_string* s) { delete s; }

legfg_status legfg_config_create(legfg_config** out) {
  if (!out) return nullArgument("out");
  return guarded([&] {
    *out = new legfg_config{};
    return LEGFG_OK;
  });
}

legfg_status legfg_config_load(const char* path, legfg_config** out) {
  if (!out) return nullArgument("out");
  *out = nullptr;
  if (!path) return nullArgument("path");
  return guarded([&] {
    *out = new legfg_config{legfg::KeyValueConfig::Load(path)};
    return LEGFG_OK;
  });
}

legfg_status legfg_config_parse(const char* text, legfg_config** out) {
  if (!out) return nullArgument("out");
  *out = nullptr;
  if (!text) return nullArgument("text");
  return guarded([&] {
    *out = new legfg_config{legfg::KeyValueConfig::Parse(text)};
    return LEGFG_OK;
  });
}

legfg_status legfg_config_assign(legfg_config* config, const char* assignment) {
  if (!config) return nullArgument("config");
  if (!assignment) return nullArgument("assignment");
  const std::string a(assignment);
  const auto eq = a.find('=');
  if (eq == std::string::npos || eq == 0) {
    return fail(LEGFG_ERR_INVALID_ARGUMENT, "expected key=value, got '" + a + "'");
  }
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  return legfg_config_set(config, trim(a.substr(0, eq)).c_str(), trim(a.substr(eq + 1)).c_str());
}

legfg_status legfg_config_set(legfg_config* config, const char* key, const char* value) {
  if (!config) return nullArgument("config");
  if (!key || !*key) return nullArgument("key");
  if (!value) return nullArgument("value");
  return guarded([&] {
    config->value.set(key, value);
    return LEGFG_OK;
  });
}

legfg_status legfg_config_get(const legfg_config* config, const char* key, legfg_string** out) {
  if (!out) return nullArgument("out");
  *out = nullptr;
  if (!config) return nullArgument("config");
  if (!key) return nullArgument("key");
  const auto v = config->value.find(key);
  if (!v) return fail(LEGFG_ERR_INVALID_ARGUMENT, std::string("no key '") + key + "'");
  giveString(out, *v);
  return LEGFG_OK;
}

legfg_status legfg_config_merge(legfg_config* config, const legfg_config* other) {
  if (!config) return nullArgument("config");
  if (!other) return nullArgument("other");
  return guarded([&] {
    config->value.merge(other->value);
    return LEGFG_OK;
  });
}

legfg_status legfg_config_text(const legfg_config* config, legfg_string** out) {
  if (!out) return nullArgument("out");
  *out = nullptr;
  if (!config) return nullArgument("config");
  return guarded([&] {
    giveString(out, config->value.toText());
    return LEGFG_OK;
  });
}

void legfg_config_destroy(legfg_config* config) { delete config; }

legfg_status legfg_model_load(const char* name_or_path, legfg_model** out) {
  if (!out) return nullArgument("out");
  *out = nullptr;
  if (!name_or_path) return nullArgument("name_or_path");
  return guarded([&] {
    *out = new legfg_model{legfg::resolveModel(name_or_path)};
    return LEGFG_OK;
  });
}

int legfg_model_leg_count(const legfg_model* model) { return model ? model->value.legCount() : 0; }

int legfg_model_joint_count(const legfg_model* model) {
  return model ? static_cast<int>(model->value.chainJointNames().size()) : 0;
}

void legfg_model_destroy(legfg_model* model) { delete model; }

legfg_status legfg_synthesize(const legfg_config* spec, legfg_log** out) {
  if (!out) return nullArgument("out");
  *out = nullptr;
  if (!spec) return nullArgument("spec");
  return guarded([&] {
    const auto gait = legfg::GaitSpec::FromConfig(spec->value);
    const auto model = legfg::resolveModel(gait.model);
    *out = new legfg_log{legfg::synthesize(gait, model)};
    return LEGFG_OK;
  });
}

legfg_status legfg_log_read(const char* directory, legfg_log** out) {
  if (!out) return nullArgument("out");
  *out = nullptr;
  if (!directory) return nullArgument("directory");
  return guarded([&] {
    *out = new legfg_log{legfg::readLog(directory)};
    return LEGFG_OK;
  });
}

legfg_status legfg_log_write(const legfg_log* log, const char* directory, int with_feet) {
  if (!log) return nullArgument("log");
  if (!directory) return nullArgument("directory");
  return guarded([&] {
    legfg::writeLog(log->value, directory, with_feet != 0);
    return LEGFG_OK;
  });
}

size_t legfg_log_imu_count(const legfg_log* log) { return log ? log->value.imu.size() : 0; }

double legfg_log_duration(const legfg_log* log) { return log ? log->value.duration() : 0.0; }

legfg_status legfg_log_summary(const legfg_log* log, legfg_string** out) {
  if (!out) return nullArgument("out");
  *out = nullptr;
  if (!log) return nullArgument("log");
  return guarded([&] {
    const auto& L = log->value;
    std::ostringstream os;
    os << "duration=" << legfg::formatDouble(L.duration()) << '\n';
    os << "imu_samples=" << L.imu.size() << '\n';
    os << "joint_samples=" << L.joints.size() << '\n';
    const int legs = L.contacts.empty() ? 0 : static_cast<int>(L.contacts.front().in_contact.size());
    std::vector<double> times;
    for (const auto& c : L.contacts) times.push_back(c.t);
    const auto phases = legfg::segmentPhases(L.contacts, times, legs);
    for (int f = 0; f < legs; ++f) {
      int n = 0;
      for (const auto& p : phases) n += p.leg == f;
      std::string name = "leg" + std::to_string(f);
      if (auto it = L.meta.find("legs"); it != L.meta.end()) {
        std::istringstream names(it->second);
        for (int i = 0; i <= f && std::getline(names, name, ',');) ++i;
      }
      os << "phases." << name << '=' << n << '\n';
    }
    giveString(out, os.str());
    return LEGFG_OK;
  });
}

legfg_status legfg_log_meta(const legfg_log* log, const char* key, legfg_string** out) {
  if (!out) return nullArgument("out");
  *out = nullptr;
  if (!log) return nullArgument("log");
  if (!key) return nullArgument("key");
  const auto it = log->value.meta.find(key);
  if (it == log->value.meta.end()) return fail(LEGFG_ERR_INVALID_ARGUMENT, std::string("log has no meta key '") + key + "'");
  giveString(out, it->second);
  return LEGFG_OK;
}

legfg_status legfg_log_ground_truth(const legfg_log* log, legfg_trajectory** out) {
  if (!out) return nullArgument("out");
  *out = nullptr;
  if (!log) return nullArgument("log");
  return guarded([&] {
    *out = new legfg_trajectory{log->value.ground_truth};
    return LEGFG_OK;
  });
}

void legfg_log_destroy(legfg_log* log) { delete log; }

legfg_status legfg_estimate(const legfg_log* log, const legfg_model* model, const legfg_config* estimator,
                            legfg_trajectory** out, legfg_string** report) {
  return runEstimate(log, model, estimator, nullptr, out, report);
}

legfg_status legfg_estimate_to_directory(const legfg_log* log, const legfg_model* model,
                                         const legfg_config* estimator, const char* directory,
                                         legfg_trajectory** out, legfg_string** report) {
  if (!directory) return nullArgument("directory");
  return runEstimate(log, model, estimator, directory, out, report);
}

legfg_status legfg_trajectory_read(const char* path, legfg_trajectory** out) {
  if (!out) return nullArgument("out");
  *out = nullptr;
  if (!path) return nullArgument("path");
  return guarded([&] {
    *out = new legfg_trajectory{legfg::readTum(path)};
    return LEGFG_OK;
  });
}

legfg_status legfg_trajectory_write(const legfg_trajectory* trajectory, const char* path) {
  if (!trajectory) return nullArgument("trajectory");
  if (!path) return nullArgument("path");
  return guarded([&] {
    legfg::writeTum(trajectory->value, path);
    return LEGFG_OK;
  });
}

size_t legfg_trajectory_size(const legfg_trajectory* trajectory) { return trajectory ? trajectory->value.size() : 0; }

legfg_status legfg_trajectory_get(const legfg_trajectory* trajectory, size_t index, double* t, double pose[7]) {
  if (!trajectory) return nullArgument("trajectory");
  if (index >= trajectory->value.size()) {
    return fail(LEGFG_ERR_INVALID_ARGUMENT, "index " + std::to_string(index) + " out of range");
  }
  const auto& s = trajectory->value[index];
  if (t) *t = s.t;
  if (pose) {
    const Eigen::Quaterniond q = s.pose.quaternion();
    const legfg::Vector3 p = s.pose.translation();
    const double v[7] = {p.x(), p.y(), p.z(), q.x(), q.y(), q.z(), q.w()};
    for (int i = 0; i < 7; ++i) pose[i] = v[i];
  }
  return LEGFG_OK;
}

void legfg_trajectory_destroy(legfg_trajectory* trajectory) { delete trajectory; }

legfg_status legfg_evaluate(const legfg_trajectory* reference, const legfg_trajectory* estimate,
                            const legfg_config* eval, legfg_metrics* metrics, legfg_string** report,
                            legfg_string** series) {
  if (report) *report = nullptr;
  if (series) *series = nullptr;
  if (!reference) return nullArgument("reference");
  if (!estimate) return nullArgument("estimate");
  return guarded([&] {
    const auto config = legfg::EvalConfig::FromConfig(configOrEmpty(eval));
    const auto r = legfg::evaluateTrajectories(reference->value, estimate->value, config);
    if (metrics) {
      metrics->matched = r.pair.reference.size();
      metrics->ape_rmse = r.ape.rmse;
      metrics->ape_mean = r.ape.mean;
      metrics->ape_max = r.ape.max;
      metrics->rpe_pairs = r.rpe.size();
      metrics->rpe_rmse = r.rpe.rmse;
      metrics->rpe_mean = r.rpe.mean;
      metrics->rpe_max = r.rpe.max;
      metrics->align_yaw = r.pair.alignment.yaw;
      metrics->align_x = r.pair.alignment.x;
      metrics->align_y = r.pair.alignment.y;
    }
    giveString(report, r.toText());
    giveString(series, r.seriesText());
    return LEGFG_OK;
  });
}

legfg_status legfg_compare(const legfg_config* manifest, const char* base_dir, const char* output_dir,
                           legfg_string** summary, int* failed_cells) {
  if (summary) *summary = nullptr;
  if (!manifest) return nullArgument("manifest");
  return guarded([&] {
    const auto m = legfg::ExperimentManifest::FromConfig(manifest->value, base_dir ? base_dir : "");
    const auto result = legfg::runExperiment(m, output_dir ? output_dir : "");
    giveString(summary, result.summaryTable());
    if (failed_cells) *failed_cells = result.failedCells();
    return LEGFG_OK;
  });
}

legfg_status legfg_manifest_resolve(const legfg_config* manifest, const char* base_dir, legfg_config** out) {
  if (!out) return nullArgument("out");
  *out = nullptr;
  if (!manifest) return nullArgument("manifest");
  return guarded([&] {
    const auto m = legfg::ExperimentManifest::FromConfig(manifest->value, base_dir ? base_dir : "");
    *out = new legfg_config{m.toConfig()};
    return LEGFG_OK;
  });
}

}  // extern "C"
