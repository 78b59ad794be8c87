// Command-line front end. Talks to the library only through legfg.h.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "legfg/legfg.h"

namespace fs = std::filesystem;

namespace {

struct Deleter {
  void operator()(legfg_config* p) const { legfg_config_destroy(p); }
  void operator()(legfg_model* p) const { legfg_model_destroy(p); }
  void operator()(legfg_log* p) const { legfg_log_destroy(p); }
  void operator()(legfg_trajectory* p) const { legfg_trajectory_destroy(p); }
  void operator()(legfg_string* p) const { legfg_string_destroy(p); }
};
template <class T>
using Handle = std::unique_ptr<T, Deleter>;

// Thrown to unwind with the status of a failed library call.
struct Failure {
  legfg_status status;
};

void check(legfg_status s, const std::string& context = "") {
  if (s == LEGFG_OK) return;
  std::cerr << "error: " << (context.empty() ? "" : context + ": ") << legfg_last_error() << '\n';
  throw Failure{s};
}

int exitCode(legfg_status s) {
  switch (s) {
    case LEGFG_OK: return 0;
    case LEGFG_ERR_VALIDATION:
    case LEGFG_ERR_INVALID_ARGUMENT: return 2;
    case LEGFG_ERR_SOLVER: return 3;
    case LEGFG_ERR_IO: return 4;
    default: return 1;
  }
}

std::string text(const Handle<legfg_string>& s) { return legfg_string_data(s.get()); }

Handle<legfg_config> emptyConfig() {
  legfg_config* c = nullptr;
  check(legfg_config_create(&c));
  return Handle<legfg_config>(c);
}

// Defaults < file < --set flags.
Handle<legfg_config> layeredConfig(const std::string& file, const std::vector<std::string>& sets) {
  Handle<legfg_config> config;
  if (!file.empty()) {
    if (!fs::exists(file)) {
      std::cerr << "error: file not found: " << file << '\n';
      throw Failure{LEGFG_ERR_IO};
    }
    legfg_config* c = nullptr;
    check(legfg_config_load(file.c_str(), &c));
    config.reset(c);
  } else {
    config = emptyConfig();
  }
  for (const auto& s : sets) check(legfg_config_assign(config.get(), s.c_str()), "--set");
  return config;
}

std::string outputRoot() {
  if (const char* env = std::getenv("LEGFG_OUTPUT_ROOT"); env && *env) return env;
  return "legfg_output";
}

std::string resolveOut(const std::string& flag, const std::string& fallback) {
  if (!flag.empty()) return flag;
  if (fs::path(fallback).is_absolute()) return fallback;
  return (fs::path(outputRoot()) / fallback).string();
}

std::string configValue(const legfg_config* c, const char* key, const std::string& fallback) {
  legfg_string* s = nullptr;
  if (legfg_config_get(c, key, &s) != LEGFG_OK) return fallback;
  Handle<legfg_string> h(s);
  return text(h);
}

void writeFile(const fs::path& path, const std::string& content) {
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (!f) {
    std::cerr << "error: cannot write " << path.string() << '\n';
    throw Failure{LEGFG_ERR_IO};
  }
  std::fwrite(content.data(), 1, content.size(), f);
  std::fclose(f);
}

int runSynth(const std::string& spec, const std::vector<std::string>& sets, const std::string& out, bool feet) {
  auto config = layeredConfig(spec, sets);
  legfg_log* raw = nullptr;
  check(legfg_synthesize(config.get(), &raw), "synth");
  Handle<legfg_log> log(raw);
  const std::string dir = resolveOut(out, "synth");
  check(legfg_log_write(log.get(), dir.c_str(), feet ? 1 : 0), "synth");
  legfg_string* s = nullptr;
  check(legfg_log_summary(log.get(), &s));
  Handle<legfg_string> summary(s);
  std::cout << "output=" << dir << '\n' << text(summary);
  return 0;
}

int runEstimate(const std::string& log_dir, const std::string& model_arg, const std::string& mode,
                const std::string& config_file, const std::vector<std::string>& sets, const std::string& out) {
  legfg_log* raw_log = nullptr;
  check(legfg_log_read(log_dir.c_str(), &raw_log), "log");
  Handle<legfg_log> log(raw_log);

  std::string model_name = model_arg;
  if (model_name.empty()) {
    legfg_string* s = nullptr;
    if (legfg_log_meta(log.get(), "model", &s) == LEGFG_OK) {
      Handle<legfg_string> h(s);
      model_name = text(h);
    } else {
      model_name = "quadruped";
    }
  }
  legfg_model* raw_model = nullptr;
  check(legfg_model_load(model_name.c_str(), &raw_model), "model");
  Handle<legfg_model> model(raw_model);

  auto config = layeredConfig(config_file, sets);
  if (!mode.empty()) check(legfg_config_set(config.get(), "mode", mode.c_str()));
  const std::string resolved_mode = configValue(config.get(), "mode", "proposed");
  const std::string dir = resolveOut(out, "estimate_" + resolved_mode);

  legfg_trajectory* traj = nullptr;
  legfg_string* report = nullptr;
  const legfg_status status =
      legfg_estimate_to_directory(log.get(), model.get(), config.get(), dir.c_str(), &traj, &report);
  Handle<legfg_trajectory> t(traj);
  Handle<legfg_string> r(report);
  if (status != LEGFG_OK && status != LEGFG_ERR_SOLVER) check(status, "estimate");
  std::cout << "output=" << dir << '\n' << text(r);
  if (status == LEGFG_ERR_SOLVER) {
    std::cerr << "error: " << legfg_last_error() << '\n';
    return exitCode(status);
  }
  return 0;
}

int runEval(const std::string& reference, const std::string& estimate, const std::string& config_file,
            const std::vector<std::string>& sets, const std::string& out) {
  legfg_trajectory *ref = nullptr, *est = nullptr;
  check(legfg_trajectory_read(reference.c_str(), &ref), "reference");
  Handle<legfg_trajectory> r(ref);
  check(legfg_trajectory_read(estimate.c_str(), &est), "estimate");
  Handle<legfg_trajectory> e(est);
  auto config = layeredConfig(config_file, sets);
  legfg_metrics m{};
  legfg_string *report = nullptr, *series = nullptr;
  check(legfg_evaluate(r.get(), e.get(), config.get(), &m, &report, &series), "eval");
  Handle<legfg_string> rep(report), ser(series);
  if (!out.empty()) {
    std::error_code ec;
    fs::create_directories(out, ec);
    writeFile(fs::path(out) / "metrics.txt", text(rep));
    writeFile(fs::path(out) / "series.txt", text(ser));
    legfg_string* ct = nullptr;
    check(legfg_config_text(config.get(), &ct));
    Handle<legfg_string> cfg(ct);
    writeFile(fs::path(out) / "config.txt", text(cfg));
  }
  std::cout << text(rep);
  return 0;
}

int runCompare(const std::string& manifest, const std::vector<std::string>& sets, const std::string& out,
               int threads) {
  auto config = layeredConfig(manifest, sets);
  if (threads > 0) check(legfg_config_set(config.get(), "experiment.threads", std::to_string(threads).c_str()));
  const std::string base_dir = fs::path(manifest).parent_path().string();
  std::string dir = out;
  if (dir.empty()) {
    // Manifest outputs are relative to the output root.
    dir = resolveOut("", configValue(config.get(), "experiment.output", "compare"));
  }
  legfg_string* summary = nullptr;
  int failed = 0;
  check(legfg_compare(config.get(), base_dir.c_str(), dir.c_str(), &summary, &failed), "compare");
  Handle<legfg_string> s(summary);
  std::cout << "output=" << dir << '\n' << text(s);
  if (failed > 0) std::cerr << "warning: " << failed << " cell(s) failed, see cells.txt\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Legged-robot factor-graph state estimation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(legfg_version()));

  std::vector<std::string> sets;
  std::string out;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic log");
  std::string spec;
  bool feet = false;
  synth->add_option("spec", spec, "Gait spec file (key=value)");
  synth->add_option("-o,--out", out, "Output directory");
  synth->add_option("--set", sets, "Override a spec field, key=value");
  synth->add_flag("--feet", feet, "Also write true foot poses (feet.txt)");

  auto* est = app.add_subcommand("estimate", "Run the estimator on a log");
  std::string log_dir, model, mode, est_config;
  est->add_option("log", log_dir, "Log directory")->required();
  est->add_option("-m,--model", model, "Robot model name or description file (default: from the log)");
  est->add_option("--mode", mode, "proposed | baseline")->check(CLI::IsMember({"proposed", "baseline"}));
  est->add_option("-c,--config", est_config, "Estimator config file");
  est->add_option("--set", sets, "Override a config field, key=value");
  est->add_option("-o,--out", out, "Output directory");

  auto* ev = app.add_subcommand("eval", "Compare an estimate against a reference");
  std::string reference, estimate, eval_config;
  ev->add_option("reference", reference, "Reference trajectory (TUM)")->required();
  ev->add_option("estimate", estimate, "Estimated trajectory (TUM)")->required();
  ev->add_option("-c,--config", eval_config, "Eval config file");
  ev->add_option("--set", sets, "Override a config field, key=value");
  ev->add_option("-o,--out", out, "Directory for metrics.txt and series.txt");

  auto* cmp = app.add_subcommand("compare", "Run a proposed vs baseline experiment");
  std::string manifest;
  int threads = 0;
  cmp->add_option("manifest", manifest, "Experiment manifest")->required();
  cmp->add_option("--set", sets, "Override a manifest field, section.key=value");
  cmp->add_option("-o,--out", out, "Output directory");
  cmp->add_option("-j,--threads", threads, "Parallel cells");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*synth) return runSynth(spec, sets, out, feet);
    if (*est) return runEstimate(log_dir, model, mode, est_config, sets, out);
    if (*ev) return runEval(reference, estimate, eval_config, sets, out);
    if (*cmp) return runCompare(manifest, sets, out, threads);
  } catch (const Failure& f) {
    return exitCode(f.status);
  }
  return 1;
}
