#include <gtest/gtest.h>

#include <filesystem>
#include <string>

#include "legfg/legfg.h"

namespace fs = std::filesystem;

namespace {

std::string take(legfg_string* s) {
  std::string out = legfg_string_data(s);
  legfg_string_destroy(s);
  return out;
}

legfg_config* parse(const char* text) {
  legfg_config* c = nullptr;
  EXPECT_EQ(legfg_config_parse(text, &c), LEGFG_OK);
  return c;
}

}  // namespace

TEST(CApi, NullArgumentsAreRejected) {
  EXPECT_EQ(legfg_config_create(nullptr), LEGFG_ERR_INVALID_ARGUMENT);
  EXPECT_STRNE(legfg_last_error(), "");
  legfg_log* log = nullptr;
  EXPECT_EQ(legfg_log_read(nullptr, &log), LEGFG_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(log, nullptr);
  EXPECT_EQ(legfg_estimate(nullptr, nullptr, nullptr, nullptr, nullptr), LEGFG_ERR_INVALID_ARGUMENT);
  legfg_config_destroy(nullptr);
  legfg_log_destroy(nullptr);
}

TEST(CApi, ConfigAssignAndGet) {
  legfg_config* c = nullptr;
  ASSERT_EQ(legfg_config_create(&c), LEGFG_OK);
  EXPECT_EQ(legfg_config_assign(c, "gait.duration = 2.5"), LEGFG_OK);
  EXPECT_EQ(legfg_config_assign(c, "novalue"), LEGFG_ERR_INVALID_ARGUMENT);
  legfg_string* v = nullptr;
  ASSERT_EQ(legfg_config_get(c, "gait.duration", &v), LEGFG_OK);
  EXPECT_EQ(take(v), "2.5");
  EXPECT_EQ(legfg_config_get(c, "gait.other", &v), LEGFG_ERR_INVALID_ARGUMENT);
  legfg_config_destroy(c);
}

TEST(CApi, ErrorCategories) {
  legfg_config* spec = parse("duty_factor = 1.5\n");
  legfg_log* log = nullptr;
  EXPECT_EQ(legfg_synthesize(spec, &log), LEGFG_ERR_VALIDATION);
  EXPECT_NE(std::string(legfg_last_error()).find("duty_factor"), std::string::npos);
  legfg_config_destroy(spec);

  legfg_model* model = nullptr;
  EXPECT_EQ(legfg_model_load("/no/such/robot.urdf", &model), LEGFG_ERR_IO);
  EXPECT_NE(std::string(legfg_last_error()).find("/no/such/robot.urdf"), std::string::npos);
  legfg_trajectory* t = nullptr;
  EXPECT_EQ(legfg_trajectory_read("/no/such/file.txt", &t), LEGFG_ERR_IO);

  legfg_config* bad = nullptr;
  EXPECT_EQ(legfg_config_parse("[unterminated\n", &bad), LEGFG_ERR_VALIDATION);
}

TEST(CApi, SynthEstimateEvaluate) {
  legfg_config* spec = parse("duration = 2\nramp_time = 0.5\nnoise.enabled = false\n");
  legfg_log* log = nullptr;
  ASSERT_EQ(legfg_synthesize(spec, &log), LEGFG_OK) << legfg_last_error();
  EXPECT_EQ(legfg_log_imu_count(log), 400u);
  EXPECT_DOUBLE_EQ(legfg_log_duration(log), 2.0);
  legfg_string* summary = nullptr;
  ASSERT_EQ(legfg_log_summary(log, &summary), LEGFG_OK);
  EXPECT_NE(take(summary).find("phases.FL_foot="), std::string::npos);

  legfg_model* model = nullptr;
  ASSERT_EQ(legfg_model_load("quadruped", &model), LEGFG_OK);
  EXPECT_EQ(legfg_model_leg_count(model), 4);
  EXPECT_EQ(legfg_model_joint_count(model), 12);

  for (const char* mode : {"mode = proposed\n", "mode = baseline\n"}) {
    legfg_config* est_cfg = parse(mode);
    legfg_trajectory* est = nullptr;
    legfg_string* report = nullptr;
    ASSERT_EQ(legfg_estimate(log, model, est_cfg, &est, &report), LEGFG_OK) << legfg_last_error();
    EXPECT_NE(take(report).find("converged=true"), std::string::npos);

    legfg_trajectory* gt = nullptr;
    ASSERT_EQ(legfg_log_ground_truth(log, &gt), LEGFG_OK);
    EXPECT_EQ(legfg_trajectory_size(gt), legfg_trajectory_size(est));
    legfg_metrics m{};
    ASSERT_EQ(legfg_evaluate(gt, est, nullptr, &m, nullptr, nullptr), LEGFG_OK) << legfg_last_error();
    EXPECT_LT(m.ape_rmse, 1e-6);
    EXPECT_EQ(m.matched, legfg_trajectory_size(gt));

    double t = -1, pose[7];
    EXPECT_EQ(legfg_trajectory_get(est, 0, &t, pose), LEGFG_OK);
    EXPECT_EQ(t, 0.0);
    EXPECT_EQ(legfg_trajectory_get(est, 1u << 30, &t, pose), LEGFG_ERR_INVALID_ARGUMENT);
    legfg_trajectory_destroy(gt);
    legfg_trajectory_destroy(est);
    legfg_config_destroy(est_cfg);
  }
  legfg_model_destroy(model);
  legfg_log_destroy(log);
  legfg_config_destroy(spec);
}

TEST(CApi, NonConvergenceReportsSolverStatus) {
  legfg_config* spec = parse("duration = 2\nramp_time = 0.5\n");
  legfg_log* log = nullptr;
  ASSERT_EQ(legfg_synthesize(spec, &log), LEGFG_OK);
  legfg_model* model = nullptr;
  ASSERT_EQ(legfg_model_load("quadruped", &model), LEGFG_OK);
  legfg_config* cfg = parse("lm.max_iterations = 1\nincremental_window = 0\n");
  legfg_trajectory* est = nullptr;
  EXPECT_EQ(legfg_estimate(log, model, cfg, &est, nullptr), LEGFG_ERR_SOLVER);
  EXPECT_NE(est, nullptr);
  legfg_trajectory_destroy(est);
  legfg_config_destroy(cfg);
  legfg_model_destroy(model);
  legfg_log_destroy(log);
  legfg_config_destroy(spec);
}

TEST(CApi, LogRoundTripThroughFiles) {
  legfg_config* spec = parse("duration = 1\nramp_time = 0.25\n");
  legfg_log* log = nullptr;
  ASSERT_EQ(legfg_synthesize(spec, &log), LEGFG_OK);
  const fs::path dir = fs::temp_directory_path() / "legfg_capi_log";
  fs::remove_all(dir);
  ASSERT_EQ(legfg_log_write(log, dir.string().c_str(), 0), LEGFG_OK);
  EXPECT_EQ(std::distance(fs::directory_iterator(dir), fs::directory_iterator{}), 5);
  legfg_log* back = nullptr;
  ASSERT_EQ(legfg_log_read(dir.string().c_str(), &back), LEGFG_OK);
  EXPECT_EQ(legfg_log_imu_count(back), legfg_log_imu_count(log));
  legfg_string* model = nullptr;
  ASSERT_EQ(legfg_log_meta(back, "model", &model), LEGFG_OK);
  EXPECT_EQ(take(model), "quadruped");
  legfg_log_destroy(back);
  legfg_log_destroy(log);
  legfg_config_destroy(spec);
  fs::remove_all(dir);
}

TEST(CApi, CompareAndResolve) {
  legfg_config* manifest = parse("[experiment]\nseeds = 1\nshapes = straight\n[gait]\nduration = 2\nramp_time = 0.5\n");
  legfg_config* resolved = nullptr;
  ASSERT_EQ(legfg_manifest_resolve(manifest, nullptr, &resolved), LEGFG_OK) << legfg_last_error();
  legfg_string* text = nullptr;
  ASSERT_EQ(legfg_config_text(resolved, &text), LEGFG_OK);
  EXPECT_NE(take(text).find("[proposed]"), std::string::npos);

  legfg_string* summary = nullptr;
  int failed = -1;
  ASSERT_EQ(legfg_compare(manifest, nullptr, nullptr, &summary, &failed), LEGFG_OK) << legfg_last_error();
  EXPECT_EQ(failed, 0);
  EXPECT_NE(take(summary).find("straight"), std::string::npos);
  legfg_config_destroy(resolved);
  legfg_config_destroy(manifest);
}
