#include <doctest.h>

#include <filesystem>
#include <string>

#include <json.hpp>

#include "gspplan/common/errors.hpp"
#include "gspplan/common/io.hpp"
#include "gspplan/flow/checkpoint.hpp"
#include "gspplan/pipeline/commands.hpp"
#include "gspplan/pipeline/run_config.hpp"
#include "gspplan/verify/suites.hpp"

using namespace gspplan;
using namespace gspplan::pipeline;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json tiny_json() {
  return json::parse(R"({
    "dataset": {"n_episodes": 6, "horizon": 80},
    "train": {"gradient_steps": 30, "hidden": 16, "batch_size": 16, "log_every": 10},
    "world_model": {"gradient_steps": 10, "hidden": 16, "batch_size": 16},
    "episodes": 2,
    "episode": {"max_steps": 20},
    "plan": {"num_candidates": 4, "num_mc_samples": 2},
    "eval": {"n_start_pairs": 2, "rollouts_per_pair": 2, "n_resampled_states": 8}
  })");
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("gspplan_test_" + name)) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("run config round trip and defaults") {
  const RunConfig d;
  CHECK(RunConfig::from_json(d.to_json()).to_json() == d.to_json());
  const RunConfig empty = RunConfig::from_json(json::object());
  CHECK(empty.to_json() == d.to_json());
  CHECK(d.world_model_config().one_step);
  CHECK_FALSE(d.ghm_config().one_step);
}

TEST_CASE("run config rejects unknown and per-module seed keys") {
  CHECK_THROWS_AS(RunConfig::from_json(json::parse(R"({"trian": {}})")), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(json::parse(R"({"train": {"hiddn": 8}})")), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(json::parse(R"({"plan": {"goals": {"x": 1}}})")), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(json::parse(R"({"train": {"seed": 3}})")), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(json::parse(R"({"world_model": {"seed": 3}})")), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(json::parse(R"({"train": {"hidden": "wide"}})")), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(json::parse(R"({"episodes": -1})")), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(json::parse(R"({"task": "nowhere"})")).find_task(RunConfig{}.make_layout()),
                  ConfigError);
}

TEST_CASE("planning discount cannot exceed the trained range") {
  json j = json::parse(R"({"train": {"gamma_max": 0.95}, "plan": {"global_discount": 0.99}})");
  CHECK_THROWS_AS(RunConfig::from_json(j), ConfigError);
  j["plan"]["mode"] = "zeroshot";
  CHECK_NOTHROW(RunConfig::from_json(j));
}

TEST_CASE("config hash ignores key order, seed and plan mode") {
  const auto a = RunConfig::from_json(json::parse(R"({"seed": 1, "train": {"hidden": 64, "lr": 0.001}})"));
  const auto b = RunConfig::from_json(json::parse(R"({"train": {"lr": 0.001, "hidden": 64}, "seed": 9})"));
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  auto c = a;
  c.plan.mode = planner::Mode::kGpi;
  CHECK(config_hash(c) == config_hash(a));
  c.train.hidden = 32;
  CHECK(config_hash(c) != config_hash(a));
  c = a;
  c.eval.gammas = {0.9};
  CHECK(config_hash(c) != config_hash(a));
}

TEST_CASE("sub-seeds are distinct per stream and per base seed") {
  RunConfig a, b;
  a.seed = 0;
  b.seed = 1;
  CHECK(a.dataset_config().seed != a.ghm_config().seed);
  CHECK(a.ghm_config().seed != a.world_model_config().seed);
  CHECK(a.plan_seed() != a.eval_seed());
  CHECK(a.ghm_config().seed != b.ghm_config().seed);
  CHECK(a.plan_seed() != b.plan_seed());
}

TEST_CASE("dotted overrides") {
  json j = json::object();
  apply_override(j, "plan.num_candidates=64");
  apply_override(j, "plan.mode=gpi");
  apply_override(j, "eval.gammas=[0.5,0.9]");
  apply_override(j, "plan.final_goal_phase=false");
  CHECK(j["plan"]["num_candidates"] == 64);
  CHECK(j["plan"]["mode"] == "gpi");
  CHECK(j["eval"]["gammas"].size() == 2);
  CHECK(j["plan"]["final_goal_phase"] == false);
  const auto cfg = RunConfig::from_json(j);
  CHECK(cfg.plan.num_candidates == 64);
  CHECK(cfg.plan.mode == planner::Mode::kGpi);
  CHECK_THROWS_AS(apply_override(j, "novalue"), ConfigError);
  CHECK_THROWS_AS(apply_override(j, "=3"), ConfigError);
  CHECK_THROWS_AS(apply_override(j, "plan..x=3"), ConfigError);
}

TEST_CASE("pipeline commands produce provenance-tagged artifacts") {
  TempDir tmp("pipeline");
  auto cfg = RunConfig::from_json(tiny_json());
  cfg.seed = 4;
  const auto paths = prepare_run(cfg, tmp.path);
  CHECK(paths.root == tmp.path / config_hash(cfg));
  CHECK(fs::exists(paths.root / "config.json"));
  CHECK_THROWS_AS(cmd_train_ghm(cfg, paths), MissingArtifact);

  cmd_gen_data(cfg, paths);
  cmd_train_ghm(cfg, paths);
  const auto ckpt = flow::read_checkpoint(paths.ghm_checkpoint());
  CHECK(ckpt.step == 30);
  CHECK(ckpt.meta.at("provenance").at("config_hash") == paths.hash);
  CHECK(ckpt.meta.at("provenance").at("seed") == 4);
  const auto metrics = read_file(paths.ghm_metrics());
  const auto first = json::parse(metrics.substr(0, metrics.find('\n')));
  CHECK(first.at("provenance").at("config_hash") == paths.hash);

  const double rate = cmd_plan(cfg, paths);
  CHECK(rate >= 0.0);
  CHECK(rate <= 1.0);
  const auto sidecar = json::parse(read_file(fs::path(paths.outcomes("compplan")).replace_extension(".json")));
  CHECK(sidecar.at("episodes") == 2);
  CHECK(sidecar.at("provenance").at("config_hash") == paths.hash);

  cfg.plan.mode = planner::Mode::kActionPlan;
  CHECK_THROWS_AS(cmd_plan(cfg, paths), MissingArtifact);
  cmd_train_wm(cfg, paths);
  CHECK_NOTHROW(cmd_plan(cfg, paths));

  const auto summary = cmd_report({paths.root}, {});
  CHECK(summary.at("success").size() == 4);  // per task and pooled, two methods
  CHECK(fs::exists(paths.reports() / "success.csv"));
  CHECK(fs::exists(paths.reports() / "summary.json"));
}

TEST_CASE("report refuses mixed configurations") {
  TempDir tmp("report");
  CHECK_THROWS_AS(cmd_report({tmp.path / "absent"}, {}), MissingArtifact);
  auto a = RunConfig::from_json(tiny_json());
  auto b = a;
  b.episode.max_steps = 10;
  for (auto* cfg : {&a, &b}) {
    const auto paths = prepare_run(*cfg, tmp.path);
    cmd_gen_data(*cfg, paths);
    cmd_train_ghm(*cfg, paths);
    cfg->plan.mode = planner::Mode::kZeroShot;
    cmd_plan(*cfg, paths);
  }
  const std::vector<fs::path> dirs{tmp.path / config_hash(a), tmp.path / config_hash(b)};
  CHECK_THROWS_AS(cmd_report(dirs, {}), ConfigError);
  ReportOptions allow;
  allow.allow_mismatch = true;
  CHECK(cmd_report(dirs, allow).at("success").size() >= 1);
}

TEST_CASE("verification suites pass and detect an injected fault") {
  const auto algebra = verify::algebra_suite(3, 10);
  CHECK(algebra.passed());
  CHECK(algebra.properties.size() == 5);
  CHECK(algebra.to_json().at("properties").size() == 5);
  verify::AlgebraOptions fault;
  fault.inject_fault = true;
  CHECK_FALSE(verify::algebra_suite(3, 10, fault).passed());
  const auto grad = verify::gradient_suite(3, 3, 20);
  CHECK(grad.passed());
  CHECK(grad.properties.front().instances == 3);
}
