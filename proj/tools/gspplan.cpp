#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gspplan/common/errors.hpp"
#include "gspplan/common/io.hpp"
#include "gspplan/pipeline/commands.hpp"
#include "gspplan/pipeline/run_config.hpp"
#include "gspplan/verify/suites.hpp"

namespace fs = std::filesystem;
using namespace gspplan;
using nlohmann::json;

namespace {

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out = "runs";
  std::vector<std::string> overrides;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "Run configuration (JSON)");
  sub->add_option("--seed", c.seed, "Run seed")->each([&c](const std::string&) { c.seed_set = true; });
  sub->add_option("--out", c.out, "Output root; artifacts go to <out>/<config hash>/")->capture_default_str();
  sub->add_option("--set", c.overrides, "Config override key.path=value (repeatable)");
}

pipeline::RunConfig load_config(const Common& c, const std::vector<std::string>& extra) {
  json j = json::object();
  if (!c.config.empty()) {
    if (!fs::exists(c.config)) throw ConfigError("config file not found: " + c.config);
    try {
      j = json::parse(read_file(c.config));
    } catch (const json::parse_error& e) {
      throw ConfigError("config: " + std::string(e.what()));
    }
  }
  for (const auto& o : c.overrides) pipeline::apply_override(j, o);
  for (const auto& o : extra) pipeline::apply_override(j, o);
  if (c.seed_set) j["seed"] = c.seed;
  return pipeline::RunConfig::from_json(j);
}

template <class Fn>
void timed(const pipeline::RunPaths& paths, const std::string& name, Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  pipeline::log_timing(paths, name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
}

int run_verify(const std::string& suite, std::uint64_t seed, int trials, bool fault, const std::string& out) {
  json reports = json::array();
  bool ok = true;
  if (trials == 0) std::cerr << "warning: trials=0, nothing verified\n";
  auto add = [&](const verify::SuiteReport& r) {
    reports.push_back(r.to_json());
    ok = ok && r.passed();
    for (const auto& p : r.properties) {
      std::printf("%-4s %-10s %-38s instances=%-5d max_residual=%.3e tol=%.0e\n", p.passed() ? "PASS" : "FAIL",
                  r.suite.c_str(), p.name.c_str(), p.instances, p.max_residual, p.tolerance);
    }
  };
  if (suite == "algebra" || suite == "all") {
    verify::AlgebraOptions opt;
    opt.inject_fault = fault;
    add(verify::algebra_suite(seed, trials, opt));
  }
  if (suite == "gradients" || suite == "all") add(verify::gradient_suite(seed, trials));
  if (!out.empty()) {
    fs::create_directories(out);
    write_file_atomic(fs::path(out) / "verify.json", json{{"passed", ok}, {"suites", reports}}.dump(2) + "\n");
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compositional planning with geometric horizon models"};
  app.set_version_flag("--version", GSPPLAN_VERSION);
  app.require_subcommand(1);

  std::string suite = "all";
  int trials = 100;
  bool fault = false;
  std::uint64_t verify_seed = 0;
  std::string verify_out;
  auto* verify_cmd = app.add_subcommand("verify", "Run the tabular-algebra and gradient oracle suites");
  verify_cmd->add_option("--suite", suite)->check(CLI::IsMember({"algebra", "gradients", "all"}))->capture_default_str();
  verify_cmd->add_option("--trials", trials)->check(CLI::NonNegativeNumber)->capture_default_str();
  verify_cmd->add_option("--seed", verify_seed)->capture_default_str();
  verify_cmd->add_option("--out", verify_out, "Directory for verify.json");
  verify_cmd->add_flag("--inject-fault", fault, "Perturb the composite weights (negative control)");

  Common common;
  std::vector<std::string> extra;
  int steps = -1, episodes = -1;
  std::string mode, dataset_in, ghm_in, world_in;
  std::vector<std::string> runs;
  bool allow_mismatch = false;

  auto* gen = app.add_subcommand("gen-data", "Generate the offline transition dataset");
  auto* tghm = app.add_subcommand("train-ghm", "Train the geometric horizon model");
  auto* twm = app.add_subcommand("train-wm", "Train the one-step world model");
  auto* plan = app.add_subcommand("plan", "Run closed-loop planning episodes");
  auto* emd = app.add_subcommand("eval-emd", "EMD of GHM samples against rollout ground truth");
  auto* report = app.add_subcommand("report", "Aggregate outcomes and EMD files");
  for (auto* s : {gen, tghm, twm, plan, emd, report}) add_common(s, common);
  for (auto* s : {tghm, twm}) {
    s->add_option("--steps", steps, "Gradient steps");
    s->add_option("--dataset", dataset_in, "Dataset file (default: this run's)");
  }
  plan->add_option("--mode", mode, "compplan, gpi, actionplan or zeroshot")
      ->check(CLI::IsMember({"compplan", "gpi", "actionplan", "zeroshot"}));
  plan->add_option("--episodes", episodes, "Episode count (same as --set episodes=N)");
  plan->add_option("--checkpoint", ghm_in, "GHM checkpoint (default: this run's)");
  plan->add_option("--world", world_in, "World-model checkpoint (default: this run's)");
  emd->add_option("--checkpoint", ghm_in, "GHM checkpoint (default: this run's)");
  emd->add_option("--dataset", dataset_in, "Dataset file (default: this run's)");
  report->add_option("--runs", runs, "Run directories (default: this config's)");
  report->add_flag("--allow-mismatch", allow_mismatch, "Aggregate inputs with different config hashes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (verify_cmd->parsed()) return run_verify(suite, verify_seed, trials, fault, verify_out);

    if (steps >= 0) {
      extra.push_back((twm->parsed() ? "world_model" : "train") + std::string(".gradient_steps=") + std::to_string(steps));
    }
    if (!mode.empty()) extra.push_back("plan.mode=\"" + mode + "\"");
    if (episodes >= 0) extra.push_back("episodes=" + std::to_string(episodes));
    const auto cfg = load_config(common, extra);

    if (report->parsed()) {
      std::vector<fs::path> dirs(runs.begin(), runs.end());
      if (dirs.empty()) dirs.push_back(pipeline::RunPaths(cfg, common.out).root);
      const auto summary = pipeline::cmd_report(dirs, {allow_mismatch});
      std::cout << summary.at("success").dump(2) << "\n";
      return 0;
    }

    auto paths = pipeline::prepare_run(cfg, common.out);
    paths.dataset_input = dataset_in;
    paths.ghm_input = ghm_in;
    paths.world_input = world_in;
    std::cout << "run directory: " << paths.root.string() << "\n";
    if (gen->parsed()) {
      timed(paths, "gen-data", [&] { pipeline::cmd_gen_data(cfg, paths); });
      std::cout << "wrote " << paths.dataset().string() << "\n";
    } else if (tghm->parsed()) {
      timed(paths, "train-ghm", [&] { pipeline::cmd_train_ghm(cfg, paths); });
      std::cout << "wrote " << paths.ghm_checkpoint().string() << "\n";
    } else if (twm->parsed()) {
      timed(paths, "train-wm", [&] { pipeline::cmd_train_wm(cfg, paths); });
      std::cout << "wrote " << paths.world_checkpoint().string() << "\n";
    } else if (plan->parsed()) {
      double rate = 0.0;
      timed(paths, "plan", [&] { rate = pipeline::cmd_plan(cfg, paths); });
      std::cout << planner::to_string(cfg.plan.mode) << " success rate " << rate << " over " << cfg.episodes
                << " episodes\n";
    } else if (emd->parsed()) {
      json rep;
      timed(paths, "eval-emd", [&] { rep = pipeline::cmd_eval_emd(cfg, paths); });
      for (const auto& r : rep.at("results")) {
        std::printf("gamma %.3f  EMD model %.4f  prior %.4f  ratio %.2f\n", r.at("gamma").get<double>(),
                    r.at("mean_model").get<double>(), r.at("mean_prior").get<double>(),
                    r.at("prior_over_model").get<double>());
      }
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const MissingArtifact& e) {
    std::cerr << "missing artifact: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
