#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "gspplan/envs/policy.hpp"
#include "gspplan/pipeline/run_config.hpp"
#include "gspplan/verify/suites.hpp"

namespace gspplan::pipeline {

// runs/<hash>/{checkpoints,metrics,traces,reports}; per-seed artifacts carry
// an "-s<seed>" suffix.
struct RunPaths {
  std::filesystem::path root;
  std::string hash;
  std::uint64_t seed = 0;
  // Upstream artifacts read from elsewhere; empty means this run's own files.
  std::filesystem::path dataset_input, ghm_input, world_input;

  RunPaths(const RunConfig& cfg, const std::filesystem::path& out);
  explicit RunPaths(std::filesystem::path run_dir);

  std::filesystem::path checkpoints() const { return root / "checkpoints"; }
  std::filesystem::path metrics() const { return root / "metrics"; }
  std::filesystem::path traces() const { return root / "traces"; }
  std::filesystem::path reports() const { return root / "reports"; }

  std::filesystem::path dataset() const;
  std::filesystem::path ghm_checkpoint() const;
  std::filesystem::path world_checkpoint() const;
  std::filesystem::path gcbc_checkpoint() const;
  std::filesystem::path ghm_metrics() const;
  std::filesystem::path world_metrics() const;
  std::filesystem::path plan_trace(const std::string& method) const;
  std::filesystem::path plan_records(const std::string& method) const;
  std::filesystem::path outcomes(const std::string& method) const;
  std::filesystem::path emd_report() const;
  std::filesystem::path input_dataset() const { return dataset_input.empty() ? dataset() : dataset_input; }
  std::filesystem::path input_ghm() const { return ghm_input.empty() ? ghm_checkpoint() : ghm_input; }
  std::filesystem::path input_world() const { return world_input.empty() ? world_checkpoint() : world_input; }
  std::filesystem::path timing_log() const { return root / "timing.log"; }
};

// {config_hash, seed, tool_version}
nlohmann::json provenance(const RunConfig& cfg);

// Writes config.json (canonical form) and creates the run directories.
RunPaths prepare_run(const RunConfig& cfg, const std::filesystem::path& out);

void cmd_gen_data(const RunConfig& cfg, const RunPaths& paths);
void cmd_train_ghm(const RunConfig& cfg, const RunPaths& paths);
void cmd_train_wm(const RunConfig& cfg, const RunPaths& paths);
// Success rate of the run; mode overrides cfg.plan.mode.
double cmd_plan(const RunConfig& cfg, const RunPaths& paths);
nlohmann::json cmd_eval_emd(const RunConfig& cfg, const RunPaths& paths);

struct ReportOptions {
  bool allow_mismatch = false;
};

// Aggregates every outcomes and EMD file under the given run directories into
// reports/{success.csv,success.json,summary.json} of the first directory.
// Throws ConfigError when the inputs carry different config hashes unless
// allow_mismatch is set, and MissingArtifact when there is nothing to report.
nlohmann::json cmd_report(const std::vector<std::filesystem::path>& run_dirs, const ReportOptions& opt);

// Repertoire policy for the configured kind; a GC-BC repertoire is read from
// its checkpoint.
std::unique_ptr<envs::GoalPolicy> load_repertoire(const RunConfig& cfg, const envs::MazeLayout& layout,
                                                  const RunPaths& paths);

// Appends "<command> seed=<s> wall_s=<t> utc=<time>" to the run's timing log.
void log_timing(const RunPaths& paths, const std::string& command, double seconds);

}  // namespace gspplan::pipeline
