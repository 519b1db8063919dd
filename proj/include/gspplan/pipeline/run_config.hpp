#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "gspplan/envs/dataset.hpp"
#include "gspplan/envs/gcbc.hpp"
#include "gspplan/envs/maze.hpp"
#include "gspplan/envs/policy.hpp"
#include "gspplan/eval/ground_truth.hpp"
#include "gspplan/ghm/train.hpp"
#include "gspplan/planner/config.hpp"
#include "gspplan/planner/maze_domain.hpp"

namespace gspplan::pipeline {

enum class RepertoireKind { kScripted, kGcbc };

inline ghm::GhmTrainConfig one_step_model() {
  ghm::GhmTrainConfig c;
  c.one_step = true;
  return c;
}

struct RunConfig {
  std::uint64_t seed = 0;
  nlohmann::json layout = "umaze";  // builtin name or a layout object
  std::string task = "main";
  envs::ScriptedPolicyConfig behavior{4.0, 4.0, 0.8, 0.3, false};
  RepertoireKind repertoire = RepertoireKind::kScripted;
  envs::ScriptedPolicyConfig scripted_repertoire{4.0, 4.0, 0.8, 0.1, true};
  envs::GcbcConfig gcbc;
  envs::GenerateConfig dataset;
  ghm::GhmTrainConfig train;
  ghm::GhmTrainConfig world_model = one_step_model();
  planner::PlanConfig plan;
  planner::EpisodeConfig episode;
  int episodes = 60;
  eval::EvalProtocol eval;

  // Sub-seeds are derived from `seed`; the per-module seed fields are not
  // part of the file format.
  nlohmann::json to_json() const;
  // Rejects unknown keys (ConfigError) and validates every section.
  static RunConfig from_json(const nlohmann::json& j);

  envs::MazeLayout make_layout() const;
  const envs::MazeTask& find_task(const envs::MazeLayout& layout) const;

  envs::GenerateConfig dataset_config() const;
  ghm::GhmTrainConfig ghm_config() const;
  ghm::GhmTrainConfig world_model_config() const;
  envs::GcbcConfig gcbc_config() const;
  std::uint64_t plan_seed() const;
  std::uint64_t eval_seed() const;
};

// SHA-256 (first 16 hex digits) of the canonical config without the seed and
// the plan mode, so the seeds and methods of one experiment share a run
// directory. Stable under key reordering.
std::string config_hash(const RunConfig& cfg);

// Dotted-path override: "plan.num_candidates=64". The value is parsed as JSON
// and falls back to a string.
void apply_override(nlohmann::json& j, const std::string& assignment);

}  // namespace gspplan::pipeline
