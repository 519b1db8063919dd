#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "gspplan/tabular/types.hpp"

namespace gspplan::planner {

enum class Proposal { kGoalConditioned, kUnconditional };
enum class Mode { kCompPlan, kGpi, kActionPlan, kZeroShot };

struct PlanConfig {
  int num_candidates = 32;   // M
  int num_mc_samples = 16;   // N chains per candidate
  // Horizons in steps of the switching phases; a final absorbing phase with
  // discount global_discount always follows, so a plan has size() + 1 phases.
  std::vector<double> effective_horizons{20.0};
  double global_discount = 0.99;
  Proposal proposal = Proposal::kUnconditional;
  // When set, the last phase follows the task's goal policy and only the
  // earlier phases take proposed subgoals.
  bool final_goal_phase = true;
  int replan_period = 10;
  Mode mode = Mode::kCompPlan;
  int action_horizon = 10;       // actionplan rollout length
  double action_noise = 0.5;     // actionplan first-action perturbation, units of a_max
  double sample_dt = 0.1;        // Euler step used when sampling the models during planning

  void validate() const;
  nlohmann::json to_json() const;
  static PlanConfig from_json(const nlohmann::json& j);
};

std::string to_string(Mode m);
Mode mode_from_string(const std::string& s);
std::string to_string(Proposal p);
Proposal proposal_from_string(const std::string& s);

// beta_k = 1 - 1/h_k for the switching phases and beta = gamma for the final
// one; alpha_k = 1 - beta_k / gamma. Rejects horizons whose beta exceeds gamma.
tabular::GspWeights effective_discounts(const std::vector<double>& horizons, double gamma);

}  // namespace gspplan::planner
