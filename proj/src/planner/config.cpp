#include "gspplan/planner/config.hpp"

#include <stdexcept>

#include "gspplan/common/errors.hpp"
#include "gspplan/tabular/algebra.hpp"

namespace gspplan::planner {

void PlanConfig::validate() const {
  if (num_candidates < 1 || num_mc_samples < 1) throw ConfigError("plan: num_candidates and num_mc_samples must be >= 1");
  if (replan_period < 1) throw ConfigError("plan: replan_period must be >= 1");
  if (action_horizon < 1) throw ConfigError("plan: action_horizon must be >= 1");
  if (!(action_noise >= 0.0)) throw ConfigError("plan: action_noise must be >= 0");
  if (!(sample_dt > 0.0 && sample_dt <= 1.0)) throw ConfigError("plan: sample_dt must lie in (0, 1]");
  try {
    effective_discounts(effective_horizons, global_discount);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("plan: ") + e.what());
  }
}

std::string to_string(Mode m) {
  switch (m) {
    case Mode::kCompPlan:
      return "compplan";
    case Mode::kGpi:
      return "gpi";
    case Mode::kActionPlan:
      return "actionplan";
    case Mode::kZeroShot:
      return "zeroshot";
  }
  return "unknown";
}

Mode mode_from_string(const std::string& s) {
  for (Mode m : {Mode::kCompPlan, Mode::kGpi, Mode::kActionPlan, Mode::kZeroShot}) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("plan: unknown mode '" + s + "'");
}

std::string to_string(Proposal p) { return p == Proposal::kGoalConditioned ? "goal_conditioned" : "unconditional"; }

Proposal proposal_from_string(const std::string& s) {
  if (s == "goal_conditioned") return Proposal::kGoalConditioned;
  if (s == "unconditional") return Proposal::kUnconditional;
  throw ConfigError("plan: unknown proposal '" + s + "'");
}

nlohmann::json PlanConfig::to_json() const {
  return {{"num_candidates", num_candidates},
          {"num_mc_samples", num_mc_samples},
          {"effective_horizons", effective_horizons},
          {"global_discount", global_discount},
          {"proposal", to_string(proposal)},
          {"final_goal_phase", final_goal_phase},
          {"replan_period", replan_period},
          {"mode", to_string(mode)},
          {"action_horizon", action_horizon},
          {"action_noise", action_noise},
          {"sample_dt", sample_dt}};
}

PlanConfig PlanConfig::from_json(const nlohmann::json& j) {
  PlanConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("num_candidates", c.num_candidates);
  get("num_mc_samples", c.num_mc_samples);
  get("effective_horizons", c.effective_horizons);
  get("global_discount", c.global_discount);
  if (j.contains("proposal")) c.proposal = proposal_from_string(j.at("proposal").get<std::string>());
  get("final_goal_phase", c.final_goal_phase);
  get("replan_period", c.replan_period);
  if (j.contains("mode")) c.mode = mode_from_string(j.at("mode").get<std::string>());
  get("action_horizon", c.action_horizon);
  get("action_noise", c.action_noise);
  get("sample_dt", c.sample_dt);
  return c;
}

tabular::GspWeights effective_discounts(const std::vector<double>& horizons, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("effective_discounts: gamma must lie in (0, 1)");
  std::vector<double> alphas;
  alphas.reserve(horizons.size());
  for (double h : horizons) {
    if (!(h >= 1.0)) throw std::invalid_argument("effective_discounts: horizons must be >= 1");
    const double beta = 1.0 - 1.0 / h;
    if (beta > gamma) throw std::invalid_argument("effective_discounts: horizon exceeds the global effective horizon");
    alphas.push_back(1.0 - beta / gamma);
  }
  return tabular::gsp_weights(gamma, alphas);
}

}  // namespace gspplan::planner
