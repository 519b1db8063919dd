#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "gspplan/envs/dataset.hpp"
#include "gspplan/envs/maze.hpp"
#include "gspplan/envs/point_mass.hpp"
#include "gspplan/envs/policy.hpp"
#include "gspplan/ghm/model.hpp"
#include "gspplan/planner/comp_plan.hpp"
#include "gspplan/planner/config.hpp"

namespace gspplan::planner {

// Point-mass maze with learned models. Embeddings are goal states at rest; pi_z is
// the goal policy aimed at z's position. Reward is 1 within the success
// radius of the task goal.
class MazeDomain {
 public:
  using State = Eigen::Vector4d;
  using Action = Eigen::Vector2d;
  using Embedding = Eigen::Vector4d;

  struct Models {
    const ghm::GhmModel* ghm = nullptr;     // z- and gamma-conditioned
    const ghm::GhmModel* uncond = nullptr;  // used for z = nullptr queries; defaults to ghm
    const ghm::GhmModel* world = nullptr;   // one-step model for action_plan
  };

  MazeDomain(const envs::MazeLayout& layout, const envs::GoalPolicy& policy, Models models, Eigen::Vector2d goal,
             double sample_dt, double action_noise);

  Action act(const Embedding& z, const State& s, Rng& rng) const;
  void jump(std::span<const JumpQuery<MazeDomain>> q, double beta, std::span<Rng* const> rngs,
            std::vector<State>& out) const;
  void one_step(std::span<const JumpQuery<MazeDomain>> q, std::span<Rng* const> rngs, std::vector<State>& out) const;
  double reward(const State& s) const;
  // Subgoal positions are projected onto free space so pi_z is defined.
  Embedding embed(const State& s) const;
  Action perturb(const Action& a, Rng& rng) const;

  Embedding goal_embedding() const { return {goal_.x(), goal_.y(), 0.0, 0.0}; }
  const Eigen::Vector2d& goal() const { return goal_; }

 private:
  void sample(const ghm::GhmModel& model, std::span<const JumpQuery<MazeDomain>> q, double gamma,
              std::span<Rng* const> rngs, std::vector<State>& out) const;

  const envs::MazeLayout* layout_;
  const envs::GoalPolicy* policy_;
  Models models_;
  Eigen::Vector2d goal_;
  double sample_dt_;
  double action_noise_;
};

struct EpisodeConfig {
  int max_steps = 300;
  double start_jitter = 0.2;  // start position + U[-j, j]^2, redrawn if it lands in a wall
  double noise_std = 0.0;     // dynamics noise
};

struct EpisodeTrace {
  std::vector<envs::Transition> transitions;
  std::vector<nlohmann::json> plans;  // one record per planning call
  bool success = false;
  int steps = 0;
};

// Closed loop on one task: zero-shot follows the goal policy; compplan and gpi
// replan every replan_period steps and follow pi_{z*} in between; actionplan
// shoots through the one-step model at every step. Episode e of a run uses
// seed derive_seed(seed, e).
EpisodeTrace run_episode(const envs::MazeLayout& layout, const envs::MazeTask& task, const envs::GoalPolicy& policy,
                         const MazeDomain::Models& models, const PlanConfig& cfg, const EpisodeConfig& ep,
                         int episode, std::uint64_t seed);

// Appends the episode's transitions to a dataset-format trace.
void append_trace(envs::TransitionDataset& traces, const EpisodeTrace& trace, int episode);

}  // namespace gspplan::planner
