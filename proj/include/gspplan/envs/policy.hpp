#pragma once

#include <vector>

#include <Eigen/Dense>

#include "gspplan/common/rng.hpp"
#include "gspplan/envs/maze.hpp"
#include "gspplan/envs/point_mass.hpp"

namespace gspplan::envs {

// A goal-conditioned policy pi(a | s, g) over the point-mass maze; the goal is
// a position (the repertoire is indexed by states, of which only the position
// is used).
class GoalPolicy {
 public:
  virtual ~GoalPolicy() = default;
  virtual Eigen::Vector2d act(const ContinuousState& state, const Eigen::Vector2d& goal, Rng& rng) const = 0;
};

struct ScriptedPolicyConfig {
  double kp = 4.0;
  double kd = 4.0;
  double cruise_fraction = 0.8;  // cruise speed as a fraction of v_max
  double temperature = 0.0;      // std of the additive action noise, in units of a_max
  bool myopic = false;
};

// Flow-field controller: follows BFS shortest paths on the free-cell graph
// toward the goal cell, then servoes onto the goal position. The myopic
// variant skips the flow field and pursues the goal in a straight line.
class ScriptedGoalPolicy final : public GoalPolicy {
 public:
  ScriptedGoalPolicy(const MazeLayout& layout, ScriptedPolicyConfig cfg);

  Eigen::Vector2d act(const ContinuousState& state, const Eigen::Vector2d& goal, Rng& rng) const override;

  // Noise-free action; act() adds temperature noise and clips.
  Eigen::Vector2d mean_action(const ContinuousState& state, const Eigen::Vector2d& goal) const;

  // Free-cell index of the next cell on a shortest path from `from` to `to`.
  int next_hop(int from, int to) const;
  int distance(int from, int to) const;

  const ScriptedPolicyConfig& config() const { return cfg_; }

 private:
  const MazeLayout* layout_;
  ScriptedPolicyConfig cfg_;
  int n_ = 0;
  std::vector<int> dist_;  // dist_[to * n + from]
  std::vector<int> hop_;
};

}  // namespace gspplan::envs
