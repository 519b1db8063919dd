#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "gspplan/common/rng.hpp"
#include "gspplan/envs/maze.hpp"
#include "gspplan/envs/policy.hpp"

namespace gspplan::envs {

struct Transition {
  int episode = 0;
  int step = 0;
  Eigen::Vector4d state = Eigen::Vector4d::Zero();
  Eigen::Vector2d action = Eigen::Vector2d::Zero();
  Eigen::Vector4d next_state = Eigen::Vector4d::Zero();
  bool terminal = false;  // last recorded transition of its episode
};

// Append-only transition store. Records are kept sorted by (episode, step);
// finalize() rebuilds the per-record episode bounds used by future-state lookup.
class TransitionDataset {
 public:
  std::uint64_t seed = 0;
  std::string config_hash;

  void append(const Transition& t) { records_.push_back(t); }
  // Validates ordering (episodes ascending, steps consecutive from 0) and
  // rebuilds indices.
  void finalize();

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const Transition& operator[](std::size_t i) const { return records_[i]; }
  const std::vector<Transition>& records() const { return records_; }
  std::size_t num_episodes() const { return episode_starts_.size(); }

  // Index of the last record in the episode containing record i.
  std::size_t episode_last(std::size_t i) const { return episode_last_[i]; }
  bool has_next(std::size_t i) const { return episode_last_[i] > i; }

  // JSON header line then CSV rows episode,step,state...,action...,next_state...,terminal.
  std::string serialize() const;
  static TransitionDataset parse(std::string_view text);

 private:
  std::vector<Transition> records_;
  std::vector<std::size_t> episode_last_;
  std::vector<std::size_t> episode_starts_;
};

struct GenerateConfig {
  int n_episodes = 200;
  int horizon = 400;
  double noise_std = 0.0;     // dynamics noise on velocity
  double start_margin = 0.1;  // keep initial positions this far from cell faces
  double goal_jitter = 0.3;   // behavior goals are cell centers plus U[-j, j]^2
  double alt_fraction = 0.0;  // share of episodes driven by the alternate behavior
  int goal_timeout = 0;       // redraw an unreached goal after this many steps; 0 = never
  std::uint64_t seed = 0;
};

// Rolls out the behavior policy from uniformly drawn free positions toward
// uniformly drawn goals, redrawing the goal whenever it is reached. Episode e
// uses RNG substream e, so sharding over workers does not change the result.
// With an alternate behavior, each episode picks it with probability
// cfg.alt_fraction.
TransitionDataset generate_dataset(const MazeLayout& layout, const GoalPolicy& behavior, const GenerateConfig& cfg,
                                   const GoalPolicy* alternate = nullptr);

struct GoalSampleConfig {
  double p_trajectory_goal = 0.5;
  double p_random_goal = 0.5;
  double trajectory_discount = 0.99;
  double p_next_state = 0.0;

  void validate() const;
};

// Offset k >= 1 with P(k) = (1 - d) d^(k-1).
int geometric_offset(double discount, Rng& rng);

// Goal state for record i: its next state (p_next_state), a uniformly drawn
// dataset state (p_random_goal), or the state reached k ~ Geom(1 - d) steps
// after record i's state within the same episode, clamped at the episode end.
Eigen::Vector4d sample_goal(const TransitionDataset& data, std::size_t index, const GoalSampleConfig& cfg, Rng& rng);

}  // namespace gspplan::envs
