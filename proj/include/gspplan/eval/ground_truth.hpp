#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gspplan/envs/dataset.hpp"
#include "gspplan/envs/maze.hpp"
#include "gspplan/envs/point_mass.hpp"
#include "gspplan/envs/policy.hpp"
#include "gspplan/ghm/model.hpp"

namespace gspplan::eval {

struct EvalProtocol {
  int n_start_pairs = 64;
  int rollouts_per_pair = 16;
  int n_resampled_states = 512;
  int rollout_length = 0;  // 0 selects ceil(8 / (1 - gamma))
  double noise_std = 0.0;  // dynamics noise during rollouts
  std::vector<double> gammas{0.9, 0.98};

  void validate() const;
  int length_for(double gamma) const;
};

// Rolls out `rollouts` trajectories that all take first_action at start and
// then follow policy toward goal, and resamples n states S_k with
// k ~ Geom(1 - gamma) on {1, 2, ...}, redrawing k when it exceeds the rollout
// length. Rollout r uses RNG substream r of seed.
std::vector<Eigen::Vector4d> geometric_ground_truth(const envs::MazeLayout& layout, const envs::GoalPolicy& policy,
                                                    const envs::ContinuousState& start,
                                                    const Eigen::Vector2d& first_action, const Eigen::Vector2d& goal,
                                                    double gamma, int rollouts, int n, int length, double noise_std,
                                                    std::uint64_t seed);

struct EvalPair {
  Eigen::Vector4d state = Eigen::Vector4d::Zero();
  Eigen::Vector2d action = Eigen::Vector2d::Zero();
  Eigen::Vector4d goal = Eigen::Vector4d::Zero();
};

// Start and goal drawn uniformly from dataset states; the first action is
// drawn from the policy toward the goal.
std::vector<EvalPair> make_eval_pairs(const envs::TransitionDataset& data, const envs::GoalPolicy& policy, int n,
                                      Rng& rng);

struct FidelityResult {
  double gamma = 0.0;
  std::vector<double> emd_model;
  std::vector<double> emd_prior;
  double mean_model = 0.0;
  double mean_prior = 0.0;
  double median_model = 0.0;
  bool exact = true;
  // SHA-256 of each pair's model and ground-truth sample sets (raw float64 states).
  std::vector<std::string> model_sample_hash;
  std::vector<std::string> truth_sample_hash;
};

// Per pair: ground truth under the policy, n model samples conditioned on
// (s, a, z = goal, gamma), and n prior samples x ~ N(0, I) mapped back from
// normalized coordinates. EMD on positions.
FidelityResult ghm_fidelity(const ghm::GhmModel& model, const envs::MazeLayout& layout,
                            const envs::GoalPolicy& policy, const std::vector<EvalPair>& pairs, double gamma,
                            const EvalProtocol& protocol, std::uint64_t seed);

double median(std::vector<double> v);

}  // namespace gspplan::eval
