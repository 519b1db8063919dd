#pragma once

#include <Eigen/Dense>
#include <vector>

namespace gspplan::tabular {

// Finite reward-free MDP. Transition rows are indexed by s * num_actions + a.
struct TabularMdp {
  int num_states = 0;
  int num_actions = 0;
  Eigen::MatrixXd transition;  // (S*A) x S, row-stochastic
  double discount_default = 0.9;

  int row(int s, int a) const { return s * num_actions + a; }
  void validate() const;
};

// pi[s][a], row-stochastic.
struct TabularPolicy {
  Eigen::MatrixXd probs;  // S x A

  int num_states() const { return static_cast<int>(probs.rows()); }
  int num_actions() const { return static_cast<int>(probs.cols()); }
  void validate() const;

  static TabularPolicy uniform(int num_states, int num_actions);
  static TabularPolicy deterministic(const std::vector<int>& actions, int num_actions);
};

// m[s][a][s'] stored like the transition tensor: (S*A) x S.
struct SuccessorMeasure {
  Eigen::MatrixXd measure;
  double discount = 0.0;
  int num_actions = 0;

  int row(int s, int a) const { return s * num_actions + a; }
  // Slice m(. | s, a) with tiny negative round-off clipped to zero.
  Eigen::VectorXd slice(int s, int a) const;
};

// Ordered phases z_1..z_n (indices into a policy repertoire) and switching
// probabilities alpha_1..alpha_{n-1}; the final phase never switches.
struct SwitchingPolicySpec {
  std::vector<int> policy_ids;
  std::vector<double> alphas;

  int num_phases() const { return static_cast<int>(policy_ids.size()); }
  void validate() const;
};

struct GspWeights {
  std::vector<double> weights;
  std::vector<double> betas;
  double gamma = 0.0;
};

// State reward r(s').
struct RewardFn {
  Eigen::VectorXd values;
  void validate(int num_states) const;
};

}  // namespace gspplan::tabular
