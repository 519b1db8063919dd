#include "gspplan/tabular/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace gspplan::tabular {

namespace {

Eigen::RowVectorXd random_simplex_row(int n, Rng& rng, int max_support) {
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n);
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  const int support = max_support > 0 ? std::min(n, 1 + static_cast<int>(rng() % static_cast<unsigned>(max_support)))
                                      : n;
  std::exponential_distribution<double> expo(1.0);
  for (int i = 0; i < support; ++i) row(idx[static_cast<std::size_t>(i)]) = expo(rng) + 1e-3;
  return row / row.sum();
}

}  // namespace

TabularMdp random_mdp(int num_states, int num_actions, Rng& rng, int max_support) {
  TabularMdp mdp;
  mdp.num_states = num_states;
  mdp.num_actions = num_actions;
  mdp.transition.resize(num_states * num_actions, num_states);
  for (int r = 0; r < num_states * num_actions; ++r) {
    mdp.transition.row(r) = random_simplex_row(num_states, rng, max_support);
  }
  return mdp;
}

TabularPolicy random_policy(int num_states, int num_actions, Rng& rng) {
  TabularPolicy p{Eigen::MatrixXd(num_states, num_actions)};
  for (int s = 0; s < num_states; ++s) p.probs.row(s) = random_simplex_row(num_actions, rng, 0);
  return p;
}

RewardFn random_reward(int num_states, Rng& rng) {
  RewardFn r{Eigen::VectorXd(num_states)};
  for (int s = 0; s < num_states; ++s) r.values(s) = uniform01(rng) * 2.0 - 0.5;
  return r;
}

}  // namespace gspplan::tabular
