#pragma once

#include "gspplan/common/rng.hpp"
#include "gspplan/tabular/types.hpp"

namespace gspplan::tabular {

// Random MDP whose rows are Dirichlet(1)-like draws restricted to a random
// support of at most `max_support` successors (0 = dense).
TabularMdp random_mdp(int num_states, int num_actions, Rng& rng, int max_support = 0);
TabularPolicy random_policy(int num_states, int num_actions, Rng& rng);
RewardFn random_reward(int num_states, Rng& rng);

}  // namespace gspplan::tabular
