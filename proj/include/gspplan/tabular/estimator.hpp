#pragma once

#include <span>

#include "gspplan/common/rng.hpp"
#include "gspplan/tabular/types.hpp"

namespace gspplan::tabular {

// One phase of a sequential composite sampler: S+_k ~ measure(.|S+_{k-1}, A+_{k-1})
// followed by A+_k ~ next_policy(.|S+_k). The last phase has no next policy.
struct PhaseSampler {
  const SuccessorMeasure* measure = nullptr;
  const TabularPolicy* next_policy = nullptr;
};

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  long long n = 0;
};

// Draws one chain and returns (1-g)^{-1} sum_k w_k r(S+_k).
double gsp_q_sample(std::span<const PhaseSampler> chain, const RewardFn& reward, const GspWeights& weights,
                    int start_state, int start_action, Rng& rng);

// Monte-Carlo average of gsp_q_sample with its standard error.
Estimate gsp_q_estimate(std::span<const PhaseSampler> chain, const RewardFn& reward,
                        const GspWeights& weights, int start_state, int start_action, Rng& rng,
                        long long n_samples);

// Sum_k w_k r_k evaluated as r_n + sum_{k<n} w_k (r_k - r_n). Identical to the
// plain weighted sum because the weights sum to one, and exact for constant rewards.
double weighted_reward_sum(std::span<const double> weights, std::span<const double> rewards);

}  // namespace gspplan::tabular
