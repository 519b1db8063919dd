#include "gspplan/tabular/estimator.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace gspplan::tabular {

double weighted_reward_sum(std::span<const double> weights, std::span<const double> rewards) {
  const std::size_t n = rewards.size();
  const double last = rewards[n - 1];
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) acc += weights[k] * (rewards[k] - last);
  return last + acc;
}

namespace {

void check_chain(std::span<const PhaseSampler> chain, const RewardFn& reward, const GspWeights& weights) {
  if (chain.empty()) throw std::invalid_argument("gsp_q_estimate: empty chain");
  if (chain.size() != weights.weights.size()) throw std::invalid_argument("gsp_q_estimate: weight count mismatch");
  const Eigen::Index S = reward.values.size();
  for (std::size_t k = 0; k < chain.size(); ++k) {
    const PhaseSampler& ph = chain[k];
    if (ph.measure == nullptr) throw std::invalid_argument("gsp_q_estimate: missing measure");
    if (ph.measure->measure.cols() != S) throw std::invalid_argument("gsp_q_estimate: sampler dimension mismatch");
    const bool last = k + 1 == chain.size();
    if (!last) {
      if (ph.next_policy == nullptr) throw std::invalid_argument("gsp_q_estimate: missing next policy");
      if (ph.next_policy->num_states() != S ||
          ph.next_policy->num_actions() != chain[k + 1].measure->num_actions) {
        throw std::invalid_argument("gsp_q_estimate: policy dimension mismatch");
      }
    }
  }
}

}  // namespace

double gsp_q_sample(std::span<const PhaseSampler> chain, const RewardFn& reward, const GspWeights& weights,
                    int start_state, int start_action, Rng& rng) {
  const std::size_t n = chain.size();
  std::vector<double> rewards(n);
  int s = start_state;
  int a = start_action;
  for (std::size_t k = 0; k < n; ++k) {
    const SuccessorMeasure& m = *chain[k].measure;
    const Eigen::VectorXd probs = m.slice(s, a);
    s = sample_discrete(std::span<const double>(probs.data(), static_cast<std::size_t>(probs.size())), rng);
    rewards[k] = reward.values(s);
    // No action is drawn after the final successor state.
    if (k + 1 < n) {
      const Eigen::VectorXd pp = chain[k].next_policy->probs.row(s).transpose();
      a = sample_discrete(std::span<const double>(pp.data(), static_cast<std::size_t>(pp.size())), rng);
    }
  }
  return weighted_reward_sum(weights.weights, rewards) / (1.0 - weights.gamma);
}

Estimate gsp_q_estimate(std::span<const PhaseSampler> chain, const RewardFn& reward, const GspWeights& weights,
                        int start_state, int start_action, Rng& rng, long long n_samples) {
  if (n_samples <= 0) throw std::invalid_argument("gsp_q_estimate: n_samples must be positive");
  check_chain(chain, reward, weights);
  const SuccessorMeasure& first = *chain.front().measure;
  if (start_state < 0 || start_action < 0 || first.row(start_state, start_action) >= first.measure.rows()) {
    throw std::invalid_argument("gsp_q_estimate: start pair out of range");
  }
  // Welford accumulation keeps identical samples exactly representable.
  double mean = 0.0;
  double m2 = 0.0;
  for (long long i = 1; i <= n_samples; ++i) {
    const double x = gsp_q_sample(chain, reward, weights, start_state, start_action, rng);
    const double delta = x - mean;
    mean += delta / static_cast<double>(i);
    m2 += delta * (x - mean);
  }
  Estimate e;
  e.mean = mean;
  e.n = n_samples;
  e.std_error = n_samples > 1 ? std::sqrt(m2 / static_cast<double>(n_samples - 1) / static_cast<double>(n_samples)) : 0.0;
  return e;
}

}  // namespace gspplan::tabular
