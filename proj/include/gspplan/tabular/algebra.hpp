#pragma once

#include <span>

#include "gspplan/tabular/types.hpp"

namespace gspplan::tabular {

// P^pi[s][s'] = sum_a pi[s][a] P[s][a][s'].
Eigen::MatrixXd policy_kernel(const TabularMdp& mdp, const TabularPolicy& policy);

// Contracts a measure over (s', a') with a policy: out[s'][.] = sum_a' pi[s'][a'] m[s'][a'][.].
Eigen::MatrixXd marginalize_actions(const Eigen::MatrixXd& measure, const TabularPolicy& policy);

// Solves m = (1-g) P + g P (pi m) by dense LU. Throws NumericError when the
// fixed-point residual exceeds 1e-8.
SuccessorMeasure exact_successor_measure(const TabularMdp& mdp, const TabularPolicy& policy,
                                         double gamma);

// Max-norm residual of the successor-measure Bellman equation.
double bellman_residual(const SuccessorMeasure& m, const TabularMdp& mdp, const TabularPolicy& policy);

GspWeights gsp_weights(double gamma, std::span<const double> alphas);

// Mixture coefficients (one-step, beta-bootstrap, gamma-bootstrap) of the
// two-timescale Bellman identity. Requires 0 <= beta <= gamma < 1.
struct HorizonCoefficients {
  double one_step;
  double beta_bootstrap;
  double gamma_bootstrap;
};
HorizonCoefficients horizon_coefficients(double gamma, double beta);

// Composite measure of a geometric switching policy as the weighted mixture of
// chained per-phase measures, composed left to right.
SuccessorMeasure gsp_successor_measure(const TabularMdp& mdp, std::span<const TabularPolicy> repertoire,
                                       const SwitchingPolicySpec& spec, double gamma);

// Same composition with caller-supplied mixture weights. Used by the verify
// command's fault-injection mode; normal callers use gsp_successor_measure.
SuccessorMeasure gsp_successor_measure_with_weights(const TabularMdp& mdp,
                                                    std::span<const TabularPolicy> repertoire,
                                                    const SwitchingPolicySpec& spec, double gamma,
                                                    std::span<const double> weights);

inline constexpr int kMaxAugmentedStates = 10000;

// Ground truth for the composite measure: exact successor measure of the
// Markov chain over (state, phase) where the phase advances with probability
// alpha_k after every environment transition, marginalized over the phase.
SuccessorMeasure gsp_successor_measure_oracle(const TabularMdp& mdp,
                                              std::span<const TabularPolicy> repertoire,
                                              const SwitchingPolicySpec& spec, double gamma);

// Q[s][a] = (1-g)^{-1} sum_s' m[s][a][s'] r[s'].
Eigen::MatrixXd exact_q(const TabularMdp& mdp, const TabularPolicy& policy, const RewardFn& reward,
                        double gamma);

// Q = P r + g P V with V = pi Q, solved directly on the value function.
Eigen::MatrixXd exact_q_direct(const TabularMdp& mdp, const TabularPolicy& policy,
                               const RewardFn& reward, double gamma);

// (1-g)^{-1} <m^nu(.|s,a), r> from a composite successor measure.
Eigen::MatrixXd q_from_measure(const SuccessorMeasure& m, const RewardFn& reward, double gamma);

// Max-norm gap between m_gamma and the right-hand side of the two-timescale
// identity built from m_beta and m_gamma.
double horizon_consistency_residual(const SuccessorMeasure& m_gamma, const SuccessorMeasure& m_beta,
                                    const TabularMdp& mdp, const TabularPolicy& policy, double gamma,
                                    double beta);

}  // namespace gspplan::tabular
