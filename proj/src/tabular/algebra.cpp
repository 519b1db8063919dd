#include "gspplan/tabular/algebra.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "gspplan/common/errors.hpp"

namespace gspplan::tabular {

namespace {

constexpr double kSolveResidualLimit = 1e-8;
constexpr double kSliceTolerance = 1e-9;

void check_gamma(double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("discount must lie in [0, 1)");
}

void check_policy_shape(const TabularMdp& mdp, const TabularPolicy& policy) {
  if (policy.num_states() != mdp.num_states || policy.num_actions() != mdp.num_actions) {
    throw std::invalid_argument("policy shape does not match MDP");
  }
}

// Clips round-off negatives and renormalizes rows, but only when the row is
// already a probability vector to within kSliceTolerance.
void sanitize_rows(Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double lo = m.row(r).minCoeff();
    const double sum = m.row(r).sum();
    if (lo < -kSliceTolerance || std::abs(sum - 1.0) >= kSliceTolerance || !std::isfinite(sum)) {
      throw NumericError("successor measure row " + std::to_string(r) +
                         " is not a probability vector (min " + std::to_string(lo) + ", sum " +
                         std::to_string(sum) + ")");
    }
    m.row(r) = m.row(r).cwiseMax(0.0);
    m.row(r) /= m.row(r).sum();
  }
}

// (1-g) * rows * (I - g K)^{-1}, rows given as a dense matrix over K's states.
Eigen::MatrixXd discounted_occupancy(const Eigen::MatrixXd& first_step, const Eigen::MatrixXd& kernel,
                                     double gamma) {
  const Eigen::Index n = kernel.rows();
  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - gamma * kernel;
  // Solve X (I - gK) = F  <=>  (I - gK)^T X^T = F^T.
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(system.transpose());
  Eigen::MatrixXd xt = lu.solve(first_step.transpose());
  const double residual = (system.transpose() * xt - first_step.transpose()).cwiseAbs().maxCoeff();
  if (!std::isfinite(residual) || residual > kSolveResidualLimit) {
    throw NumericError("dense solve residual " + std::to_string(residual) + " exceeds limit");
  }
  return (1.0 - gamma) * xt.transpose();
}

}  // namespace

Eigen::MatrixXd policy_kernel(const TabularMdp& mdp, const TabularPolicy& policy) {
  check_policy_shape(mdp, policy);
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(mdp.num_states, mdp.num_states);
  for (int s = 0; s < mdp.num_states; ++s) {
    for (int a = 0; a < mdp.num_actions; ++a) {
      const double p = policy.probs(s, a);
      if (p != 0.0) k.row(s) += p * mdp.transition.row(mdp.row(s, a));
    }
  }
  return k;
}

Eigen::MatrixXd marginalize_actions(const Eigen::MatrixXd& measure, const TabularPolicy& policy) {
  const int S = policy.num_states();
  const int A = policy.num_actions();
  if (measure.rows() != static_cast<Eigen::Index>(S) * A) {
    throw std::invalid_argument("marginalize_actions: measure rows do not match policy");
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(S, measure.cols());
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      const double p = policy.probs(s, a);
      if (p != 0.0) out.row(s) += p * measure.row(s * A + a);
    }
  }
  return out;
}

SuccessorMeasure exact_successor_measure(const TabularMdp& mdp, const TabularPolicy& policy, double gamma) {
  check_gamma(gamma);
  check_policy_shape(mdp, policy);
  SuccessorMeasure m;
  m.discount = gamma;
  m.num_actions = mdp.num_actions;
  if (gamma == 0.0) {
    m.measure = mdp.transition;
  } else {
    m.measure = discounted_occupancy(mdp.transition, policy_kernel(mdp, policy), gamma);
  }
  sanitize_rows(m.measure);
  const double residual = bellman_residual(m, mdp, policy);
  if (residual > kSolveResidualLimit) {
    throw NumericError("successor measure Bellman residual " + std::to_string(residual));
  }
  return m;
}

double bellman_residual(const SuccessorMeasure& m, const TabularMdp& mdp, const TabularPolicy& policy) {
  const double g = m.discount;
  const Eigen::MatrixXd rhs =
      (1.0 - g) * mdp.transition + g * mdp.transition * marginalize_actions(m.measure, policy);
  return (rhs - m.measure).cwiseAbs().maxCoeff();
}

GspWeights gsp_weights(double gamma, std::span<const double> alphas) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gsp_weights: gamma must lie in (0, 1)");
  const std::size_t n = alphas.size() + 1;
  GspWeights out;
  out.gamma = gamma;
  out.betas.resize(n);
  out.weights.resize(n);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (!(alphas[k] >= 0.0 && alphas[k] <= 1.0)) throw std::invalid_argument("gsp_weights: alpha outside [0, 1]");
    out.betas[k] = gamma * (1.0 - alphas[k]);
  }
  out.betas[n - 1] = gamma;
  double survive = 1.0;  // prod_{i<k} (g - b_i) / (1 - b_i)
  for (std::size_t k = 0; k < n; ++k) {
    out.weights[k] = (1.0 - gamma) / (1.0 - out.betas[k]) * survive;
    survive *= (gamma - out.betas[k]) / (1.0 - out.betas[k]);
  }
  return out;
}

HorizonCoefficients horizon_coefficients(double gamma, double beta) {
  if (!(beta >= 0.0 && beta <= gamma && gamma < 1.0)) {
    throw std::invalid_argument("horizon_coefficients: need 0 <= beta <= gamma < 1");
  }
  return {1.0 - gamma, gamma * (1.0 - gamma) / (1.0 - beta), gamma * (gamma - beta) / (1.0 - beta)};
}

SuccessorMeasure gsp_successor_measure(const TabularMdp& mdp, std::span<const TabularPolicy> repertoire,
                                       const SwitchingPolicySpec& spec, double gamma) {
  spec.validate();
  const GspWeights w = gsp_weights(gamma, spec.alphas);
  return gsp_successor_measure_with_weights(mdp, repertoire, spec, gamma, w.weights);
}

SuccessorMeasure gsp_successor_measure_with_weights(const TabularMdp& mdp,
                                                    std::span<const TabularPolicy> repertoire,
                                                    const SwitchingPolicySpec& spec, double gamma,
                                                    std::span<const double> weights) {
  spec.validate();
  const int n = spec.num_phases();
  if (static_cast<int>(weights.size()) != n) throw std::invalid_argument("weights size does not match phases");
  for (int id : spec.policy_ids) {
    if (id < 0 || id >= static_cast<int>(repertoire.size())) {
      throw std::invalid_argument("policy id outside repertoire");
    }
    check_policy_shape(mdp, repertoire[static_cast<std::size_t>(id)]);
  }
  const GspWeights w = gsp_weights(gamma, spec.alphas);

  // chain = m_{b1} (pi_2 m_{b2}) ... built incrementally; each prefix is reused.
  SuccessorMeasure first = exact_successor_measure(mdp, repertoire[spec.policy_ids[0]], w.betas[0]);
  Eigen::MatrixXd chain = std::move(first.measure);
  Eigen::MatrixXd mixture = weights[0] * chain;
  for (int k = 1; k < n; ++k) {
    const TabularPolicy& pk = repertoire[static_cast<std::size_t>(spec.policy_ids[k])];
    const SuccessorMeasure mk = exact_successor_measure(mdp, pk, w.betas[k]);
    chain = chain * marginalize_actions(mk.measure, pk);
    mixture += weights[k] * chain;
  }
  SuccessorMeasure out;
  out.measure = std::move(mixture);
  out.discount = gamma;
  out.num_actions = mdp.num_actions;
  return out;
}

SuccessorMeasure gsp_successor_measure_oracle(const TabularMdp& mdp,
                                              std::span<const TabularPolicy> repertoire,
                                              const SwitchingPolicySpec& spec, double gamma) {
  spec.validate();
  check_gamma(gamma);
  const int n = spec.num_phases();
  const int S = mdp.num_states;
  const int A = mdp.num_actions;
  if (static_cast<long long>(n) * S > kMaxAugmentedStates) {
    throw std::invalid_argument("augmented chain too large for a dense solve");
  }
  std::vector<Eigen::MatrixXd> kernels;
  for (int id : spec.policy_ids) {
    if (id < 0 || id >= static_cast<int>(repertoire.size())) throw std::invalid_argument("policy id outside repertoire");
    kernels.push_back(policy_kernel(mdp, repertoire[static_cast<std::size_t>(id)]));
  }
  auto stay = [&](int k) { return k + 1 < n ? 1.0 - spec.alphas[k] : 1.0; };
  auto advance = [&](int k) { return k + 1 < n ? spec.alphas[k] : 0.0; };

  const int N = n * S;
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(N, N);
  for (int k = 0; k < n; ++k) {
    // Acting under phase k, landing in s', then possibly advancing the phase.
    T.block(k * S, k * S, S, S) += stay(k) * kernels[k];
    if (k + 1 < n) T.block(k * S, (k + 1) * S, S, S) += advance(k) * kernels[k];
  }
  // First transition uses the given action, then the phase may advance from 1.
  Eigen::MatrixXd first = Eigen::MatrixXd::Zero(S * A, N);
  first.block(0, 0, S * A, S) = stay(0) * mdp.transition;
  if (n > 1) first.block(0, S, S * A, S) = advance(0) * mdp.transition;

  const Eigen::MatrixXd occ = gamma == 0.0 ? first : discounted_occupancy(first, T, gamma);
  SuccessorMeasure out;
  out.discount = gamma;
  out.num_actions = A;
  out.measure = Eigen::MatrixXd::Zero(S * A, S);
  for (int k = 0; k < n; ++k) out.measure += occ.block(0, k * S, S * A, S);
  sanitize_rows(out.measure);
  return out;
}

Eigen::MatrixXd q_from_measure(const SuccessorMeasure& m, const RewardFn& reward, double gamma) {
  reward.validate(static_cast<int>(m.measure.cols()));
  check_gamma(gamma);
  const Eigen::VectorXd flat = m.measure * reward.values / (1.0 - gamma);
  const int A = m.num_actions;
  const int S = static_cast<int>(flat.size()) / A;
  Eigen::MatrixXd q(S, A);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) q(s, a) = flat(s * A + a);
  return q;
}

Eigen::MatrixXd exact_q(const TabularMdp& mdp, const TabularPolicy& policy, const RewardFn& reward, double gamma) {
  return q_from_measure(exact_successor_measure(mdp, policy, gamma), reward, gamma);
}

Eigen::MatrixXd exact_q_direct(const TabularMdp& mdp, const TabularPolicy& policy, const RewardFn& reward,
                               double gamma) {
  check_gamma(gamma);
  reward.validate(mdp.num_states);
  const Eigen::MatrixXd kpi = policy_kernel(mdp, policy);
  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(mdp.num_states, mdp.num_states) - gamma * kpi;
  const Eigen::VectorXd v = system.partialPivLu().solve(kpi * reward.values);
  const Eigen::VectorXd flat = mdp.transition * (reward.values + gamma * v);
  Eigen::MatrixXd q(mdp.num_states, mdp.num_actions);
  for (int s = 0; s < mdp.num_states; ++s)
    for (int a = 0; a < mdp.num_actions; ++a) q(s, a) = flat(mdp.row(s, a));
  return q;
}

double horizon_consistency_residual(const SuccessorMeasure& m_gamma, const SuccessorMeasure& m_beta,
                                    const TabularMdp& mdp, const TabularPolicy& policy, double gamma,
                                    double beta) {
  if (beta > gamma) throw std::invalid_argument("horizon_consistency_residual: beta > gamma");
  const HorizonCoefficients c = horizon_coefficients(gamma, beta);
  if (m_gamma.measure.rows() != mdp.transition.rows() || m_beta.measure.rows() != mdp.transition.rows()) {
    throw std::invalid_argument("horizon_consistency_residual: measure shape mismatch");
  }
  // P pi m_beta: distribution after one transition and a beta-horizon jump.
  const Eigen::MatrixXd step_then_beta = mdp.transition * marginalize_actions(m_beta.measure, policy);
  const Eigen::MatrixXd rhs = c.one_step * mdp.transition + c.beta_bootstrap * step_then_beta +
                              c.gamma_bootstrap * step_then_beta * marginalize_actions(m_gamma.measure, policy);
  return (rhs - m_gamma.measure).cwiseAbs().maxCoeff();
}

}  // namespace gspplan::tabular
