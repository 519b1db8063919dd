#include "gspplan/tabular/types.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gspplan::tabular {

namespace {

void check_stochastic_rows(const Eigen::MatrixXd& m, double tol, const char* what) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    double sum = 0.0;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      if (!std::isfinite(v) || v < 0.0) {
        throw std::invalid_argument(std::string(what) + ": negative or non-finite entry in row " +
                                    std::to_string(r));
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > tol) {
      throw std::invalid_argument(std::string(what) + ": row " + std::to_string(r) +
                                  " does not sum to 1");
    }
  }
}

}  // namespace

void TabularMdp::validate() const {
  if (num_states < 1 || num_actions < 1) throw std::invalid_argument("TabularMdp: empty state or action set");
  if (transition.rows() != num_states * num_actions || transition.cols() != num_states) {
    throw std::invalid_argument("TabularMdp: transition shape mismatch");
  }
  if (!(discount_default >= 0.0 && discount_default < 1.0)) {
    throw std::invalid_argument("TabularMdp: discount must lie in [0, 1)");
  }
  check_stochastic_rows(transition, 1e-12, "TabularMdp");
}

void TabularPolicy::validate() const {
  if (probs.rows() < 1 || probs.cols() < 1) throw std::invalid_argument("TabularPolicy: empty");
  check_stochastic_rows(probs, 1e-12, "TabularPolicy");
}

TabularPolicy TabularPolicy::uniform(int num_states, int num_actions) {
  return {Eigen::MatrixXd::Constant(num_states, num_actions, 1.0 / num_actions)};
}

TabularPolicy TabularPolicy::deterministic(const std::vector<int>& actions, int num_actions) {
  TabularPolicy p{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(actions.size()), num_actions)};
  for (std::size_t s = 0; s < actions.size(); ++s) {
    if (actions[s] < 0 || actions[s] >= num_actions) throw std::invalid_argument("deterministic: bad action");
    p.probs(static_cast<Eigen::Index>(s), actions[s]) = 1.0;
  }
  return p;
}

Eigen::VectorXd SuccessorMeasure::slice(int s, int a) const {
  return measure.row(row(s, a)).transpose().cwiseMax(0.0);
}

void SwitchingPolicySpec::validate() const {
  if (policy_ids.empty()) throw std::invalid_argument("SwitchingPolicySpec: need at least one phase");
  if (alphas.size() + 1 != policy_ids.size()) {
    throw std::invalid_argument("SwitchingPolicySpec: expected n-1 switching probabilities");
  }
  for (double a : alphas) {
    if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("SwitchingPolicySpec: alpha outside [0, 1]");
  }
}

void RewardFn::validate(int num_states) const {
  if (values.size() != num_states) throw std::invalid_argument("RewardFn: size does not match state count");
  if (!values.allFinite()) throw std::invalid_argument("RewardFn: non-finite reward");
}

}  // namespace gspplan::tabular
