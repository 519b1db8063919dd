#include "gspplan/planner/tabular_domain.hpp"

#include <stdexcept>

#include "gspplan/tabular/algebra.hpp"

namespace gspplan::planner {
namespace {

int draw(const Eigen::VectorXd& probs, Rng& rng) {
  return sample_discrete(std::span<const double>(probs.data(), static_cast<std::size_t>(probs.size())), rng);
}

}  // namespace

TabularDomain::TabularDomain(tabular::TabularMdp mdp, std::vector<tabular::TabularPolicy> repertoire,
                             tabular::TabularPolicy behavior, tabular::RewardFn reward)
    : mdp_(std::move(mdp)), repertoire_(std::move(repertoire)), behavior_(std::move(behavior)), reward_(std::move(reward)) {
  mdp_.validate();
  if (static_cast<int>(repertoire_.size()) != mdp_.num_states) {
    throw std::invalid_argument("TabularDomain: repertoire needs one policy per state");
  }
  for (const auto& p : repertoire_) p.validate();
  behavior_.validate();
  reward_.validate(mdp_.num_states);
}

void TabularDomain::prepare(std::span<const double> betas) {
  for (double b : betas) {
    bool have = false;
    for (const auto& [beta, _] : cache_) have = have || beta == b;
    if (have) continue;
    std::vector<tabular::SuccessorMeasure> ms;
    ms.reserve(repertoire_.size() + 1);
    for (const auto& p : repertoire_) ms.push_back(tabular::exact_successor_measure(mdp_, p, b));
    ms.push_back(tabular::exact_successor_measure(mdp_, behavior_, b));
    cache_.emplace_back(b, std::move(ms));
  }
}

const tabular::SuccessorMeasure& TabularDomain::measure(int z, double beta) const {
  for (const auto& [b, ms] : cache_) {
    if (b != beta) continue;
    if (z < -1 || z >= static_cast<int>(repertoire_.size())) throw std::invalid_argument("TabularDomain: bad embedding");
    return ms[z < 0 ? repertoire_.size() : static_cast<std::size_t>(z)];
  }
  throw std::invalid_argument("TabularDomain: discount was not prepared");
}

TabularDomain::Action TabularDomain::act(const Embedding& z, const State& s, Rng& rng) const {
  if (z < 0 || z >= static_cast<int>(repertoire_.size())) throw std::invalid_argument("TabularDomain: bad embedding");
  return draw(repertoire_[static_cast<std::size_t>(z)].probs.row(s).transpose(), rng);
}

void TabularDomain::jump(std::span<const JumpQuery<TabularDomain>> q, double beta, std::span<Rng* const> rngs,
                         std::vector<State>& out) const {
  if (rngs.size() != q.size()) throw std::invalid_argument("TabularDomain::jump: one RNG per query");
  out.resize(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i].z == nullptr) {
      // Masked action: the behavior measure is averaged over the behavior's own first action.
      const auto& m = measure(-1, beta);
      const int a = draw(behavior_.probs.row(q[i].state).transpose(), *rngs[i]);
      out[i] = draw(m.slice(q[i].state, a), *rngs[i]);
    } else {
      out[i] = draw(measure(*q[i].z, beta).slice(q[i].state, q[i].action), *rngs[i]);
    }
  }
}

void TabularDomain::one_step(std::span<const JumpQuery<TabularDomain>> q, std::span<Rng* const> rngs,
                             std::vector<State>& out) const {
  if (rngs.size() != q.size()) throw std::invalid_argument("TabularDomain::one_step: one RNG per query");
  out.resize(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    out[i] = draw(mdp_.transition.row(mdp_.row(q[i].state, q[i].action)).transpose(), *rngs[i]);
  }
}

TabularDomain::Action TabularDomain::perturb(const Action&, Rng& rng) const {
  return std::min(static_cast<int>(uniform01(rng) * mdp_.num_actions), mdp_.num_actions - 1);
}

}  // namespace gspplan::planner
