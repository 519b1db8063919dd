#pragma once

#include <span>
#include <utility>
#include <vector>

#include "gspplan/planner/comp_plan.hpp"
#include "gspplan/tabular/types.hpp"

namespace gspplan::planner {

// Exact tabular instantiation: embedding z is a state index and pi_z is
// repertoire[z]; jumps sample from exact successor measures prepared for a
// fixed list of discounts. The unconditional model uses the behavior policy.
class TabularDomain {
 public:
  using State = int;
  using Action = int;
  using Embedding = int;

  TabularDomain(tabular::TabularMdp mdp, std::vector<tabular::TabularPolicy> repertoire,
                tabular::TabularPolicy behavior, tabular::RewardFn reward);

  // Precomputes m^{pi_z}_beta for every z and the behavior policy.
  void prepare(std::span<const double> betas);
  const tabular::SuccessorMeasure& measure(int z, double beta) const;  // z = -1: behavior

  Action act(const Embedding& z, const State& s, Rng& rng) const;
  void jump(std::span<const JumpQuery<TabularDomain>> q, double beta, std::span<Rng* const> rngs,
            std::vector<State>& out) const;
  void one_step(std::span<const JumpQuery<TabularDomain>> q, std::span<Rng* const> rngs, std::vector<State>& out) const;
  double reward(const State& s) const { return reward_.values(s); }
  Embedding embed(const State& s) const { return s; }
  Action perturb(const Action&, Rng& rng) const;

  const tabular::TabularMdp& mdp() const { return mdp_; }
  const std::vector<tabular::TabularPolicy>& repertoire() const { return repertoire_; }
  const tabular::RewardFn& reward_fn() const { return reward_; }

 private:
  tabular::TabularMdp mdp_;
  std::vector<tabular::TabularPolicy> repertoire_;
  tabular::TabularPolicy behavior_;
  tabular::RewardFn reward_;
  std::vector<std::pair<double, std::vector<tabular::SuccessorMeasure>>> cache_;  // per beta: z = 0..S-1, behavior
};

}  // namespace gspplan::planner
