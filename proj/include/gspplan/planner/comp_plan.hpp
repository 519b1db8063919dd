#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "gspplan/common/rng.hpp"
#include "gspplan/tabular/estimator.hpp"
#include "gspplan/tabular/types.hpp"

namespace gspplan::planner {

// A planning domain D supplies
//   using State, Action, Embedding;
//   Action act(const Embedding& z, const State& s, Rng&) const;            // pi_z
//   void jump(std::span<const JumpQuery<D>>, double beta, std::span<Rng* const>,
//             std::vector<State>& out) const;                               // m^{pi_z}_beta
//   void one_step(std::span<const JumpQuery<D>>, std::span<Rng* const>, std::vector<State>& out) const;
//   double reward(const State&) const;
//   Embedding embed(const State&) const;                                   // Z = S
//   Action perturb(const Action&, Rng&) const;
// Query i draws its randomness from rngs[i] only.
template <class D>
struct JumpQuery {
  typename D::State state{};
  typename D::Action action{};
  const typename D::Embedding* z = nullptr;  // nullptr: unconditional model, z and action masked
};

template <class D>
struct Candidate {
  std::vector<typename D::Embedding> z;
  typename D::Action first_action{};
  double q = 0.0;
  std::vector<double> draws;
};

template <class D>
struct PlanResult {
  typename D::Action action{};
  int chosen = -1;
  std::vector<Candidate<D>> candidates;

  const typename D::Embedding& subgoal() const { return candidates.at(static_cast<std::size_t>(chosen)).z.front(); }
  double score() const { return candidates.at(static_cast<std::size_t>(chosen)).q; }
};

// First index of the maximum.
inline int argmax_first(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("argmax_first: empty input");
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i) {
    if (v[static_cast<std::size_t>(i)] > v[static_cast<std::size_t>(best)]) best = i;
  }
  return best;
}

namespace detail {

template <class D>
std::vector<Rng*> pointers(std::vector<Rng>& rngs) {
  std::vector<Rng*> p;
  p.reserve(rngs.size());
  for (auto& r : rngs) p.push_back(&r);
  return p;
}

}  // namespace detail

// Goal-conditioned proposal: z_0 = s, a_{k-1} ~ pi_g(z_{k-1}),
// z_k ~ m^{pi_g}_{beta_k}(z_{k-1}, a_{k-1}); one sequence per RNG.
template <class D>
std::vector<std::vector<typename D::Embedding>> goal_cond_proposal(const D& d, const typename D::State& s,
                                                                   const typename D::Embedding& goal,
                                                                   std::span<const double> betas,
                                                                   std::span<Rng* const> rngs) {
  const std::size_t M = rngs.size();
  std::vector<std::vector<typename D::Embedding>> out(M);
  std::vector<typename D::State> cur(M, s), next;
  std::vector<JumpQuery<D>> q(M);
  for (double beta : betas) {
    for (std::size_t m = 0; m < M; ++m) q[m] = {cur[m], d.act(goal, cur[m], *rngs[m]), &goal};
    d.jump(q, beta, rngs, next);
    for (std::size_t m = 0; m < M; ++m) {
      out[m].push_back(d.embed(next[m]));
      cur[m] = next[m];
    }
  }
  return out;
}

// Unconditional proposal: z_k ~ m^mu_{beta_k}(z_{k-1}) with z and action masked.
template <class D>
std::vector<std::vector<typename D::Embedding>> uncond_proposal(const D& d, const typename D::State& s,
                                                                std::span<const double> betas,
                                                                std::span<Rng* const> rngs) {
  const std::size_t M = rngs.size();
  std::vector<std::vector<typename D::Embedding>> out(M);
  std::vector<typename D::State> cur(M, s), next;
  std::vector<JumpQuery<D>> q(M);
  for (double beta : betas) {
    for (std::size_t m = 0; m < M; ++m) q[m] = {cur[m], typename D::Action{}, nullptr};
    d.jump(q, beta, rngs, next);
    for (std::size_t m = 0; m < M; ++m) {
      out[m].push_back(d.embed(next[m]));
      cur[m] = next[m];
    }
  }
  return out;
}

// Scores fixed subgoal sequences: per candidate a_1 ~ pi_{z_1}(s), then N
// chains S_k ~ m^{pi_{z_k}}_{beta_k}(S_{k-1}, A_{k-1}), A_k ~ pi_{z_{k+1}}(S_k),
// each valued (1 - gamma)^{-1} sum_k w_k r(S_k). Candidate m uses rngs[m].
template <class D>
PlanResult<D> score_candidates(const D& d, const typename D::State& s,
                               std::vector<std::vector<typename D::Embedding>> sequences,
                               const tabular::GspWeights& weights, int num_samples, std::span<Rng* const> rngs) {
  const std::size_t M = sequences.size();
  const std::size_t K = weights.weights.size();
  if (M == 0) throw std::invalid_argument("comp_plan: no candidates");
  if (num_samples < 1) throw std::invalid_argument("comp_plan: num_samples must be >= 1");
  if (rngs.size() != M) throw std::invalid_argument("comp_plan: one RNG per candidate required");
  for (const auto& z : sequences) {
    if (z.size() != K) throw std::invalid_argument("comp_plan: subgoal sequence length does not match the phases");
  }
  const auto N = static_cast<std::size_t>(num_samples);
  PlanResult<D> res;
  res.candidates.resize(M);
  std::vector<JumpQuery<D>> q(M * N);
  std::vector<Rng*> qr(M * N);
  std::vector<typename D::State> states;
  std::vector<std::vector<double>> rewards(M * N, std::vector<double>(K));
  for (std::size_t m = 0; m < M; ++m) {
    auto& c = res.candidates[m];
    c.z = std::move(sequences[m]);
    c.first_action = d.act(c.z.front(), s, *rngs[m]);
    for (std::size_t n = 0; n < N; ++n) {
      q[m * N + n] = {s, c.first_action, &c.z.front()};
      qr[m * N + n] = rngs[m];
    }
  }
  for (std::size_t k = 0; k < K; ++k) {
    d.jump(q, weights.betas[k], qr, states);
    for (std::size_t m = 0; m < M; ++m) {
      const auto& c = res.candidates[m];
      for (std::size_t n = 0; n < N; ++n) {
        const std::size_t i = m * N + n;
        rewards[i][k] = d.reward(states[i]);
        if (k + 1 < K) q[i] = {states[i], d.act(c.z[k + 1], states[i], *rngs[m]), &c.z[k + 1]};
      }
    }
  }
  std::vector<double> scores(M);
  for (std::size_t m = 0; m < M; ++m) {
    auto& c = res.candidates[m];
    c.draws.resize(N);
    double sum = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      c.draws[n] = tabular::weighted_reward_sum(weights.weights, rewards[m * N + n]) / (1.0 - weights.gamma);
      sum += c.draws[n];
    }
    c.q = sum / static_cast<double>(N);
    scores[m] = c.q;
  }
  res.chosen = argmax_first(scores);
  res.action = res.candidates[static_cast<std::size_t>(res.chosen)].first_action;
  return res;
}

// Per-candidate RNG substreams of one planning call.
inline std::vector<Rng> candidate_rngs(std::uint64_t seed, int m) {
  if (m < 1) throw std::invalid_argument("comp_plan: num_candidates must be >= 1");
  std::vector<Rng> r;
  r.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) r.push_back(make_rng(seed, static_cast<std::uint64_t>(i)));
  return r;
}

// CompPlan with a caller-supplied proposal, called as
// propose(std::span<const double> subgoal_betas, std::span<Rng* const> rngs).
// With append != nullptr the last phase follows *append and the proposal
// fills the earlier phases only.
template <class D, class Propose>
PlanResult<D> comp_plan(const D& d, const typename D::State& s, const tabular::GspWeights& weights, int num_candidates,
                        int num_samples, const typename D::Embedding* append, Propose&& propose, std::uint64_t seed) {
  auto rngs = candidate_rngs(seed, num_candidates);
  auto ptrs = detail::pointers<D>(rngs);
  const std::size_t K = weights.weights.size();
  const std::size_t proposed = append != nullptr ? K - 1 : K;
  std::vector<std::vector<typename D::Embedding>> seqs;
  if (proposed > 0) {
    seqs = propose(std::span<const double>(weights.betas.data(), proposed), std::span<Rng* const>(ptrs));
  } else {
    seqs.resize(rngs.size());
  }
  if (append != nullptr) {
    for (auto& z : seqs) z.push_back(*append);
  }
  return score_candidates(d, s, std::move(seqs), weights, num_samples, ptrs);
}

// Generalized policy improvement over a fixed candidate set: each z is scored
// by (1 - gamma)^{-1} mean r over draws from m^{pi_z}_gamma(s, a), a ~ pi_z(s).
template <class D>
PlanResult<D> gpi_select(const D& d, const typename D::State& s, const std::vector<typename D::Embedding>& candidates,
                         double gamma, int num_samples, std::uint64_t seed) {
  if (candidates.empty()) throw std::invalid_argument("gpi_select: empty candidate set");
  auto rngs = candidate_rngs(seed, static_cast<int>(candidates.size()));
  auto ptrs = detail::pointers<D>(rngs);
  std::vector<std::vector<typename D::Embedding>> seqs;
  for (const auto& z : candidates) seqs.push_back({z});
  tabular::GspWeights w;
  w.gamma = gamma;
  w.betas = {gamma};
  w.weights = {1.0};
  return score_candidates(d, s, std::move(seqs), w, num_samples, ptrs);
}

// Random shooting through a one-step model: candidate m perturbs the goal
// policy's first action (candidate 0 keeps it), imagines `horizon` steps with
// the goal policy, and scores sum_{k=1..horizon} gamma^{k-1} r(S_k).
template <class D>
struct ShootingResult {
  typename D::Action action{};
  int chosen = -1;
  std::vector<typename D::Action> first_actions;
  std::vector<double> scores;
};

template <class D>
ShootingResult<D> action_plan(const D& d, const typename D::State& s, const typename D::Embedding& goal,
                              int num_candidates, int horizon, double gamma, std::uint64_t seed) {
  if (horizon < 1) throw std::invalid_argument("action_plan: horizon must be >= 1");
  auto rngs = candidate_rngs(seed, num_candidates);
  auto ptrs = detail::pointers<D>(rngs);
  const auto M = static_cast<std::size_t>(num_candidates);
  ShootingResult<D> res;
  res.first_actions.resize(M);
  res.scores.assign(M, 0.0);
  std::vector<JumpQuery<D>> q(M);
  std::vector<typename D::State> next;
  for (std::size_t m = 0; m < M; ++m) {
    const auto a = d.act(goal, s, rngs[m]);
    res.first_actions[m] = m == 0 ? a : d.perturb(a, rngs[m]);
    q[m] = {s, res.first_actions[m], nullptr};
  }
  double discount = 1.0;
  for (int k = 0; k < horizon; ++k) {
    d.one_step(q, ptrs, next);
    for (std::size_t m = 0; m < M; ++m) {
      res.scores[m] += discount * d.reward(next[m]);
      if (k + 1 < horizon) q[m] = {next[m], d.act(goal, next[m], rngs[m]), nullptr};
    }
    discount *= gamma;
  }
  res.chosen = argmax_first(res.scores);
  res.action = res.first_actions[static_cast<std::size_t>(res.chosen)];
  return res;
}

}  // namespace gspplan::planner
