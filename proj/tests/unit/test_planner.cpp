#include <doctest.h>

#include <cmath>

#include "gspplan/common/errors.hpp"
#include "gspplan/envs/maze.hpp"
#include "gspplan/envs/point_mass.hpp"
#include "gspplan/envs/policy.hpp"
#include "gspplan/ghm/train.hpp"
#include "gspplan/planner/comp_plan.hpp"
#include "gspplan/planner/config.hpp"
#include "gspplan/planner/maze_domain.hpp"
#include "gspplan/planner/tabular_domain.hpp"
#include "gspplan/tabular/algebra.hpp"
#include "gspplan/tabular/random.hpp"

using namespace gspplan;
using namespace gspplan::planner;

namespace {

TabularDomain random_domain(int S, int A, std::uint64_t seed, tabular::RewardFn reward = {}) {
  Rng rng = make_rng(seed, 0);
  auto mdp = tabular::random_mdp(S, A, rng, 3);
  std::vector<tabular::TabularPolicy> rep;
  for (int z = 0; z < S; ++z) rep.push_back(tabular::random_policy(S, A, rng));
  auto behavior = tabular::random_policy(S, A, rng);
  if (reward.values.size() == 0) reward = tabular::random_reward(S, rng);
  return TabularDomain(mdp, rep, behavior, reward);
}

// Chain 0 - 1 - ... - (S-1); action 0 moves left, action 1 moves right.
// pi_z moves toward z (right when z equals the current state).
TabularDomain corridor_domain(int S) {
  tabular::TabularMdp mdp;
  mdp.num_states = S;
  mdp.num_actions = 2;
  mdp.transition = Eigen::MatrixXd::Zero(2 * S, S);
  for (int s = 0; s < S; ++s) {
    mdp.transition(mdp.row(s, 0), std::max(s - 1, 0)) = 1.0;
    mdp.transition(mdp.row(s, 1), std::min(s + 1, S - 1)) = 1.0;
  }
  std::vector<tabular::TabularPolicy> rep;
  for (int z = 0; z < S; ++z) {
    std::vector<int> acts(static_cast<std::size_t>(S));
    for (int s = 0; s < S; ++s) acts[static_cast<std::size_t>(s)] = s > z ? 0 : 1;
    rep.push_back(tabular::TabularPolicy::deterministic(acts, 2));
  }
  tabular::RewardFn r;
  r.values = Eigen::VectorXd::Zero(S);
  r.values(S - 1) = 1.0;
  return TabularDomain(mdp, rep, tabular::TabularPolicy::uniform(S, 2), r);
}

std::vector<std::vector<int>> random_sequences(int M, int K, int S, Rng& rng) {
  std::vector<std::vector<int>> seqs(static_cast<std::size_t>(M));
  for (auto& z : seqs) {
    for (int k = 0; k < K; ++k) z.push_back(std::min(static_cast<int>(uniform01(rng) * S), S - 1));
  }
  return seqs;
}

PlanResult<TabularDomain> score(const TabularDomain& d, int s, const std::vector<std::vector<int>>& seqs,
                                const tabular::GspWeights& w, int N, std::uint64_t seed) {
  auto rngs = candidate_rngs(seed, static_cast<int>(seqs.size()));
  std::vector<Rng*> p;
  for (auto& r : rngs) p.push_back(&r);
  return score_candidates(d, s, seqs, w, N, p);
}

}  // namespace

TEST_CASE("effective discounts") {
  auto w = effective_discounts({1.0}, 0.9);
  CHECK(w.betas[0] == 0.0);
  CHECK(w.betas[1] == 0.9);
  w = effective_discounts({}, 0.9);
  CHECK(w.weights.size() == 1);
  CHECK(w.weights[0] == 1.0);
  w = effective_discounts({50.0}, 0.999);
  CHECK(w.betas[0] == doctest::Approx(0.98).epsilon(1e-12));
  // alpha = 1 - 0.98 / 0.999
  const double alpha = 1.0 - 0.98 / 0.999;
  CHECK(alpha == doctest::Approx(0.019019).epsilon(1e-4));
  CHECK(w.betas[0] == doctest::Approx(0.999 * (1.0 - alpha)).epsilon(1e-12));
  // h = 1/(1 - gamma) gives alpha = 0: the phase is absorbing.
  w = effective_discounts({10.0, 10.0}, 0.9);
  CHECK(w.weights[0] == doctest::Approx(1.0));
  CHECK(w.weights[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS(effective_discounts({200.0}, 0.99), std::invalid_argument);
  CHECK_THROWS_AS(effective_discounts({0.5}, 0.99), std::invalid_argument);
  w = effective_discounts({5.0, 20.0, 50.0}, 0.995);
  double sum = 0.0;
  for (double x : w.weights) sum += x;
  CHECK(std::abs(sum - 1.0) < 1e-12);
}

TEST_CASE("plan config") {
  PlanConfig c;
  CHECK_NOTHROW(c.validate());
  c.mode = Mode::kGpi;
  c.proposal = Proposal::kGoalConditioned;
  c.effective_horizons = {5, 10};
  CHECK(PlanConfig::from_json(c.to_json()).to_json() == c.to_json());
  c.num_candidates = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.num_candidates = 4;
  c.effective_horizons = {1000};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(mode_from_string("cem"), ConfigError);
}

TEST_CASE("candidate scoring contracts on tabular instances") {
  auto d = random_domain(6, 3, 1);
  const auto w = effective_discounts({3.0}, 0.9);
  d.prepare(w.betas);
  Rng rng = make_rng(2, 0);
  const auto seqs = random_sequences(8, 2, 6, rng);

  const auto r = score(d, 2, seqs, w, 50, 9);
  double best = -1e300;
  for (const auto& c : r.candidates) {
    CHECK(c.draws.size() == 50);
    double sum = 0.0;
    for (double x : c.draws) sum += x;
    CHECK(c.q == sum / 50.0);
    best = std::max(best, c.q);
  }
  CHECK(r.score() == best);
  CHECK(r.action == r.candidates[static_cast<std::size_t>(r.chosen)].first_action);
  for (int m = 0; m < r.chosen; ++m) CHECK(r.candidates[static_cast<std::size_t>(m)].q < best);

  // Same seed, same result; candidate m depends only on its own substream.
  const auto again = score(d, 2, seqs, w, 50, 9);
  CHECK(again.chosen == r.chosen);
  auto tail = std::vector<std::vector<int>>(seqs.begin() + 3, seqs.end());
  auto rngs = candidate_rngs(9, 8);
  std::vector<Rng*> p;
  for (std::size_t m = 3; m < 8; ++m) p.push_back(&rngs[m]);
  const auto part = score_candidates(d, 2, tail, w, 50, p);
  for (std::size_t m = 0; m < tail.size(); ++m) CHECK(part.candidates[m].draws == r.candidates[m + 3].draws);

  // M = 1.
  const auto one = score(d, 2, {seqs[0]}, w, 50, 9);
  CHECK(one.chosen == 0);
  CHECK(one.score() == one.candidates[0].q);
  CHECK_THROWS_AS(score(d, 2, {}, w, 5, 9), std::invalid_argument);
  CHECK_THROWS_AS(score(d, 2, {{1}}, w, 5, 9), std::invalid_argument);
}

TEST_CASE("constant reward is valued at exactly c / (1 - gamma)") {
  tabular::RewardFn c;
  c.values = Eigen::VectorXd::Constant(5, 0.7);
  auto d = random_domain(5, 2, 3, c);
  const auto w = effective_discounts({2.0, 4.0}, 0.95);
  d.prepare(w.betas);
  Rng rng = make_rng(4, 0);
  const auto r = score(d, 0, random_sequences(6, 3, 5, rng), w, 20, 5);
  for (const auto& cand : r.candidates) {
    for (double x : cand.draws) CHECK(x == 0.7 / (1.0 - 0.95));
  }
  CHECK(r.chosen == 0);
  d.prepare(std::vector<double>{0.95});
  const auto g = gpi_select(d, 0, {3, 1, 4}, 0.95, 10, 6);
  CHECK(g.chosen == 0);
  for (const auto& cand : g.candidates) CHECK(cand.q == doctest::Approx(0.7 / (1.0 - 0.95)).epsilon(1e-12));
}

TEST_CASE("argmax is invariant to positive reward scaling") {
  auto d = random_domain(6, 3, 7);
  tabular::RewardFn scaled = d.reward_fn();
  scaled.values *= 3.5;
  TabularDomain d2(d.mdp(), d.repertoire(), tabular::TabularPolicy::uniform(6, 3), scaled);
  const auto w = effective_discounts({2.0}, 0.9);
  d.prepare(w.betas);
  d2.prepare(w.betas);
  Rng rng = make_rng(8, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const auto seqs = random_sequences(10, 2, 6, rng);
    const auto a = score(d, trial % 6, seqs, w, 30, 100 + trial);
    const auto b = score(d2, trial % 6, seqs, w, 30, 100 + trial);
    CHECK(a.chosen == b.chosen);
    CHECK(a.action == b.action);
  }
}

TEST_CASE("act-then-commit scores match the composite oracle") {
  const double gamma = 0.9;
  auto d = random_domain(5, 2, 11);
  const auto w = effective_discounts({1.0}, gamma);  // alpha_1 = 1
  d.prepare(w.betas);
  Rng rng = make_rng(12, 0);
  const auto seqs = random_sequences(6, 2, 5, rng);
  const int s = 1, N = 4000;
  const auto r = score(d, s, seqs, w, N, 13);
  int outside = 0;
  for (const auto& c : r.candidates) {
    const tabular::SwitchingPolicySpec spec{{c.z[0], c.z[1]}, {1.0}};
    const auto m = tabular::gsp_successor_measure_oracle(d.mdp(), d.repertoire(), spec, gamma);
    const double truth = tabular::q_from_measure(m, d.reward_fn(), gamma)(s, c.first_action);
    double var = 0.0;
    for (double x : c.draws) var += (x - c.q) * (x - c.q);
    const double se = std::sqrt(var / (N - 1) / N);
    outside += std::abs(c.q - truth) > 3 * se + 1e-12;
  }
  CHECK(outside <= 1);
}

TEST_CASE("GPI picks the policy whose measure sits on rewarding states") {
  // Corridor with reward at the right end: pi_{S-1} walks right and stays,
  // pi_0 walks left and never reaches it.
  auto d = corridor_domain(5);
  d.prepare(std::vector<double>{0.8});
  const auto g = gpi_select(d, 3, {0, 4}, 0.8, 400, 1);
  CHECK(g.chosen == 1);
  CHECK(g.candidates[0].q == 0.0);
  CHECK(g.candidates[1].q > 0.0);
  const auto single = gpi_select(d, 3, {2}, 0.8, 10, 1);
  CHECK(single.chosen == 0);
  CHECK_THROWS_AS(gpi_select(d, 3, {}, 0.8, 10, 1), std::invalid_argument);
}

TEST_CASE("proposals") {
  auto d = corridor_domain(8);
  const std::vector<double> betas{0.5, 0.5, 0.5};
  d.prepare(betas);
  auto rngs = candidate_rngs(3, 5);
  std::vector<Rng*> p;
  for (auto& r : rngs) p.push_back(&r);
  // Goal-conditioned chains on a deterministic corridor never move away from the goal.
  const auto seqs = goal_cond_proposal(d, 0, 7, std::span<const double>(betas), p);
  for (const auto& z : seqs) {
    REQUIRE(z.size() == 3);
    CHECK(z[0] >= 1);
    for (std::size_t k = 1; k < z.size(); ++k) CHECK(z[k] >= z[k - 1]);
  }
  const auto none = goal_cond_proposal(d, 0, 7, std::span<const double>(), p);
  CHECK(none.size() == 5);
  for (const auto& z : none) CHECK(z.empty());

  auto r1 = candidate_rngs(4, 5), r2 = candidate_rngs(4, 5);
  std::vector<Rng*> p1, p2;
  for (auto& r : r1) p1.push_back(&r);
  for (auto& r : r2) p2.push_back(&r);
  CHECK(uncond_proposal(d, 3, std::span<const double>(betas), p1) ==
        uncond_proposal(d, 3, std::span<const double>(betas), p2));

  // comp_plan with the final goal phase appended.
  const auto w = effective_discounts({2.0}, 0.8);
  d.prepare(w.betas);
  const int goal = 7;
  const auto plan = comp_plan(d, 2, w, 6, 20, &goal,
                              [&](std::span<const double> b, std::span<Rng* const> r) {
                                CHECK(b.size() == 1);
                                return uncond_proposal(d, 2, b, r);
                              },
                              21);
  for (const auto& c : plan.candidates) {
    CHECK(c.z.size() == 2);
    CHECK(c.z.back() == 7);
  }
}

TEST_CASE("action plan") {
  auto d = corridor_domain(6);
  // M = 1 keeps the goal policy's action.
  const auto one = action_plan(d, 2, 5, 1, 3, 0.9, 1);
  CHECK(one.chosen == 0);
  CHECK(one.action == 1);
  // gamma = 0: only the first imagined transition counts.
  const auto r = action_plan(d, 4, 5, 8, 4, 0.0, 2);
  for (std::size_t m = 0; m < r.scores.size(); ++m) CHECK(r.scores[m] == (r.first_actions[m] == 1 ? 1.0 : 0.0));
  CHECK(r.action == 1);
  // Horizon 1 on a deterministic corridor: the best first action is the greedy one.
  const auto h1 = action_plan(d, 4, 0, 16, 1, 0.9, 3);
  CHECK(h1.action == 1);
}

namespace {

struct MazeFixture {
  envs::MazeLayout layout = envs::builtin_layout("umaze");
  envs::ScriptedGoalPolicy policy{layout, {4.0, 4.0, 0.8, 0.1, true}};
  ghm::GhmModel ghm_model;
  ghm::GhmModel world;
  MazeFixture() : ghm_model(make(false)), world(make(true)) {}
  ghm::GhmModel make(bool one_step) {
    ghm::GhmTrainConfig cfg;
    cfg.hidden = 16;
    cfg.blocks = 1;
    cfg.embed_dim = 8;
    cfg.one_step = one_step;
    const auto arch = ghm::ghm_architecture(cfg);
    flow::VectorField<float> f(arch);
    flow::ParamVector p(f.param_count());
    Rng rng = make_rng(one_step ? 2 : 1, 0);
    f.init_params(p, rng, false);
    return ghm::GhmModel(arch, envs::Normalizer::for_layout(layout), p, 0.996, 0.1);
  }
};

}  // namespace

TEST_CASE("controller: zero-shot bypass reproduces policy rollouts") {
  MazeFixture fx;
  PlanConfig cfg;
  cfg.mode = Mode::kZeroShot;
  EpisodeConfig ep;
  ep.max_steps = 40;
  ep.start_jitter = 0.0;
  const auto& task = fx.layout.tasks.front();
  const auto tr = run_episode(fx.layout, task, fx.policy, {}, cfg, ep, 3, 17);
  CHECK(tr.plans.empty());
  CHECK(tr.steps == 40);
  Rng rng = make_rng(derive_seed(17, 3), 0);
  // The episode RNG first draws the (zero-width) start jitter.
  uniform01(rng);
  uniform01(rng);
  envs::ContinuousState s{task.start, Eigen::Vector2d::Zero()};
  for (const auto& t : tr.transitions) {
    CHECK((t.state - s.packed()).norm() == 0.0);
    s = envs::point_mass_step(s, fx.policy.act(s, task.goal, rng), fx.layout, 0.0, rng);
    CHECK((t.next_state - s.packed()).norm() == 0.0);
  }
  CHECK(tr.transitions.back().terminal);
}

TEST_CASE("controller: replanning cadence and determinism") {
  MazeFixture fx;
  PlanConfig cfg;
  cfg.num_candidates = 4;
  cfg.num_mc_samples = 3;
  cfg.effective_horizons = {5.0};
  cfg.sample_dt = 0.25;
  EpisodeConfig ep;
  ep.max_steps = 12;
  const MazeDomain::Models models{&fx.ghm_model, nullptr, &fx.world};
  const auto& task = fx.layout.tasks.front();
  cfg.replan_period = 100;
  CHECK(run_episode(fx.layout, task, fx.policy, models, cfg, ep, 0, 5).plans.size() == 1);
  cfg.replan_period = 5;
  const auto a = run_episode(fx.layout, task, fx.policy, models, cfg, ep, 0, 5);
  const auto b = run_episode(fx.layout, task, fx.policy, models, cfg, ep, 0, 5);
  CHECK(a.plans.size() == 3);
  CHECK(a.plans == b.plans);
  envs::TransitionDataset ta, tb;
  append_trace(ta, a, 0);
  append_trace(tb, b, 0);
  ta.finalize();
  tb.finalize();
  CHECK(ta.serialize() == tb.serialize());
  for (const auto& plan : a.plans) {
    CHECK(plan.at("scores").size() == 4);
    CHECK(plan.at("subgoals").size() == 2);
  }
  cfg.mode = Mode::kGpi;
  const auto g = run_episode(fx.layout, task, fx.policy, models, cfg, ep, 0, 5);
  CHECK(g.plans.front().at("scores").size() == 4);
  cfg.mode = Mode::kActionPlan;
  cfg.action_horizon = 3;
  CHECK(run_episode(fx.layout, task, fx.policy, models, cfg, ep, 0, 5).plans.size() == 12);
}

TEST_CASE("maze domain embeddings lie in free space") {
  MazeFixture fx;
  const MazeDomain d(fx.layout, fx.policy, {&fx.ghm_model, nullptr, nullptr}, fx.layout.tasks.front().goal, 0.1, 0.5);
  Rng rng = make_rng(30, 0);
  for (int i = 0; i < 500; ++i) {
    const Eigen::Vector4d s(6 * uniform01(rng) - 0.5, 6 * uniform01(rng) - 0.5, 0.0, 0.0);
    const auto z = d.embed(s);
    CHECK_FALSE(fx.layout.in_wall(z.head<2>()));
    CHECK(fx.layout.in_bounds(z.head<2>()));
    if (fx.layout.in_bounds(s.head<2>()) && !fx.layout.in_wall(s.head<2>())) {
      CHECK((z - s).norm() <= 0.05 * std::sqrt(2.0) + 1e-12);
    }
  }
  CHECK(d.reward(Eigen::Vector4d(1.5, 3.5, 0, 0)) == 1.0);
  CHECK(d.reward(Eigen::Vector4d(1.5, 2.9, 0, 0)) == 0.0);
}
