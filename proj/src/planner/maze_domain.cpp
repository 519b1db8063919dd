#include "gspplan/planner/maze_domain.hpp"

#include <stdexcept>

namespace gspplan::planner {

MazeDomain::MazeDomain(const envs::MazeLayout& layout, const envs::GoalPolicy& policy, Models models,
                       Eigen::Vector2d goal, double sample_dt, double action_noise)
    : layout_(&layout), policy_(&policy), models_(models), goal_(goal), sample_dt_(sample_dt), action_noise_(action_noise) {
  if (models_.uncond == nullptr) models_.uncond = models_.ghm;
  for (const auto* m : {models_.ghm, models_.uncond}) {
    if (m != nullptr && (m->one_step() || m->arch().z_dim != 4)) {
      throw std::invalid_argument("MazeDomain: jump models must be z- and gamma-conditioned");
    }
  }
  if (models_.world != nullptr && !models_.world->one_step()) {
    throw std::invalid_argument("MazeDomain: world model must be a one-step model");
  }
}

MazeDomain::Action MazeDomain::act(const Embedding& z, const State& s, Rng& rng) const {
  return policy_->act(envs::ContinuousState::unpack(s), z.head<2>(), rng);
}

void MazeDomain::sample(const ghm::GhmModel& model, std::span<const JumpQuery<MazeDomain>> q, double gamma,
                        std::span<Rng* const> rngs, std::vector<State>& out) const {
  if (rngs.size() != q.size()) throw std::invalid_argument("MazeDomain: one RNG per query");
  const auto n = static_cast<Eigen::Index>(q.size());
  std::vector<ghm::GhmQuery> queries(q.size());
  Eigen::Matrix4Xd noise(4, n);
  for (std::size_t i = 0; i < q.size(); ++i) {
    auto& g = queries[i];
    g.state = q[i].state;
    g.action = q[i].action;
    g.gamma = gamma;
    if (q[i].z != nullptr) {
      g.z = *q[i].z;
    } else {
      g.mask_z = true;
      g.mask_action = true;
    }
    for (int r = 0; r < 4; ++r) noise(r, static_cast<Eigen::Index>(i)) = standard_normal(*rngs[i]);
  }
  const Eigen::Matrix4Xd x = model.sample(queries, noise, sample_dt_);
  out.resize(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) out[i] = x.col(static_cast<Eigen::Index>(i));
}

void MazeDomain::jump(std::span<const JumpQuery<MazeDomain>> q, double beta, std::span<Rng* const> rngs,
                      std::vector<State>& out) const {
  // Conditional and unconditional queries may come from different models.
  std::vector<JumpQuery<MazeDomain>> cq, uq;
  std::vector<Rng*> cr, ur;
  std::vector<std::size_t> ci, ui;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i].z != nullptr) {
      cq.push_back(q[i]);
      cr.push_back(rngs[i]);
      ci.push_back(i);
    } else {
      uq.push_back(q[i]);
      ur.push_back(rngs[i]);
      ui.push_back(i);
    }
  }
  out.resize(q.size());
  std::vector<State> tmp;
  if (!cq.empty()) {
    if (models_.ghm == nullptr) throw std::invalid_argument("MazeDomain: no conditional model");
    sample(*models_.ghm, cq, beta, cr, tmp);
    for (std::size_t j = 0; j < ci.size(); ++j) out[ci[j]] = tmp[j];
  }
  if (!uq.empty()) {
    if (models_.uncond == nullptr) throw std::invalid_argument("MazeDomain: no unconditional model");
    sample(*models_.uncond, uq, beta, ur, tmp);
    for (std::size_t j = 0; j < ui.size(); ++j) out[ui[j]] = tmp[j];
  }
}

void MazeDomain::one_step(std::span<const JumpQuery<MazeDomain>> q, std::span<Rng* const> rngs,
                          std::vector<State>& out) const {
  if (models_.world == nullptr) throw std::invalid_argument("MazeDomain: no one-step model");
  if (rngs.size() != q.size()) throw std::invalid_argument("MazeDomain: one RNG per query");
  const auto n = static_cast<Eigen::Index>(q.size());
  std::vector<ghm::GhmQuery> queries(q.size());
  Eigen::Matrix4Xd noise(4, n);
  for (std::size_t i = 0; i < q.size(); ++i) {
    queries[i].state = q[i].state;
    queries[i].action = q[i].action;
    for (int r = 0; r < 4; ++r) noise(r, static_cast<Eigen::Index>(i)) = standard_normal(*rngs[i]);
  }
  const Eigen::Matrix4Xd x = models_.world->sample(queries, noise, sample_dt_);
  out.resize(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) out[i] = x.col(static_cast<Eigen::Index>(i));
}

MazeDomain::Embedding MazeDomain::embed(const State& s) const {
  Embedding z = Embedding::Zero();
  z.head<2>() = layout_->nearest_free(s.head<2>());
  return z;
}

double MazeDomain::reward(const State& s) const {
  return (s.head<2>() - goal_).norm() <= layout_->success_radius ? 1.0 : 0.0;
}

MazeDomain::Action MazeDomain::perturb(const Action& a, Rng& rng) const {
  const double sd = action_noise_ * layout_->a_max;
  const Action p(a.x() + sd * standard_normal(rng), a.y() + sd * standard_normal(rng));
  return envs::clip_norm(p, layout_->a_max);
}

namespace {

nlohmann::json vec_json(const Eigen::VectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

nlohmann::json plan_record(int step, const PlanResult<MazeDomain>& r) {
  nlohmann::json scores = nlohmann::json::array();
  for (const auto& c : r.candidates) scores.push_back(c.q);
  nlohmann::json subgoals = nlohmann::json::array();
  for (const auto& z : r.candidates[static_cast<std::size_t>(r.chosen)].z) subgoals.push_back(vec_json(z));
  return {{"step", step},
          {"scores", scores},
          {"chosen", r.chosen},
          {"subgoals", subgoals},
          {"action", vec_json(r.action)}};
}

Eigen::Vector2d jittered_start(const envs::MazeLayout& layout, const Eigen::Vector2d& start, double jitter, Rng& rng) {
  for (int tries = 0; tries < 1000; ++tries) {
    const Eigen::Vector2d p(start.x() + jitter * (2 * uniform01(rng) - 1), start.y() + jitter * (2 * uniform01(rng) - 1));
    if (layout.in_bounds(p) && !layout.in_wall(p)) return p;
  }
  return start;
}

}  // namespace

EpisodeTrace run_episode(const envs::MazeLayout& layout, const envs::MazeTask& task, const envs::GoalPolicy& policy,
                         const MazeDomain::Models& models, const PlanConfig& cfg, const EpisodeConfig& ep,
                         int episode, std::uint64_t seed) {
  cfg.validate();
  if (ep.max_steps < 1) throw std::invalid_argument("run_episode: max_steps must be >= 1");
  const std::uint64_t ep_seed = derive_seed(seed, static_cast<std::uint64_t>(episode));
  Rng rng = make_rng(ep_seed, 0);
  const MazeDomain domain(layout, policy, models, task.goal, cfg.sample_dt, cfg.action_noise);
  const auto weights = effective_discounts(cfg.effective_horizons, cfg.global_discount);
  const auto goal_z = domain.goal_embedding();

  EpisodeTrace trace;
  envs::ContinuousState s{jittered_start(layout, task.start, ep.start_jitter, rng), Eigen::Vector2d::Zero()};
  Eigen::Vector4d subgoal = goal_z;
  for (int t = 0; t < ep.max_steps; ++t) {
    if ((s.pos - task.goal).norm() <= layout.success_radius) {
      trace.success = true;
      break;
    }
    const std::uint64_t plan_seed = derive_seed(ep_seed, static_cast<std::uint64_t>(t) + 1);
    const Eigen::Vector4d x = s.packed();
    Eigen::Vector2d a;
    const bool replan = t % cfg.replan_period == 0;
    switch (cfg.mode) {
      case Mode::kZeroShot:
        a = policy.act(s, task.goal, rng);
        break;
      case Mode::kCompPlan:
      case Mode::kGpi:
        if (replan) {
          const bool gpi = cfg.mode == Mode::kGpi;
          auto propose = [&](std::span<const double> betas, std::span<Rng* const> rngs) {
            if (cfg.proposal == Proposal::kGoalConditioned) return goal_cond_proposal(domain, x, goal_z, betas, rngs);
            return uncond_proposal(domain, x, betas, rngs);
          };
          PlanResult<MazeDomain> r;
          if (gpi) {
            // Candidate policies: the goal itself plus proposed subgoals at the first horizon.
            std::vector<Eigen::Vector4d> cands{goal_z};
            if (cfg.num_candidates > 1) {
              auto rngs = candidate_rngs(derive_seed(plan_seed, 1), cfg.num_candidates - 1);
              std::vector<Rng*> ptrs;
              for (auto& g : rngs) ptrs.push_back(&g);
              const double beta = weights.betas.front();
              for (auto& seq : propose(std::span<const double>(&beta, 1), ptrs)) cands.push_back(seq.front());
            }
            r = gpi_select(domain, x, cands, cfg.global_discount, cfg.num_mc_samples, plan_seed);
          } else {
            r = comp_plan(domain, x, weights, cfg.num_candidates, cfg.num_mc_samples,
                          cfg.final_goal_phase ? &goal_z : nullptr, propose, plan_seed);
          }
          a = r.action;
          subgoal = r.subgoal();
          trace.plans.push_back(plan_record(t, r));
        } else {
          a = policy.act(s, subgoal.head<2>(), rng);
        }
        break;
      case Mode::kActionPlan: {
        const auto r = action_plan(domain, x, goal_z, cfg.num_candidates, cfg.action_horizon, cfg.global_discount,
                                   plan_seed);
        a = r.action;
        trace.plans.push_back({{"step", t}, {"scores", r.scores}, {"chosen", r.chosen}, {"action", vec_json(a)}});
        break;
      }
    }
    const auto next = envs::point_mass_step(s, a, layout, ep.noise_std, rng);
    envs::Transition tr;
    tr.episode = episode;
    tr.step = t;
    tr.state = x;
    tr.action = envs::clip_norm(a, layout.a_max);
    tr.next_state = next.packed();
    trace.transitions.push_back(tr);
    s = next;
    trace.steps = t + 1;
  }
  if (!trace.success && (s.pos - task.goal).norm() <= layout.success_radius) trace.success = true;
  if (!trace.transitions.empty()) trace.transitions.back().terminal = true;
  return trace;
}

void append_trace(envs::TransitionDataset& traces, const EpisodeTrace& trace, int episode) {
  for (auto t : trace.transitions) {
    t.episode = episode;
    traces.append(t);
  }
}

}  // namespace gspplan::planner
