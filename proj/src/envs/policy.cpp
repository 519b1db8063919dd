#include "gspplan/envs/policy.hpp"

#include <deque>
#include <limits>
#include <stdexcept>

namespace gspplan::envs {
namespace {

constexpr int kDx[4] = {0, 1, 0, -1};
constexpr int kDy[4] = {1, 0, -1, 0};

}  // namespace

ScriptedGoalPolicy::ScriptedGoalPolicy(const MazeLayout& layout, ScriptedPolicyConfig cfg)
    : layout_(&layout), cfg_(cfg) {
  layout.validate();
  if (!(cfg.kp > 0.0) || !(cfg.kd > 0.0) || !(cfg.cruise_fraction > 0.0) || cfg.temperature < 0.0) {
    throw std::invalid_argument("ScriptedGoalPolicy: gains must be positive and temperature non-negative");
  }
  const auto& cells = layout.free_cells();
  n_ = static_cast<int>(cells.size());
  const auto n = static_cast<std::size_t>(n_);
  dist_.assign(n * n, std::numeric_limits<int>::max());
  hop_.assign(n * n, -1);
  for (int to = 0; to < n_; ++to) {
    int* dist = &dist_[static_cast<std::size_t>(to) * n];
    int* hop = &hop_[static_cast<std::size_t>(to) * n];
    dist[to] = 0;
    hop[to] = to;
    std::deque<int> queue{to};
    while (!queue.empty()) {
      const int cur = queue.front();
      queue.pop_front();
      const auto c = cells[static_cast<std::size_t>(cur)];
      for (int a = 0; a < 4; ++a) {
        const int nb = layout.free_index(c.x() + kDx[a], c.y() + kDy[a]);
        if (nb >= 0 && dist[nb] == std::numeric_limits<int>::max()) {
          dist[nb] = dist[cur] + 1;
          hop[nb] = cur;
          queue.push_back(nb);
        }
      }
    }
  }
}

int ScriptedGoalPolicy::next_hop(int from, int to) const {
  return hop_[static_cast<std::size_t>(to) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(from)];
}

int ScriptedGoalPolicy::distance(int from, int to) const {
  return dist_[static_cast<std::size_t>(to) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(from)];
}

Eigen::Vector2d ScriptedGoalPolicy::mean_action(const ContinuousState& state, const Eigen::Vector2d& goal) const {
  const auto& L = *layout_;
  const Eigen::Vector2i gc = L.cell_of(goal);
  const int goal_idx = L.free_index(gc.x(), gc.y());
  if (goal_idx < 0) throw std::invalid_argument("scripted policy: goal is not in a free cell");
  const double cruise = cfg_.cruise_fraction * L.v_max;
  const Eigen::Vector2i sc = L.cell_of(state.pos);
  const int here = L.free_index(sc.x(), sc.y());
  Eigen::Vector2d v_des;
  if (cfg_.myopic || here == goal_idx || here < 0) {
    v_des = clip_norm((cfg_.kp / cfg_.kd) * (goal - state.pos), cruise);
  } else {
    const Eigen::Vector2d target = L.center(L.free_cells()[static_cast<std::size_t>(next_hop(here, goal_idx))]);
    const Eigen::Vector2d d = target - state.pos;
    const double n = d.norm();
    v_des = n > 0.0 ? Eigen::Vector2d(d * (cruise / n)) : Eigen::Vector2d::Zero();
  }
  return cfg_.kd * (v_des - state.vel);
}

Eigen::Vector2d ScriptedGoalPolicy::act(const ContinuousState& state, const Eigen::Vector2d& goal, Rng& rng) const {
  Eigen::Vector2d a = mean_action(state, goal);
  if (cfg_.temperature > 0.0) {
    a.x() += cfg_.temperature * layout_->a_max * standard_normal(rng);
    a.y() += cfg_.temperature * layout_->a_max * standard_normal(rng);
  }
  return clip_norm(a, layout_->a_max);
}

}  // namespace gspplan::envs
