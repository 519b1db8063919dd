#include "gspplan/envs/point_mass.hpp"

#include <cmath>

namespace gspplan::envs {
namespace {

// Moves coordinate `axis` of p by delta, stopping at the face of a wall cell.
// Returns false when blocked.
bool move_axis(Eigen::Vector2d& p, int axis, double delta, const MazeLayout& layout) {
  const double c = layout.cell_size();
  const Eigen::Vector2i cell = layout.cell_of(p);
  double next = p[axis] + delta;
  const int from = cell[axis];
  const int to = static_cast<int>(std::floor(next / c));
  if (to == from) {
    p[axis] = next;
    return true;
  }
  Eigen::Vector2i probe = cell;
  probe[axis] = to;
  if (!layout.wall(probe.x(), probe.y())) {
    p[axis] = next;
    return true;
  }
  p[axis] = to > from ? (from + 1) * c - 1e-9 * c : from * c;
  return false;
}

}  // namespace

Eigen::Vector2d clip_norm(const Eigen::Vector2d& v, double max_norm) {
  const double n = v.norm();
  return n > max_norm ? Eigen::Vector2d(v * (max_norm / n)) : v;
}

ContinuousState point_mass_step(const ContinuousState& state, const Eigen::Vector2d& action, const MazeLayout& layout,
                                double noise_std, Rng& rng) {
  const Eigen::Vector2d a = clip_norm(action, layout.a_max);
  Eigen::Vector2d v = state.vel + a * layout.dt;
  if (noise_std > 0.0) {
    v.x() += noise_std * standard_normal(rng);
    v.y() += noise_std * standard_normal(rng);
  }
  v = clip_norm(v, layout.v_max);
  ContinuousState out{state.pos, v};
  for (int axis = 0; axis < 2; ++axis) {
    if (!move_axis(out.pos, axis, v[axis] * layout.dt, layout)) out.vel[axis] = 0.0;
  }
  return out;
}

}  // namespace gspplan::envs
