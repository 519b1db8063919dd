#pragma once

#include <Eigen/Dense>

#include "gspplan/common/rng.hpp"
#include "gspplan/envs/maze.hpp"

namespace gspplan::envs {

struct ContinuousState {
  Eigen::Vector2d pos = Eigen::Vector2d::Zero();
  Eigen::Vector2d vel = Eigen::Vector2d::Zero();

  Eigen::Vector4d packed() const { return {pos.x(), pos.y(), vel.x(), vel.y()}; }
  static ContinuousState unpack(const Eigen::Vector4d& v) { return {v.head<2>(), v.tail<2>()}; }
};

// Semi-implicit Euler step of a point mass. The action is clipped to norm
// a_max and the new velocity to norm v_max. Position moves along x, then y;
// crossing into a wall cell stops at the wall face and zeroes that velocity
// component. Two normal draws are consumed when noise_std > 0.
ContinuousState point_mass_step(const ContinuousState& state, const Eigen::Vector2d& action, const MazeLayout& layout,
                                double noise_std, Rng& rng);

Eigen::Vector2d clip_norm(const Eigen::Vector2d& v, double max_norm);

}  // namespace gspplan::envs
