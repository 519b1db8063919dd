#pragma once

#include <Eigen/Dense>

#include "gspplan/envs/maze.hpp"

namespace gspplan::envs {

// Fixed affine map from maze coordinates to roughly [-1, 1]: positions are
// centered on the maze and divided by half its larger extent (isotropic, so
// distances keep their shape), velocities by v_max, actions by a_max.
struct Normalizer {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double pos_scale = 1.0;
  double vel_scale = 1.0;
  double act_scale = 1.0;

  static Normalizer for_layout(const MazeLayout& layout);

  Eigen::Vector4d state(const Eigen::Vector4d& s) const;
  Eigen::Vector4d state_inverse(const Eigen::Vector4d& s) const;
  Eigen::Vector2d pos(const Eigen::Vector2d& p) const { return (p - center) / pos_scale; }
  Eigen::Vector2d pos_inverse(const Eigen::Vector2d& p) const { return p * pos_scale + center; }
  Eigen::Vector2d action(const Eigen::Vector2d& a) const { return a / act_scale; }
  Eigen::Vector2d action_inverse(const Eigen::Vector2d& a) const { return a * act_scale; }
};

}  // namespace gspplan::envs
