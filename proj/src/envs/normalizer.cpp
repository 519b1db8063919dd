#include "gspplan/envs/normalizer.hpp"

#include <algorithm>

namespace gspplan::envs {

Normalizer Normalizer::for_layout(const MazeLayout& layout) {
  Normalizer n;
  const double w = layout.width() * layout.cell_size();
  const double h = layout.height() * layout.cell_size();
  n.center = {w / 2, h / 2};
  n.pos_scale = std::max(w, h) / 2;
  n.vel_scale = layout.v_max;
  n.act_scale = layout.a_max;
  return n;
}

Eigen::Vector4d Normalizer::state(const Eigen::Vector4d& s) const {
  Eigen::Vector4d o;
  o.head<2>() = pos(s.head<2>());
  o.tail<2>() = s.tail<2>() / vel_scale;
  return o;
}

Eigen::Vector4d Normalizer::state_inverse(const Eigen::Vector4d& s) const {
  Eigen::Vector4d o;
  o.head<2>() = pos_inverse(s.head<2>());
  o.tail<2>() = s.tail<2>() * vel_scale;
  return o;
}

}  // namespace gspplan::envs
