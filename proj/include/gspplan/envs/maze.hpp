#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "gspplan/tabular/types.hpp"

namespace gspplan::envs {

struct MazeTask {
  std::string name;
  Eigen::Vector2d start;
  Eigen::Vector2d goal;
};

// Grid of unit cells, row 0 at the bottom (y grows upward). Cell (cx, cy)
// covers [cx*c, (cx+1)*c) x [cy*c, (cy+1)*c); anything outside the grid is wall.
class MazeLayout {
 public:
  // rows[0] is the top line of the picture. '#' is wall, anything else is
  // free; 'S' and 'G' mark the start and goal cell of a task named "main".
  static MazeLayout from_rows(const std::vector<std::string>& rows, double cell_size = 1.0);

  int width() const { return width_; }
  int height() const { return height_; }
  double cell_size() const { return cell_size_; }
  const std::vector<std::string>& rows() const { return rows_; }

  bool wall(int cx, int cy) const;
  bool free(int cx, int cy) const { return !wall(cx, cy); }
  Eigen::Vector2i cell_of(const Eigen::Vector2d& p) const;
  bool in_wall(const Eigen::Vector2d& p) const;
  bool in_bounds(const Eigen::Vector2d& p) const;
  Eigen::Vector2d cell_center(int cx, int cy) const;
  Eigen::Vector2d center(const Eigen::Vector2i& cell) const { return cell_center(cell.x(), cell.y()); }

  // Free cells ordered by (cy, cx); their position in this list is the
  // gridworld state index.
  const std::vector<Eigen::Vector2i>& free_cells() const { return free_cells_; }
  int free_index(int cx, int cy) const;

  // Closest point of the free cells shrunk by margin (in cell units); p itself
  // when it already lies there.
  Eigen::Vector2d nearest_free(const Eigen::Vector2d& p, double margin = 0.05) const;

  // Throws std::invalid_argument when there are no free cells, the free cells
  // are disconnected, a task endpoint sits in a wall, or v_max*dt exceeds a cell.
  void validate() const;

  // Continuous-dynamics constants.
  double dt = 0.1;
  double a_max = 2.0;
  double v_max = 1.0;
  double success_radius = 0.5;
  std::vector<MazeTask> tasks;

  nlohmann::json to_json() const;
  static MazeLayout from_json(const nlohmann::json& j);

 private:
  int width_ = 0;
  int height_ = 0;
  double cell_size_ = 1.0;
  std::vector<std::string> rows_;
  std::vector<unsigned char> walls_;  // (cy * width + cx)
  std::vector<Eigen::Vector2i> free_cells_;
  std::vector<int> free_index_;
};

// "umaze", "corridor", "open5".
MazeLayout builtin_layout(const std::string& name);

// Four actions: 0 = +y, 1 = +x, 2 = -y, 3 = -x. Each lateral direction
// receives slip/2; moves into walls stay in place.
tabular::TabularMdp build_gridworld(const MazeLayout& layout, double slip);

}  // namespace gspplan::envs
