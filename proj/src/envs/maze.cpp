#include "gspplan/envs/maze.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace gspplan::envs {
namespace {

constexpr int kDx[4] = {0, 1, 0, -1};
constexpr int kDy[4] = {1, 0, -1, 0};

Eigen::Vector2d vec2(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

}  // namespace

MazeLayout MazeLayout::from_rows(const std::vector<std::string>& rows, double cell_size) {
  if (rows.empty() || rows.front().empty()) throw std::invalid_argument("MazeLayout: empty picture");
  if (!(cell_size > 0.0)) throw std::invalid_argument("MazeLayout: cell size must be positive");
  MazeLayout m;
  m.rows_ = rows;
  m.height_ = static_cast<int>(rows.size());
  m.width_ = static_cast<int>(rows.front().size());
  m.cell_size_ = cell_size;
  m.walls_.assign(static_cast<std::size_t>(m.width_ * m.height_), 0);
  bool has_start = false, has_goal = false;
  MazeTask task{"main", {}, {}};
  for (int r = 0; r < m.height_; ++r) {
    const auto& line = rows[static_cast<std::size_t>(r)];
    if (static_cast<int>(line.size()) != m.width_) throw std::invalid_argument("MazeLayout: ragged picture");
    const int cy = m.height_ - 1 - r;
    for (int cx = 0; cx < m.width_; ++cx) {
      const char ch = line[static_cast<std::size_t>(cx)];
      m.walls_[static_cast<std::size_t>(cy * m.width_ + cx)] = ch == '#';
      if (ch == 'S') {
        task.start = m.cell_center(cx, cy);
        has_start = true;
      } else if (ch == 'G') {
        task.goal = m.cell_center(cx, cy);
        has_goal = true;
      }
    }
  }
  if (has_start != has_goal) throw std::invalid_argument("MazeLayout: 'S' and 'G' must appear together");
  if (has_start) m.tasks.push_back(task);
  m.free_index_.assign(m.walls_.size(), -1);
  for (int cy = 0; cy < m.height_; ++cy) {
    for (int cx = 0; cx < m.width_; ++cx) {
      if (!m.wall(cx, cy)) {
        m.free_index_[static_cast<std::size_t>(cy * m.width_ + cx)] = static_cast<int>(m.free_cells_.size());
        m.free_cells_.emplace_back(cx, cy);
      }
    }
  }
  return m;
}

bool MazeLayout::wall(int cx, int cy) const {
  if (cx < 0 || cy < 0 || cx >= width_ || cy >= height_) return true;
  return walls_[static_cast<std::size_t>(cy * width_ + cx)] != 0;
}

Eigen::Vector2i MazeLayout::cell_of(const Eigen::Vector2d& p) const {
  return {static_cast<int>(std::floor(p.x() / cell_size_)), static_cast<int>(std::floor(p.y() / cell_size_))};
}

bool MazeLayout::in_wall(const Eigen::Vector2d& p) const {
  const auto c = cell_of(p);
  return wall(c.x(), c.y());
}

bool MazeLayout::in_bounds(const Eigen::Vector2d& p) const {
  return p.x() >= 0.0 && p.y() >= 0.0 && p.x() < width_ * cell_size_ && p.y() < height_ * cell_size_;
}

Eigen::Vector2d MazeLayout::cell_center(int cx, int cy) const {
  return {(cx + 0.5) * cell_size_, (cy + 0.5) * cell_size_};
}

Eigen::Vector2d MazeLayout::nearest_free(const Eigen::Vector2d& p, double margin) const {
  Eigen::Vector2d best = p;
  double best_d = std::numeric_limits<double>::infinity();
  const double m = margin * cell_size_;
  for (const auto& c : free_cells_) {
    const Eigen::Vector2d lo(c.x() * cell_size_ + m, c.y() * cell_size_ + m);
    const Eigen::Vector2d hi((c.x() + 1) * cell_size_ - m, (c.y() + 1) * cell_size_ - m);
    const Eigen::Vector2d q = p.cwiseMax(lo).cwiseMin(hi);
    const double d = (q - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = q;
    }
  }
  return best;
}

int MazeLayout::free_index(int cx, int cy) const {
  if (wall(cx, cy)) return -1;
  return free_index_[static_cast<std::size_t>(cy * width_ + cx)];
}

void MazeLayout::validate() const {
  if (free_cells_.empty()) throw std::invalid_argument("MazeLayout: no free cells");
  std::vector<char> seen(free_cells_.size(), 0);
  std::deque<int> queue{0};
  seen[0] = 1;
  std::size_t reached = 1;
  while (!queue.empty()) {
    const auto c = free_cells_[static_cast<std::size_t>(queue.front())];
    queue.pop_front();
    for (int a = 0; a < 4; ++a) {
      const int n = free_index(c.x() + kDx[a], c.y() + kDy[a]);
      if (n >= 0 && !seen[static_cast<std::size_t>(n)]) {
        seen[static_cast<std::size_t>(n)] = 1;
        ++reached;
        queue.push_back(n);
      }
    }
  }
  if (reached != free_cells_.size()) throw std::invalid_argument("MazeLayout: free cells are disconnected");
  for (const auto& t : tasks) {
    if (in_wall(t.start) || in_wall(t.goal)) {
      throw std::invalid_argument("MazeLayout: task '" + t.name + "' has an endpoint in a wall");
    }
  }
  if (!(dt > 0.0) || !(a_max > 0.0) || !(v_max > 0.0) || !(success_radius > 0.0)) {
    throw std::invalid_argument("MazeLayout: dynamics constants must be positive");
  }
  if (v_max * dt >= cell_size_) throw std::invalid_argument("MazeLayout: v_max * dt must be below the cell size");
}

nlohmann::json MazeLayout::to_json() const {
  nlohmann::json tj = nlohmann::json::array();
  for (const auto& t : tasks) {
    tj.push_back({{"name", t.name}, {"start", {t.start.x(), t.start.y()}}, {"goal", {t.goal.x(), t.goal.y()}}});
  }
  return {{"rows", rows_}, {"cell_size", cell_size_}, {"dt", dt},        {"a_max", a_max},
          {"v_max", v_max}, {"success_radius", success_radius}, {"tasks", tj}};
}

MazeLayout MazeLayout::from_json(const nlohmann::json& j) {
  MazeLayout m = from_rows(j.at("rows").get<std::vector<std::string>>(), j.value("cell_size", 1.0));
  m.dt = j.value("dt", m.dt);
  m.a_max = j.value("a_max", m.a_max);
  m.v_max = j.value("v_max", m.v_max);
  m.success_radius = j.value("success_radius", m.success_radius);
  if (j.contains("tasks")) {
    m.tasks.clear();
    for (const auto& t : j.at("tasks")) {
      m.tasks.push_back({t.at("name").get<std::string>(), vec2(t.at("start")), vec2(t.at("goal"))});
    }
  }
  m.validate();
  return m;
}

MazeLayout builtin_layout(const std::string& name) {
  MazeLayout m;
  if (name == "umaze") {
    m = MazeLayout::from_rows({"#####",
                               "#G..#",
                               "###.#",
                               "#S..#",
                               "#####"});
  } else if (name == "corridor") {
    m = MazeLayout::from_rows({"#########",
                               "#S.....G#",
                               "#########"});
  } else if (name == "open5") {
    m = MazeLayout::from_rows({"#######",
                               "#.....#",
                               "#.....#",
                               "#S...G#",
                               "#.....#",
                               "#.....#",
                               "#######"});
  } else {
    throw std::invalid_argument("unknown layout '" + name + "'");
  }
  m.validate();
  return m;
}

tabular::TabularMdp build_gridworld(const MazeLayout& layout, double slip) {
  if (!(slip >= 0.0 && slip <= 0.5)) throw std::invalid_argument("build_gridworld: slip must lie in [0, 0.5]");
  layout.validate();
  const int S = static_cast<int>(layout.free_cells().size());
  tabular::TabularMdp mdp;
  mdp.num_states = S;
  mdp.num_actions = 4;
  mdp.transition = Eigen::MatrixXd::Zero(S * 4, S);
  for (int s = 0; s < S; ++s) {
    const auto c = layout.free_cells()[static_cast<std::size_t>(s)];
    auto dest = [&](int dir) {
      const int n = layout.free_index(c.x() + kDx[dir], c.y() + kDy[dir]);
      return n >= 0 ? n : s;
    };
    for (int a = 0; a < 4; ++a) {
      const int row = s * 4 + a;
      mdp.transition(row, dest(a)) += 1.0 - slip;
      mdp.transition(row, dest((a + 1) % 4)) += slip / 2;
      mdp.transition(row, dest((a + 3) % 4)) += slip / 2;
    }
  }
  mdp.validate();
  return mdp;
}

}  // namespace gspplan::envs
