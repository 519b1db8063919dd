#include "gspplan/envs/dataset.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "gspplan/common/io.hpp"
#include "gspplan/common/parallel.hpp"

namespace gspplan::envs {
namespace {

constexpr int kFormatVersion = 1;

std::vector<std::string> column_names() {
  std::vector<std::string> c = {"episode", "step"};
  for (const char* n : {"x", "y", "vx", "vy"}) c.push_back(std::string("s_") + n);
  for (const char* n : {"ax", "ay"}) c.push_back(std::string("a_") + n);
  for (const char* n : {"x", "y", "vx", "vy"}) c.push_back(std::string("ns_") + n);
  c.push_back("terminal");
  return c;
}

Eigen::Vector2d random_position_in(const MazeLayout& layout, const Eigen::Vector2i& cell, double margin, Rng& rng) {
  const double c = layout.cell_size();
  const double span = c - 2 * margin;
  return {cell.x() * c + margin + span * uniform01(rng), cell.y() * c + margin + span * uniform01(rng)};
}

Eigen::Vector2i random_free_cell(const MazeLayout& layout, Rng& rng) {
  const auto& cells = layout.free_cells();
  const auto i = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(cells.size()));
  return cells[std::min(i, cells.size() - 1)];
}

}  // namespace

void TransitionDataset::finalize() {
  episode_last_.assign(records_.size(), 0);
  episode_starts_.clear();
  std::size_t begin = 0;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    const bool starts = i == 0 || r.episode != records_[i - 1].episode;
    if (starts) {
      if (i > 0 && r.episode < records_[i - 1].episode) throw std::invalid_argument("dataset: episodes out of order");
      if (r.step != 0) throw std::invalid_argument("dataset: episode does not start at step 0");
      begin = i;
      episode_starts_.push_back(i);
    } else if (r.step != records_[i - 1].step + 1) {
      throw std::invalid_argument("dataset: non-consecutive steps within an episode");
    }
    const bool ends = i + 1 == records_.size() || records_[i + 1].episode != r.episode;
    if (ends) {
      for (std::size_t j = begin; j <= i; ++j) episode_last_[j] = i;
    }
  }
}

std::string TransitionDataset::serialize() const {
  nlohmann::json header = {{"format", "gspplan-transitions"},
                           {"version", kFormatVersion},
                           {"state_dim", 4},
                           {"action_dim", 2},
                           {"records", records_.size()},
                           {"episodes", num_episodes()},
                           {"seed", seed},
                           {"config_hash", config_hash},
                           {"tool_version", GSPPLAN_VERSION},
                           {"columns", column_names()}};
  std::string out = header.dump();
  out += '\n';
  for (const auto& r : records_) {
    out += std::to_string(r.episode);
    out += ',';
    out += std::to_string(r.step);
    for (double v : r.state) (out += ',') += format_double(v);
    for (double v : r.action) (out += ',') += format_double(v);
    for (double v : r.next_state) (out += ',') += format_double(v);
    out += r.terminal ? ",1\n" : ",0\n";
  }
  return out;
}

TransitionDataset TransitionDataset::parse(std::string_view text) {
  const auto eol = text.find('\n');
  if (eol == std::string_view::npos) throw std::invalid_argument("dataset: missing header line");
  const auto header = nlohmann::json::parse(text.substr(0, eol));
  if (header.at("format") != "gspplan-transitions" || header.at("version") != kFormatVersion) {
    throw std::invalid_argument("dataset: unsupported format");
  }
  if (header.at("state_dim") != 4 || header.at("action_dim") != 2) {
    throw std::invalid_argument("dataset: unsupported dimensions");
  }
  TransitionDataset d;
  d.seed = header.at("seed").get<std::uint64_t>();
  d.config_hash = header.at("config_hash").get<std::string>();
  const auto expected = header.at("records").get<std::size_t>();
  d.records_.reserve(expected);
  std::size_t pos = eol + 1;
  std::vector<std::string_view> fields;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    fields.clear();
    std::size_t f = 0;
    while (true) {
      const auto comma = line.find(',', f);
      fields.push_back(line.substr(f, comma == std::string_view::npos ? std::string_view::npos : comma - f));
      if (comma == std::string_view::npos) break;
      f = comma + 1;
    }
    if (fields.size() != 13) throw std::invalid_argument("dataset: row has wrong number of fields");
    Transition t;
    auto parse_int = [](std::string_view s) {
      int v = 0;
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || p != s.data() + s.size()) throw std::invalid_argument("dataset: bad integer field");
      return v;
    };
    t.episode = parse_int(fields[0]);
    t.step = parse_int(fields[1]);
    for (int i = 0; i < 4; ++i) t.state[i] = parse_double(fields[2 + static_cast<std::size_t>(i)]);
    for (int i = 0; i < 2; ++i) t.action[i] = parse_double(fields[6 + static_cast<std::size_t>(i)]);
    for (int i = 0; i < 4; ++i) t.next_state[i] = parse_double(fields[8 + static_cast<std::size_t>(i)]);
    t.terminal = parse_int(fields[12]) != 0;
    d.records_.push_back(t);
  }
  if (d.records_.size() != expected) throw std::invalid_argument("dataset: record count does not match header");
  d.finalize();
  return d;
}

TransitionDataset generate_dataset(const MazeLayout& layout, const GoalPolicy& behavior, const GenerateConfig& cfg,
                                   const GoalPolicy* alternate) {
  if (cfg.horizon < 1) throw std::invalid_argument("generate_dataset: horizon must be >= 1");
  if (cfg.n_episodes < 0) throw std::invalid_argument("generate_dataset: n_episodes must be >= 0");
  if (!(cfg.alt_fraction >= 0.0 && cfg.alt_fraction <= 1.0) || cfg.goal_timeout < 0) {
    throw std::invalid_argument("generate_dataset: alt_fraction must lie in [0, 1] and goal_timeout be >= 0");
  }
  layout.validate();
  const auto n = static_cast<std::size_t>(cfg.n_episodes);
  std::vector<std::vector<Transition>> episodes(n);
  parallel_for(n, [&](std::size_t e) {
    Rng rng = make_rng(cfg.seed, e);
    const bool alt = alternate != nullptr && cfg.alt_fraction > 0.0 && uniform01(rng) < cfg.alt_fraction;
    const GoalPolicy& policy = alt ? *alternate : behavior;
    ContinuousState s{random_position_in(layout, random_free_cell(layout, rng), cfg.start_margin, rng),
                      Eigen::Vector2d::Zero()};
    auto draw_goal = [&] {
      const auto cell = random_free_cell(layout, rng);
      Eigen::Vector2d g = layout.center(cell);
      g.x() += cfg.goal_jitter * (2 * uniform01(rng) - 1);
      g.y() += cfg.goal_jitter * (2 * uniform01(rng) - 1);
      return g;
    };
    Eigen::Vector2d goal = draw_goal();
    auto& out = episodes[e];
    out.reserve(static_cast<std::size_t>(cfg.horizon));
    int since_goal = 0;
    for (int k = 0; k < cfg.horizon; ++k) {
      if ((s.pos - goal).norm() <= layout.success_radius || (cfg.goal_timeout > 0 && since_goal >= cfg.goal_timeout)) {
        goal = draw_goal();
        since_goal = 0;
      }
      ++since_goal;
      const Eigen::Vector2d a = policy.act(s, goal, rng);
      const ContinuousState next = point_mass_step(s, a, layout, cfg.noise_std, rng);
      out.push_back({static_cast<int>(e), k, s.packed(), a, next.packed(), k + 1 == cfg.horizon});
      s = next;
    }
  });
  TransitionDataset data;
  data.seed = cfg.seed;
  for (auto& ep : episodes) {
    for (const auto& t : ep) data.append(t);
  }
  data.finalize();
  return data;
}

void GoalSampleConfig::validate() const {
  for (double p : {p_trajectory_goal, p_random_goal, p_next_state}) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("GoalSampleConfig: probabilities must lie in [0, 1]");
  }
  if (std::abs(p_trajectory_goal + p_random_goal + p_next_state - 1.0) > 1e-9) {
    throw std::invalid_argument("GoalSampleConfig: probabilities must sum to 1");
  }
  if (!(trajectory_discount > 0.0 && trajectory_discount < 1.0)) {
    throw std::invalid_argument("GoalSampleConfig: trajectory_discount must lie in (0, 1)");
  }
}

int geometric_offset(double discount, Rng& rng) {
  const double u = 1.0 - uniform01(rng);  // (0, 1]
  const double k = std::floor(std::log(u) / std::log(discount));
  return k >= 1e9 ? 1'000'000'000 : 1 + static_cast<int>(k);
}

Eigen::Vector4d sample_goal(const TransitionDataset& data, std::size_t index, const GoalSampleConfig& cfg, Rng& rng) {
  if (index >= data.size()) throw std::out_of_range("sample_goal: index out of range");
  const double u = uniform01(rng);
  if (u < cfg.p_next_state) return data[index].next_state;
  if (u < cfg.p_next_state + cfg.p_random_goal) {
    const auto j = std::min(static_cast<std::size_t>(uniform01(rng) * static_cast<double>(data.size())), data.size() - 1);
    return data[j].state;
  }
  const auto k = static_cast<std::size_t>(geometric_offset(cfg.trajectory_discount, rng));
  const std::size_t last = data.episode_last(index);
  const std::size_t j = k - 1 > last - index ? last : index + k - 1;
  return data[j].next_state;
}

}  // namespace gspplan::envs
