#include "gspplan/pipeline/run_config.hpp"

#include "gspplan/common/errors.hpp"
#include "gspplan/common/io.hpp"
#include "gspplan/common/rng.hpp"

namespace gspplan::pipeline {

namespace {

using nlohmann::json;

enum Stream : std::uint64_t { kDataset = 1, kGhm, kWorldModel, kGcbc, kPlan, kEval };

json scripted_to_json(const envs::ScriptedPolicyConfig& c) {
  return {{"kp", c.kp},
          {"kd", c.kd},
          {"cruise_fraction", c.cruise_fraction},
          {"temperature", c.temperature},
          {"myopic", c.myopic}};
}

template <class T>
void get(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

envs::ScriptedPolicyConfig scripted_from_json(const json& j, envs::ScriptedPolicyConfig c) {
  get(j, "kp", c.kp);
  get(j, "kd", c.kd);
  get(j, "cruise_fraction", c.cruise_fraction);
  get(j, "temperature", c.temperature);
  get(j, "myopic", c.myopic);
  if (c.temperature < 0.0 || c.cruise_fraction <= 0.0 || c.cruise_fraction > 1.0) {
    throw ConfigError("scripted policy: temperature must be >= 0 and cruise_fraction in (0, 1]");
  }
  return c;
}

json goals_to_json(const envs::GoalSampleConfig& g) {
  return {{"p_trajectory_goal", g.p_trajectory_goal},
          {"p_random_goal", g.p_random_goal},
          {"trajectory_discount", g.trajectory_discount},
          {"p_next_state", g.p_next_state}};
}

json gcbc_to_json(const envs::GcbcConfig& c) {
  return {{"hidden", c.hidden},
          {"blocks", c.blocks},
          {"gradient_steps", c.gradient_steps},
          {"batch_size", c.batch_size},
          {"lr", c.adam.lr},
          {"dt", c.dt},
          {"goals", goals_to_json(c.goals)}};
}

envs::GcbcConfig gcbc_from_json(const json& j) {
  envs::GcbcConfig c;
  get(j, "hidden", c.hidden);
  get(j, "blocks", c.blocks);
  get(j, "gradient_steps", c.gradient_steps);
  get(j, "batch_size", c.batch_size);
  get(j, "lr", c.adam.lr);
  get(j, "dt", c.dt);
  if (j.contains("goals")) {
    const auto& g = j.at("goals");
    get(g, "p_trajectory_goal", c.goals.p_trajectory_goal);
    get(g, "p_random_goal", c.goals.p_random_goal);
    get(g, "trajectory_discount", c.goals.trajectory_discount);
    get(g, "p_next_state", c.goals.p_next_state);
  }
  if (c.hidden < 1 || c.blocks < 0 || c.gradient_steps < 0 || c.batch_size < 1 || !(c.adam.lr > 0.0)) {
    throw ConfigError("gcbc: invalid configuration");
  }
  try {
    c.goals.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("gcbc: ") + e.what());
  }
  return c;
}

json dataset_to_json(const envs::GenerateConfig& c) {
  return {{"n_episodes", c.n_episodes},
          {"horizon", c.horizon},
          {"noise_std", c.noise_std},
          {"start_margin", c.start_margin},
          {"goal_jitter", c.goal_jitter},
          {"myopic_fraction", c.alt_fraction},
          {"goal_timeout", c.goal_timeout}};
}

envs::GenerateConfig dataset_from_json(const json& j) {
  envs::GenerateConfig c;
  get(j, "n_episodes", c.n_episodes);
  get(j, "horizon", c.horizon);
  get(j, "noise_std", c.noise_std);
  get(j, "start_margin", c.start_margin);
  get(j, "goal_jitter", c.goal_jitter);
  get(j, "myopic_fraction", c.alt_fraction);
  get(j, "goal_timeout", c.goal_timeout);
  if (c.n_episodes < 1 || c.horizon < 2 || c.noise_std < 0.0 || c.start_margin < 0.0 || c.start_margin >= 0.5 ||
      c.goal_jitter < 0.0 || !(c.alt_fraction >= 0.0 && c.alt_fraction <= 1.0) || c.goal_timeout < 0) {
    throw ConfigError("dataset: invalid configuration");
  }
  return c;
}

json episode_to_json(const planner::EpisodeConfig& c) {
  return {{"max_steps", c.max_steps}, {"start_jitter", c.start_jitter}, {"noise_std", c.noise_std}};
}

planner::EpisodeConfig episode_from_json(const json& j) {
  planner::EpisodeConfig c;
  get(j, "max_steps", c.max_steps);
  get(j, "start_jitter", c.start_jitter);
  get(j, "noise_std", c.noise_std);
  if (c.max_steps < 1 || c.start_jitter < 0.0 || c.noise_std < 0.0) throw ConfigError("episode: invalid configuration");
  return c;
}

json eval_to_json(const eval::EvalProtocol& c) {
  return {{"n_start_pairs", c.n_start_pairs},
          {"rollouts_per_pair", c.rollouts_per_pair},
          {"n_resampled_states", c.n_resampled_states},
          {"rollout_length", c.rollout_length},
          {"noise_std", c.noise_std},
          {"gammas", c.gammas}};
}

eval::EvalProtocol eval_from_json(const json& j) {
  eval::EvalProtocol c;
  get(j, "n_start_pairs", c.n_start_pairs);
  get(j, "rollouts_per_pair", c.rollouts_per_pair);
  get(j, "n_resampled_states", c.n_resampled_states);
  get(j, "rollout_length", c.rollout_length);
  get(j, "noise_std", c.noise_std);
  get(j, "gammas", c.gammas);
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("eval: ") + e.what());
  }
  return c;
}

json strip_seed(json j) {
  j.erase("seed");
  return j;
}

void reject_unknown(const json& given, const json& canonical, const std::string& path) {
  if (!given.is_object() || !canonical.is_object()) return;
  for (const auto& [key, value] : given.items()) {
    const std::string here = path.empty() ? key : path + "." + key;
    if (!canonical.contains(key)) throw ConfigError("config: unknown key '" + here + "'");
    reject_unknown(value, canonical.at(key), here);
  }
}

template <class Fn>
auto section(const json& j, const char* key, Fn&& parse) {
  try {
    return parse(j.contains(key) ? j.at(key) : json::object());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: section '") + key + "': " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: section '") + key + "': " + e.what());
  }
}

}  // namespace

json RunConfig::to_json() const {
  return {{"seed", seed},
          {"layout", layout},
          {"task", task},
          {"behavior", scripted_to_json(behavior)},
          {"repertoire",
           {{"kind", repertoire == RepertoireKind::kScripted ? "scripted" : "gcbc"},
            {"scripted", scripted_to_json(scripted_repertoire)},
            {"gcbc", gcbc_to_json(gcbc)}}},
          {"dataset", dataset_to_json(dataset)},
          {"train", strip_seed(train.to_json())},
          {"world_model", strip_seed(world_model.to_json())},
          {"plan", plan.to_json()},
          {"episode", episode_to_json(episode)},
          {"episodes", episodes},
          {"eval", eval_to_json(eval)}};
}

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  RunConfig c;
  try {
    get(j, "seed", c.seed);
    get(j, "task", c.task);
    get(j, "episodes", c.episodes);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (j.contains("layout")) c.layout = j.at("layout");
  c.behavior = section(j, "behavior", [&](const json& s) { return scripted_from_json(s, c.behavior); });
  if (j.contains("repertoire")) {
    const auto& r = j.at("repertoire");
    const auto kind = r.value("kind", std::string("scripted"));
    if (kind == "scripted") {
      c.repertoire = RepertoireKind::kScripted;
    } else if (kind == "gcbc") {
      c.repertoire = RepertoireKind::kGcbc;
    } else {
      throw ConfigError("config: unknown repertoire kind '" + kind + "'");
    }
    c.scripted_repertoire =
        section(r, "scripted", [&](const json& s) { return scripted_from_json(s, c.scripted_repertoire); });
    c.gcbc = section(r, "gcbc", gcbc_from_json);
  }
  c.dataset = section(j, "dataset", dataset_from_json);
  c.train = section(j, "train", [](const json& s) {
    if (s.contains("seed")) throw ConfigError("config: unknown key 'train.seed'");
    return ghm::GhmTrainConfig::from_json(s);
  });
  c.world_model = section(j, "world_model", [](const json& s) {
    if (s.contains("seed")) throw ConfigError("config: unknown key 'world_model.seed'");
    auto w = ghm::GhmTrainConfig::from_json(s);
    w.one_step = true;
    return w;
  });
  c.plan = section(j, "plan", planner::PlanConfig::from_json);
  c.episode = section(j, "episode", episode_from_json);
  c.eval = section(j, "eval", eval_from_json);

  c.train.validate();
  c.world_model.validate();
  c.plan.validate();
  if (c.episodes < 0) throw ConfigError("config: episodes must be >= 0");
  if (c.plan.global_discount > c.train.gamma_max && c.plan.mode != planner::Mode::kZeroShot) {
    throw ConfigError("config: plan.global_discount exceeds train.gamma_max");
  }
  const auto layout = c.make_layout();
  c.find_task(layout);
  reject_unknown(j, c.to_json(), "");
  return c;
}

envs::MazeLayout RunConfig::make_layout() const {
  try {
    if (layout.is_string()) return envs::builtin_layout(layout.get<std::string>());
    return envs::MazeLayout::from_json(layout);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: layout: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: layout: ") + e.what());
  }
}

const envs::MazeTask& RunConfig::find_task(const envs::MazeLayout& l) const {
  for (const auto& t : l.tasks) {
    if (t.name == task) return t;
  }
  throw ConfigError("config: layout has no task '" + task + "'");
}

envs::GenerateConfig RunConfig::dataset_config() const {
  auto c = dataset;
  c.seed = derive_seed(seed, kDataset);
  return c;
}

ghm::GhmTrainConfig RunConfig::ghm_config() const {
  auto c = train;
  c.seed = derive_seed(seed, kGhm);
  return c;
}

ghm::GhmTrainConfig RunConfig::world_model_config() const {
  auto c = world_model;
  c.one_step = true;
  c.seed = derive_seed(seed, kWorldModel);
  return c;
}

envs::GcbcConfig RunConfig::gcbc_config() const {
  auto c = gcbc;
  c.seed = derive_seed(seed, kGcbc);
  return c;
}

std::uint64_t RunConfig::plan_seed() const { return derive_seed(seed, kPlan); }
std::uint64_t RunConfig::eval_seed() const { return derive_seed(seed, kEval); }

std::string config_hash(const RunConfig& cfg) {
  auto j = cfg.to_json();
  j.erase("seed");
  j["plan"].erase("mode");
  return sha256_hex(j.dump()).substr(0, 16);
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "': expected key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("override '" + assignment + "': empty key");
    if (!node->is_object()) *node = json::object();
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

}  // namespace gspplan::pipeline
