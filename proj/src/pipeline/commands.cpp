#include "gspplan/pipeline/commands.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "gspplan/common/errors.hpp"
#include "gspplan/common/io.hpp"
#include "gspplan/envs/gcbc.hpp"
#include "gspplan/eval/ground_truth.hpp"
#include "gspplan/eval/success.hpp"
#include "gspplan/flow/checkpoint.hpp"
#include "gspplan/ghm/model.hpp"
#include "gspplan/planner/maze_domain.hpp"

namespace gspplan::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string suffix(std::uint64_t seed) { return "-s" + std::to_string(seed); }

void require(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw MissingArtifact(what + " not found: " + p.string() + " (run the producing command first)");
}

envs::TransitionDataset load_dataset(const RunPaths& paths) {
  require(paths.input_dataset(), "dataset");
  return envs::TransitionDataset::parse(read_file(paths.input_dataset()));
}

ghm::GhmModel load_model(const fs::path& p, const std::string& what) {
  require(p, what);
  return ghm::GhmModel::from_checkpoint(flow::read_checkpoint(p));
}

std::string domain_name(const RunConfig& cfg) {
  return cfg.layout.is_string() ? cfg.layout.get<std::string>() : std::string("custom");
}

// One JSON document per line; the first line is the provenance record.
std::string json_lines(const json& head, const std::vector<json>& records) {
  std::string out = json{{"provenance", head}}.dump() + "\n";
  for (const auto& r : records) out += r.dump() + "\n";
  return out;
}

}  // namespace

RunPaths::RunPaths(const RunConfig& cfg, const fs::path& out) : root(out / config_hash(cfg)), hash(config_hash(cfg)), seed(cfg.seed) {}

RunPaths::RunPaths(fs::path run_dir) : root(std::move(run_dir)), hash(root.filename().string()) {}

fs::path RunPaths::dataset() const { return traces() / ("dataset" + suffix(seed) + ".csv"); }
fs::path RunPaths::ghm_checkpoint() const { return checkpoints() / ("ghm" + suffix(seed) + ".ckpt"); }
fs::path RunPaths::world_checkpoint() const { return checkpoints() / ("world" + suffix(seed) + ".ckpt"); }
fs::path RunPaths::gcbc_checkpoint() const { return checkpoints() / ("gcbc" + suffix(seed) + ".ckpt"); }
fs::path RunPaths::ghm_metrics() const { return metrics() / ("train_ghm" + suffix(seed) + ".jsonl"); }
fs::path RunPaths::world_metrics() const { return metrics() / ("train_wm" + suffix(seed) + ".jsonl"); }
fs::path RunPaths::plan_trace(const std::string& method) const {
  return traces() / (method + suffix(seed) + ".csv");
}
fs::path RunPaths::plan_records(const std::string& method) const {
  return traces() / (method + suffix(seed) + ".plans.jsonl");
}
fs::path RunPaths::outcomes(const std::string& method) const {
  return metrics() / ("outcomes-" + method + suffix(seed) + ".csv");
}
fs::path RunPaths::emd_report() const { return metrics() / ("emd" + suffix(seed) + ".json"); }

json provenance(const RunConfig& cfg) {
  return {{"config_hash", config_hash(cfg)}, {"seed", cfg.seed}, {"tool_version", GSPPLAN_VERSION}};
}

RunPaths prepare_run(const RunConfig& cfg, const fs::path& out) {
  RunPaths paths(cfg, out);
  for (const auto& d : {paths.checkpoints(), paths.metrics(), paths.traces(), paths.reports()}) {
    fs::create_directories(d);
  }
  auto canonical = cfg.to_json();
  canonical.erase("seed");
  canonical["plan"].erase("mode");
  write_file_atomic(paths.root / "config.json", canonical.dump(2) + "\n");
  return paths;
}

std::unique_ptr<envs::GoalPolicy> load_repertoire(const RunConfig& cfg, const envs::MazeLayout& layout,
                                                  const RunPaths& paths) {
  if (cfg.repertoire == RepertoireKind::kScripted) {
    return std::make_unique<envs::ScriptedGoalPolicy>(layout, cfg.scripted_repertoire);
  }
  require(paths.gcbc_checkpoint(), "GC-BC checkpoint");
  const auto ckpt = flow::read_checkpoint(paths.gcbc_checkpoint());
  return std::make_unique<envs::GcbcPolicy>(ckpt.arch, ckpt.target, envs::Normalizer::for_layout(layout),
                                            ckpt.meta.at("a_max").get<double>(), ckpt.meta.at("dt").get<double>());
}

void cmd_gen_data(const RunConfig& cfg, const RunPaths& paths) {
  const auto layout = cfg.make_layout();
  const envs::ScriptedGoalPolicy behavior(layout, cfg.behavior);
  auto myopic_cfg = cfg.behavior;
  myopic_cfg.myopic = true;
  const envs::ScriptedGoalPolicy myopic(layout, myopic_cfg);
  auto data = envs::generate_dataset(layout, behavior, cfg.dataset_config(), &myopic);
  data.seed = cfg.seed;
  data.config_hash = paths.hash;
  write_file_atomic(paths.dataset(), data.serialize());
}

void cmd_train_ghm(const RunConfig& cfg, const RunPaths& paths) {
  const auto layout = cfg.make_layout();
  const auto data = load_dataset(paths);
  const auto prov = provenance(cfg);
  if (cfg.repertoire == RepertoireKind::kGcbc) {
    const auto gc = cfg.gcbc_config();
    const auto policy = envs::train_gcbc_policy(data, layout, gc);
    flow::Checkpoint ckpt;
    ckpt.arch = policy.arch();
    ckpt.online = policy.params();
    ckpt.target = policy.params();
    ckpt.step = gc.gradient_steps;
    ckpt.meta = {{"a_max", layout.a_max}, {"dt", gc.dt}, {"provenance", prov}};
    flow::write_checkpoint(paths.gcbc_checkpoint(), ckpt);
  }
  const auto repertoire = load_repertoire(cfg, layout, paths);
  std::vector<json> records;
  auto ckpt = ghm::train_ghm(data, layout, *repertoire, cfg.ghm_config(), [&](const json& r) { records.push_back(r); });
  ckpt.meta["provenance"] = prov;
  flow::write_checkpoint(paths.ghm_checkpoint(), ckpt);
  write_file_atomic(paths.ghm_metrics(), json_lines(prov, records));
}

void cmd_train_wm(const RunConfig& cfg, const RunPaths& paths) {
  const auto layout = cfg.make_layout();
  const auto data = load_dataset(paths);
  const auto prov = provenance(cfg);
  std::vector<json> records;
  auto ckpt = ghm::train_one_step_model(data, layout, cfg.world_model_config(),
                                        [&](const json& r) { records.push_back(r); });
  ckpt.meta["provenance"] = prov;
  flow::write_checkpoint(paths.world_checkpoint(), ckpt);
  write_file_atomic(paths.world_metrics(), json_lines(prov, records));
}

double cmd_plan(const RunConfig& cfg, const RunPaths& paths) {
  const auto layout = cfg.make_layout();
  const auto& task = cfg.find_task(layout);
  const auto method = planner::to_string(cfg.plan.mode);
  const auto repertoire = load_repertoire(cfg, layout, paths);

  std::optional<ghm::GhmModel> ghm_model, world;
  planner::MazeDomain::Models models;
  if (cfg.plan.mode == planner::Mode::kCompPlan || cfg.plan.mode == planner::Mode::kGpi) {
    ghm_model.emplace(load_model(paths.input_ghm(), "GHM checkpoint"));
    models.ghm = &*ghm_model;
  } else if (cfg.plan.mode == planner::Mode::kActionPlan) {
    world.emplace(load_model(paths.input_world(), "world-model checkpoint"));
    if (!world->one_step()) throw ConfigError("plan: actionplan needs a one-step world model checkpoint");
    models.world = &*world;
  }

  const auto prov = provenance(cfg);
  envs::TransitionDataset traces;
  traces.seed = cfg.seed;
  traces.config_hash = paths.hash;
  std::vector<json> records;
  std::vector<eval::EpisodeOutcome> outcomes;
  int successes = 0;
  for (int e = 0; e < cfg.episodes; ++e) {
    const auto tr = planner::run_episode(layout, task, *repertoire, models, cfg.plan, cfg.episode, e, cfg.plan_seed());
    planner::append_trace(traces, tr, e);
    records.push_back({{"episode", e}, {"success", tr.success}, {"steps", tr.steps}, {"plans", tr.plans}});
    outcomes.push_back({domain_name(cfg), task.name, method, cfg.seed, tr.success});
    successes += tr.success;
  }
  traces.finalize();
  write_file_atomic(paths.plan_trace(method), traces.serialize());
  write_file_atomic(paths.plan_records(method), json_lines(prov, records));
  write_file_atomic(paths.outcomes(method), eval::outcomes_csv(outcomes));
  const double rate = cfg.episodes > 0 ? static_cast<double>(successes) / cfg.episodes : 0.0;
  json sidecar = {{"provenance", prov},
                  {"method", method},
                  {"episodes", cfg.episodes},
                  {"successes", successes},
                  {"success_rate", rate},
                  {"plan", cfg.plan.to_json()}};
  auto side = paths.outcomes(method);
  side.replace_extension(".json");
  write_file_atomic(side, sidecar.dump(2) + "\n");
  return rate;
}

json cmd_eval_emd(const RunConfig& cfg, const RunPaths& paths) {
  const auto layout = cfg.make_layout();
  const auto data = load_dataset(paths);
  const auto model = load_model(paths.input_ghm(), "GHM checkpoint");
  if (model.one_step()) throw ConfigError("eval-emd: needs a horizon-conditioned GHM checkpoint");
  const auto repertoire = load_repertoire(cfg, layout, paths);
  Rng rng = make_rng(cfg.eval_seed(), 0);
  const auto pairs = eval::make_eval_pairs(data, *repertoire, cfg.eval.n_start_pairs, rng);
  json results = json::array();
  for (std::size_t i = 0; i < cfg.eval.gammas.size(); ++i) {
    const double g = cfg.eval.gammas[i];
    const auto r = eval::ghm_fidelity(model, layout, *repertoire, pairs, g, cfg.eval, derive_seed(cfg.eval_seed(), i + 1));
    results.push_back({{"gamma", g},
                       {"mean_model", r.mean_model},
                       {"mean_prior", r.mean_prior},
                       {"prior_over_model", r.mean_prior / r.mean_model},
                       {"median_model", r.median_model},
                       {"exact", r.exact},
                       {"emd_model", r.emd_model},
                       {"emd_prior", r.emd_prior},
                       {"model_sample_sha256", r.model_sample_hash},
                       {"truth_sample_sha256", r.truth_sample_hash}});
  }
  json report = {{"provenance", provenance(cfg)},
                 {"pairs", cfg.eval.n_start_pairs},
                 {"rollouts_per_pair", cfg.eval.rollouts_per_pair},
                 {"resampled_states", cfg.eval.n_resampled_states},
                 {"results", results}};
  write_file_atomic(paths.emd_report(), report.dump(2) + "\n");
  return report;
}

json cmd_report(const std::vector<fs::path>& run_dirs, const ReportOptions& opt) {
  if (run_dirs.empty()) throw ConfigError("report: no run directory");
  std::vector<eval::EpisodeOutcome> outcomes;
  std::set<std::string> hashes;
  std::vector<fs::path> sidecars, emd_files;
  for (const auto& dir : run_dirs) {
    const RunPaths p(dir);
    if (!fs::exists(p.metrics())) throw MissingArtifact("report: no metrics directory in " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(p.metrics())) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      const auto name = f.filename().string();
      if (name.rfind("outcomes-", 0) == 0 && f.extension() == ".json") sidecars.push_back(f);
      if (name.rfind("emd-", 0) == 0 && f.extension() == ".json") emd_files.push_back(f);
    }
  }
  if (sidecars.empty() && emd_files.empty()) throw MissingArtifact("report: no outcomes or EMD files to aggregate");

  std::map<std::string, std::map<std::string, json>> emd_by_gamma;  // gamma -> "hash/seed" -> result
  for (const auto& f : sidecars) {
    const auto side = json::parse(read_file(f));
    hashes.insert(side.at("provenance").at("config_hash").get<std::string>());
    auto csv = f;
    csv.replace_extension(".csv");
    require(csv, "outcomes file");
    for (auto& o : eval::parse_outcomes_csv(read_file(csv))) outcomes.push_back(std::move(o));
  }
  json emd = json::array();
  for (const auto& f : emd_files) {
    const auto rep = json::parse(read_file(f));
    const auto& prov = rep.at("provenance");
    hashes.insert(prov.at("config_hash").get<std::string>());
    for (const auto& r : rep.at("results")) {
      emd.push_back({{"seed", prov.at("seed")},
                     {"config_hash", prov.at("config_hash")},
                     {"gamma", r.at("gamma")},
                     {"mean_model", r.at("mean_model")},
                     {"mean_prior", r.at("mean_prior")},
                     {"median_model", r.at("median_model")}});
    }
  }
  if (hashes.size() > 1 && !opt.allow_mismatch) {
    std::string list;
    for (const auto& h : hashes) list += " " + h;
    throw ConfigError("report: inputs carry different config hashes:" + list + " (pass --allow-mismatch to aggregate)");
  }

  const auto rows = eval::success_table(outcomes);
  json table = json::array();
  std::map<std::string, double> zero_shot;
  for (const auto& r : rows) {
    if (r.method == "zeroshot") zero_shot[r.domain + "/" + r.task] = r.mean;
  }
  for (const auto& r : rows) {
    json row = {{"domain", r.domain}, {"task", r.task},   {"method", r.method},
                {"seeds", r.n_seeds},  {"mean", r.mean},   {"std", r.std},
                {"episodes", r.n_episodes}};
    const auto it = zero_shot.find(r.domain + "/" + r.task);
    if (it != zero_shot.end()) row["delta_vs_zeroshot_pp"] = 100.0 * (r.mean - it->second);
    table.push_back(row);
  }

  std::map<double, std::vector<double>> by_gamma_model, by_gamma_prior;
  for (const auto& e : emd) {
    by_gamma_model[e.at("gamma").get<double>()].push_back(e.at("mean_model").get<double>());
    by_gamma_prior[e.at("gamma").get<double>()].push_back(e.at("mean_prior").get<double>());
  }
  json curve = json::array();
  for (const auto& [g, v] : by_gamma_model) {
    curve.push_back({{"gamma", g},
                     {"seeds", v.size()},
                     {"median_emd_model", eval::median(v)},
                     {"median_emd_prior", eval::median(by_gamma_prior[g])}});
  }

  json summary = {{"config_hashes", std::vector<std::string>(hashes.begin(), hashes.end())},
                  {"tool_version", GSPPLAN_VERSION},
                  {"success", table},
                  {"emd", emd},
                  {"emd_curve", curve}};
  const RunPaths out(run_dirs.front());
  fs::create_directories(out.reports());
  write_file_atomic(out.reports() / "success.csv", eval::outcomes_csv(outcomes));
  write_file_atomic(out.reports() / "success.json", eval::success_json(rows).dump(2) + "\n");
  write_file_atomic(out.reports() / "summary.json", summary.dump(2) + "\n");
  return summary;
}

void log_timing(const RunPaths& paths, const std::string& command, double seconds) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
  fs::create_directories(paths.root);
  std::ofstream f(paths.timing_log(), std::ios::app);
  f << command << " seed=" << paths.seed << " wall_s=" << seconds << " utc=" << stamp << "\n";
}

}  // namespace gspplan::pipeline
