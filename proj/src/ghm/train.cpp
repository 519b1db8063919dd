#include "gspplan/ghm/train.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "gspplan/common/errors.hpp"
#include "gspplan/envs/point_mass.hpp"

namespace gspplan::ghm {

void GhmTrainConfig::validate() const {
  if (!(gamma_max >= 0.0 && gamma_max < 1.0)) throw ConfigError("ghm: gamma_max must lie in [0, 1)");
  if (batch_size < 1 || gradient_steps < 0 || log_every < 1) throw ConfigError("ghm: batch_size, gradient_steps, log_every");
  if (!(consistency_proportion >= 0.0 && consistency_proportion <= 1.0) ||
      !(uncond_drop_probability >= 0.0 && uncond_drop_probability <= 1.0)) {
    throw ConfigError("ghm: proportions must lie in [0, 1]");
  }
  if (consistency_proportion + uncond_drop_probability > 1.0 + 1e-12) {
    throw ConfigError("ghm: consistency_proportion + uncond_drop_probability must not exceed 1");
  }
  if (!(gamma_min >= 0.0 && gamma_min <= gamma_max)) throw ConfigError("ghm: gamma_min must lie in [0, gamma_max]");
  if (!(ema_zeta >= 0.0 && ema_zeta <= 1.0)) throw ConfigError("ghm: ema_zeta must lie in [0, 1]");
  if (!(adam.lr > 0.0)) throw ConfigError("ghm: learning rate must be positive");
  try {
    flow::euler_steps(train_dt);
    flow::euler_steps(eval_dt);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("ghm: ") + e.what());
  }
  goals.validate();
  ghm_architecture(*this).validate();
}

nlohmann::json GhmTrainConfig::to_json() const {
  return {{"gamma_max", gamma_max},
          {"batch_size", batch_size},
          {"gradient_steps", gradient_steps},
          {"consistency_proportion", consistency_proportion},
          {"uncond_drop_probability", uncond_drop_probability},
          {"gamma_min", gamma_min},
          {"ema_zeta", ema_zeta},
          {"lr", adam.lr},
          {"adam_beta1", adam.beta1},
          {"adam_beta2", adam.beta2},
          {"adam_eps", adam.eps},
          {"train_dt", train_dt},
          {"eval_dt", eval_dt},
          {"mask_action_uncond", mask_action_uncond},
          {"goals",
           {{"p_trajectory_goal", goals.p_trajectory_goal},
            {"p_random_goal", goals.p_random_goal},
            {"trajectory_discount", goals.trajectory_discount},
            {"p_next_state", goals.p_next_state}}},
          {"hidden", hidden},
          {"blocks", blocks},
          {"embed_dim", embed_dim},
          {"mixing", mixing == flow::Mixing::kFilm ? "film" : "additive"},
          {"one_step", one_step},
          {"log_every", log_every},
          {"seed", seed}};
}

GhmTrainConfig GhmTrainConfig::from_json(const nlohmann::json& j) {
  GhmTrainConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("gamma_max", c.gamma_max);
  get("batch_size", c.batch_size);
  get("gradient_steps", c.gradient_steps);
  get("consistency_proportion", c.consistency_proportion);
  get("uncond_drop_probability", c.uncond_drop_probability);
  get("gamma_min", c.gamma_min);
  get("ema_zeta", c.ema_zeta);
  get("lr", c.adam.lr);
  get("adam_beta1", c.adam.beta1);
  get("adam_beta2", c.adam.beta2);
  get("adam_eps", c.adam.eps);
  get("train_dt", c.train_dt);
  get("eval_dt", c.eval_dt);
  get("mask_action_uncond", c.mask_action_uncond);
  if (j.contains("goals")) {
    const auto& g = j.at("goals");
    auto gget = [&](const char* key, double& field) {
      if (g.contains(key)) field = g.at(key).get<double>();
    };
    gget("p_trajectory_goal", c.goals.p_trajectory_goal);
    gget("p_random_goal", c.goals.p_random_goal);
    gget("trajectory_discount", c.goals.trajectory_discount);
    gget("p_next_state", c.goals.p_next_state);
  }
  get("hidden", c.hidden);
  get("blocks", c.blocks);
  get("embed_dim", c.embed_dim);
  if (j.contains("mixing")) {
    const auto m = j.at("mixing").get<std::string>();
    if (m == "film") {
      c.mixing = flow::Mixing::kFilm;
    } else if (m == "additive") {
      c.mixing = flow::Mixing::kAdditive;
    } else {
      throw ConfigError("ghm: unknown mixing '" + m + "'");
    }
  }
  get("one_step", c.one_step);
  get("log_every", c.log_every);
  get("seed", c.seed);
  return c;
}

flow::Architecture ghm_architecture(const GhmTrainConfig& cfg) {
  flow::Architecture a;
  a.x_dim = 4;
  a.state_dim = 4;
  a.action_dim = 2;
  a.z_dim = cfg.one_step ? 0 : 4;
  a.use_gamma = !cfg.one_step;
  a.hidden = cfg.hidden;
  a.blocks = cfg.blocks;
  a.embed_dim = cfg.embed_dim;
  a.mixing = cfg.mixing;
  return a;
}

RowSplit row_split(int batch_size, double consistency_proportion, double uncond_drop_probability) {
  RowSplit s;
  s.consistency = std::min(batch_size, static_cast<int>(std::ceil(batch_size * consistency_proportion - 1e-9)));
  s.unconditional =
      std::min(batch_size - s.consistency, static_cast<int>(std::lround(batch_size * uncond_drop_probability)));
  return s;
}

GhmTrainer::GhmTrainer(const envs::TransitionDataset& data, const envs::MazeLayout& layout,
                       const envs::GoalPolicy* repertoire, GhmTrainConfig cfg)
    : data_(&data),
      layout_(&layout),
      repertoire_(repertoire),
      cfg_(cfg),
      norm_(envs::Normalizer::for_layout(layout)),
      field_(ghm_architecture(cfg)),
      rng_(make_rng(cfg.seed, 1)) {
  cfg_.validate();
  if (data.empty()) throw std::invalid_argument("train_ghm: empty dataset");
  if (!cfg_.one_step && repertoire_ == nullptr) throw std::invalid_argument("train_ghm: policy repertoire required");
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.has_next(i)) rows_with_next_.push_back(i);
  }
  if (rows_with_next_.empty()) throw std::invalid_argument("train_ghm: no transition has a successor record");
  online_.resize(field_.param_count());
  Rng init = make_rng(cfg_.seed, 0);
  field_.init_params(online_, init);
  target_ = online_;
  grad_.resize(online_.size());
  opt_ = flow::OptState<float>(online_.size(), cfg_.adam, cfg_.ema_zeta);
}

std::vector<TdRow> GhmTrainer::sample_rows() {
  const int K = cfg_.batch_size;
  const auto split = row_split(K, cfg_.consistency_proportion, cfg_.uncond_drop_probability);
  std::vector<TdRow> rows(static_cast<std::size_t>(K));
  const auto n_idx = static_cast<double>(rows_with_next_.size());
  for (int k = 0; k < K; ++k) {
    auto& row = rows[static_cast<std::size_t>(k)];
    const auto pick = std::min(static_cast<std::size_t>(uniform01(rng_) * n_idx), rows_with_next_.size() - 1);
    const std::size_t i = rows_with_next_[pick];
    const auto& tr = (*data_)[i];
    row.state = norm_.state(tr.state).cast<float>();
    row.action = norm_.action(tr.action).cast<float>();
    row.next_state = norm_.state(tr.next_state).cast<float>();
    if (cfg_.one_step) continue;
    row.gamma = static_cast<float>(uniform01(rng_) * cfg_.gamma_max);
    if (k < split.consistency) {
      row.consistency = true;
      const double lo = std::min(cfg_.gamma_min, static_cast<double>(row.gamma));
      row.beta = static_cast<float>(lo + uniform01(rng_) * (row.gamma - lo));
      row.beta = std::min(row.beta, row.gamma);
    }
    if (k >= split.consistency && k < split.consistency + split.unconditional) {
      row.mask_z = true;
      row.mask_action = cfg_.mask_action_uncond;
      row.next_action = norm_.action((*data_)[i + 1].action).cast<float>();
      continue;
    }
    Eigen::Vector4d goal = envs::sample_goal(*data_, i, cfg_.goals, rng_);
    goal.tail<2>().setZero();  // policies read only the goal position
    row.z = norm_.state(goal).cast<float>();
    row.next_action =
        norm_.action(repertoire_->act(envs::ContinuousState::unpack(tr.next_state), goal.head<2>(), rng_)).cast<float>();
  }
  return rows;
}

LossSpec GhmTrainer::loss_spec(const std::vector<TdRow>& rows) {
  if (cfg_.one_step) return one_step_terms(field_.arch(), rows, rng_);
  const NextActionFn next_action = [this](const Eigen::Vector4f& s_plus, const TdRow& row, Rng& rng) {
    const Eigen::Vector4d s = norm_.state_inverse(s_plus.cast<double>());
    const Eigen::Vector2d goal = norm_.state_inverse(row.z.cast<double>()).head<2>();
    return Eigen::Vector2f(norm_.action(repertoire_->act(envs::ContinuousState::unpack(s), goal, rng)).cast<float>());
  };
  return build_loss_spec(field_, target_, rows, cfg_.gamma_max, next_action, cfg_.train_dt, rng_);
}

StepStats GhmTrainer::step() {
  const auto rows = sample_rows();
  const auto spec = loss_spec(rows);
  flow::Vec<float> sq;
  const float loss = field_.loss_grad(online_, spec.batch, grad_, &sq);
  if (!std::isfinite(loss)) {
    throw NumericError("train_ghm: non-finite loss at step " + std::to_string(opt_.step));
  }
  for (float g : grad_) {
    if (!std::isfinite(g)) throw NumericError("train_ghm: non-finite gradient at step " + std::to_string(opt_.step));
  }
  flow::adam_step<float>(online_, grad_, opt_);
  flow::ema_update<float>(target_, online_, cfg_.ema_zeta);

  StepStats s;
  s.step = opt_.step;
  s.loss = loss;
  for (std::size_t e = 0; e < spec.term.size(); ++e) {
    const auto k = static_cast<std::size_t>(spec.term[e]);
    s.term_sq_err[k] += sq(static_cast<Eigen::Index>(e));
    s.coefficient_mean[k] += spec.batch.weight(static_cast<Eigen::Index>(e));
    ++s.term_count[k];
  }
  for (std::size_t k = 0; k < 3; ++k) {
    if (s.term_count[k] > 0) {
      s.term_sq_err[k] /= s.term_count[k];
      s.coefficient_mean[k] /= s.term_count[k];
    }
  }
  return s;
}

flow::Checkpoint GhmTrainer::checkpoint() const {
  flow::Checkpoint c;
  c.arch = field_.arch();
  c.meta = {{"normalizer", normalizer_to_json(norm_)},
            {"gamma_max", cfg_.gamma_max},
            {"eval_dt", cfg_.eval_dt},
            {"train_config", cfg_.to_json()},
            {"dataset_records", data_->size()},
            {"dataset_hash", data_->config_hash}};
  c.step = opt_.step;
  c.rng_state = rng_state_string(rng_);
  c.online = online_;
  c.target = target_;
  return c;
}

GhmModel GhmTrainer::model() const {
  return GhmModel(field_.arch(), norm_, target_, cfg_.gamma_max, cfg_.eval_dt);
}

nlohmann::json metrics_record(const std::vector<StepStats>& window) {
  if (window.empty()) throw std::invalid_argument("metrics_record: empty window");
  static constexpr const char* kNames[3] = {"one_step", "bootstrap", "gamma_bootstrap"};
  double loss = 0.0;
  std::array<double, 3> err{}, coef{};
  std::array<int, 3> n{};
  for (const auto& s : window) {
    loss += s.loss;
    for (std::size_t k = 0; k < 3; ++k) {
      if (s.term_count[k] == 0) continue;
      err[k] += s.term_sq_err[k];
      coef[k] += s.coefficient_mean[k];
      ++n[k];
    }
  }
  nlohmann::json rec = {{"step", window.back().step}, {"loss", loss / static_cast<double>(window.size())}};
  nlohmann::json terms = nlohmann::json::object(), coefs = nlohmann::json::object();
  for (std::size_t k = 0; k < 3; ++k) {
    if (n[k] == 0) continue;
    terms[kNames[k]] = err[k] / n[k];
    coefs[kNames[k]] = coef[k] / n[k];
  }
  rec["term_loss"] = terms;
  rec["coefficient_mean"] = coefs;
  return rec;
}

namespace {

flow::Checkpoint run(GhmTrainer& trainer, const std::function<void(const nlohmann::json&)>& on_log) {
  const auto& cfg = trainer.config();
  std::vector<StepStats> window;
  for (int i = 0; i < cfg.gradient_steps; ++i) {
    window.push_back(trainer.step());
    if (static_cast<int>(window.size()) == cfg.log_every || i + 1 == cfg.gradient_steps) {
      if (on_log) on_log(metrics_record(window));
      window.clear();
    }
  }
  return trainer.checkpoint();
}

}  // namespace

flow::Checkpoint train_ghm(const envs::TransitionDataset& data, const envs::MazeLayout& layout,
                           const envs::GoalPolicy& repertoire, const GhmTrainConfig& cfg,
                           const std::function<void(const nlohmann::json&)>& on_log) {
  GhmTrainer trainer(data, layout, &repertoire, cfg);
  return run(trainer, on_log);
}

flow::Checkpoint train_one_step_model(const envs::TransitionDataset& data, const envs::MazeLayout& layout,
                                      GhmTrainConfig cfg, const std::function<void(const nlohmann::json&)>& on_log) {
  cfg.one_step = true;
  GhmTrainer trainer(data, layout, nullptr, cfg);
  return run(trainer, on_log);
}

}  // namespace gspplan::ghm
