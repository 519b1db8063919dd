#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include <json.hpp>

#include "gspplan/envs/dataset.hpp"
#include "gspplan/envs/maze.hpp"
#include "gspplan/envs/normalizer.hpp"
#include "gspplan/envs/policy.hpp"
#include "gspplan/flow/checkpoint.hpp"
#include "gspplan/flow/optim.hpp"
#include "gspplan/flow/vector_field.hpp"
#include "gspplan/ghm/model.hpp"
#include "gspplan/ghm/terms.hpp"

namespace gspplan::ghm {

struct GhmTrainConfig {
  double gamma_max = 0.996;
  int batch_size = 256;
  int gradient_steps = 20000;
  double consistency_proportion = 0.25;
  double uncond_drop_probability = 0.1;
  double gamma_min = 0.0;  // beta ~ U[min(gamma_min, gamma), gamma]
  double ema_zeta = 0.9995;
  flow::AdamConfig adam{1e-4, 0.9, 0.999, 1e-8};
  double train_dt = 0.1;  // Euler step for target rollouts inside the loss
  double eval_dt = 0.05;  // Euler step stored with the model for sampling
  bool mask_action_uncond = true;
  envs::GoalSampleConfig goals;
  int hidden = 256;
  int blocks = 3;
  int embed_dim = 64;
  flow::Mixing mixing = flow::Mixing::kFilm;
  bool one_step = false;  // world model: no z / gamma conditioning, plain flow matching on S'
  int log_every = 500;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  // Missing keys keep their defaults.
  static GhmTrainConfig from_json(const nlohmann::json& j);
};

flow::Architecture ghm_architecture(const GhmTrainConfig& cfg);

// Row counts for one mini-batch of size k: ceil(k * tau_c) consistency rows
// first, then round(k * p_uncond) unconditional rows.
struct RowSplit {
  int consistency = 0;
  int unconditional = 0;
};
RowSplit row_split(int batch_size, double consistency_proportion, double uncond_drop_probability);

struct StepStats {
  std::int64_t step = 0;
  double loss = 0.0;
  std::array<double, 3> term_sq_err{};  // unweighted mean squared error per Term
  std::array<int, 3> term_count{};
  std::array<double, 3> coefficient_mean{};  // mean weight per Term over the rows that carry it
};

// Sequential Algorithm-1 loop. step() draws one mini-batch, takes one Adam
// step on the online parameters and one EMA update of the target parameters.
// On a non-finite loss it throws NumericError before touching the parameters.
class GhmTrainer {
 public:
  // The repertoire supplies A' ~ pi_z(S') with z a goal state at rest; it is unused
  // when cfg.one_step is set. data, layout and repertoire must outlive the trainer.
  GhmTrainer(const envs::TransitionDataset& data, const envs::MazeLayout& layout, const envs::GoalPolicy* repertoire,
             GhmTrainConfig cfg);

  StepStats step();
  std::int64_t steps_done() const { return opt_.step; }
  const GhmTrainConfig& config() const { return cfg_; }
  const flow::VectorField<float>& field() const { return field_; }
  const flow::ParamVector& online() const { return online_; }
  const flow::ParamVector& target() const { return target_; }
  const envs::Normalizer& normalizer() const { return norm_; }

  // Rows of the next mini-batch (exposed for tests; consumes the batch RNG).
  std::vector<TdRow> sample_rows();
  LossSpec loss_spec(const std::vector<TdRow>& rows);

  flow::Checkpoint checkpoint() const;
  GhmModel model() const;

 private:
  const envs::TransitionDataset* data_;
  const envs::MazeLayout* layout_;
  const envs::GoalPolicy* repertoire_;
  GhmTrainConfig cfg_;
  envs::Normalizer norm_;
  flow::VectorField<float> field_;
  flow::ParamVector online_, target_, grad_;
  flow::OptState<float> opt_;
  std::vector<std::size_t> rows_with_next_;
  Rng rng_;
};

// Mean of StepStats over one logging interval, as one JSON-lines record.
nlohmann::json metrics_record(const std::vector<StepStats>& window);

// Runs cfg.gradient_steps steps; on_log receives one record per log interval
// (and one for a trailing partial interval).
flow::Checkpoint train_ghm(const envs::TransitionDataset& data, const envs::MazeLayout& layout,
                           const envs::GoalPolicy& repertoire, const GhmTrainConfig& cfg,
                           const std::function<void(const nlohmann::json&)>& on_log = {});

flow::Checkpoint train_one_step_model(const envs::TransitionDataset& data, const envs::MazeLayout& layout,
                                      GhmTrainConfig cfg, const std::function<void(const nlohmann::json&)>& on_log = {});

}  // namespace gspplan::ghm
