#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "gspplan/common/rng.hpp"
#include "gspplan/envs/normalizer.hpp"
#include "gspplan/flow/checkpoint.hpp"
#include "gspplan/flow/vector_field.hpp"

namespace gspplan::ghm {

// One conditional sampling request in raw maze coordinates.
struct GhmQuery {
  Eigen::Vector4d state = Eigen::Vector4d::Zero();
  Eigen::Vector2d action = Eigen::Vector2d::Zero();
  Eigen::Vector4d z = Eigen::Vector4d::Zero();  // policy embedding: a goal state
  bool mask_z = false;
  bool mask_action = false;
  double gamma = 0.0;
};

// A trained flow-matching sampler of successor states. With z and gamma
// conditioning it is a geometric horizon model; with neither it is a one-step
// world model p(s' | s, a). Sampling uses the target (EMA) parameters.
class GhmModel {
 public:
  GhmModel(flow::Architecture arch, envs::Normalizer norm, flow::ParamVector params, double gamma_max,
           double eval_dt);

  static GhmModel from_checkpoint(const flow::Checkpoint& ckpt);

  const flow::Architecture& arch() const { return field_.arch(); }
  const envs::Normalizer& normalizer() const { return norm_; }
  double gamma_max() const { return gamma_max_; }
  double eval_dt() const { return eval_dt_; }
  const flow::ParamVector& params() const { return params_; }
  bool one_step() const { return !field_.arch().use_gamma; }

  // Pushes standard-normal noise (4 x n, normalized space) through the flow
  // for each query; returns raw states (4 x n).
  Eigen::Matrix4Xd sample(const std::vector<GhmQuery>& queries, const Eigen::Matrix4Xd& noise) const;
  // Same with an explicit Euler step.
  Eigen::Matrix4Xd sample(const std::vector<GhmQuery>& queries, const Eigen::Matrix4Xd& noise, double dt) const;

 private:
  flow::VectorField<float> field_;
  envs::Normalizer norm_;
  flow::ParamVector params_;
  double gamma_max_;
  double eval_dt_;
};

Eigen::Matrix4Xd draw_noise(int n, Rng& rng);

// n independent successor-state draws for one (s, a, z, gamma); z = nullopt
// selects the unconditional (behavior-policy) model, masking the action too
// when mask_action is set.
std::vector<Eigen::Vector4d> sample_ghm(const GhmModel& model, const Eigen::Vector4d& state,
                                        const Eigen::Vector2d& action, const std::optional<Eigen::Vector4d>& z,
                                        double gamma, int n, Rng& rng, bool mask_action = true);

nlohmann::json normalizer_to_json(const envs::Normalizer& n);
envs::Normalizer normalizer_from_json(const nlohmann::json& j);

}  // namespace gspplan::ghm
