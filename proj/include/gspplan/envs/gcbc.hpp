#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "gspplan/envs/dataset.hpp"
#include "gspplan/envs/normalizer.hpp"
#include "gspplan/envs/policy.hpp"
#include "gspplan/flow/architecture.hpp"
#include "gspplan/flow/optim.hpp"
#include "gspplan/flow/vector_field.hpp"

namespace gspplan::envs {

struct GcbcConfig {
  int hidden = 128;
  int blocks = 2;
  int gradient_steps = 5000;
  int batch_size = 128;
  flow::AdamConfig adam{3e-4, 0.9, 0.999, 1e-8};
  double dt = 0.1;
  GoalSampleConfig goals;
  std::uint64_t seed = 0;
};

// Goal-conditioned behavior cloning with a flow-matching action sampler
// v(t, a_t | s, g): x_0 ~ N(0, I), a_t = (1 - t) x_0 + t a, target a - x_0,
// all in normalized coordinates.
class GcbcPolicy final : public GoalPolicy {
 public:
  GcbcPolicy(flow::Architecture arch, flow::ParamVector params, Normalizer norm, double a_max, double dt);

  Eigen::Vector2d act(const ContinuousState& state, const Eigen::Vector2d& goal, Rng& rng) const override;
  // Action obtained by integrating from a given noise vector (normalized units), before clipping.
  Eigen::Vector2d act_from_noise(const ContinuousState& state, const Eigen::Vector2d& goal,
                                 const Eigen::Vector2d& noise) const;

  const flow::ParamVector& params() const { return params_; }
  const flow::Architecture& arch() const { return field_.arch(); }

 private:
  flow::VectorField<float> field_;
  flow::ParamVector params_;
  Normalizer norm_;
  double a_max_;
  double dt_;
};

flow::Architecture gcbc_architecture(const GcbcConfig& cfg);

// Assembles one GC-BC regression batch (exposed for tests).
flow::RegressionBatch<float> gcbc_batch(const TransitionDataset& data, const Normalizer& norm,
                                        const flow::Architecture& arch, const GcbcConfig& cfg, int batch, Rng& rng);

// Progress callback receives (step, loss) after every gradient step.
GcbcPolicy train_gcbc_policy(const TransitionDataset& data, const MazeLayout& layout, const GcbcConfig& cfg,
                             const std::function<void(int, double)>& on_step = {});

}  // namespace gspplan::envs
