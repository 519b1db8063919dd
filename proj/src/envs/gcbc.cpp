#include "gspplan/envs/gcbc.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "gspplan/common/errors.hpp"

namespace gspplan::envs {

flow::Architecture gcbc_architecture(const GcbcConfig& cfg) {
  flow::Architecture a;
  a.x_dim = 2;
  a.state_dim = 4;
  a.action_dim = 0;
  a.z_dim = 2;
  a.use_gamma = false;
  a.hidden = cfg.hidden;
  a.blocks = cfg.blocks;
  a.embed_dim = 32;
  return a;
}

GcbcPolicy::GcbcPolicy(flow::Architecture arch, flow::ParamVector params, Normalizer norm, double a_max, double dt)
    : field_(arch), params_(std::move(params)), norm_(norm), a_max_(a_max), dt_(dt) {
  if (params_.size() != field_.param_count()) throw std::invalid_argument("GcbcPolicy: parameter count mismatch");
  flow::euler_steps(dt);
}

Eigen::Vector2d GcbcPolicy::act_from_noise(const ContinuousState& state, const Eigen::Vector2d& goal,
                                           const Eigen::Vector2d& noise) const {
  flow::CondBatch<float> c;
  c.resize(field_.arch(), 1);
  c.state.col(0) = norm_.state(state.packed()).cast<float>();
  c.z.col(0) = norm_.pos(goal).cast<float>();
  const flow::Mat<float> ctx = field_.context(params_, c);
  const flow::Mat<float> x0 = noise.cast<float>();
  const flow::Mat<float> a = field_.integrate(params_, x0, ctx, dt_);
  return norm_.action_inverse(a.col(0).cast<double>());
}

Eigen::Vector2d GcbcPolicy::act(const ContinuousState& state, const Eigen::Vector2d& goal, Rng& rng) const {
  const Eigen::Vector2d noise(standard_normal(rng), standard_normal(rng));
  return clip_norm(act_from_noise(state, goal, noise), a_max_);
}

flow::RegressionBatch<float> gcbc_batch(const TransitionDataset& data, const Normalizer& norm,
                                        const flow::Architecture& arch, const GcbcConfig& cfg, int batch, Rng& rng) {
  flow::RegressionBatch<float> b;
  b.x.resize(2, batch);
  b.target.resize(2, batch);
  b.t.resize(batch);
  b.weight = flow::Vec<float>::Ones(batch);
  b.cond.resize(arch, batch);
  b.num_groups = batch;
  for (int j = 0; j < batch; ++j) {
    const auto i = std::min(static_cast<std::size_t>(uniform01(rng) * static_cast<double>(data.size())), data.size() - 1);
    const auto& r = data[i];
    const Eigen::Vector4d goal = sample_goal(data, i, cfg.goals, rng);
    const Eigen::Vector2d a = norm.action(r.action);
    const Eigen::Vector2d x0(standard_normal(rng), standard_normal(rng));
    const double t = uniform01(rng);
    b.x.col(j) = ((1 - t) * x0 + t * a).cast<float>();
    b.target.col(j) = (a - x0).cast<float>();
    b.t(j) = static_cast<float>(t);
    b.cond.state.col(j) = norm.state(r.state).cast<float>();
    b.cond.z.col(j) = norm.pos(goal.head<2>()).cast<float>();
  }
  return b;
}

GcbcPolicy train_gcbc_policy(const TransitionDataset& data, const MazeLayout& layout, const GcbcConfig& cfg,
                             const std::function<void(int, double)>& on_step) {
  if (data.empty()) throw std::invalid_argument("train_gcbc_policy: empty dataset");
  cfg.goals.validate();
  const auto arch = gcbc_architecture(cfg);
  const auto norm = Normalizer::for_layout(layout);
  flow::VectorField<float> field(arch);
  Rng rng = make_rng(cfg.seed, 0);
  flow::ParamVector params(field.param_count());
  field.init_params(params, rng);
  flow::OptState<float> opt(params.size(), cfg.adam, 0.0);
  flow::ParamVector grad(params.size());
  for (int step = 0; step < cfg.gradient_steps; ++step) {
    const auto batch = gcbc_batch(data, norm, arch, cfg, cfg.batch_size, rng);
    const float loss = field.loss_grad(params, batch, grad);
    if (!std::isfinite(loss)) {
      throw NumericError("train_gcbc_policy: non-finite loss at step " + std::to_string(step));
    }
    flow::adam_step<float>(params, grad, opt);
    if (on_step) on_step(step, loss);
  }
  return GcbcPolicy(arch, std::move(params), norm, layout.a_max, cfg.dt);
}

}  // namespace gspplan::envs
