#include "gspplan/ghm/model.hpp"

#include <stdexcept>

namespace gspplan::ghm {

GhmModel::GhmModel(flow::Architecture arch, envs::Normalizer norm, flow::ParamVector params, double gamma_max,
                   double eval_dt)
    : field_(arch), norm_(norm), params_(std::move(params)), gamma_max_(gamma_max), eval_dt_(eval_dt) {
  if (params_.size() != field_.param_count()) throw std::invalid_argument("GhmModel: parameter count mismatch");
  if (arch.x_dim != 4 || arch.state_dim != 4 || arch.action_dim != 2 || (arch.z_dim != 0 && arch.z_dim != 4)) {
    throw std::invalid_argument("GhmModel: architecture does not match the point-mass state/action layout");
  }
  flow::euler_steps(eval_dt);
}

GhmModel GhmModel::from_checkpoint(const flow::Checkpoint& ckpt) {
  const auto& m = ckpt.meta;
  return GhmModel(ckpt.arch, normalizer_from_json(m.at("normalizer")), ckpt.target, m.at("gamma_max").get<double>(),
                  m.at("eval_dt").get<double>());
}

Eigen::Matrix4Xd GhmModel::sample(const std::vector<GhmQuery>& queries, const Eigen::Matrix4Xd& noise) const {
  return sample(queries, noise, eval_dt_);
}

Eigen::Matrix4Xd GhmModel::sample(const std::vector<GhmQuery>& queries, const Eigen::Matrix4Xd& noise,
                                  double dt) const {
  const auto n = static_cast<Eigen::Index>(queries.size());
  if (noise.cols() != n) throw std::invalid_argument("GhmModel::sample: noise/query count mismatch");
  if (n == 0) return Eigen::Matrix4Xd(4, 0);
  const auto& arch = field_.arch();
  flow::CondBatch<float> c;
  c.resize(arch, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& q = queries[static_cast<std::size_t>(j)];
    if (arch.use_gamma && !(q.gamma >= 0.0 && q.gamma <= gamma_max_)) {
      throw std::invalid_argument("GhmModel::sample: gamma outside [0, gamma_max]");
    }
    c.state.col(j) = norm_.state(q.state).cast<float>();
    c.action.col(j) = norm_.action(q.action).cast<float>();
    c.mask_action[static_cast<std::size_t>(j)] = q.mask_action;
    if (arch.z_dim > 0) {
      c.z.col(j) = norm_.state(q.z).cast<float>();
      c.mask_z[static_cast<std::size_t>(j)] = q.mask_z;
    }
    if (arch.use_gamma) c.gamma(j) = static_cast<float>(q.gamma);
  }
  const flow::Mat<float> ctx = field_.context(params_, c);
  const flow::Mat<float> x1 = field_.integrate(params_, noise.cast<float>(), ctx, dt);
  Eigen::Matrix4Xd out(4, n);
  for (Eigen::Index j = 0; j < n; ++j) out.col(j) = norm_.state_inverse(x1.col(j).cast<double>());
  return out;
}

Eigen::Matrix4Xd draw_noise(int n, Rng& rng) {
  Eigen::Matrix4Xd x(4, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < 4; ++i) x(i, j) = standard_normal(rng);
  }
  return x;
}

std::vector<Eigen::Vector4d> sample_ghm(const GhmModel& model, const Eigen::Vector4d& state,
                                        const Eigen::Vector2d& action, const std::optional<Eigen::Vector4d>& z,
                                        double gamma, int n, Rng& rng, bool mask_action) {
  if (n < 0) throw std::invalid_argument("sample_ghm: n must be >= 0");
  GhmQuery q;
  q.state = state;
  q.action = action;
  q.gamma = gamma;
  if (z) {
    q.z = *z;
  } else {
    q.mask_z = true;
    q.mask_action = mask_action;
  }
  const std::vector<GhmQuery> queries(static_cast<std::size_t>(n), q);
  const Eigen::Matrix4Xd out = model.sample(queries, draw_noise(n, rng));
  std::vector<Eigen::Vector4d> v(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) v[static_cast<std::size_t>(j)] = out.col(j);
  return v;
}

nlohmann::json normalizer_to_json(const envs::Normalizer& n) {
  return {{"center", {n.center.x(), n.center.y()}},
          {"pos_scale", n.pos_scale},
          {"vel_scale", n.vel_scale},
          {"act_scale", n.act_scale}};
}

envs::Normalizer normalizer_from_json(const nlohmann::json& j) {
  envs::Normalizer n;
  n.center = {j.at("center").at(0).get<double>(), j.at("center").at(1).get<double>()};
  n.pos_scale = j.at("pos_scale").get<double>();
  n.vel_scale = j.at("vel_scale").get<double>();
  n.act_scale = j.at("act_scale").get<double>();
  return n;
}

}  // namespace gspplan::ghm
