#include "gspplan/ghm/terms.hpp"

#include <stdexcept>

#include "gspplan/tabular/algebra.hpp"

namespace gspplan::ghm {
namespace {

Eigen::Vector4f normal4(Rng& rng) {
  return {static_cast<float>(standard_normal(rng)), static_cast<float>(standard_normal(rng)),
          static_cast<float>(standard_normal(rng)), static_cast<float>(standard_normal(rng))};
}

void set_cond(flow::CondBatch<float>& c, Eigen::Index j, const Eigen::Vector4f& s, const Eigen::Vector2f& a,
              const TdRow& row, float gamma) {
  c.state.col(j) = s;
  if (c.action.rows() > 0) c.action.col(j) = a;
  if (c.z.rows() > 0) c.z.col(j) = row.z;
  if (!c.mask_z.empty()) c.mask_z[static_cast<std::size_t>(j)] = row.mask_z;
  if (!c.mask_action.empty()) c.mask_action[static_cast<std::size_t>(j)] = row.mask_action;
  if (c.gamma.size() > 0) c.gamma(j) = gamma;
}

}  // namespace

LossSpec build_loss_spec(const flow::VectorField<float>& field, std::span<const float> theta_bar,
                         const std::vector<TdRow>& rows, double gamma_max, const NextActionFn& next_action, double dt,
                         Rng& rng) {
  const auto& arch = field.arch();
  if (!arch.use_gamma || arch.x_dim != 4) throw std::invalid_argument("build_loss_spec: field must be a GHM");
  const auto R = static_cast<Eigen::Index>(rows.size());
  Eigen::Index n_hc = 0;
  for (const auto& r : rows) {
    if (!(r.gamma >= 0.0f && r.gamma <= gamma_max && r.gamma < 1.0f)) {
      throw std::invalid_argument("build_loss_spec: gamma outside [0, gamma_max]");
    }
    if (r.consistency) {
      if (!(r.beta >= 0.0f && r.beta <= r.gamma)) throw std::invalid_argument("build_loss_spec: need 0 <= beta <= gamma");
      ++n_hc;
    }
  }
  if (n_hc > 0 && !next_action) throw std::invalid_argument("build_loss_spec: consistency rows need next_action");

  // Noise and flow times, drawn row by row.
  struct Draws {
    Eigen::Vector4f x0, x0_boot, x0_plus, x0_gamma;
    float t = 0, t_boot = 0, t_gamma = 0;
  };
  std::vector<Draws> draws(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto& d = draws[r];
    d.x0 = normal4(rng);
    d.t = static_cast<float>(uniform01(rng));
    d.x0_boot = normal4(rng);
    d.t_boot = static_cast<float>(uniform01(rng));
    if (rows[r].consistency) {
      d.x0_plus = normal4(rng);
      d.x0_gamma = normal4(rng);
      d.t_gamma = static_cast<float>(uniform01(rng));
    }
  }

  // S+ = psi_bar_1(x0'' | S', A', beta) and A+ for the consistency rows.
  std::vector<Eigen::Vector4f> s_plus(rows.size());
  std::vector<Eigen::Vector2f> a_plus(rows.size(), Eigen::Vector2f::Zero());
  if (n_hc > 0) {
    flow::CondBatch<float> c;
    c.resize(arch, n_hc);
    flow::Mat<float> x0(4, n_hc);
    Eigen::Index j = 0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (!rows[r].consistency) continue;
      set_cond(c, j, rows[r].next_state, rows[r].next_action, rows[r], rows[r].beta);
      x0.col(j) = draws[r].x0_plus;
      ++j;
    }
    const flow::Mat<float> x1 = field.integrate(theta_bar, x0, field.context(theta_bar, c), dt);
    j = 0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (!rows[r].consistency) continue;
      s_plus[r] = x1.col(j++);
      if (!rows[r].mask_action) a_plus[r] = next_action(s_plus[r], rows[r], rng);
    }
  }

  // Bootstrap entries: x_t and targets under the target parameters.
  const Eigen::Index n_boot = R + n_hc;
  flow::CondBatch<float> bc;
  bc.resize(arch, n_boot);
  flow::Mat<float> bx0(4, n_boot);
  flow::Vec<float> bt(n_boot);
  {
    Eigen::Index j = 0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto& row = rows[r];
      set_cond(bc, j, row.next_state, row.next_action, row, row.consistency ? row.beta : row.gamma);
      bx0.col(j) = draws[r].x0_boot;
      bt(j) = draws[r].t_boot;
      ++j;
      if (row.consistency) {
        set_cond(bc, j, s_plus[r], a_plus[r], row, row.gamma);
        bx0.col(j) = draws[r].x0_gamma;
        bt(j) = draws[r].t_gamma;
        ++j;
      }
    }
  }
  const flow::Mat<float> bxt = field.integrate_to(theta_bar, bx0, field.context(theta_bar, bc), bt, dt);
  const flow::Mat<float> btarget = field.forward(theta_bar, bxt, bt, bc);

  LossSpec spec;
  const Eigen::Index n = R + n_boot;
  auto& b = spec.batch;
  b.x.resize(4, n);
  b.t.resize(n);
  b.target.resize(4, n);
  b.weight.resize(n);
  b.cond.resize(arch, n);
  b.num_groups = static_cast<int>(R);
  spec.term.reserve(static_cast<std::size_t>(n));
  spec.row.reserve(static_cast<std::size_t>(n));
  Eigen::Index e = 0, j = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const auto& d = draws[r];
    double w_one, w_boot, w_gamma = 0.0;
    if (row.consistency) {
      const auto c = tabular::horizon_coefficients(row.gamma, row.beta);
      w_one = c.one_step;
      w_boot = c.beta_bootstrap;
      w_gamma = c.gamma_bootstrap;
    } else {
      w_one = 1.0 - row.gamma;
      w_boot = row.gamma;
    }
    auto push = [&](const Eigen::Vector4f& x, float t, const Eigen::Vector4f& target, double w, Term term) {
      b.x.col(e) = x;
      b.t(e) = t;
      b.target.col(e) = target;
      b.weight(e) = static_cast<float>(w);
      set_cond(b.cond, e, row.state, row.action, row, row.gamma);
      spec.term.push_back(term);
      spec.row.push_back(static_cast<int>(r));
      ++e;
    };
    push((1.0f - d.t) * d.x0 + d.t * row.next_state, d.t, row.next_state - d.x0, w_one, Term::kOneStep);
    push(bxt.col(j), bt(j), btarget.col(j), w_boot, Term::kBootstrap);
    ++j;
    if (row.consistency) {
      push(bxt.col(j), bt(j), btarget.col(j), w_gamma, Term::kGammaBootstrap);
      ++j;
    }
  }
  return spec;
}

LossSpec td_flow_terms(const flow::VectorField<float>& field, std::span<const float> theta_bar,
                       std::vector<TdRow> rows, double gamma_max, double dt, Rng& rng) {
  for (auto& r : rows) r.consistency = false;
  return build_loss_spec(field, theta_bar, rows, gamma_max, {}, dt, rng);
}

LossSpec td_hc_terms(const flow::VectorField<float>& field, std::span<const float> theta_bar,
                     std::vector<TdRow> rows, double gamma_max, const NextActionFn& next_action, double dt, Rng& rng) {
  for (auto& r : rows) r.consistency = true;
  return build_loss_spec(field, theta_bar, rows, gamma_max, next_action, dt, rng);
}

LossSpec one_step_terms(const flow::Architecture& arch, const std::vector<TdRow>& rows, Rng& rng) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  LossSpec spec;
  auto& b = spec.batch;
  b.x.resize(4, n);
  b.t.resize(n);
  b.target.resize(4, n);
  b.weight = flow::Vec<float>::Ones(n);
  b.cond.resize(arch, n);
  b.num_groups = static_cast<int>(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& row = rows[static_cast<std::size_t>(j)];
    const Eigen::Vector4f x0 = normal4(rng);
    const auto t = static_cast<float>(uniform01(rng));
    b.x.col(j) = (1.0f - t) * x0 + t * row.next_state;
    b.t(j) = t;
    b.target.col(j) = row.next_state - x0;
    b.cond.state.col(j) = row.state;
    b.cond.action.col(j) = row.action;
    spec.term.push_back(Term::kOneStep);
    spec.row.push_back(static_cast<int>(j));
  }
  return spec;
}

}  // namespace gspplan::ghm
