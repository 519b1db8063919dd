#include "gspplan/verify/suites.hpp"

#include <algorithm>
#include <cmath>

#include "gspplan/common/rng.hpp"
#include "gspplan/flow/vector_field.hpp"
#include "gspplan/tabular/algebra.hpp"
#include "gspplan/tabular/random.hpp"

namespace gspplan::verify {

namespace {

double max_abs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

int uniform_int(Rng& rng, int lo, int hi) { return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1)); }

}  // namespace

bool SuiteReport::passed() const {
  return std::all_of(properties.begin(), properties.end(), [](const PropertyResult& p) { return p.passed(); });
}

nlohmann::json SuiteReport::to_json() const {
  nlohmann::json props = nlohmann::json::array();
  for (const auto& p : properties) {
    props.push_back({{"property", p.name},
                     {"instances", p.instances},
                     {"max_residual", p.max_residual},
                     {"tolerance", p.tolerance},
                     {"passed", p.passed()}});
  }
  return {{"suite", suite}, {"seed", seed}, {"trials", trials}, {"passed", passed()}, {"properties", props}};
}

SuiteReport algebra_suite(std::uint64_t seed, int trials, const AlgebraOptions& opt) {
  SuiteReport rep{"algebra", seed, trials, {}};
  if (trials <= 0) return rep;
  PropertyResult composite{"composite_measure_vs_oracle", 0, 0.0, 1e-9};
  PropertyResult weights{"gsp_weights_sum", 0, 0.0, 1e-10};
  PropertyResult identity{"horizon_consistency_residual", 0, 0.0, 1e-10};
  PropertyResult coeffs{"loss_coefficient_sum", 0, 0.0, 1e-12};
  PropertyResult bellman{"bellman_residual", 0, 0.0, 1e-9};

  for (int trial = 0; trial < trials; ++trial) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(trial));
    const int S = uniform_int(rng, 2, opt.max_states);
    const int A = uniform_int(rng, 1, 3);
    const int n = uniform_int(rng, 1, opt.max_phases);
    const double gamma = 0.05 + 0.94 * uniform01(rng);
    const auto mdp = tabular::random_mdp(S, A, rng, trial % 3 == 0 ? 2 : 0);
    std::vector<tabular::TabularPolicy> repertoire;
    for (int i = 0; i < 3; ++i) repertoire.push_back(tabular::random_policy(S, A, rng));
    tabular::SwitchingPolicySpec spec;
    for (int k = 0; k < n; ++k) spec.policy_ids.push_back(uniform_int(rng, 0, 2));
    for (int k = 0; k + 1 < n; ++k) spec.alphas.push_back(uniform01(rng));

    const auto w = tabular::gsp_weights(gamma, spec.alphas);
    double sum = 0.0;
    for (double x : w.weights) sum += x;
    weights.max_residual = std::max(weights.max_residual, std::abs(sum - 1.0));
    ++weights.instances;

    auto mix = w.weights;
    if (opt.inject_fault) mix[0] *= 1.01;
    const auto got = tabular::gsp_successor_measure_with_weights(mdp, repertoire, spec, gamma, mix);
    const auto truth = tabular::gsp_successor_measure_oracle(mdp, repertoire, spec, gamma);
    composite.max_residual = std::max(composite.max_residual, max_abs(got.measure - truth.measure));
    ++composite.instances;

    const double beta = gamma * uniform01(rng);
    const auto& pi = repertoire[0];
    const auto mg = tabular::exact_successor_measure(mdp, pi, gamma);
    const auto mb = tabular::exact_successor_measure(mdp, pi, beta);
    identity.max_residual =
        std::max(identity.max_residual, tabular::horizon_consistency_residual(mg, mb, mdp, pi, gamma, beta));
    ++identity.instances;
    bellman.max_residual = std::max({bellman.max_residual, tabular::bellman_residual(mg, mdp, pi),
                                     tabular::bellman_residual(mb, mdp, pi)});
    bellman.instances += 2;

    const auto c = tabular::horizon_coefficients(gamma, beta);
    coeffs.max_residual = std::max(
        {coeffs.max_residual, std::abs(c.one_step + c.beta_bootstrap + c.gamma_bootstrap - 1.0),
         std::abs((1.0 - gamma) + gamma - 1.0)});
    ++coeffs.instances;
  }
  rep.properties = {composite, weights, identity, coeffs, bellman};
  return rep;
}

SuiteReport gradient_suite(std::uint64_t seed, int trials, int coordinates) {
  SuiteReport rep{"gradients", seed, trials, {}};
  if (trials <= 0) return rep;
  PropertyResult grad{"loss_gradient_vs_central_difference", 0, 0.0, 1e-4};
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(trial));
    flow::Architecture arch;
    arch.x_dim = uniform_int(rng, 1, 4);
    arch.state_dim = uniform_int(rng, 0, 4);
    arch.action_dim = uniform_int(rng, 0, 2);
    arch.z_dim = uniform_int(rng, 0, 4);
    arch.use_gamma = trial % 5 != 4;
    arch.hidden = uniform_int(rng, 4, 16);
    arch.embed_dim = 8;
    arch.blocks = uniform_int(rng, 0, 3);
    arch.mixing = trial % 2 ? flow::Mixing::kFilm : flow::Mixing::kAdditive;
    const flow::VectorField<double> f(arch);
    std::vector<double> p(f.param_count());
    f.init_params(p, rng, false);

    const int rows = 6;
    flow::RegressionBatch<double> b;
    b.x = flow::Mat<double>(arch.x_dim, rows);
    b.target = flow::Mat<double>(arch.x_dim, rows);
    b.t = flow::Vec<double>(rows);
    b.weight = flow::Vec<double>(rows);
    b.cond.resize(arch, rows);
    for (int j = 0; j < rows; ++j) {
      for (int i = 0; i < arch.x_dim; ++i) {
        b.x(i, j) = standard_normal(rng);
        b.target(i, j) = standard_normal(rng);
      }
      for (int i = 0; i < arch.state_dim; ++i) b.cond.state(i, j) = standard_normal(rng);
      for (int i = 0; i < arch.action_dim; ++i) b.cond.action(i, j) = standard_normal(rng);
      for (int i = 0; i < arch.z_dim; ++i) b.cond.z(i, j) = standard_normal(rng);
      if (arch.use_gamma) b.cond.gamma(j) = 0.99 * uniform01(rng);
      if (!b.cond.mask_z.empty()) b.cond.mask_z[static_cast<std::size_t>(j)] = uniform01(rng) < 0.3;
      if (!b.cond.mask_action.empty()) b.cond.mask_action[static_cast<std::size_t>(j)] = uniform01(rng) < 0.3;
      b.t(j) = uniform01(rng);
      b.weight(j) = 0.1 + uniform01(rng);
    }
    b.num_groups = 3;

    std::vector<double> g(p.size()), scratch(p.size());
    f.loss_grad(p, b, g);
    for (int c = 0; c < coordinates; ++c) {
      const auto i = static_cast<std::size_t>(rng() % p.size());
      const double h = 1e-5;
      auto q = p;
      q[i] = p[i] + h;
      const double up = f.loss_grad(q, b, scratch);
      q[i] = p[i] - h;
      const double down = f.loss_grad(q, b, scratch);
      const double fd = (up - down) / (2 * h);
      grad.max_residual =
          std::max(grad.max_residual, std::abs(g[i] - fd) / std::max({std::abs(g[i]), std::abs(fd), 1e-6}));
    }
    ++grad.instances;
  }
  rep.properties = {grad};
  return rep;
}

}  // namespace gspplan::verify
