// Acceptance criteria A1-A10. One PASS/FAIL line per criterion; exit status 1
// if any criterion fails. Usage: acceptance [--only A1,A6,...] [--work DIR]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "gspplan/common/io.hpp"
#include "gspplan/common/rng.hpp"
#include "gspplan/eval/ground_truth.hpp"
#include "gspplan/flow/vector_field.hpp"
#include "gspplan/pipeline/commands.hpp"
#include "gspplan/pipeline/run_config.hpp"
#include "gspplan/planner/comp_plan.hpp"
#include "gspplan/planner/config.hpp"
#include "gspplan/planner/tabular_domain.hpp"
#include "gspplan/tabular/algebra.hpp"
#include "gspplan/tabular/estimator.hpp"
#include "gspplan/tabular/random.hpp"

namespace fs = std::filesystem;
using namespace gspplan;
using nlohmann::json;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int uniform_int(Rng& rng, int lo, int hi) { return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1)); }

// ---------------------------------------------------------------------------
// Tabular oracles. Measures are computed as truncated power series by repeated
// squaring, independent of the library's LU solves.

// Pi[s][s*A + a] = pi(a|s).
Eigen::MatrixXd policy_matrix(const tabular::TabularPolicy& pi, int A) {
  const int S = pi.num_states();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(S, S * A);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) m(s, s * A + a) = pi.probs(s, a);
  return m;
}

// (1 - g) sum_{t >= 0} g^t first T^t.
Eigen::MatrixXd discounted_series(const Eigen::MatrixXd& first, const Eigen::MatrixXd& T, double g) {
  Eigen::MatrixXd sum = first;
  Eigen::MatrixXd power = g * T;
  double gm = g;  // g^m for the current block length m
  while (gm > 1e-17) {
    sum += sum * power;
    power = power * power;
    gm *= gm;
  }
  return (1.0 - g) * sum;
}

Eigen::MatrixXd series_measure(const tabular::TabularMdp& mdp, const tabular::TabularPolicy& pi, double g) {
  const Eigen::MatrixXd pm = policy_matrix(pi, mdp.num_actions) * mdp.transition;
  return discounted_series(mdp.transition, pm, g);
}

// Composite measure of pi_{z1} -a1-> ... -> pi_{zn}: chain over (phase, state)
// where the phase advances with probability alpha_k after each transition.
Eigen::MatrixXd series_composite(const tabular::TabularMdp& mdp, const std::vector<tabular::TabularPolicy>& rep,
                                 const tabular::SwitchingPolicySpec& spec, double g) {
  const int S = mdp.num_states, A = mdp.num_actions, n = spec.num_phases();
  auto alpha = [&](int k) { return k + 1 < n ? spec.alphas[static_cast<std::size_t>(k)] : 0.0; };
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n * S, n * S);
  for (int k = 0; k < n; ++k) {
    const Eigen::MatrixXd pk =
        policy_matrix(rep[static_cast<std::size_t>(spec.policy_ids[static_cast<std::size_t>(k)])], A) * mdp.transition;
    T.block(k * S, k * S, S, S) = (1.0 - alpha(k)) * pk;
    if (k + 1 < n) T.block(k * S, (k + 1) * S, S, S) = alpha(k) * pk;
  }
  Eigen::MatrixXd first = Eigen::MatrixXd::Zero(S * A, n * S);
  first.leftCols(S) = (1.0 - alpha(0)) * mdp.transition;
  if (n > 1) first.middleCols(S, S) = alpha(0) * mdp.transition;
  const Eigen::MatrixXd occ = discounted_series(first, T, g);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(S * A, S);
  for (int k = 0; k < n; ++k) m += occ.middleCols(k * S, S);
  return m;
}

struct Instance {
  tabular::TabularMdp mdp;
  std::vector<tabular::TabularPolicy> rep;
  tabular::SwitchingPolicySpec spec;
  double gamma = 0.0;
};

Instance random_instance(Rng& rng, int max_states, int max_phases, int trial) {
  Instance in;
  const int S = uniform_int(rng, 2, max_states);
  const int A = uniform_int(rng, 1, 3);
  const int n = uniform_int(rng, 1, max_phases);
  in.gamma = 0.05 + 0.94 * uniform01(rng);
  in.mdp = tabular::random_mdp(S, A, rng, trial % 3 == 0 ? 2 : 0);
  for (int i = 0; i < 3; ++i) in.rep.push_back(tabular::random_policy(S, A, rng));
  for (int k = 0; k < n; ++k) in.spec.policy_ids.push_back(uniform_int(rng, 0, 2));
  for (int k = 0; k + 1 < n; ++k) in.spec.alphas.push_back(trial % 7 == 0 ? static_cast<double>(rng() % 2) : uniform01(rng));
  return in;
}

// ---------------------------------------------------------------------------

Verdict a1() {
  const auto t0 = Clock::now();
  Rng rng(101);
  double worst_m = 0.0, worst_w = 0.0;
  const int trials = 120;
  for (int trial = 0; trial < trials; ++trial) {
    const auto in = random_instance(rng, 20, 5, trial);
    const auto got = tabular::gsp_successor_measure(in.mdp, in.rep, in.spec, in.gamma);
    const Eigen::MatrixXd truth = series_composite(in.mdp, in.rep, in.spec, in.gamma);
    worst_m = std::max(worst_m, (got.measure - truth).cwiseAbs().maxCoeff());
    const auto w = tabular::gsp_weights(in.gamma, in.spec.alphas);
    double sum = 0.0;
    for (double x : w.weights) sum += x;
    worst_w = std::max(worst_w, std::abs(sum - 1.0));
  }
  const double secs = seconds_since(t0);
  return {worst_m <= 1e-9 && worst_w <= 1e-10 && secs < 30.0,
          fmt("%d instances, max |m - oracle| %.2e (tol 1e-9), max |sum w - 1| %.2e (tol 1e-10), %.1f s (< 30)", trials,
              worst_m, worst_w, secs)};
}

Verdict a2() {
  const auto t0 = Clock::now();
  Rng rng(202);
  double worst = 0.0, worst_lib = 0.0;
  int checks = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int S = uniform_int(rng, 2, 15), A = uniform_int(rng, 1, 3);
    const auto mdp = tabular::random_mdp(S, A, rng, trial % 2 ? 3 : 0);
    const auto pi = tabular::random_policy(S, A, rng);
    const Eigen::MatrixXd Pi = policy_matrix(pi, A);
    const double g = 0.1 + 0.89 * uniform01(rng);
    const auto mg = tabular::exact_successor_measure(mdp, pi, g);
    for (double frac : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const double b = frac * g;
      const auto mb = tabular::exact_successor_measure(mdp, pi, b);
      const Eigen::MatrixXd& P = mdp.transition;
      const Eigen::MatrixXd rhs = (1.0 - g) * P + g * (1.0 - g) / (1.0 - b) * (P * Pi * mb.measure) +
                                  g * (g - b) / (1.0 - b) * (P * Pi * mb.measure * Pi * mg.measure);
      worst = std::max(worst, (mg.measure - rhs).cwiseAbs().maxCoeff());
      worst_lib = std::max(worst_lib, tabular::horizon_consistency_residual(mg, mb, mdp, pi, g, b));
      ++checks;
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-10 && worst_lib <= 1e-10 && secs < 10.0,
          fmt("%d (instance, beta) pairs, max residual %.2e (library residual %.2e, tol 1e-10), %.1f s (< 10)", checks,
              worst, worst_lib, secs)};
}

Verdict a3() {
  const auto t0 = Clock::now();
  Rng rng(303);
  int within = 0;
  double worst_z = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    auto in = random_instance(rng, 10, 4, 1);
    in.gamma = 0.5 + 0.45 * uniform01(rng);
    const int S = in.mdp.num_states, A = in.mdp.num_actions, n = in.spec.num_phases();
    const auto w = tabular::gsp_weights(in.gamma, in.spec.alphas);
    std::vector<tabular::SuccessorMeasure> ms;
    for (int k = 0; k < n; ++k) {
      ms.push_back(tabular::exact_successor_measure(
          in.mdp, in.rep[static_cast<std::size_t>(in.spec.policy_ids[static_cast<std::size_t>(k)])], w.betas[static_cast<std::size_t>(k)]));
    }
    std::vector<tabular::PhaseSampler> chain;
    for (int k = 0; k < n; ++k) {
      const tabular::TabularPolicy* next =
          k + 1 < n ? &in.rep[static_cast<std::size_t>(in.spec.policy_ids[static_cast<std::size_t>(k + 1)])] : nullptr;
      chain.push_back({&ms[static_cast<std::size_t>(k)], next});
    }
    const auto r = tabular::random_reward(S, rng);
    const int s = uniform_int(rng, 0, S - 1), a = uniform_int(rng, 0, A - 1);
    const auto est = tabular::gsp_q_estimate(chain, r, w, s, a, rng, 100000);
    const Eigen::MatrixXd m = series_composite(in.mdp, in.rep, in.spec, in.gamma);
    const double truth = m.row(s * A + a).dot(r.values) / (1.0 - in.gamma);
    const double z = est.std_error > 0 ? std::abs(est.mean - truth) / est.std_error : (est.mean == truth ? 0.0 : 1e9);
    worst_z = std::max(worst_z, z);
    within += z <= 3.0;
  }
  const double secs = seconds_since(t0);
  return {within >= 19 && secs < 60.0,
          fmt("%d/20 instances within 3 SE at 1e5 samples (need >= 19), worst |z| %.2f, %.1f s (< 60)", within, worst_z,
              secs)};
}

Verdict a4() {
  const auto t0 = Clock::now();
  double worst = 0.0, worst_formula = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double g = 0.999 * i / 99.0;
    for (int j = 0; j < 100; ++j) {
      const double b = g * j / 99.0;
      const auto c = tabular::horizon_coefficients(g, b);
      worst = std::max(worst, std::abs(c.one_step + c.beta_bootstrap + c.gamma_bootstrap - 1.0));
      worst_formula = std::max({worst_formula, std::abs(c.one_step - (1.0 - g)),
                                std::abs(c.beta_bootstrap - g * (1.0 - g) / (1.0 - b)),
                                std::abs(c.gamma_bootstrap - g * (g - b) / (1.0 - b))});
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-12 && worst_formula <= 1e-12 && secs < 1.0,
          fmt("100x100 (gamma, beta) grid, max |sum - 1| %.2e (tol 1e-12), max deviation from closed form %.2e, %.3f s (< 1)",
              worst, worst_formula, secs)};
}

Verdict a5() {
  const auto t0 = Clock::now();
  Rng rng(505);
  double worst = 0.0;
  int checked = 0;
  for (int inst = 0; inst < 50; ++inst) {
    flow::Architecture arch;
    arch.x_dim = uniform_int(rng, 1, 4);
    arch.state_dim = uniform_int(rng, 1, 4);
    arch.action_dim = uniform_int(rng, 0, 2);
    arch.z_dim = uniform_int(rng, 0, 4);
    arch.use_gamma = inst % 5 != 4;
    arch.hidden = uniform_int(rng, 6, 16);
    arch.embed_dim = 8;
    arch.blocks = uniform_int(rng, 1, 3);
    arch.mixing = inst % 2 ? flow::Mixing::kFilm : flow::Mixing::kAdditive;
    const flow::VectorField<double> f(arch);
    std::vector<double> p(f.param_count());
    f.init_params(p, rng, false);
    const int rows = 5;
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
      b.cond.mask_z[static_cast<std::size_t>(j)] = uniform01(rng) < 0.3;
      b.cond.mask_action[static_cast<std::size_t>(j)] = uniform01(rng) < 0.3;
      b.t(j) = uniform01(rng);
      b.weight(j) = 0.1 + uniform01(rng);
    }
    b.num_groups = 2;
    std::vector<double> g(p.size()), scratch(p.size());
    f.loss_grad(p, b, g);
    for (int c = 0; c < 100; ++c) {
      const auto i = static_cast<std::size_t>(rng() % p.size());
      const double h = 1e-5;
      auto q = p;
      q[i] = p[i] + h;
      const double up = f.loss_grad(q, b, scratch);
      q[i] = p[i] - h;
      const double down = f.loss_grad(q, b, scratch);
      const double fd = (up - down) / (2 * h);
      worst = std::max(worst, std::abs(g[i] - fd) / std::max({std::abs(g[i]), std::abs(fd), 1e-6}));
      ++checked;
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-4 && secs < 60.0,
          fmt("%d coordinates over 50 networks, max relative error %.2e (tol 1e-4), %.1f s (< 60)", checked, worst, secs)};
}

Verdict a9() {
  const auto t0 = Clock::now();
  Rng rng(909);
  int outside = 0, total = 0;
  double worst_z = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const int S = uniform_int(rng, 3, 8), A = uniform_int(rng, 2, 3);
    const double g = 0.6 + 0.35 * uniform01(rng);
    auto mdp = tabular::random_mdp(S, A, rng, 3);
    std::vector<tabular::TabularPolicy> rep;
    for (int z = 0; z < S; ++z) rep.push_back(tabular::random_policy(S, A, rng));
    const auto reward = tabular::random_reward(S, rng);
    planner::TabularDomain d(mdp, rep, tabular::TabularPolicy::uniform(S, A), reward);
    // alpha_1 = 1 (one-step first phase), then commit to pi_{z2} for good.
    const auto w = planner::effective_discounts({1.0}, g);
    d.prepare(w.betas);
    const int s = uniform_int(rng, 0, S - 1);
    std::vector<std::vector<int>> seqs;
    for (int m = 0; m < 8; ++m) seqs.push_back({uniform_int(rng, 0, S - 1), uniform_int(rng, 0, S - 1)});
    auto rngs = planner::candidate_rngs(derive_seed(909, static_cast<std::uint64_t>(trial)), 8);
    std::vector<Rng*> ptrs;
    for (auto& r : rngs) ptrs.push_back(&r);
    const int N = 20000;
    const auto res = planner::score_candidates(d, s, seqs, w, N, ptrs);
    for (const auto& c : res.candidates) {
      // Act-then-commit: Q(s, a1) = (1-g)^{-1} <(1-g) P + g P Pi_{z2} m_g^{z2}, r>.
      const auto& pi2 = rep[static_cast<std::size_t>(c.z[1])];
      const Eigen::MatrixXd m2 = series_measure(mdp, pi2, g);
      const Eigen::MatrixXd comp = (1.0 - g) * mdp.transition + g * mdp.transition * policy_matrix(pi2, A) * m2;
      const double truth = comp.row(s * A + c.first_action).dot(reward.values) / (1.0 - g);
      double var = 0.0;
      for (double x : c.draws) var += (x - c.q) * (x - c.q);
      const double se = std::sqrt(var / (N - 1) / N);
      const double z = se > 0 ? std::abs(c.q - truth) / se : (std::abs(c.q - truth) < 1e-12 ? 0.0 : 1e9);
      worst_z = std::max(worst_z, z);
      outside += z > 3.0;
      ++total;
    }
  }
  const double secs = seconds_since(t0);
  // 80 checks at a 0.27% two-sided rate: P(more than 2 outside) < 0.2%.
  return {outside <= 2, fmt("%d/%d candidate scores outside 3 SE of the act-then-commit oracle (allow <= 2), worst |z| %.2f, "
                            "%.1f s",
                            outside, total, worst_z, secs)};
}

// ---------------------------------------------------------------------------
// Pipeline criteria.

json read_json(const fs::path& p) { return json::parse(read_file(p)); }

pipeline::RunConfig desk_config(std::uint64_t seed, const std::vector<std::string>& overrides) {
  json j = read_json(fs::path(GSPPLAN_SOURCE_DIR) / "configs" / "desk.json");
  for (const auto& o : overrides) pipeline::apply_override(j, o);
  j["seed"] = seed;
  return pipeline::RunConfig::from_json(j);
}

struct DeskRun {
  pipeline::RunConfig cfg;
  pipeline::RunPaths paths;
  double train_seconds = 0.0;
};

// gen-data, train-ghm and eval-emd for one seed.
DeskRun train_and_eval(const fs::path& work, std::uint64_t seed, const std::vector<std::string>& overrides) {
  auto cfg = desk_config(seed, overrides);
  auto paths = pipeline::prepare_run(cfg, work);
  pipeline::cmd_gen_data(cfg, paths);
  const auto t0 = Clock::now();
  pipeline::cmd_train_ghm(cfg, paths);
  const double train_s = seconds_since(t0);
  pipeline::log_timing(paths, "train-ghm", train_s);
  pipeline::cmd_eval_emd(cfg, paths);
  std::printf("  seed %llu %s: trained %d steps in %.0f s\n", static_cast<unsigned long long>(seed),
              paths.hash.c_str(), cfg.train.gradient_steps, train_s);
  std::fflush(stdout);
  return {cfg, paths, train_s};
}

double emd_at(const DeskRun& r, double gamma, const char* key) {
  const json report = read_json(r.paths.emd_report());
  for (const auto& e : report.at("results")) {
    if (std::abs(e.at("gamma").get<double>() - gamma) < 1e-12) return e.at(key).get<double>();
  }
  throw std::runtime_error("no EMD result at the requested gamma");
}

struct DeskState {
  std::vector<DeskRun> hc, td;
};

Verdict a6(const DeskState& st) {
  const auto& r = st.hc.front();
  bool ok = r.cfg.train.gradient_steps <= 200000 && r.train_seconds <= 1800.0;
  std::string detail = fmt("seed 0, %d steps, %.0f s training;", r.cfg.train.gradient_steps, r.train_seconds);
  for (double g : {0.9, 0.98}) {
    const double model = emd_at(r, g, "mean_model"), prior = emd_at(r, g, "mean_prior");
    ok = ok && model <= prior / 3.0;
    detail += fmt(" gamma %.2f: EMD model %.3f vs prior/3 %.3f (ratio %.1f);", g, model, prior / 3.0, prior / model);
  }
  detail += fmt(" protocol %d pairs x %d rollouts, %d resamples", r.cfg.eval.n_start_pairs, r.cfg.eval.rollouts_per_pair,
                r.cfg.eval.n_resampled_states);
  return {ok, detail};
}

Verdict a7(const DeskState& st) {
  const double g = 0.995;
  std::vector<double> hc, td;
  for (const auto& r : st.hc) hc.push_back(emd_at(r, g, "mean_model"));
  for (const auto& r : st.td) td.push_back(emd_at(r, g, "mean_model"));
  const double mh = eval::median(hc), mt = eval::median(td);
  return {mh <= mt, fmt("gamma %.3f, median EMD over %zu seeds: TD-HC %.4f, TD-Flow %.4f, ratio HC/Flow %.3f (%.1f%% reduction)",
                        g, hc.size(), mh, mt, mh / mt, 100.0 * (1.0 - mh / mt))};
}

Verdict a8(const DeskState& st) {
  std::map<std::string, std::vector<double>> rates;
  for (const auto& r : st.hc) {
    for (auto mode : {planner::Mode::kZeroShot, planner::Mode::kCompPlan, planner::Mode::kGpi}) {
      auto cfg = r.cfg;
      cfg.plan.mode = mode;
      const auto t0 = Clock::now();
      const double rate = pipeline::cmd_plan(cfg, r.paths);
      pipeline::log_timing(r.paths, "plan", seconds_since(t0));
      std::printf("  seed %llu %-9s success %.3f over %d episodes (%.0f s)\n",
                  static_cast<unsigned long long>(cfg.seed), planner::to_string(mode).c_str(), rate, cfg.episodes,
                  seconds_since(t0));
      std::fflush(stdout);
      rates[planner::to_string(mode)].push_back(rate);
    }
  }
  const auto summary = pipeline::cmd_report({st.hc.front().paths.root}, {});
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  const double zs = mean(rates["zeroshot"]), cp = mean(rates["compplan"]), gpi = mean(rates["gpi"]);
  const bool fixture = zs <= 0.2;
  const bool ok = fixture && cp >= 2.0 * zs && cp >= gpi;
  return {ok, fmt("%zu seeds x %d episodes: zero-shot %.3f (fixture needs <= 0.2), CompPlan %.3f (needs >= %.3f), GPI %.3f "
                  "(CompPlan needs >= GPI); report rows %zu",
                  rates["compplan"].size(), st.hc.front().cfg.episodes, zs, cp, 2.0 * zs, gpi,
                  summary.at("success").size())};
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file() || e.path().filename() == "timing.log") continue;
    files[fs::relative(e.path(), root).string()] = sha256_hex(read_file(e.path()));
  }
  return files;
}

Verdict a10(const fs::path& work) {
  const auto t0 = Clock::now();
  const std::vector<std::string> tiny{"dataset.n_episodes=20",   "dataset.horizon=150",       "train.gradient_steps=200",
                                      "train.hidden=32",         "train.batch_size=32",       "train.log_every=20",
                                      "episodes=3",              "episode.max_steps=40",      "plan.num_candidates=8",
                                      "plan.num_mc_samples=4",   "eval.n_start_pairs=4",      "eval.n_resampled_states=32"};
  std::vector<std::map<std::string, std::string>> snaps;
  for (int rep = 0; rep < 2; ++rep) {
    const fs::path out = work / ("determinism_" + std::to_string(rep));
    fs::remove_all(out);
    auto cfg = desk_config(7, tiny);
    auto paths = pipeline::prepare_run(cfg, out);
    pipeline::cmd_gen_data(cfg, paths);
    pipeline::cmd_train_ghm(cfg, paths);
    pipeline::cmd_eval_emd(cfg, paths);
    cfg.plan.mode = planner::Mode::kCompPlan;
    pipeline::cmd_plan(cfg, paths);
    pipeline::cmd_report({paths.root}, {});
    snaps.push_back(snapshot(out));
  }
  std::vector<std::string> differing;
  for (const auto& [name, hash] : snaps[0]) {
    const auto it = snaps[1].find(name);
    if (it == snaps[1].end() || it->second != hash) differing.push_back(name);
  }
  for (const auto& [name, hash] : snaps[1]) {
    if (!snaps[0].count(name)) differing.push_back(name);
  }
  std::set<std::string> kinds;
  for (const auto& [name, hash] : snaps[0]) kinds.insert(fs::path(name).parent_path().filename().string());
  const bool complete = kinds.count("checkpoints") && kinds.count("traces") && kinds.count("reports");
  std::string detail = fmt("gen-data -> train-ghm -> eval-emd -> plan -> report twice: %zu files compared, %zu differ, %.1f s",
                           snaps[0].size(), differing.size(), seconds_since(t0));
  for (const auto& d : differing) detail += " [" + d + "]";
  return {differing.empty() && complete, detail};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<std::string> only;
  fs::path work = fs::current_path() / "acceptance_work";
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string item; std::getline(ss, item, ',');) only.insert(item);
    } else if (arg == "--work" && i + 1 < argc) {
      work = argv[++i];
    } else {
      std::fprintf(stderr, "usage: acceptance [--only A1,A2,...] [--work DIR]\n");
      return 2;
    }
  }
  auto wanted = [&](const std::string& id) { return only.empty() || only.count(id) > 0; };

  int failures = 0;
  auto report = [&](const std::string& id, const std::string& title, const std::function<Verdict()>& fn) {
    if (!wanted(id)) return;
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += !v.pass;
    std::printf("%s %s %s: %s\n", v.pass ? "PASS" : "FAIL", id.c_str(), title.c_str(), v.detail.c_str());
    std::fflush(stdout);
  };

  report("A1", "GSP algebra exactness", a1);
  report("A2", "two-timescale identity", a2);
  report("A3", "composite estimator unbiasedness", a3);
  report("A4", "loss-coefficient normalization", a4);
  report("A5", "gradient correctness", a5);

  if (wanted("A6") || wanted("A7") || wanted("A8")) {
    fs::remove_all(work / "desk");
    DeskState st;
    std::string error;
    try {
      const int seeds = wanted("A7") || wanted("A8") ? 3 : 1;
      for (int s = 0; s < seeds; ++s) st.hc.push_back(train_and_eval(work / "desk", static_cast<std::uint64_t>(s), {}));
      if (wanted("A7")) {
        for (int s = 0; s < 3; ++s) {
          st.td.push_back(
              train_and_eval(work / "desk", static_cast<std::uint64_t>(s), {"train.consistency_proportion=0"}));
        }
      }
    } catch (const std::exception& e) {
      error = e.what();
    }
    auto guarded = [&](auto fn) {
      return [&, fn]() -> Verdict {
        if (!error.empty()) return {false, "training failed: " + error};
        return fn(st);
      };
    };
    report("A6", "GHM fidelity", guarded(a6));
    report("A7", "TD-HC vs TD-Flow at the longest horizon", guarded(a7));
    report("A8", "planning gain", guarded(a8));
  }

  report("A9", "special-case degeneration", a9);
  report("A10", "end-to-end determinism", [&] { return a10(work); });

  std::printf("%d criteria failed\n", failures);
  return failures ? 1 : 0;
}
