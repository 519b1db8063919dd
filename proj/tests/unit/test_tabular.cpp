#include <doctest.h>

#include <cmath>
#include <vector>

#include "gspplan/common/errors.hpp"
#include "gspplan/tabular/algebra.hpp"
#include "gspplan/tabular/estimator.hpp"
#include "gspplan/tabular/random.hpp"

using namespace gspplan;
using namespace gspplan::tabular;

namespace {

TabularMdp two_state_cycle() {
  TabularMdp mdp;
  mdp.num_states = 2;
  mdp.num_actions = 1;
  mdp.transition.resize(2, 2);
  mdp.transition << 0, 1, 1, 0;
  return mdp;
}

// Truncated series (1-g) sum_k g^k Pr(S_{k+1}); independent of the LU path.
Eigen::MatrixXd series_measure(const TabularMdp& mdp, const TabularPolicy& pi, double g, int terms) {
  const Eigen::MatrixXd kpi = policy_kernel(mdp, pi);
  Eigen::MatrixXd dist = mdp.transition;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(dist.rows(), dist.cols());
  double w = 1.0 - g;
  for (int k = 0; k < terms; ++k) {
    acc += w * dist;
    dist = dist * kpi;
    w *= g;
  }
  return acc;
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("exact successor measure: closed-form instances") {
  SUBCASE("single absorbing state") {
    TabularMdp mdp{1, 2, Eigen::MatrixXd::Ones(2, 1), 0.9};
    const auto m = exact_successor_measure(mdp, TabularPolicy::uniform(1, 2), 0.73);
    CHECK(m.measure(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(m.measure(1, 0) == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("two-state cycle at gamma 0.5") {
    const auto mdp = two_state_cycle();
    const auto m = exact_successor_measure(mdp, TabularPolicy::uniform(2, 1), 0.5);
    CHECK(m.measure(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
    CHECK(m.measure(0, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-13));
  }
  SUBCASE("gamma 0 is the one-step kernel") {
    Rng rng(3);
    const auto mdp = random_mdp(5, 3, rng);
    const auto m = exact_successor_measure(mdp, random_policy(5, 3, rng), 0.0);
    CHECK(max_abs(m.measure - mdp.transition) < 1e-15);
  }
  SUBCASE("rejects gamma outside [0, 1)") {
    const auto mdp = two_state_cycle();
    CHECK_THROWS_AS(exact_successor_measure(mdp, TabularPolicy::uniform(2, 1), 1.0), std::invalid_argument);
    CHECK_THROWS_AS(exact_successor_measure(mdp, TabularPolicy::uniform(2, 1), -0.1), std::invalid_argument);
  }
}

TEST_CASE("exact successor measure matches truncated series and Bellman fixed point") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int S = 2 + static_cast<int>(rng() % 49);
    const int A = 1 + static_cast<int>(rng() % 4);
    const double g = 0.05 + 0.9 * uniform01(rng);
    const auto mdp = random_mdp(S, A, rng, trial % 2 == 0 ? 3 : 0);
    const auto pi = random_policy(S, A, rng);
    const auto m = exact_successor_measure(mdp, pi, g);
    CHECK(bellman_residual(m, mdp, pi) <= 1e-10);
    const int terms = static_cast<int>(std::ceil(std::log(1e-14) / std::log(g)));
    CHECK(max_abs(m.measure - series_measure(mdp, pi, g, terms)) < 1e-11);
    for (Eigen::Index r = 0; r < m.measure.rows(); ++r) CHECK(std::abs(m.measure.row(r).sum() - 1.0) < 1e-9);
  }
}

TEST_CASE("gsp weights") {
  SUBCASE("single phase") {
    const auto w = gsp_weights(0.8, {});
    REQUIRE(w.weights.size() == 1);
    CHECK(w.weights[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(w.betas[0] == 0.8);
  }
  SUBCASE("one-step then absorbing") {
    const std::vector<double> alphas{1.0};
    const auto w = gsp_weights(0.9, alphas);
    CHECK(w.betas[0] == 0.0);
    CHECK(w.betas[1] == 0.9);
    CHECK(w.weights[0] == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(w.weights[1] == doctest::Approx(0.9).epsilon(1e-14));
  }
  SUBCASE("three phases at gamma 0.95") {
    const std::vector<double> alphas{0.5, 0.2};
    const auto w = gsp_weights(0.95, alphas);
    CHECK(w.betas[0] == doctest::Approx(0.475).epsilon(1e-14));
    CHECK(w.betas[1] == doctest::Approx(0.76).epsilon(1e-14));
    CHECK(w.betas[2] == 0.95);
    CHECK(w.weights[0] == doctest::Approx(0.095238).epsilon(1e-5));
    CHECK(w.weights[1] == doctest::Approx(0.188492).epsilon(1e-5));
    CHECK(w.weights[2] == doctest::Approx(0.716270).epsilon(1e-5));
    CHECK(std::abs(w.weights[0] + w.weights[1] + w.weights[2] - 1.0) < 1e-12);
  }
  SUBCASE("rejects degenerate gamma") {
    CHECK_THROWS(gsp_weights(1.0, {}));
    CHECK_THROWS(gsp_weights(0.0, {}));
    const std::vector<double> bad{1.5};
    CHECK_THROWS(gsp_weights(0.9, bad));
  }
  SUBCASE("normalization over random instances") {
    Rng rng(5);
    for (int i = 0; i < 2000; ++i) {
      const double g = 0.001 + 0.998 * uniform01(rng);
      std::vector<double> alphas(rng() % 8);
      for (auto& a : alphas) a = (i % 5 == 0) ? static_cast<double>(rng() % 2) : uniform01(rng);
      const auto w = gsp_weights(g, alphas);
      double sum = 0.0;
      for (double x : w.weights) {
        CHECK(x >= 0.0);
        CHECK(x <= 1.0);
        sum += x;
      }
      CHECK(std::abs(sum - 1.0) < 1e-10);
    }
  }
}

TEST_CASE("mixture coefficients of the two-timescale identity sum to one") {
  for (int i = 0; i < 100; ++i) {
    const double g = 0.999 * i / 99.0;
    for (int j = 0; j < 100; ++j) {
      const double b = g * j / 99.0;
      const auto c = horizon_coefficients(g, b);
      CHECK(std::abs(c.one_step + c.beta_bootstrap + c.gamma_bootstrap - 1.0) < 1e-12);
    }
  }
  CHECK_THROWS(horizon_coefficients(0.5, 0.6));
}

TEST_CASE("composite successor measure") {
  Rng rng(21);
  SUBCASE("single phase equals the plain measure") {
    const auto mdp = random_mdp(6, 2, rng);
    const std::vector<TabularPolicy> rep{random_policy(6, 2, rng)};
    const SwitchingPolicySpec spec{{0}, {}};
    const auto a = gsp_successor_measure(mdp, rep, spec, 0.9);
    const auto b = exact_successor_measure(mdp, rep[0], 0.9);
    CHECK(max_abs(a.measure - b.measure) < 1e-12);
  }
  SUBCASE("switching within one policy is a no-op") {
    const auto mdp = random_mdp(7, 3, rng);
    const std::vector<TabularPolicy> rep{random_policy(7, 3, rng)};
    for (double alpha : {0.0, 0.3, 0.77, 1.0}) {
      const SwitchingPolicySpec spec{{0, 0}, {alpha}};
      const auto a = gsp_successor_measure(mdp, rep, spec, 0.93);
      const auto b = exact_successor_measure(mdp, rep[0], 0.93);
      CHECK(max_abs(a.measure - b.measure) < 1e-9);
    }
  }
  SUBCASE("oracle edge cases") {
    const auto mdp = random_mdp(5, 2, rng);
    const std::vector<TabularPolicy> rep{random_policy(5, 2, rng), random_policy(5, 2, rng)};
    const auto plain = exact_successor_measure(mdp, rep[0], 0.8);
    CHECK(max_abs(gsp_successor_measure_oracle(mdp, rep, {{0}, {}}, 0.8).measure - plain.measure) < 1e-12);
    CHECK(max_abs(gsp_successor_measure_oracle(mdp, rep, {{0, 1, 1}, {0.0, 0.0}}, 0.8).measure - plain.measure) <
          1e-12);
  }
  SUBCASE("random six-state three-phase instance agrees with the oracle") {
    const auto mdp = random_mdp(6, 3, rng);
    const std::vector<TabularPolicy> rep{random_policy(6, 3, rng), random_policy(6, 3, rng),
                                         random_policy(6, 3, rng)};
    const SwitchingPolicySpec spec{{2, 0, 1}, {0.3, 0.6}};
    const auto a = gsp_successor_measure(mdp, rep, spec, 0.95);
    const auto b = gsp_successor_measure_oracle(mdp, rep, spec, 0.95);
    CHECK(max_abs(a.measure - b.measure) < 1e-9);
    for (Eigen::Index r = 0; r < a.measure.rows(); ++r) CHECK(std::abs(a.measure.row(r).sum() - 1.0) < 1e-9);
  }
  SUBCASE("rejects bad policy ids and oversized augmented chains") {
    const auto mdp = random_mdp(4, 2, rng);
    const std::vector<TabularPolicy> rep{random_policy(4, 2, rng)};
    CHECK_THROWS(gsp_successor_measure(mdp, rep, {{0, 3}, {0.5}}, 0.9));
    const std::vector<TabularPolicy> wrong{random_policy(5, 2, rng)};
    CHECK_THROWS(gsp_successor_measure(mdp, wrong, {{0}, {}}, 0.9));
    const auto big = random_mdp(2001, 1, rng, 2);
    const std::vector<TabularPolicy> rep_big{TabularPolicy::uniform(2001, 1)};
    CHECK_THROWS_AS(gsp_successor_measure_oracle(big, rep_big, {{0, 0, 0, 0, 0}, {0.1, 0.1, 0.1, 0.1}}, 0.9),
                    std::invalid_argument);
  }
}

TEST_CASE("composite measure equals oracle on 100 random instances") {
  Rng rng(77);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int S = 2 + static_cast<int>(rng() % 19);
    const int A = 1 + static_cast<int>(rng() % 3);
    const int n = 1 + static_cast<int>(rng() % 5);
    const double g = 0.05 + 0.94 * uniform01(rng);
    const auto mdp = random_mdp(S, A, rng, trial % 3 == 0 ? 2 : 0);
    std::vector<TabularPolicy> rep;
    for (int i = 0; i < 3; ++i) rep.push_back(random_policy(S, A, rng));
    SwitchingPolicySpec spec;
    for (int k = 0; k < n; ++k) spec.policy_ids.push_back(static_cast<int>(rng() % 3));
    for (int k = 0; k + 1 < n; ++k) spec.alphas.push_back(trial % 7 == 0 ? static_cast<double>(rng() % 2) : uniform01(rng));
    const auto a = gsp_successor_measure(mdp, rep, spec, g);
    const auto b = gsp_successor_measure_oracle(mdp, rep, spec, g);
    worst = std::max(worst, max_abs(a.measure - b.measure));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("exact Q") {
  SUBCASE("two-state cycle reward on s1") {
    const auto mdp = two_state_cycle();
    const RewardFn r{Eigen::Vector2d(0.0, 1.0)};
    const auto q = exact_q(mdp, TabularPolicy::uniform(2, 1), r, 0.5);
    CHECK(q(0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  }
  Rng rng(4);
  const auto mdp = random_mdp(9, 3, rng);
  const auto pi = random_policy(9, 3, rng);
  SUBCASE("zero reward") {
    const RewardFn r{Eigen::VectorXd::Zero(9)};
    CHECK(max_abs(exact_q(mdp, pi, r, 0.9)) == 0.0);
  }
  SUBCASE("gamma 0 is a one-step expectation") {
    const auto r = random_reward(9, rng);
    const auto q = exact_q(mdp, pi, r, 0.0);
    for (int s = 0; s < 9; ++s)
      for (int a = 0; a < 3; ++a) CHECK(q(s, a) == doctest::Approx(mdp.transition.row(mdp.row(s, a)).dot(r.values)));
  }
  SUBCASE("measure route equals direct value solve") {
    for (double g : {0.1, 0.5, 0.9, 0.99}) {
      const auto r = random_reward(9, rng);
      CHECK(max_abs(exact_q(mdp, pi, r, g) - exact_q_direct(mdp, pi, r, g)) < 1e-9);
    }
  }
}

TEST_CASE("act-then-commit composite equals the committed policy's Q") {
  Rng rng(90);
  for (int trial = 0; trial < 10; ++trial) {
    const int S = 3 + static_cast<int>(rng() % 10);
    const auto mdp = random_mdp(S, 3, rng);
    const std::vector<TabularPolicy> rep{random_policy(S, 3, rng), random_policy(S, 3, rng), random_policy(S, 3, rng)};
    const auto r = random_reward(S, rng);
    const double g = 0.5 + 0.45 * uniform01(rng);
    // alpha_1 = 1, alpha_{>=2} = 0: act once under the given action, then commit to z_2.
    const SwitchingPolicySpec spec{{0, 1, 2}, {1.0, 0.0}};
    const auto composite = q_from_measure(gsp_successor_measure(mdp, rep, spec, g), r, g);
    const auto augmented = q_from_measure(gsp_successor_measure_oracle(mdp, rep, spec, g), r, g);
    const auto committed = exact_q_direct(mdp, rep[1], r, g);
    CHECK(max_abs(composite - committed) < 1e-9);
    CHECK(max_abs(augmented - committed) < 1e-9);
  }
}

TEST_CASE("Monte-Carlo composite Q estimator") {
  Rng rng(123);
  SUBCASE("constant reward is exact") {
    const auto mdp = random_mdp(5, 2, rng);
    const std::vector<TabularPolicy> rep{random_policy(5, 2, rng), random_policy(5, 2, rng)};
    const std::vector<double> alphas{0.4};
    const auto w = gsp_weights(0.9, alphas);
    const auto m1 = exact_successor_measure(mdp, rep[0], w.betas[0]);
    const auto m2 = exact_successor_measure(mdp, rep[1], w.betas[1]);
    const std::vector<PhaseSampler> chain{{&m1, &rep[1]}, {&m2, nullptr}};
    const RewardFn r{Eigen::VectorXd::Constant(5, 2.5)};
    const auto e = gsp_q_estimate(chain, r, w, 1, 0, rng, 500);
    CHECK(e.mean == 2.5 / (1.0 - 0.9));
    CHECK(e.std_error == 0.0);
  }
  SUBCASE("single phase converges to exact Q") {
    const auto mdp = random_mdp(6, 2, rng);
    const auto pi = random_policy(6, 2, rng);
    const auto r = random_reward(6, rng);
    const auto w = gsp_weights(0.9, {});
    const auto m = exact_successor_measure(mdp, pi, 0.9);
    const std::vector<PhaseSampler> chain{{&m, nullptr}};
    const auto e = gsp_q_estimate(chain, r, w, 2, 1, rng, 100000);
    const double truth = exact_q(mdp, pi, r, 0.9)(2, 1);
    CHECK(std::abs(e.mean - truth) <= 3.0 * e.std_error);
  }
  SUBCASE("three phases on an eight-state MDP match the oracle inner product") {
    const auto mdp = random_mdp(8, 3, rng);
    const std::vector<TabularPolicy> rep{random_policy(8, 3, rng), random_policy(8, 3, rng), random_policy(8, 3, rng)};
    const SwitchingPolicySpec spec{{0, 1, 2}, {0.2, 0.5}};
    const double g = 0.95;
    const auto w = gsp_weights(g, spec.alphas);
    std::vector<SuccessorMeasure> ms;
    for (int k = 0; k < 3; ++k) ms.push_back(exact_successor_measure(mdp, rep[spec.policy_ids[k]], w.betas[k]));
    const std::vector<PhaseSampler> chain{{&ms[0], &rep[1]}, {&ms[1], &rep[2]}, {&ms[2], nullptr}};
    const auto r = random_reward(8, rng);
    const auto e = gsp_q_estimate(chain, r, w, 4, 2, rng, 100000);
    const double truth = q_from_measure(gsp_successor_measure_oracle(mdp, rep, spec, g), r, g)(4, 2);
    CHECK(std::abs(e.mean - truth) <= 3.0 * e.std_error);
  }
  SUBCASE("errors") {
    const auto mdp = random_mdp(4, 2, rng);
    const auto m = exact_successor_measure(mdp, TabularPolicy::uniform(4, 2), 0.5);
    const std::vector<PhaseSampler> chain{{&m, nullptr}};
    const auto w = gsp_weights(0.5, {});
    CHECK_THROWS(gsp_q_estimate(chain, RewardFn{Eigen::VectorXd::Zero(4)}, w, 0, 0, rng, 0));
    CHECK_THROWS(gsp_q_estimate(chain, RewardFn{Eigen::VectorXd::Zero(5)}, w, 0, 0, rng, 10));
  }
}

TEST_CASE("horizon consistency residual") {
  Rng rng(8);
  const auto mdp = random_mdp(10, 3, rng);
  const auto pi = random_policy(10, 3, rng);
  SUBCASE("beta equal to gamma reduces to the Bellman equation") {
    const auto m = exact_successor_measure(mdp, pi, 0.9);
    CHECK(horizon_consistency_residual(m, m, mdp, pi, 0.9, 0.9) <= 1e-10);
  }
  SUBCASE("exact measures satisfy the identity") {
    const auto mg = exact_successor_measure(mdp, pi, 0.9);
    const auto mb = exact_successor_measure(mdp, pi, 0.5);
    CHECK(horizon_consistency_residual(mg, mb, mdp, pi, 0.9, 0.5) <= 1e-10);
  }
  SUBCASE("beta zero uses the one-step kernel") {
    const auto mg = exact_successor_measure(mdp, pi, 0.7);
    const auto mb = exact_successor_measure(mdp, pi, 0.0);
    CHECK(horizon_consistency_residual(mg, mb, mdp, pi, 0.7, 0.0) <= 1e-10);
  }
  SUBCASE("residual grows with a perturbation of m_beta") {
    const auto mg = exact_successor_measure(mdp, pi, 0.9);
    const auto mb = exact_successor_measure(mdp, pi, 0.5);
    double prev = horizon_consistency_residual(mg, mb, mdp, pi, 0.9, 0.5);
    for (double eps : {1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1}) {
      auto pert = mb;
      pert.measure(7, 3) += eps;
      pert.measure.row(7) /= pert.measure.row(7).sum();
      const double res = horizon_consistency_residual(mg, pert, mdp, pi, 0.9, 0.5);
      CHECK(res > prev);
      prev = res;
    }
  }
  SUBCASE("rejects beta above gamma") {
    const auto m = exact_successor_measure(mdp, pi, 0.9);
    CHECK_THROWS(horizon_consistency_residual(m, m, mdp, pi, 0.5, 0.9));
  }
}

TEST_CASE("inverse-CDF draws") {
  Rng a(1), b(1);
  const std::vector<double> p{0.2, 0.0, 0.5, 0.3};
  for (int i = 0; i < 100; ++i) CHECK(sample_discrete(p, a) == sample_discrete(p, b));
  const std::vector<double> zero{0.0, 0.0};
  CHECK_THROWS(sample_discrete(zero, a));
  int counts[4] = {0, 0, 0, 0};
  for (int i = 0; i < 20000; ++i) counts[sample_discrete(p, a)]++;
  CHECK(counts[1] == 0);
  CHECK(counts[2] > counts[3]);
}
