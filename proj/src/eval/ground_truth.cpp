#include "gspplan/eval/ground_truth.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "gspplan/common/errors.hpp"
#include "gspplan/common/io.hpp"
#include "gspplan/common/parallel.hpp"
#include "gspplan/eval/emd.hpp"

namespace gspplan::eval {

void EvalProtocol::validate() const {
  if (n_start_pairs < 1 || rollouts_per_pair < 1 || n_resampled_states < 1 || rollout_length < 0) {
    throw ConfigError("eval: counts must be >= 1");
  }
  if (!(noise_std >= 0.0)) throw ConfigError("eval: noise_std must be >= 0");
  for (double g : gammas) {
    if (!(g >= 0.0 && g < 1.0)) throw ConfigError("eval: gamma must lie in [0, 1)");
  }
}

int EvalProtocol::length_for(double gamma) const {
  if (rollout_length > 0) return rollout_length;
  return static_cast<int>(std::ceil(8.0 / (1.0 - gamma) - 1e-9));
}

std::vector<Eigen::Vector4d> geometric_ground_truth(const envs::MazeLayout& layout, const envs::GoalPolicy& policy,
                                                    const envs::ContinuousState& start,
                                                    const Eigen::Vector2d& first_action, const Eigen::Vector2d& goal,
                                                    double gamma, int rollouts, int n, int length, double noise_std,
                                                    std::uint64_t seed) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("geometric_ground_truth: gamma must lie in [0, 1)");
  if (rollouts < 1 || length < 1) throw std::invalid_argument("geometric_ground_truth: empty rollouts");
  if (n < 0) throw std::invalid_argument("geometric_ground_truth: n must be >= 0");
  const auto L = static_cast<std::size_t>(length);
  std::vector<std::vector<Eigen::Vector4d>> traj(static_cast<std::size_t>(rollouts));
  parallel_for(traj.size(), [&](std::size_t r) {
    Rng rng = make_rng(seed, r + 1);
    auto& t = traj[r];
    t.reserve(L);
    envs::ContinuousState s = envs::point_mass_step(start, first_action, layout, noise_std, rng);
    t.push_back(s.packed());
    while (t.size() < L) {
      s = envs::point_mass_step(s, policy.act(s, goal, rng), layout, noise_std, rng);
      t.push_back(s.packed());
    }
  });
  Rng rng = make_rng(seed, 0);
  std::vector<Eigen::Vector4d> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto r = std::min(static_cast<std::size_t>(uniform01(rng) * rollouts), traj.size() - 1);
    int k = envs::geometric_offset(gamma, rng);
    while (k > length) k = envs::geometric_offset(gamma, rng);
    out.push_back(traj[r][static_cast<std::size_t>(k - 1)]);
  }
  return out;
}

std::vector<EvalPair> make_eval_pairs(const envs::TransitionDataset& data, const envs::GoalPolicy& policy, int n,
                                      Rng& rng) {
  if (data.empty()) throw std::invalid_argument("make_eval_pairs: empty dataset");
  std::vector<EvalPair> pairs(static_cast<std::size_t>(n));
  const auto size = static_cast<double>(data.size());
  for (auto& p : pairs) {
    p.state = data[std::min(static_cast<std::size_t>(uniform01(rng) * size), data.size() - 1)].state;
    p.goal = data[std::min(static_cast<std::size_t>(uniform01(rng) * size), data.size() - 1)].state;
    p.action = policy.act(envs::ContinuousState::unpack(p.state), p.goal.head<2>(), rng);
  }
  return pairs;
}

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median: empty input");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

namespace {

std::string sample_hash(const std::vector<Eigen::Vector4d>& xs) {
  std::string bytes(xs.size() * sizeof(Eigen::Vector4d), '\0');
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::memcpy(bytes.data() + i * sizeof(Eigen::Vector4d), xs[i].data(), sizeof(Eigen::Vector4d));
  }
  return sha256_hex(bytes);
}

}  // namespace

FidelityResult ghm_fidelity(const ghm::GhmModel& model, const envs::MazeLayout& layout,
                            const envs::GoalPolicy& policy, const std::vector<EvalPair>& pairs, double gamma,
                            const EvalProtocol& protocol, std::uint64_t seed) {
  protocol.validate();
  if (pairs.empty()) throw std::invalid_argument("ghm_fidelity: no pairs");
  const int n = protocol.n_resampled_states;
  FidelityResult res;
  res.gamma = gamma;
  res.emd_model.resize(pairs.size());
  res.emd_prior.resize(pairs.size());
  res.model_sample_hash.resize(pairs.size());
  res.truth_sample_hash.resize(pairs.size());
  std::vector<char> exact(pairs.size(), 1);
  parallel_for(pairs.size(), [&](std::size_t i) {
    const auto& p = pairs[i];
    const std::uint64_t pair_seed = derive_seed(seed, i);
    const auto truth = geometric_ground_truth(layout, policy, envs::ContinuousState::unpack(p.state), p.action,
                                              p.goal.head<2>(), gamma, protocol.rollouts_per_pair, n,
                                              protocol.length_for(gamma), protocol.noise_std, derive_seed(pair_seed, 0));
    Rng rng = make_rng(pair_seed, 1);
    const auto samples = ghm::sample_ghm(model, p.state, p.action, p.goal, gamma, n, rng);
    const Eigen::Matrix4Xd noise = ghm::draw_noise(n, rng);
    std::vector<Eigen::Vector4d> prior(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) prior[static_cast<std::size_t>(j)] = model.normalizer().state_inverse(noise.col(j));
    const auto a = emd(positions(samples), positions(truth));
    const auto b = emd(positions(prior), positions(truth));
    res.emd_model[i] = a.value;
    res.emd_prior[i] = b.value;
    exact[i] = a.exact && b.exact;
    res.model_sample_hash[i] = sample_hash(samples);
    res.truth_sample_hash[i] = sample_hash(truth);
  });
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    res.mean_model += res.emd_model[i] / static_cast<double>(pairs.size());
    res.mean_prior += res.emd_prior[i] / static_cast<double>(pairs.size());
    res.exact = res.exact && exact[i];
  }
  res.median_model = median(res.emd_model);
  return res;
}

}  // namespace gspplan::eval
