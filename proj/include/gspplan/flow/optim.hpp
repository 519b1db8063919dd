#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace gspplan::flow {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam moments plus the Polyak coefficient used for the target network.
// zeta multiplies the old target: target <- zeta * target + (1 - zeta) * online.
template <class T>
struct OptState {
  std::vector<T> m;
  std::vector<T> v;
  std::int64_t step = 0;
  AdamConfig adam;
  double zeta = 0.999;

  OptState() = default;
  OptState(std::size_t n, AdamConfig cfg, double zeta_) : m(n, T(0)), v(n, T(0)), adam(cfg), zeta(zeta_) {}
};

template <class T>
void adam_step(std::span<T> params, std::span<const T> grads, OptState<T>& opt) {
  if (params.size() != grads.size() || opt.m.size() != params.size() || opt.v.size() != params.size()) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  ++opt.step;
  const auto& c = opt.adam;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(opt.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(opt.step));
  const T b1 = static_cast<T>(c.beta1), b2 = static_cast<T>(c.beta2);
  const T step_size = static_cast<T>(c.lr / bc1);
  const T inv_sqrt_bc2 = static_cast<T>(1.0 / std::sqrt(bc2));
  const T eps = static_cast<T>(c.eps);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const T g = grads[i];
    opt.m[i] = b1 * opt.m[i] + (T(1) - b1) * g;
    opt.v[i] = b2 * opt.v[i] + (T(1) - b2) * g * g;
    params[i] -= step_size * opt.m[i] / (std::sqrt(opt.v[i]) * inv_sqrt_bc2 + eps);
  }
}

template <class T>
void ema_update(std::span<T> target, std::span<const T> online, double zeta) {
  if (target.size() != online.size()) throw std::invalid_argument("ema_update: shape mismatch");
  if (!(zeta >= 0.0 && zeta <= 1.0)) throw std::invalid_argument("ema_update: zeta must lie in [0, 1]");
  const T a = static_cast<T>(zeta), b = static_cast<T>(1.0 - zeta);
  for (std::size_t i = 0; i < target.size(); ++i) target[i] = a * target[i] + b * online[i];
}

}  // namespace gspplan::flow
