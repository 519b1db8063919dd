#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gspplan/common/errors.hpp"
#include "gspplan/common/rng.hpp"
#include "gspplan/flow/architecture.hpp"

namespace gspplan::flow {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

// Column-major batch of conditioning inputs, one column per row of the batch.
template <class T>
struct CondBatch {
  Mat<T> state;   // state_dim x B
  Mat<T> action;  // action_dim x B
  Mat<T> z;       // z_dim x B
  std::vector<std::uint8_t> mask_action;  // per column; empty means none masked
  std::vector<std::uint8_t> mask_z;
  Vec<T> gamma;  // B entries in [0, 1) when the architecture uses gamma

  void resize(const Architecture& arch, Eigen::Index batch);
  Eigen::Index size() const;
};

// Squared-error regression rows. Rows sharing a group are weighted terms of
// one sample; the loss is sum_r weight_r * |v(x_r) - target_r|^2 / num_groups.
template <class T>
struct RegressionBatch {
  Mat<T> x;
  Vec<T> t;
  CondBatch<T> cond;
  Mat<T> target;
  Vec<T> weight;
  int num_groups = 0;
};

template <class T>
struct Tape {
  Mat<T> phi_t, pre_t, act_t;
  Mat<T> phi_g, pre_g, act_g;
  Mat<T> cond_in, pre_c, act_c;
  std::vector<std::uint8_t> mask_action, mask_z;
  Mat<T> e;
  Mat<T> x;
  std::vector<Mat<T>> h;     // h[0..blocks]
  std::vector<Mat<T>> u;     // block pre-activations
  std::vector<Mat<T>> act;   // mish(u)
  std::vector<Mat<T>> film;  // [scale; shift] per block
  Mat<T> act_out;
};

template <class T>
class VectorField {
 public:
  explicit VectorField(Architecture arch);

  const Architecture& arch() const { return arch_; }
  const ParamLayout& layout() const { return layout_; }
  std::size_t param_count() const { return layout_.total; }

  // Uniform fan-in initialization; the output head starts at zero unless
  // zero_output is false.
  void init_params(std::span<T> params, Rng& rng, bool zero_output = true) const;

  // Full forward pass with per-column flow times. Records activations into
  // tape when it is non-null.
  Mat<T> forward(std::span<const T> params, const Mat<T>& x, const Vec<T>& t, const CondBatch<T>& cond,
                 Tape<T>* tape = nullptr) const;

  // Accumulates d(sum <dout, v>)/d(params) into grad.
  void backward(std::span<const T> params, const Tape<T>& tape, const Mat<T>& dout, std::span<T> grad) const;

  // Weighted regression loss; grad is overwritten. row_sq_err, when given,
  // receives |v - target|^2 per row.
  T loss_grad(std::span<const T> params, const RegressionBatch<T>& batch, std::span<T> grad,
              Vec<T>* row_sq_err = nullptr) const;

  // Conditioning part of the embedding (everything except flow time), H x B.
  // Reused across integration steps.
  Mat<T> context(std::span<const T> params, const CondBatch<T>& cond) const;

  // Velocity at a flow time shared by every column.
  Mat<T> velocity(std::span<const T> params, const Mat<T>& x, T t, const Mat<T>& context) const;

  // Euler pushforward psi_1(x0). dt must divide 1.
  Mat<T> integrate(std::span<const T> params, const Mat<T>& x0, const Mat<T>& context, double dt) const;

  // Euler pushforward to per-column times t_end in [0, 1] on the grid
  // {0, dt, 2dt, ...}; the last step of each column is shortened to land on t_end.
  Mat<T> integrate_to(std::span<const T> params, const Mat<T>& x0, const Mat<T>& context, const Vec<T>& t_end,
                      double dt) const;

 private:
  void check_cond(const CondBatch<T>& cond, Eigen::Index batch) const;
  Mat<T> sinusoid(const Vec<T>& t, double scale) const;
  Mat<T> gamma_features(const Vec<T>& g) const;
  Mat<T> cond_features(std::span<const T> params, const CondBatch<T>& cond) const;
  Mat<T> trunk(std::span<const T> params, const Mat<T>& x, const Mat<T>& e, Tape<T>* tape) const;

  Architecture arch_;
  ParamLayout layout_;
};

// Number of Euler steps for a step size that must divide [0, 1] evenly.
int euler_steps(double dt);

// x_{t+dt} = x_t + dt * field(x_t, t) from t = 0 to 1.
template <class T, class Field>
Mat<T> euler_integrate(Mat<T> x, double dt, Field&& field) {
  const int steps = euler_steps(dt);
  const double h = 1.0 / steps;
  for (int k = 0; k < steps; ++k) {
    x += static_cast<T>(h) * field(x, static_cast<T>(k * h));
    if (!x.allFinite()) throw NumericError("integrate_flow: non-finite state during integration");
  }
  return x;
}

extern template struct CondBatch<float>;
extern template struct CondBatch<double>;
extern template class VectorField<float>;
extern template class VectorField<double>;

}  // namespace gspplan::flow
