#include "gspplan/flow/vector_field.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "gspplan/common/errors.hpp"

namespace gspplan::flow {
namespace {

template <class T>
using Arr = Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic>;

constexpr double kMaxPeriod = 10000.0;

template <class T>
Eigen::Map<const Mat<T>> weight(std::span<const T> p, const LinearSlot& s) {
  return Eigen::Map<const Mat<T>>(p.data() + s.offset, s.out, s.in);
}

template <class T>
Eigen::Map<const Vec<T>> bias(std::span<const T> p, const LinearSlot& s) {
  return Eigen::Map<const Vec<T>>(p.data() + s.offset + static_cast<std::size_t>(s.out) * s.in, s.out);
}

template <class T>
Mat<T> affine(std::span<const T> p, const LinearSlot& s, const Mat<T>& x) {
  Mat<T> y(s.out, x.cols());
  y.noalias() = weight(p, s) * x;
  y.colwise() += bias(p, s);
  return y;
}

template <class T>
void affine_grad(std::span<T> g, const LinearSlot& s, const Mat<T>& dy, const Mat<T>& x) {
  Eigen::Map<Mat<T>> dw(g.data() + s.offset, s.out, s.in);
  Eigen::Map<Vec<T>> db(g.data() + s.offset + static_cast<std::size_t>(s.out) * s.in, s.out);
  dw.noalias() += dy * x.transpose();
  db += dy.rowwise().sum();
}

// mish(u) = u * tanh(softplus(u)); with n = e^u, tanh(softplus(u)) = n(n+2) / (n(n+2) + 2).
template <class T>
Mat<T> mish(const Mat<T>& u) {
  const Arr<T> n = u.array().min(T(20)).exp();
  const Arr<T> w = n * (n + T(2));
  return (u.array() * (w / (w + T(2)))).matrix();
}

// g <- g * mish'(u)
template <class T>
void mish_backprop(const Mat<T>& u, Mat<T>& g) {
  const Arr<T> n = u.array().min(T(20)).exp();
  const Arr<T> w = n * (n + T(2));
  const Arr<T> tsp = w / (w + T(2));
  const Arr<T> sig = n / (n + T(1));
  g.array() *= tsp + u.array() * sig * (T(1) - tsp * tsp);
}

template <class T>
bool all_finite(const Mat<T>& m) {
  return m.allFinite();
}

}  // namespace

int euler_steps(double dt) {
  if (!(dt > 0.0) || dt > 1.0) throw std::invalid_argument("integrate_flow: dt must lie in (0, 1]");
  const double n = std::round(1.0 / dt);
  if (std::abs(n * dt - 1.0) > 1e-9) throw std::invalid_argument("integrate_flow: dt must divide 1 evenly");
  return static_cast<int>(n);
}

template <class T>
void CondBatch<T>::resize(const Architecture& arch, Eigen::Index batch) {
  state.setZero(arch.state_dim, batch);
  action.setZero(arch.action_dim, batch);
  z.setZero(arch.z_dim, batch);
  mask_action.assign(static_cast<std::size_t>(batch), 0);
  mask_z.assign(static_cast<std::size_t>(batch), 0);
  gamma.setZero(arch.use_gamma ? batch : 0);
}

template <class T>
Eigen::Index CondBatch<T>::size() const {
  return std::max({state.cols(), action.cols(), z.cols(), gamma.size(),
                   static_cast<Eigen::Index>(mask_z.size()), static_cast<Eigen::Index>(mask_action.size())});
}

template <class T>
VectorField<T>::VectorField(Architecture arch) : arch_(arch), layout_(arch) {}

template <class T>
void VectorField<T>::init_params(std::span<T> params, Rng& rng, bool zero_output) const {
  if (params.size() != layout_.total) throw std::invalid_argument("init_params: parameter count mismatch");
  std::fill(params.begin(), params.end(), T(0));
  auto fill_slot = [&](const LinearSlot& s) {
    const double bound = s.in > 0 ? 1.0 / std::sqrt(static_cast<double>(s.in)) : 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      params[s.offset + i] = static_cast<T>(bound * (2.0 * uniform01(rng) - 1.0));
    }
  };
  fill_slot(layout_.time1);
  fill_slot(layout_.time2);
  fill_slot(layout_.gamma1);
  fill_slot(layout_.gamma2);
  fill_slot(layout_.cond1);
  fill_slot(layout_.cond2);
  for (int i = 0; i < arch_.action_dim + arch_.z_dim; ++i) {
    params[layout_.action_token + static_cast<std::size_t>(i)] = static_cast<T>(2.0 * uniform01(rng) - 1.0);
  }
  fill_slot(layout_.input);
  for (std::size_t l = 0; l < layout_.block.size(); ++l) {
    fill_slot(layout_.block[l]);
    if (!layout_.film.empty()) fill_slot(layout_.film[l]);
  }
  if (!zero_output) fill_slot(layout_.output);
}

template <class T>
void VectorField<T>::check_cond(const CondBatch<T>& cond, Eigen::Index batch) const {
  auto check = [&](const Mat<T>& m, int rows, const char* what) {
    if (m.rows() != rows || (rows > 0 && m.cols() != batch)) {
      throw std::invalid_argument(std::string("vector field: conditioning '") + what + "' has wrong shape");
    }
    if (!all_finite(m)) throw std::invalid_argument(std::string("vector field: non-finite '") + what + "'");
  };
  check(cond.state, arch_.state_dim, "state");
  check(cond.action, arch_.action_dim, "action");
  check(cond.z, arch_.z_dim, "z");
  for (const auto* mask : {&cond.mask_action, &cond.mask_z}) {
    if (!mask->empty() && static_cast<Eigen::Index>(mask->size()) != batch) {
      throw std::invalid_argument("vector field: mask has wrong length");
    }
  }
  if (arch_.use_gamma) {
    if (cond.gamma.size() != batch) throw std::invalid_argument("vector field: gamma has wrong length");
    for (Eigen::Index j = 0; j < batch; ++j) {
      const T g = cond.gamma(j);
      if (!(g >= T(0) && g < T(1))) throw std::invalid_argument("vector field: gamma must lie in [0, 1)");
    }
  }
}

template <class T>
Mat<T> VectorField<T>::sinusoid(const Vec<T>& t, double scale) const {
  const int half = arch_.embed_dim / 2;
  Mat<T> phi(arch_.embed_dim, t.size());
  for (int i = 0; i < half; ++i) {
    const double freq = scale * std::exp(-std::log(kMaxPeriod) * i / half);
    for (Eigen::Index j = 0; j < t.size(); ++j) {
      const double arg = freq * static_cast<double>(t(j));
      phi(i, j) = static_cast<T>(std::sin(arg));
      phi(half + i, j) = static_cast<T>(std::cos(arg));
    }
  }
  return phi;
}

template <class T>
Mat<T> VectorField<T>::gamma_features(const Vec<T>& g) const {
  Mat<T> phi(arch_.embed_dim + 3, g.size());
  phi.topRows(arch_.embed_dim) = sinusoid(g, arch_.gamma_scale);
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    phi(arch_.embed_dim, j) = g(j);
    phi(arch_.embed_dim + 1, j) = T(1) - g(j);
    phi(arch_.embed_dim + 2, j) = static_cast<T>(-std::log1p(-static_cast<double>(g(j))));
  }
  return phi;
}

template <class T>
Mat<T> VectorField<T>::cond_features(std::span<const T> params, const CondBatch<T>& cond) const {
  const Eigen::Index batch = cond.size();
  Mat<T> c(arch_.cond_dim(), batch);
  const int sd = arch_.state_dim, ad = arch_.action_dim, zd = arch_.z_dim;
  Eigen::Map<const Vec<T>> action_token(params.data() + layout_.action_token, ad);
  Eigen::Map<const Vec<T>> z_token(params.data() + layout_.z_token, zd);
  int flag_row = sd + ad + zd;
  const int z_flag = zd > 0 ? flag_row++ : -1;
  const int a_flag = ad > 0 ? flag_row++ : -1;
  for (Eigen::Index j = 0; j < batch; ++j) {
    const auto uj = static_cast<std::size_t>(j);
    const bool ma = !cond.mask_action.empty() && cond.mask_action[uj];
    const bool mz = !cond.mask_z.empty() && cond.mask_z[uj];
    if (sd > 0) c.col(j).head(sd) = cond.state.col(j);
    if (ad > 0) c.col(j).segment(sd, ad) = ma ? Vec<T>(action_token) : Vec<T>(cond.action.col(j));
    if (zd > 0) c.col(j).segment(sd + ad, zd) = mz ? Vec<T>(z_token) : Vec<T>(cond.z.col(j));
    if (z_flag >= 0) c(z_flag, j) = mz ? T(1) : T(0);
    if (a_flag >= 0) c(a_flag, j) = ma ? T(1) : T(0);
  }
  return c;
}

template <class T>
Mat<T> VectorField<T>::trunk(std::span<const T> params, const Mat<T>& x, const Mat<T>& e, Tape<T>* tape) const {
  const int H = arch_.hidden;
  const bool film = arch_.mixing == Mixing::kFilm;
  Mat<T> h = affine(params, layout_.input, x);
  if (!film) h += e;
  if (tape) {
    tape->h.assign(layout_.block.size() + 1, Mat<T>());
    tape->u.assign(layout_.block.size(), Mat<T>());
    tape->act.assign(layout_.block.size(), Mat<T>());
    tape->film.assign(layout_.block.size(), Mat<T>());
  }
  for (std::size_t l = 0; l < layout_.block.size(); ++l) {
    Mat<T> u;
    Mat<T> f;
    if (film) {
      f = affine(params, layout_.film[l], e);
      u = (h.array() * (T(1) + f.topRows(H).array()) + f.bottomRows(H).array()).matrix();
    } else {
      u = h;
    }
    Mat<T> a = mish(u);
    Mat<T> next = h + affine(params, layout_.block[l], a);
    if (tape) {
      tape->h[l] = std::move(h);
      tape->u[l] = std::move(u);
      tape->act[l] = std::move(a);
      tape->film[l] = std::move(f);
    }
    h = std::move(next);
  }
  Mat<T> act_out = mish(h);
  Mat<T> out = affine(params, layout_.output, act_out);
  if (tape) {
    tape->h.back() = std::move(h);
    tape->act_out = std::move(act_out);
  }
  return out;
}

template <class T>
Mat<T> VectorField<T>::forward(std::span<const T> params, const Mat<T>& x, const Vec<T>& t, const CondBatch<T>& cond,
                               Tape<T>* tape) const {
  if (params.size() != layout_.total) throw std::invalid_argument("vector field: parameter count mismatch");
  const Eigen::Index batch = x.cols();
  if (x.rows() != arch_.x_dim || t.size() != batch) throw std::invalid_argument("vector field: x/t shape mismatch");
  if (!all_finite(x) || !t.allFinite()) throw std::invalid_argument("vector field: non-finite input");
  for (Eigen::Index j = 0; j < batch; ++j) {
    if (t(j) < T(0) || t(j) > T(1)) throw std::invalid_argument("vector field: t must lie in [0, 1]");
  }
  check_cond(cond, batch);

  Mat<T> phi_t = sinusoid(t, arch_.time_scale);
  Mat<T> pre_t = affine(params, layout_.time1, phi_t);
  Mat<T> act_t = mish(pre_t);
  Mat<T> e = affine(params, layout_.time2, act_t);

  Mat<T> phi_g, pre_g, act_g, cond_in, pre_c, act_c;
  if (arch_.use_gamma) {
    phi_g = gamma_features(cond.gamma);
    pre_g = affine(params, layout_.gamma1, phi_g);
    act_g = mish(pre_g);
    e += affine(params, layout_.gamma2, act_g);
  }
  if (arch_.cond_dim() > 0) {
    cond_in = cond_features(params, cond);
    pre_c = affine(params, layout_.cond1, cond_in);
    act_c = mish(pre_c);
    e += affine(params, layout_.cond2, act_c);
  }
  Mat<T> out = trunk(params, x, e, tape);
  if (tape) {
    tape->phi_t = std::move(phi_t);
    tape->pre_t = std::move(pre_t);
    tape->act_t = std::move(act_t);
    tape->phi_g = std::move(phi_g);
    tape->pre_g = std::move(pre_g);
    tape->act_g = std::move(act_g);
    tape->cond_in = std::move(cond_in);
    tape->pre_c = std::move(pre_c);
    tape->act_c = std::move(act_c);
    tape->e = std::move(e);
    tape->x = x;
    tape->mask_action = cond.mask_action;
    tape->mask_z = cond.mask_z;
  }
  return out;
}

template <class T>
void VectorField<T>::backward(std::span<const T> params, const Tape<T>& tape, const Mat<T>& dout,
                              std::span<T> grad) const {
  if (grad.size() != layout_.total) throw std::invalid_argument("backward: gradient size mismatch");
  const int H = arch_.hidden;
  const bool film = arch_.mixing == Mixing::kFilm;
  const Eigen::Index batch = dout.cols();

  affine_grad(grad, layout_.output, dout, tape.act_out);
  Mat<T> dh = weight(params, layout_.output).transpose() * dout;
  mish_backprop(tape.h.back(), dh);

  Mat<T> de = Mat<T>::Zero(H, batch);
  for (std::size_t li = layout_.block.size(); li-- > 0;) {
    affine_grad(grad, layout_.block[li], dh, tape.act[li]);
    Mat<T> du = weight(params, layout_.block[li]).transpose() * dh;
    mish_backprop(tape.u[li], du);
    if (film) {
      Mat<T> dfilm(2 * H, batch);
      dfilm.topRows(H) = (du.array() * tape.h[li].array()).matrix();
      dfilm.bottomRows(H) = du;
      affine_grad(grad, layout_.film[li], dfilm, tape.e);
      de.noalias() += weight(params, layout_.film[li]).transpose() * dfilm;
      dh.array() += du.array() * (T(1) + tape.film[li].topRows(H).array());
    } else {
      dh += du;
    }
  }
  affine_grad(grad, layout_.input, dh, tape.x);
  if (!film) de += dh;

  auto branch = [&](const LinearSlot& l1, const LinearSlot& l2, const Mat<T>& in, const Mat<T>& pre,
                    const Mat<T>& act) {
    affine_grad(grad, l2, de, act);
    Mat<T> d1 = weight(params, l2).transpose() * de;
    mish_backprop(pre, d1);
    affine_grad(grad, l1, d1, in);
    return d1;
  };
  branch(layout_.time1, layout_.time2, tape.phi_t, tape.pre_t, tape.act_t);
  if (arch_.use_gamma) branch(layout_.gamma1, layout_.gamma2, tape.phi_g, tape.pre_g, tape.act_g);
  if (arch_.cond_dim() > 0) {
    const Mat<T> d1 = branch(layout_.cond1, layout_.cond2, tape.cond_in, tape.pre_c, tape.act_c);
    const int sd = arch_.state_dim, ad = arch_.action_dim, zd = arch_.z_dim;
    if (ad + zd > 0) {
      const Mat<T> dcin = weight(params, layout_.cond1).transpose() * d1;
      for (Eigen::Index j = 0; j < batch; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        if (ad > 0 && !tape.mask_action.empty() && tape.mask_action[uj]) {
          Eigen::Map<Vec<T>>(grad.data() + layout_.action_token, ad) += dcin.col(j).segment(sd, ad);
        }
        if (zd > 0 && !tape.mask_z.empty() && tape.mask_z[uj]) {
          Eigen::Map<Vec<T>>(grad.data() + layout_.z_token, zd) += dcin.col(j).segment(sd + ad, zd);
        }
      }
    }
  }
}

template <class T>
T VectorField<T>::loss_grad(std::span<const T> params, const RegressionBatch<T>& batch, std::span<T> grad,
                            Vec<T>* row_sq_err) const {
  const Eigen::Index rows = batch.x.cols();
  if (batch.target.rows() != batch.x.rows() || batch.target.cols() != rows || batch.weight.size() != rows) {
    throw std::invalid_argument("loss_grad: target/weight shape mismatch");
  }
  if (batch.num_groups <= 0) throw std::invalid_argument("loss_grad: num_groups must be positive");
  if (!all_finite(batch.target) || !batch.weight.allFinite()) {
    throw std::invalid_argument("loss_grad: non-finite target or weight");
  }
  Tape<T> tape;
  const Mat<T> v = forward(params, batch.x, batch.t, batch.cond, &tape);
  const Mat<T> diff = v - batch.target;
  const Vec<T> sq = diff.colwise().squaredNorm().transpose();
  const T groups = static_cast<T>(batch.num_groups);
  const T loss = batch.weight.dot(sq) / groups;
  const Vec<T> scale = batch.weight * (T(2) / groups);
  const Mat<T> dout = diff * scale.asDiagonal();
  std::fill(grad.begin(), grad.end(), T(0));
  backward(params, tape, dout, grad);
  if (row_sq_err) *row_sq_err = sq;
  return loss;
}

template <class T>
Mat<T> VectorField<T>::context(std::span<const T> params, const CondBatch<T>& cond) const {
  if (params.size() != layout_.total) throw std::invalid_argument("vector field: parameter count mismatch");
  const Eigen::Index batch = cond.size();
  check_cond(cond, batch);
  Mat<T> e = Mat<T>::Zero(arch_.hidden, batch);
  if (arch_.use_gamma) {
    e += affine(params, layout_.gamma2, mish(affine(params, layout_.gamma1, gamma_features(cond.gamma))));
  }
  if (arch_.cond_dim() > 0) {
    e += affine(params, layout_.cond2, mish(affine(params, layout_.cond1, cond_features(params, cond))));
  }
  return e;
}

template <class T>
Mat<T> VectorField<T>::velocity(std::span<const T> params, const Mat<T>& x, T t, const Mat<T>& context) const {
  if (x.rows() != arch_.x_dim || context.rows() != arch_.hidden || context.cols() != x.cols()) {
    throw std::invalid_argument("velocity: shape mismatch");
  }
  if (!all_finite(x)) throw std::invalid_argument("velocity: non-finite input");
  Vec<T> tv(1);
  tv(0) = t;
  const Mat<T> et = affine(params, layout_.time2, mish(affine(params, layout_.time1, sinusoid(tv, arch_.time_scale))));
  Mat<T> e = context;
  e.colwise() += et.col(0);
  return trunk(params, x, e, nullptr);
}

template <class T>
Mat<T> VectorField<T>::integrate(std::span<const T> params, const Mat<T>& x0, const Mat<T>& context, double dt) const {
  return euler_integrate<T>(x0, dt, [&](const Mat<T>& x, T t) { return velocity(params, x, t, context); });
}

template <class T>
Mat<T> VectorField<T>::integrate_to(std::span<const T> params, const Mat<T>& x0, const Mat<T>& context,
                                    const Vec<T>& t_end, double dt) const {
  const int steps = euler_steps(dt);
  const double h = 1.0 / steps;
  const Eigen::Index batch = x0.cols();
  if (t_end.size() != batch || context.cols() != batch) throw std::invalid_argument("integrate_to: shape mismatch");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(batch));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return t_end(a) > t_end(b); });

  Mat<T> xs(x0.rows(), batch), cs(context.rows(), batch);
  std::vector<int> full(static_cast<std::size_t>(batch));
  std::vector<double> rem(static_cast<std::size_t>(batch));
  for (Eigen::Index j = 0; j < batch; ++j) {
    const auto src = order[static_cast<std::size_t>(j)];
    const double te = static_cast<double>(t_end(src));
    if (!(te >= 0.0 && te <= 1.0)) throw std::invalid_argument("integrate_to: t must lie in [0, 1]");
    xs.col(j) = x0.col(src);
    cs.col(j) = context.col(src);
    const int n = std::min(steps, static_cast<int>(std::floor(te * steps)));
    full[static_cast<std::size_t>(j)] = n;
    rem[static_cast<std::size_t>(j)] = std::max(0.0, te - n * h);
  }
  for (int k = 0; k < steps; ++k) {
    Eigen::Index active = 0;
    while (active < batch && (full[static_cast<std::size_t>(active)] > k ||
                              (full[static_cast<std::size_t>(active)] == k && rem[static_cast<std::size_t>(active)] > 0.0))) {
      ++active;
    }
    if (active == 0) break;
    const Mat<T> v = velocity(params, Mat<T>(xs.leftCols(active)), static_cast<T>(k * h), Mat<T>(cs.leftCols(active)));
    for (Eigen::Index j = 0; j < active; ++j) {
      const auto uj = static_cast<std::size_t>(j);
      const double step = full[uj] > k ? h : rem[uj];
      xs.col(j) += static_cast<T>(step) * v.col(j);
    }
    if (!all_finite(Mat<T>(xs.leftCols(active)))) throw NumericError("integrate_flow: non-finite state during integration");
  }
  Mat<T> out(x0.rows(), batch);
  for (Eigen::Index j = 0; j < batch; ++j) out.col(order[static_cast<std::size_t>(j)]) = xs.col(j);
  return out;
}

template struct CondBatch<float>;
template struct CondBatch<double>;
template class VectorField<float>;
template class VectorField<double>;

}  // namespace gspplan::flow
