#include "gspplan/eval/emd.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace gspplan::eval {

std::vector<int> solve_assignment(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw std::invalid_argument("solve_assignment: cost matrix must be square");
  // Shortest augmenting paths with row/column potentials (1-based, column 0 is a sentinel).
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(static_cast<std::size_t>(n));
  for (int j = 1; j <= n; ++j) row_to_col[static_cast<std::size_t>(p[j] - 1)] = j - 1;
  return row_to_col;
}

namespace {

double log_sum_exp(const Eigen::VectorXd& x) {
  const double m = x.maxCoeff();
  return m + std::log((x.array() - m).exp().sum());
}

double sinkhorn(const Eigen::MatrixXd& C, double eps) {
  const auto n = C.rows();
  const double log_w = -std::log(static_cast<double>(n));
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n), g = Eigen::VectorXd::Zero(n);
  for (int it = 0; it < 2000; ++it) {
    Eigen::VectorXd f_old = f;
    for (Eigen::Index i = 0; i < n; ++i) f(i) = -eps * log_sum_exp((g - C.row(i).transpose()) / eps) - eps * log_w;
    for (Eigen::Index j = 0; j < n; ++j) g(j) = -eps * log_sum_exp((f - C.col(j)) / eps) - eps * log_w;
    if ((f - f_old).cwiseAbs().maxCoeff() < 1e-9 * std::max(1.0, C.maxCoeff())) break;
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) total += std::exp((f(i) + g(j) - C(i, j)) / eps + 2 * log_w) * C(i, j);
  }
  return total;
}

}  // namespace

EmdResult emd(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int exact_limit, double regularization) {
  if (a.cols() == 0 || b.cols() == 0) throw std::invalid_argument("emd: empty point set");
  if (a.cols() != b.cols()) throw std::invalid_argument("emd: point sets must have equal size");
  if (a.rows() != b.rows()) throw std::invalid_argument("emd: point dimensions differ");
  const auto n = a.cols();
  Eigen::MatrixXd C(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) C(i, j) = (a.col(i) - b.col(j)).norm();
  }
  EmdResult r;
  if (n <= exact_limit) {
    const auto match = solve_assignment(C);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) total += C(i, match[static_cast<std::size_t>(i)]);
    r.value = total / static_cast<double>(n);
    return r;
  }
  r.exact = false;
  r.regularization = regularization;
  const double scale = C.mean();
  r.value = scale > 0.0 ? sinkhorn(C, regularization * scale) : 0.0;
  return r;
}

Eigen::MatrixXd positions(const std::vector<Eigen::Vector4d>& states) {
  Eigen::MatrixXd m(2, static_cast<Eigen::Index>(states.size()));
  for (std::size_t i = 0; i < states.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = states[i].head<2>();
  return m;
}

Eigen::MatrixXd full_states(const std::vector<Eigen::Vector4d>& states) {
  Eigen::MatrixXd m(4, static_cast<Eigen::Index>(states.size()));
  for (std::size_t i = 0; i < states.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = states[i];
  return m;
}

}  // namespace gspplan::eval
