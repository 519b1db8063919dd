#pragma once

#include <vector>

#include <Eigen/Dense>

namespace gspplan::eval {

struct EmdResult {
  double value = 0.0;  // mean matched Euclidean distance
  bool exact = true;   // false when the entropic approximation was used
  double regularization = 0.0;
};

// Optimal assignment between two equal-size point sets (columns). Sets of at
// most exact_limit points are solved exactly with the Hungarian method;
// larger sets use log-domain Sinkhorn with epsilon = regularization times the
// mean pairwise distance, and the result is flagged.
EmdResult emd(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int exact_limit = 512,
              double regularization = 0.01);

// Minimum-cost perfect matching for a square cost matrix; returns the column
// assigned to each row.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

// Position rows (first two coordinates) of 4-d states, as columns.
Eigen::MatrixXd positions(const std::vector<Eigen::Vector4d>& states);
Eigen::MatrixXd full_states(const std::vector<Eigen::Vector4d>& states);

}  // namespace gspplan::eval
