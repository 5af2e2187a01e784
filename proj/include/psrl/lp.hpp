#pragma once

// Small dense linear programs for alpha-vector pruning.

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace psrl::lp {

enum class Status { kOptimal, kUnbounded };

struct Solution {
  Status status = Status::kOptimal;
  Eigen::VectorXd x;
  double objective = 0;
};

/// max c^T x  s.t.  A x <= rhs, x >= 0, with rhs >= 0 (the origin is feasible).
/// Tableau simplex with Bland's rule, so degenerate pivots cannot cycle.
Solution maximize(const Eigen::VectorXd& c, const Eigen::MatrixXd& A, const Eigen::VectorXd& rhs);

struct Witness {
  Eigen::VectorXd belief;  // on the simplex
  double margin = 0;       // <alpha - u, belief> for the best competitor u
};

/// Belief where `alpha` beats every vector in `others` by the largest margin,
/// if that margin exceeds `tol`.
std::optional<Witness> find_witness(const Eigen::VectorXd& alpha, const std::vector<Eigen::VectorXd>& others,
                                    double tol);

}  // namespace psrl::lp
