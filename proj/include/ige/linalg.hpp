#ifndef IGE_LINALG_HPP
#define IGE_LINALG_HPP

#include <Eigen/Dense>

namespace ige {

// 2-norm condition number of a rectangular full-column-rank matrix.
// Throws RankDeficient when the smallest singular value vanishes.
double condition_number(const Eigen::MatrixXd& P);

// Rows of the left inverse P^+ = (P^T P)^{-1} P^T, computed through a
// thin SVD for stability.  Row i bounds the per-pair estimation error.
Eigen::MatrixXd left_inverse(const Eigen::MatrixXd& P);

// Minimum-residual solution of P x = b via column-pivoted QR.
Eigen::VectorXd solve_least_squares(const Eigen::MatrixXd& P, const Eigen::VectorXd& b);

double smallest_singular_value(const Eigen::MatrixXd& P);

}  // namespace ige

#endif
