#include "ige/linalg.hpp"

#include "ige/errors.hpp"

namespace ige {

double condition_number(const Eigen::MatrixXd& P) {
    if (P.size() == 0) throw DimensionMismatch("condition_number: empty matrix");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(P);
    const auto& s = svd.singularValues();
    const double smin = s(s.size() - 1);
    if (smin <= 0.0 || !(smin > s(0) * 1e-15))
        throw RankDeficient("condition_number: smallest singular value is zero");
    return s(0) / smin;
}

Eigen::MatrixXd left_inverse(const Eigen::MatrixXd& P) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(P, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    if (s(s.size() - 1) <= s(0) * 1e-13)
        throw RankDeficient("left_inverse: matrix is not full column rank");
    return svd.matrixV() * s.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
}

Eigen::VectorXd solve_least_squares(const Eigen::MatrixXd& P, const Eigen::VectorXd& b) {
    if (P.rows() != b.size()) throw DimensionMismatch("solve_least_squares: row mismatch");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(P);
    if (qr.rank() < P.cols()) throw RankDeficient("solve_least_squares: rank-deficient system");
    return qr.solve(b);
}

double smallest_singular_value(const Eigen::MatrixXd& P) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(P);
    return svd.singularValues()(svd.singularValues().size() - 1);
}

}  // namespace ige
