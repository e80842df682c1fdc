#pragma once

#include <Eigen/Dense>

namespace dicke {

/// exp(A) by scaling and squaring with a diagonal Padé approximant of degree
/// 3, 5, 7, 9 or 13 chosen from the 1-norm of A (Higham 2005 thresholds).
/// Does not diagonalize, so defective and non-normal inputs are fine.
Eigen::MatrixXd expm(const Eigen::MatrixXd& a);

}  // namespace dicke
