#pragma once

#include <Eigen/Dense>

namespace axon {

/// Dense matrix exponential by scaling-and-squaring with a degree-13 Pade
/// approximant (Higham's algorithm, truncated to the defaults that matter
/// for small dense matrices).
Eigen::MatrixXd expm(const Eigen::MatrixXd& A);

}  // namespace axon
