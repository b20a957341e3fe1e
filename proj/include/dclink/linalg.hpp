#pragma once

#include <Eigen/Dense>

namespace dclink::lti {

/// Diagonal similarity scaling (Parlett-Reinsch, powers of two so the
/// transform is exact). Returns the scaling d with A_out = D^-1 A_in D.
Eigen::VectorXd balance_in_place(Eigen::MatrixXd& a);

}  // namespace dclink::lti
