#pragma once

#include <Eigen/Dense>
#include <utility>

#include "npamp/dataset.hpp"

namespace npamp {

/// F = sqrt(p/n) U D_hat U' from the thin SVD X = U D V'.
struct PufferTransform {
  Eigen::MatrixXd f;                // n x n
  Eigen::VectorXd d_hat;            // sqrt(n) if D_ii <= 1/sqrt(n), else 1/D_ii
  Eigen::VectorXd singular_values;  // D_ii, descending
  Eigen::MatrixXd u;                // left singular vectors, first nonzero entry of each column positive
};

/// The D_hat rule applied to one singular value.
double puffer_d_hat(double singular_value, Eigen::Index n);

PufferTransform puffer_of(const Eigen::MatrixXd& x);

/// Returns (F y, F X) and the transform. Rejects n > p.
std::pair<Dataset, PufferTransform> puffer_transform(const Dataset& data);

}  // namespace npamp
