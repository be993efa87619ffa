#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace npamp {

/// Observed responses and design: y has length n, x is n x p.
struct Dataset {
  Eigen::VectorXd y;
  Eigen::MatrixXd x;
  std::vector<std::string> names;  // predictor names; may be empty

  Eigen::Index n() const { return x.rows(); }
  Eigen::Index p() const { return x.cols(); }
};

/// Throws std::invalid_argument on row-count mismatch, non-finite entries or
/// n < 2.
void validate(const Dataset& data);

}  // namespace npamp
