#include "npamp/puffer.hpp"

#include <cmath>

#include "npamp/errors.hpp"

namespace npamp {

double puffer_d_hat(double singular_value, Eigen::Index n) {
  const double root_n = std::sqrt(static_cast<double>(n));
  return singular_value <= 1.0 / root_n ? root_n : 1.0 / singular_value;
}

PufferTransform puffer_of(const Eigen::MatrixXd& x) {
  require(x.allFinite(), "puffer: design must be finite");
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  require(n >= 1 && n <= p, "puffer: requires n <= p");

  Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU);
  if (svd.info() != Eigen::Success) throw NumericalError("puffer: SVD failed");

  PufferTransform out;
  out.u = svd.matrixU();
  out.singular_values = svd.singularValues();
  for (Eigen::Index k = 0; k < out.u.cols(); ++k) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (out.u(i, k) != 0.0) {
        if (out.u(i, k) < 0.0) out.u.col(k) *= -1.0;
        break;
      }
    }
  }
  out.d_hat.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) out.d_hat[i] = puffer_d_hat(out.singular_values[i], n);
  const double scale = std::sqrt(static_cast<double>(p) / static_cast<double>(n));
  out.f = scale * out.u * out.d_hat.asDiagonal() * out.u.transpose();
  out.f = 0.5 * (out.f + out.f.transpose()).eval();
  return out;
}

std::pair<Dataset, PufferTransform> puffer_transform(const Dataset& data) {
  validate(data);
  require(data.n() <= data.p(), "decorrelate: n > p is not supported");
  PufferTransform transform = puffer_of(data.x);
  Dataset out;
  out.y = transform.f * data.y;
  out.x = transform.f * data.x;
  out.names = data.names;
  return {std::move(out), std::move(transform)};
}

}  // namespace npamp
