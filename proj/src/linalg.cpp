#include "demand/linalg.hpp"

#include <cmath>

#include "demand/error.hpp"

namespace demand {

double LinearFit::predict(std::span<const double> x) const {
  double s = intercept;
  for (Eigen::Index j = 0; j < coef.size(); ++j) s += coef[j] * x[std::size_t(j)];
  return s;
}

LinearFit fit_ridge(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                    const RidgeOptions& options) {
  const Eigen::Index n = X.rows(), d = X.cols();
  if (n < 1 || y.size() != n) throw Error(ErrorCode::InvalidArgument, "ridge: bad shapes");
  if (lambda < 0.0 || !std::isfinite(lambda))
    throw Error(ErrorCode::InvalidArgument, "ridge: lambda must be >= 0");
  const Eigen::VectorXd w =
      options.weights.size() == n ? options.weights : Eigen::VectorXd::Ones(n);
  const double wsum = w.sum();
  if (!(wsum > 0.0)) throw Error(ErrorCode::DegenerateSamples, "ridge: zero total weight");

  LinearFit fit;
  fit.coef = Eigen::VectorXd::Zero(d);
  fit.standardized_coef = Eigen::VectorXd::Zero(d);
  fit.mean = (X.transpose() * w) / wsum;
  fit.scale = Eigen::VectorXd::Ones(d);
  fit.active.assign(std::size_t(d), false);
  const double ymean = y.dot(w) / wsum;

  std::vector<Eigen::Index> cols;
  for (Eigen::Index j = 0; j < d; ++j) {
    bool constant = true;
    for (Eigen::Index i = 1; i < n && constant; ++i)
      constant = X(i, j) == X(0, j) || w[i] == 0.0;
    if (constant) continue;
    if (options.standardize) {
      const double var = (X.col(j).array() - fit.mean[j]).square().matrix().dot(w) / wsum;
      if (!(var > 0.0)) continue;
      fit.scale[j] = std::sqrt(var);
    }
    fit.active[std::size_t(j)] = true;
    cols.push_back(j);
  }

  bool y_constant = true;
  for (Eigen::Index i = 1; i < n && y_constant; ++i) y_constant = y[i] == y[0];
  if (cols.empty() || y_constant) {
    fit.intercept = y_constant ? y[0] : ymean;
    return fit;
  }

  const Eigen::Index m = Eigen::Index(cols.size());
  Eigen::MatrixXd Z(n, m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const Eigen::Index j = cols[std::size_t(k)];
    Z.col(k) = (X.col(j).array() - fit.mean[j]) / fit.scale[j];
  }
  const Eigen::VectorXd sw = w.cwiseSqrt();
  const Eigen::MatrixXd Zw = sw.asDiagonal() * Z;
  const Eigen::VectorXd yw = sw.asDiagonal() * (y.array() - ymean).matrix();

  Eigen::VectorXd beta;
  if (lambda == 0.0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Zw);
    qr.setThreshold(1e-10);
    if (qr.rank() < m)
      throw Error(ErrorCode::SingularDesign,
                  "design has rank " + std::to_string(qr.rank()) + " < " + std::to_string(m));
    beta = qr.solve(yw);
  } else {
    Eigen::MatrixXd A = Zw.transpose() * Zw;
    for (Eigen::Index k = 0; k < m; ++k) {
      const Eigen::Index j = cols[std::size_t(k)];
      const double p = options.penalty_scale.size() == d ? options.penalty_scale[j] : 1.0;
      A(k, k) += lambda * p;
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
      throw Error(ErrorCode::SingularDesign, "penalized normal equations not positive definite");
    beta = ldlt.solve(Zw.transpose() * yw);
  }

  fit.intercept = ymean;
  for (Eigen::Index k = 0; k < m; ++k) {
    const Eigen::Index j = cols[std::size_t(k)];
    fit.standardized_coef[j] = beta[k];
    fit.coef[j] = beta[k] / fit.scale[j];
    fit.intercept -= fit.coef[j] * fit.mean[j];
  }
  return fit;
}

}  // namespace demand
