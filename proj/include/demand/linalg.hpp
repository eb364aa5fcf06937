#pragma once

#include <optional>
#include <span>

#include <Eigen/Dense>

namespace demand {

struct RidgeOptions {
  /// Per-row weights; empty means unit weights.
  Eigen::VectorXd weights;
  /// Per-column penalty multipliers applied to `lambda`; empty means all ones.
  Eigen::VectorXd penalty_scale;
  bool standardize = true;
};

/// Linear model y = intercept + coef . x in original feature units.
struct LinearFit {
  double intercept = 0.0;
  Eigen::VectorXd coef;
  Eigen::VectorXd mean;   // column means used for centering
  Eigen::VectorXd scale;  // column scales (1 for unstandardized / dropped columns)
  Eigen::VectorXd standardized_coef;
  std::vector<bool> active;  // false for constant columns, whose coefficient is exactly 0

  double predict(std::span<const double> x) const;
};

/// Minimizes sum w_i (y_i - b0 - z_i . beta)^2 + lambda * sum p_j beta_j^2 where z are the
/// (optionally standardized) centered columns. The intercept is never penalized and
/// constant columns are dropped. Throws SingularDesign when the unpenalized part of the
/// system is rank deficient.
LinearFit fit_ridge(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                    const RidgeOptions& options = {});

}  // namespace demand
