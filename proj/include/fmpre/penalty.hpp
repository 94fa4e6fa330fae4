#pragma once

// Penalties shared by the Poisson component and gating updates, and the
// symmetric positive-definite solve they both go through.

#include "fmpre/model.hpp"

namespace fmpre {

struct Penalty {
  enum class Kind { ML, Ridge, LiuType };

  Kind kind = Kind::ML;
  double lambda = 0.0;
  double d = 0.0;
  VectorXd anchor;  // ridge estimate the Liu-type term shrinks towards
  bool penalize_intercept = true;
  LtSign sign = LtSign::Subtract;

  static Penalty ml() { return {}; }
  static Penalty ridge(double lambda);
  static Penalty liu_type(double lambda, double d, VectorXd anchor);

  /// lambda actually applied (0 for ML).
  double effective_lambda() const noexcept { return kind == Kind::ML ? 0.0 : lambda; }
  /// 1 for penalised coordinates, 0 for an unpenalised intercept.
  VectorXd mask(Eigen::Index dim) const;
  /// Signed Liu-type shift s * d * anchor added to the normal-equation rhs
  /// (zero vector unless kind == LiuType).
  VectorXd rhs_shift(Eigen::Index dim) const;
  /// Penalty subtracted from the log-likelihood objective.
  double value(const VectorXd& b) const;
  /// Gradient of (-value) with respect to b.
  VectorXd gradient(const VectorXd& b) const;

  void validate(Eigen::Index dim) const;
};

/// Reciprocal condition below which an unpenalised system counts as singular.
inline constexpr double kSingularRcond = 1e-12;

/// Solves (gram + lambda * diag(mask)) b = rhs with a Cholesky factorisation.
/// Throws SingularSystem when lambda == 0 and the system is ill-conditioned
/// (rcond < kSingularRcond) or not positive definite, NumericalFailure when
/// the result is not finite.
VectorXd solve_penalized(const MatrixXd& gram, const VectorXd& rhs, double lambda,
                         const VectorXd& mask);

}  // namespace fmpre
