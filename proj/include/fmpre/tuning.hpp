#pragma once

// Plug-in ridge parameters and Liu-type bias-correction parameters.

#include "fmpre/model.hpp"

#include <functional>

namespace fmpre {

inline constexpr double kLambdaMax = 1e6;

struct RidgeLambdas {
  VectorXd lambda_beta;
  VectorXd lambda_alpha;
  std::vector<bool> beta_capped;
  std::vector<bool> alpha_capped;
};

/// lambda_j = p / (b_j'b_j), lambda*_j = q / (a_j'a_j); zero-norm sources
/// (the reference class) are capped at kLambdaMax and flagged.
RidgeLambdas estimate_ridge_lambdas(const Coefficients& source, int p, int q);

/// MSE(d) = a d^2 + b d + c.
struct MseQuadratic {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double d_opt = 0.0;

  double operator()(double d) const { return (a * d + b) * d + c; }
};

struct DRange {
  double lo;
  double hi;
};

/// tr[B A B'] + ||B X'W mu - beta||^2 with A = X'WX and
/// B(d) = (A + lambda I)^{-1} (A - d I) (A + lambda I)^{-1}; W = diag(w).
double lt_mse_beta(double d, const MatrixXd& Xj, const VectorXd& wj, double lambda,
                   const VectorXd& beta_plugin, const VectorXd& mu_plugin,
                   bool penalize_intercept = true);

/// Gating counterpart: A = Omega' Wg Omega and mean term Omega' Wg pi_j.
double lt_mse_alpha(double d_star, const MatrixXd& Omega, const VectorXd& wg_j, double lambda_star,
                    const VectorXd& alpha_plugin, const VectorXd& pi_plugin,
                    bool penalize_intercept = true);

/// Recovers the quadratic from evaluations at d = -1, 0, 1.
MseQuadratic mse_quadratic(const std::function<double(double)>& mse_fn);

inline constexpr int kFallbackGridPoints = 512;

/// Minimiser of an exactly quadratic MSE: closed form -b / 2a clipped to the
/// range when a > 1e-14, otherwise the argmin over a 512-point grid.
/// Throws TuningFailed on non-finite evaluations.
double optimize_bias_correction(const std::function<double(double)>& mse_fn, DRange range);

/// Ridge-stage tuning: lambdas from the ML fit, d = 0, no anchor.
TuningParams ridge_tuning(const Coefficients& ml_fit, int p, int q);

/// Liu-type tuning from the ridge fit: lambdas from the ridge estimates, d_j and
/// d*_j minimising the plug-in MSE with W frozen at the ridge estimates,
/// using the partition that produced them. The anchor is the ridge fit.
TuningParams liu_type_tuning(const Dataset& data, const Coefficients& ridge_fit,
                             const PartitionState& part, bool penalize_intercept = true);

/// d_j for one component given its rows (used for per-iteration retuning).
double optimal_d_beta(const MatrixXd& Xj, double lambda, const VectorXd& beta_plugin,
                      bool penalize_intercept = true);

}  // namespace fmpre
