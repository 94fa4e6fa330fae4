#pragma once

// Per-component Poisson GLM algebra: means, IRWLS working quantities and one
// penalised IRWLS update for the regression coefficients of a component.

#include "fmpre/model.hpp"
#include "fmpre/penalty.hpp"

namespace fmpre {

struct MeanValue {
  double value;
  bool clamped;  // true when exp(x'b) fell outside [1e-300, 1e300]
};

/// mu = exp(x'beta), clamped into [1e-300, 1e300].
MeanValue poisson_mean(const VectorXd& x_row, const VectorXd& beta);

/// Rows of component j with the working quantities evaluated at beta_t:
/// w = mu and z_star = X beta_t + (y - mu) / mu, elementwise.
struct ComponentWorkspace {
  MatrixXd X;
  VectorXd y;
  VectorXd mu;
  VectorXd w;
  VectorXd z_star;
  int clamped = 0;  // number of means that hit the clamp window
};

ComponentWorkspace make_workspace(MatrixXd X, VectorXd y, const VectorXd& beta_t);

/// Workspace for the observations the partition assigns to component j.
/// Throws EmptyPartition when that component has no observations.
ComponentWorkspace build_workspace(const Dataset& data, const PartitionState& part, int j,
                                   const VectorXd& beta_t);

/// One IRWLS update: (X'WX + lambda I)^{-1} (X'W z* + shift), where the shift is
/// -d * anchor for the Liu-type penalty and zero otherwise.
VectorXd irwls_beta_step(const ComponentWorkspace& ws, const Penalty& penalty);

/// Penalised Poisson objective sum_i [y_i x_i'b - exp(x_i'b) - log y_i!] - penalty(b).
double q2_objective(const ComponentWorkspace& ws, const VectorXd& beta, const Penalty& penalty);

/// Gradient of q2_objective: X'(y - mu(b)) - lambda b [- d * anchor].
VectorXd q2_gradient(const ComponentWorkspace& ws, const VectorXd& beta, const Penalty& penalty);

}  // namespace fmpre
