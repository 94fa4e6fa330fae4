#pragma once

// Multinomial-logit expert network: gating probabilities, per-class IRWLS
// quantities and the coordinate-descent update of the gating coefficients.

#include "fmpre/model.hpp"
#include "fmpre/penalty.hpp"

#include <vector>

namespace fmpre {

/// Floor applied to pi before forming the working weights and their inverse.
inline constexpr double kPiFloor = 1e-10;

/// n x J row-stochastic matrix pi_ij = softmax_j(omega_i' alpha_j).
/// alpha is q x J; the reference column must be zero.
MatrixXd gating_probabilities(const MatrixXd& Omega, const MatrixXd& alpha, int reference);

/// Working quantities for class j at alpha_t. `pi` is the unfloored
/// row-stochastic matrix; `w` uses pi floored to [1e-10, 1 - 1e-10].
struct GatingWorkspace {
  MatrixXd Omega;
  MatrixXd pi;
  int klass = 0;
  VectorXd w;  // pi_ij (1 - pi_ij)
  VectorXd u;  // 1{z_i = j} - pi_ij
  VectorXd v;  // Omega alpha_j + u / w
};

GatingWorkspace build_gating_workspace(const MatrixXd& Omega, const MatrixXd& alpha_t,
                                       int reference, const PartitionState& part, int j);

/// (Omega' W Omega + lambda* I)^{-1} (Omega' W v + shift), shift = -d* anchor for LT.
VectorXd irwls_alpha_step(const GatingWorkspace& ws, const Penalty& penalty);

/// Multinomial log-likelihood sum_i log pi_{i, z_i}(alpha) minus the penalties
/// of every non-reference class (penalties indexed by class).
double q1_objective(const MatrixXd& Omega, const MatrixXd& alpha, int reference,
                    const PartitionState& part, const std::vector<Penalty>& penalties);

/// Gradient of q1_objective with respect to alpha_j: Omega'U_j - lambda* alpha_j [- d* anchor].
VectorXd q1_gradient(const MatrixXd& Omega, const MatrixXd& alpha, int reference,
                     const PartitionState& part, int j, const Penalty& penalty);

struct CoordinateDescentOptions {
  double inner_tol = 1e-8;
  int inner_max = 50;
  /// Halve a class update (up to this many times) when it lowers the penalised objective.
  int max_halvings = 10;
  bool step_acceptance = true;
};

struct CoordinateDescentResult {
  MatrixXd alpha;
  int sweeps = 0;
  bool converged = false;
  int rejected_updates = 0;
};

/// Cycles over the non-reference classes, one IRWLS step each, recomputing pi
/// after every class update, until the largest coordinate change is below
/// inner_tol or inner_max sweeps have run. penalties has one entry per class
/// (the reference entry is ignored).
CoordinateDescentResult coordinate_descent_alphas(const MatrixXd& Omega, const MatrixXd& alpha_t,
                                                  int reference, const PartitionState& part,
                                                  const std::vector<Penalty>& penalties,
                                                  const CoordinateDescentOptions& opts = {});

}  // namespace fmpre
