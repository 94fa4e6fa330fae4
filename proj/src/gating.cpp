#include "fmpre/gating.hpp"

#include "fmpre/errors.hpp"

#include <algorithm>
#include <cmath>

namespace fmpre {

namespace {

void check_alpha(const MatrixXd& Omega, const MatrixXd& alpha, int reference) {
  if (alpha.rows() != Omega.cols()) throw ContractViolation("alpha rows must equal Omega columns");
  if (reference < 0 || reference >= alpha.cols()) throw ContractViolation("reference out of range");
  if (!alpha.col(reference).isZero(0.0))
    throw ContractViolation("reference gating vector must be zero");
}

void check_partition(const MatrixXd& Omega, const MatrixXd& alpha, const PartitionState& part) {
  if (static_cast<Eigen::Index>(part.assignment.size()) != Omega.rows() ||
      part.J() != alpha.cols())
    throw ContractViolation("partition does not match gating design");
}

}  // namespace

MatrixXd gating_probabilities(const MatrixXd& Omega, const MatrixXd& alpha, int reference) {
  check_alpha(Omega, alpha, reference);
  MatrixXd pi = Omega * alpha;
  for (Eigen::Index i = 0; i < pi.rows(); ++i) {
    const double mx = pi.row(i).maxCoeff();
    pi.row(i) = (pi.row(i).array() - mx).exp();
    pi.row(i) /= pi.row(i).sum();
  }
  return pi;
}

GatingWorkspace build_gating_workspace(const MatrixXd& Omega, const MatrixXd& alpha_t,
                                       int reference, const PartitionState& part, int j) {
  check_partition(Omega, alpha_t, part);
  if (j < 0 || j >= alpha_t.cols()) throw ContractViolation("class index out of range");
  GatingWorkspace ws;
  ws.Omega = Omega;
  ws.pi = gating_probabilities(Omega, alpha_t, reference);
  ws.klass = j;
  const auto n = Omega.rows();
  ws.w.resize(n);
  ws.u.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double pij = ws.pi(i, j);
    const double floored = std::clamp(pij, kPiFloor, 1.0 - kPiFloor);
    ws.w[i] = floored * (1.0 - floored);
    ws.u[i] = (part.assignment[static_cast<std::size_t>(i)] == j ? 1.0 : 0.0) - pij;
  }
  ws.v = Omega * alpha_t.col(j) + ws.u.cwiseQuotient(ws.w);
  return ws;
}

VectorXd irwls_alpha_step(const GatingWorkspace& ws, const Penalty& penalty) {
  const auto q = ws.Omega.cols();
  penalty.validate(q);
  const MatrixXd OtW = ws.Omega.transpose() * ws.w.asDiagonal();
  const MatrixXd gram = OtW * ws.Omega;
  VectorXd rhs = OtW * ws.v;
  if (penalty.kind == Penalty::Kind::LiuType) rhs += penalty.rhs_shift(q);
  return solve_penalized(gram, rhs, penalty.effective_lambda(), penalty.mask(q));
}

double q1_objective(const MatrixXd& Omega, const MatrixXd& alpha, int reference,
                    const PartitionState& part, const std::vector<Penalty>& penalties) {
  check_alpha(Omega, alpha, reference);
  check_partition(Omega, alpha, part);
  const MatrixXd lg = log_gating(Omega, alpha);
  double total = 0.0;
  for (Eigen::Index i = 0; i < Omega.rows(); ++i)
    total += lg(i, part.assignment[static_cast<std::size_t>(i)]);
  for (Eigen::Index j = 0; j < alpha.cols(); ++j) {
    if (j == reference || static_cast<std::size_t>(j) >= penalties.size()) continue;
    total -= penalties[static_cast<std::size_t>(j)].value(alpha.col(j));
  }
  return total;
}

VectorXd q1_gradient(const MatrixXd& Omega, const MatrixXd& alpha, int reference,
                     const PartitionState& part, int j, const Penalty& penalty) {
  check_partition(Omega, alpha, part);
  const MatrixXd pi = gating_probabilities(Omega, alpha, reference);
  VectorXd u(Omega.rows());
  for (Eigen::Index i = 0; i < Omega.rows(); ++i)
    u[i] = (part.assignment[static_cast<std::size_t>(i)] == j ? 1.0 : 0.0) - pi(i, j);
  return Omega.transpose() * u + penalty.gradient(alpha.col(j));
}

CoordinateDescentResult coordinate_descent_alphas(const MatrixXd& Omega, const MatrixXd& alpha_t,
                                                  int reference, const PartitionState& part,
                                                  const std::vector<Penalty>& penalties,
                                                  const CoordinateDescentOptions& opts) {
  check_alpha(Omega, alpha_t, reference);
  check_partition(Omega, alpha_t, part);
  if (static_cast<Eigen::Index>(penalties.size()) != alpha_t.cols())
    throw ContractViolation("need one penalty per gating class");

  CoordinateDescentResult res;
  res.alpha = alpha_t;
  for (int sweep = 0; sweep < opts.inner_max; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < alpha_t.cols(); ++j) {
      if (j == reference) continue;
      const Penalty& pen = penalties[static_cast<std::size_t>(j)];
      const GatingWorkspace ws =
          build_gating_workspace(Omega, res.alpha, reference, part, static_cast<int>(j));
      const VectorXd old = res.alpha.col(j);
      VectorXd proposal = irwls_alpha_step(ws, pen);

      if (opts.step_acceptance) {
        const double before = q1_objective(Omega, res.alpha, reference, part, penalties);
        double t = 1.0;
        bool accepted = false;
        for (int h = 0; h <= opts.max_halvings; ++h) {
          if (h == 0)
            res.alpha.col(j) = proposal;
          else
            res.alpha.col(j) = old + t * (proposal - old);
          const double after = q1_objective(Omega, res.alpha, reference, part, penalties);
          if (std::isfinite(after) && after >= before) {
            accepted = true;
            break;
          }
          t *= 0.5;
        }
        if (!accepted) {
          res.alpha.col(j) = old;
          ++res.rejected_updates;
        }
      } else {
        res.alpha.col(j) = proposal;
      }
      max_change = std::max(max_change, (res.alpha.col(j) - old).cwiseAbs().maxCoeff());
    }
    res.sweeps = sweep + 1;
    if (max_change < opts.inner_tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace fmpre
