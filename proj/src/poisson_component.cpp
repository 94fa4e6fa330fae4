#include "fmpre/poisson_component.hpp"

#include "fmpre/errors.hpp"

#include <algorithm>
#include <cmath>

namespace fmpre {

namespace {

double clamp_eta(double eta, bool& clamped) {
  clamped = eta > kMaxLogMean || eta < kMinLogMean;
  return std::clamp(eta, kMinLogMean, kMaxLogMean);
}

}  // namespace

MeanValue poisson_mean(const VectorXd& x_row, const VectorXd& beta) {
  if (x_row.size() != beta.size()) throw ContractViolation("x and beta differ in length");
  bool clamped = false;
  const double eta = clamp_eta(x_row.dot(beta), clamped);
  return {std::exp(eta), clamped};
}

ComponentWorkspace make_workspace(MatrixXd X, VectorXd y, const VectorXd& beta_t) {
  if (X.rows() < 1) throw ContractViolation("component workspace needs at least one row");
  if (X.cols() != beta_t.size() || X.rows() != y.size())
    throw ContractViolation("workspace dimensions do not match");
  ComponentWorkspace ws;
  const VectorXd eta = X * beta_t;
  ws.mu.resize(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    bool c = false;
    ws.mu[i] = std::exp(clamp_eta(eta[i], c));
    ws.clamped += c ? 1 : 0;
  }
  ws.w = ws.mu;
  ws.z_star = eta.array() + (y.array() - ws.mu.array()) / ws.mu.array();
  ws.X = std::move(X);
  ws.y = std::move(y);
  return ws;
}

ComponentWorkspace build_workspace(const Dataset& data, const PartitionState& part, int j,
                                   const VectorXd& beta_t) {
  if (j < 0 || j >= part.J()) throw ContractViolation("component index out of range");
  if (part.counts[static_cast<std::size_t>(j)] == 0) throw EmptyPartition(j);
  const std::vector<int> rows = part.members(j);
  MatrixXd X(static_cast<Eigen::Index>(rows.size()), data.p());
  VectorXd y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    X.row(static_cast<Eigen::Index>(k)) = data.X().row(rows[k]);
    y[static_cast<Eigen::Index>(k)] = data.y()[rows[k]];
  }
  return make_workspace(std::move(X), std::move(y), beta_t);
}

VectorXd irwls_beta_step(const ComponentWorkspace& ws, const Penalty& penalty) {
  const auto p = ws.X.cols();
  penalty.validate(p);
  const MatrixXd XtW = ws.X.transpose() * ws.w.asDiagonal();
  const MatrixXd gram = XtW * ws.X;
  VectorXd rhs = XtW * ws.z_star;
  if (penalty.kind == Penalty::Kind::LiuType) rhs += penalty.rhs_shift(p);
  return solve_penalized(gram, rhs, penalty.effective_lambda(), penalty.mask(p));
}

double q2_objective(const ComponentWorkspace& ws, const VectorXd& beta, const Penalty& penalty) {
  const VectorXd eta = ws.X * beta;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i)
    ll += ws.y[i] * eta[i] - std::exp(eta[i]) - std::lgamma(ws.y[i] + 1.0);
  return ll - penalty.value(beta);
}

VectorXd q2_gradient(const ComponentWorkspace& ws, const VectorXd& beta, const Penalty& penalty) {
  const VectorXd mu = (ws.X * beta).array().exp();
  return ws.X.transpose() * (ws.y - mu) + penalty.gradient(beta);
}

}  // namespace fmpre
