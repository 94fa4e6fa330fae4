#include "fmpre/model.hpp"

#include "fmpre/errors.hpp"

#include <algorithm>
#include <cmath>

namespace fmpre {

namespace {

bool all_finite(const MatrixXd& m) { return m.allFinite(); }

}  // namespace

Dataset::Dataset(VectorXd y, MatrixXd X, MatrixXd Omega)
    : y_(std::move(y)), X_(std::move(X)), Omega_(std::move(Omega)) {
  const auto n = y_.size();
  if (n < 1) throw ContractViolation("dataset needs at least one observation");
  if (X_.rows() != n || Omega_.rows() != n)
    throw ContractViolation("X and Omega must have one row per response");
  if (X_.cols() < 1 || Omega_.cols() < 1)
    throw ContractViolation("X and Omega need at least one column");
  if (!all_finite(X_) || !all_finite(Omega_))
    throw ContractViolation("design matrices contain non-finite values");
  log_fact_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = y_[i];
    if (!std::isfinite(v) || v < 0 || v != std::floor(v))
      throw ContractViolation("response " + std::to_string(i) + " is not a nonnegative integer");
    log_fact_[i] = std::lgamma(v + 1.0);
  }
}

Dataset Dataset::subset(std::span<const int> rows) const {
  const auto m = static_cast<Eigen::Index>(rows.size());
  VectorXd y(m);
  MatrixXd X(m, X_.cols());
  MatrixXd W(m, Omega_.cols());
  for (Eigen::Index k = 0; k < m; ++k) {
    const int r = rows[static_cast<std::size_t>(k)];
    if (r < 0 || r >= n()) throw ContractViolation("subset row out of range");
    y[k] = y_[r];
    X.row(k) = X_.row(r);
    W.row(k) = Omega_.row(r);
  }
  return Dataset(std::move(y), std::move(X), std::move(W));
}

void Coefficients::validate(int p, int q) const {
  if (beta.rows() != p || alpha.rows() != q)
    throw ContractViolation("coefficient dimensions do not match the design");
  if (beta.cols() < 1 || alpha.cols() != beta.cols())
    throw ContractViolation("beta and alpha must have the same number of components");
  if (reference < 0 || reference >= J()) throw ContractViolation("reference class out of range");
  if (!alpha.col(reference).isZero(0.0))
    throw ContractViolation("reference gating vector must be zero");
  if (!beta.allFinite() || !alpha.allFinite())
    throw ContractViolation("coefficients contain non-finite values");
}

PartitionState PartitionState::from_assignment(std::vector<int> assignment, int J) {
  PartitionState s;
  s.counts.assign(static_cast<std::size_t>(J), 0);
  for (int a : assignment) {
    if (a < 0 || a >= J) throw ContractViolation("assignment label out of range");
    ++s.counts[static_cast<std::size_t>(a)];
  }
  s.assignment = std::move(assignment);
  return s;
}

std::vector<int> PartitionState::members(int j) const {
  std::vector<int> rows;
  rows.reserve(static_cast<std::size_t>(counts.at(static_cast<std::size_t>(j))));
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] == j) rows.push_back(static_cast<int>(i));
  return rows;
}

std::string to_string(Method m) {
  switch (m) {
    case Method::ML: return "ml";
    case Method::Ridge: return "ridge";
    case Method::LT: return "lt";
  }
  return "?";
}

Method method_from_string(const std::string& s) {
  if (s == "ml" || s == "ML") return Method::ML;
  if (s == "ridge" || s == "Ridge") return Method::Ridge;
  if (s == "lt" || s == "LT") return Method::LT;
  throw ContractViolation("unknown method '" + s + "' (expected ml, ridge or lt)");
}

void SemOptions::validate() const {
  if (!(epsilon > 0)) throw ContractViolation("epsilon must be positive");
  if (max_iters < 1) throw ContractViolation("max_iters must be positive");
  if (burn_in < 0 || burn_in >= max_iters)
    throw ContractViolation("burn_in must satisfy 0 <= burn_in < max_iters");
  if (n_restarts < 1) throw ContractViolation("n_restarts must be positive");
  if (inner_max < 0 || !(inner_tol > 0)) throw ContractViolation("invalid inner solver settings");
}

void TuningParams::validate(int J) const {
  if (lambda_beta.size() != J || lambda_alpha.size() != J || d_beta.size() != J ||
      d_alpha.size() != J)
    throw ContractViolation("tuning vectors must have one entry per component");
  if ((lambda_beta.array() <= 0).any() || (lambda_alpha.array() <= 0).any())
    throw ContractViolation("ridge parameters must be strictly positive");
  if (!d_beta.allFinite() || !d_alpha.allFinite())
    throw ContractViolation("bias-correction parameters must be finite");
}

MatrixXd log_gating(const MatrixXd& Omega, const MatrixXd& alpha) {
  MatrixXd eta = Omega * alpha;
  for (Eigen::Index i = 0; i < eta.rows(); ++i) {
    const double mx = eta.row(i).maxCoeff();
    const double lse = mx + std::log((eta.row(i).array() - mx).exp().sum());
    eta.row(i).array() -= lse;
  }
  return eta;
}

MatrixXd log_joint(const Dataset& data, const Coefficients& psi) {
  psi.validate(data.p(), data.q());
  MatrixXd out = log_gating(data.Omega(), psi.alpha);
  const MatrixXd eta = (data.X() * psi.beta).cwiseMax(kMinLogMean).cwiseMin(kMaxLogMean);
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    out.col(j).array() += data.y().array() * eta.col(j).array() - eta.col(j).array().exp() -
                          data.log_factorial().array();
  }
  return out;
}

double observed_loglik(const Dataset& data, const Coefficients& psi) {
  const MatrixXd lj = log_joint(data, psi);
  double total = 0.0;
  for (Eigen::Index i = 0; i < lj.rows(); ++i) {
    const double mx = lj.row(i).maxCoeff();
    total += mx + std::log((lj.row(i).array() - mx).exp().sum());
  }
  if (!std::isfinite(total)) throw NumericalFailure("observed log-likelihood is not finite");
  return total;
}

double complete_loglik(const Dataset& data, const Coefficients& psi, const PartitionState& part) {
  if (static_cast<int>(part.assignment.size()) != data.n() || part.J() != psi.J())
    throw ContractViolation("partition does not match data/coefficients");
  const MatrixXd lj = log_joint(data, psi);
  double total = 0.0;
  for (int i = 0; i < data.n(); ++i) total += lj(i, part.assignment[static_cast<std::size_t>(i)]);
  if (!std::isfinite(total)) throw NumericalFailure("complete log-likelihood is not finite");
  return total;
}

double bic(double loglik, int n, int J, int p, int q) {
  const double k = static_cast<double>(J) * p + static_cast<double>(J - 1) * q;
  return -2.0 * loglik + k * std::log(static_cast<double>(n));
}

}  // namespace fmpre
