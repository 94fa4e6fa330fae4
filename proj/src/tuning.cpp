#include "fmpre/tuning.hpp"

#include "fmpre/errors.hpp"
#include "fmpre/gating.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fmpre {

namespace {

double lambda_from(double sq_norm, int dim, bool& capped) {
  capped = !(sq_norm > 0) || static_cast<double>(dim) / sq_norm > kLambdaMax;
  return capped ? kLambdaMax : static_cast<double>(dim) / sq_norm;
}

VectorXd penalty_mask(Eigen::Index dim, bool penalize_intercept) {
  VectorXd m = VectorXd::Ones(dim);
  if (!penalize_intercept && dim > 0) m[0] = 0.0;
  return m;
}

// tr[B A B'] + ||B m - plugin||^2, B = C (A - d I) C, C = (A + lambda M)^{-1}.
double liu_type_mse(double d, const MatrixXd& A, const VectorXd& m, double lambda,
                    const VectorXd& mask, const VectorXd& plugin) {
  const auto k = A.rows();
  MatrixXd shifted = A;
  shifted.diagonal() += lambda * mask;
  Eigen::LDLT<MatrixXd> fac(shifted);
  if (fac.info() != Eigen::Success) throw TuningFailed("A + lambda I could not be factored");
  const MatrixXd C = fac.solve(MatrixXd::Identity(k, k));
  MatrixXd mid = A;
  mid.diagonal().array() -= d;
  const MatrixXd B = C * mid * C;
  const double var = (B * A * B.transpose()).trace();
  const double bias = (B * m - plugin).squaredNorm();
  return var + bias;
}

}  // namespace

RidgeLambdas estimate_ridge_lambdas(const Coefficients& source, int p, int q) {
  const int J = source.J();
  RidgeLambdas out;
  out.lambda_beta.resize(J);
  out.lambda_alpha.resize(J);
  out.beta_capped.assign(static_cast<std::size_t>(J), false);
  out.alpha_capped.assign(static_cast<std::size_t>(J), false);
  for (int j = 0; j < J; ++j) {
    bool cb = false;
    bool ca = false;
    out.lambda_beta[j] = lambda_from(source.beta.col(j).squaredNorm(), p, cb);
    out.lambda_alpha[j] = lambda_from(source.alpha.col(j).squaredNorm(), q, ca);
    out.beta_capped[static_cast<std::size_t>(j)] = cb;
    out.alpha_capped[static_cast<std::size_t>(j)] = ca;
  }
  return out;
}

double lt_mse_beta(double d, const MatrixXd& Xj, const VectorXd& wj, double lambda,
                   const VectorXd& beta_plugin, const VectorXd& mu_plugin,
                   bool penalize_intercept) {
  if (!(lambda > 0)) throw ContractViolation("lt_mse_beta needs lambda > 0");
  const MatrixXd XtW = Xj.transpose() * wj.asDiagonal();
  return liu_type_mse(d, XtW * Xj, XtW * mu_plugin, lambda,
                      penalty_mask(Xj.cols(), penalize_intercept), beta_plugin);
}

double lt_mse_alpha(double d_star, const MatrixXd& Omega, const VectorXd& wg_j, double lambda_star,
                    const VectorXd& alpha_plugin, const VectorXd& pi_plugin,
                    bool penalize_intercept) {
  if (!(lambda_star > 0)) throw ContractViolation("lt_mse_alpha needs lambda* > 0");
  const MatrixXd OtW = Omega.transpose() * wg_j.asDiagonal();
  return liu_type_mse(d_star, OtW * Omega, OtW * pi_plugin, lambda_star,
                      penalty_mask(Omega.cols(), penalize_intercept), alpha_plugin);
}

MseQuadratic mse_quadratic(const std::function<double(double)>& mse_fn) {
  const double fm = mse_fn(-1.0);
  const double f0 = mse_fn(0.0);
  const double fp = mse_fn(1.0);
  if (!std::isfinite(fm) || !std::isfinite(f0) || !std::isfinite(fp))
    throw TuningFailed("MSE evaluation is not finite");
  MseQuadratic qd;
  qd.c = f0;
  qd.a = 0.5 * (fp + fm) - f0;
  qd.b = 0.5 * (fp - fm);
  qd.d_opt = qd.a > 0 ? -qd.b / (2.0 * qd.a) : 0.0;
  return qd;
}

double optimize_bias_correction(const std::function<double(double)>& mse_fn, DRange range) {
  if (!(range.lo <= range.hi)) throw ContractViolation("empty d range");
  const MseQuadratic qd = mse_quadratic(mse_fn);
  if (qd.a > 1e-14) return std::clamp(-qd.b / (2.0 * qd.a), range.lo, range.hi);

  double best_d = range.lo;
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < kFallbackGridPoints; ++k) {
    const double d =
        range.lo + (range.hi - range.lo) * k / static_cast<double>(kFallbackGridPoints - 1);
    const double v = mse_fn(d);
    if (!std::isfinite(v)) throw TuningFailed("MSE evaluation is not finite");
    if (v < best) {
      best = v;
      best_d = d;
    }
  }
  return best_d;
}

TuningParams ridge_tuning(const Coefficients& ml_fit, int p, int q) {
  const RidgeLambdas lam = estimate_ridge_lambdas(ml_fit, p, q);
  TuningParams t;
  t.lambda_beta = lam.lambda_beta;
  t.lambda_alpha = lam.lambda_alpha;
  t.lambda_beta_capped = lam.beta_capped;
  t.lambda_alpha_capped = lam.alpha_capped;
  t.d_beta = VectorXd::Zero(ml_fit.J());
  t.d_alpha = VectorXd::Zero(ml_fit.J());
  t.source = "ml";
  return t;
}

double optimal_d_beta(const MatrixXd& Xj, double lambda, const VectorXd& beta_plugin,
                      bool penalize_intercept) {
  if (Xj.rows() == 0) return 0.0;
  const VectorXd mu = (Xj * beta_plugin).cwiseMax(kMinLogMean).cwiseMin(kMaxLogMean).array().exp();
  auto fn = [&](double d) {
    return lt_mse_beta(d, Xj, mu, lambda, beta_plugin, mu, penalize_intercept);
  };
  return optimize_bias_correction(fn, {-10.0 * lambda, 10.0 * lambda});
}

TuningParams liu_type_tuning(const Dataset& data, const Coefficients& ridge_fit,
                             const PartitionState& part, bool penalize_intercept) {
  ridge_fit.validate(data.p(), data.q());
  const int J = ridge_fit.J();
  const RidgeLambdas lam = estimate_ridge_lambdas(ridge_fit, data.p(), data.q());
  TuningParams t;
  t.lambda_beta = lam.lambda_beta;
  t.lambda_alpha = lam.lambda_alpha;
  t.lambda_beta_capped = lam.beta_capped;
  t.lambda_alpha_capped = lam.alpha_capped;
  t.d_beta = VectorXd::Zero(J);
  t.d_alpha = VectorXd::Zero(J);
  t.anchor = ridge_fit;
  t.source = "ridge";

  for (int j = 0; j < J; ++j) {
    const std::vector<int> rows = part.members(j);
    MatrixXd Xj(static_cast<Eigen::Index>(rows.size()), data.p());
    for (std::size_t k = 0; k < rows.size(); ++k)
      Xj.row(static_cast<Eigen::Index>(k)) = data.X().row(rows[k]);
    t.d_beta[j] = optimal_d_beta(Xj, t.lambda_beta[j], ridge_fit.beta.col(j), penalize_intercept);
  }

  const MatrixXd pi = gating_probabilities(data.Omega(), ridge_fit.alpha, ridge_fit.reference);
  for (int j = 0; j < J; ++j) {
    if (j == ridge_fit.reference) continue;
    const VectorXd pij = pi.col(j);
    const VectorXd floored = pij.cwiseMax(kPiFloor).cwiseMin(1.0 - kPiFloor);
    const VectorXd wg = floored.array() * (1.0 - floored.array());
    const double lstar = t.lambda_alpha[j];
    auto fn = [&](double d) {
      return lt_mse_alpha(d, data.Omega(), wg, lstar, ridge_fit.alpha.col(j), pij,
                          penalize_intercept);
    };
    t.d_alpha[j] = optimize_bias_correction(fn, {-10.0 * lstar, 10.0 * lstar});
  }
  return t;
}

}  // namespace fmpre
