#include "fmpre/penalty.hpp"

#include "fmpre/errors.hpp"

#include <cmath>

namespace fmpre {

Penalty Penalty::ridge(double lambda) {
  Penalty p;
  p.kind = Kind::Ridge;
  p.lambda = lambda;
  return p;
}

Penalty Penalty::liu_type(double lambda, double d, VectorXd anchor) {
  Penalty p;
  p.kind = Kind::LiuType;
  p.lambda = lambda;
  p.d = d;
  p.anchor = std::move(anchor);
  return p;
}

VectorXd Penalty::mask(Eigen::Index dim) const {
  VectorXd m = VectorXd::Ones(dim);
  if (!penalize_intercept && dim > 0) m[0] = 0.0;
  return m;
}

VectorXd Penalty::rhs_shift(Eigen::Index dim) const {
  if (kind != Kind::LiuType) return VectorXd::Zero(dim);
  const double s = sign == LtSign::Subtract ? -1.0 : 1.0;
  return (s * d) * mask(dim).cwiseProduct(anchor);
}

double Penalty::value(const VectorXd& b) const {
  if (kind == Kind::ML) return 0.0;
  const VectorXd m = mask(b.size());
  const VectorXd bm = m.cwiseProduct(b);
  if (kind == Kind::Ridge) return 0.5 * lambda * bm.squaredNorm();
  // 0.5 * || s' (d / sqrt(lambda)) a + sqrt(lambda) b ||^2, s' = +1 when subtracting.
  const double s = sign == LtSign::Subtract ? 1.0 : -1.0;
  const VectorXd am = m.cwiseProduct(anchor);
  const VectorXd r = (s * d / std::sqrt(lambda)) * am + std::sqrt(lambda) * bm;
  return 0.5 * r.squaredNorm();
}

VectorXd Penalty::gradient(const VectorXd& b) const {
  if (kind == Kind::ML) return VectorXd::Zero(b.size());
  return -lambda * mask(b.size()).cwiseProduct(b) + rhs_shift(b.size());
}

void Penalty::validate(Eigen::Index dim) const {
  if (kind == Kind::ML) return;
  if (!(lambda > 0) || !std::isfinite(lambda))
    throw ContractViolation("penalty lambda must be positive and finite");
  if (kind == Kind::LiuType) {
    if (!std::isfinite(d)) throw ContractViolation("Liu-type d must be finite");
    if (anchor.size() != dim || !anchor.allFinite())
      throw ContractViolation("Liu-type anchor has the wrong dimension or is not finite");
  }
}

VectorXd solve_penalized(const MatrixXd& gram, const VectorXd& rhs, double lambda,
                         const VectorXd& mask) {
  MatrixXd A = gram;
  if (lambda != 0.0) A.diagonal() += lambda * mask;
  Eigen::LLT<MatrixXd> llt(A);
  const bool factored = llt.info() == Eigen::Success;
  if (lambda == 0.0 || mask.isZero(0.0)) {
    if (!factored || llt.rcond() < kSingularRcond)
      throw SingularSystem(
          "unpenalised normal equations are singular or ill-conditioned; "
          "use the ridge or Liu-type estimator");
  }
  VectorXd b;
  if (factored) {
    b = llt.solve(rhs);
  } else {
    Eigen::LDLT<MatrixXd> ldlt(A);
    if (ldlt.info() != Eigen::Success) throw SingularSystem("penalised system could not be factored");
    b = ldlt.solve(rhs);
  }
  if (!b.allFinite()) throw NumericalFailure("linear solve produced non-finite coefficients");
  return b;
}

}  // namespace fmpre
