#include "fmpre/metrics.hpp"

#include "fmpre/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace fmpre {

std::vector<int> align_components(const Coefficients& estimate, const Coefficients& truth) {
  const int J = truth.J();
  if (estimate.J() != J || estimate.beta.rows() != truth.beta.rows())
    throw ContractViolation("alignment needs matching component counts and dimensions");
  std::vector<int> perm(static_cast<std::size_t>(J));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (int j = 0; j < J; ++j)
      cost += (estimate.beta.col(perm[static_cast<std::size_t>(j)]) - truth.beta.col(j)).squaredNorm();
    if (cost < best_cost) {
      best_cost = cost;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

Coefficients apply_alignment(const Coefficients& estimate, std::span<const int> sigma,
                             int reference) {
  const int J = estimate.J();
  if (static_cast<int>(sigma.size()) != J) throw ContractViolation("permutation has wrong length");
  if (reference < 0 || reference >= J) throw ContractViolation("reference out of range");
  Coefficients out;
  out.beta.resize(estimate.beta.rows(), J);
  out.alpha.resize(estimate.alpha.rows(), J);
  out.reference = reference;
  const VectorXd shift = estimate.alpha.col(sigma[static_cast<std::size_t>(reference)]);
  for (int j = 0; j < J; ++j) {
    const int src = sigma[static_cast<std::size_t>(j)];
    out.beta.col(j) = estimate.beta.col(src);
    out.alpha.col(j) = estimate.alpha.col(src) - shift;
  }
  out.alpha.col(reference).setZero();
  return out;
}

double sqrt_mse(const Coefficients& aligned, const Coefficients& truth, Block block, int n) {
  if (n < 1) throw ContractViolation("sqrt_mse needs n >= 1");
  const MatrixXd& a = block == Block::Beta ? aligned.beta : aligned.alpha;
  const MatrixXd& t = block == Block::Beta ? truth.beta : truth.alpha;
  if (a.rows() != t.rows() || a.cols() != t.cols())
    throw ContractViolation("sqrt_mse inputs differ in shape");
  double sum = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) sum += (a.col(j) - t.col(j)).squaredNorm();
  return std::sqrt(sum / n);
}

std::vector<int> predict_components(const Dataset& data, const Coefficients& psi) {
  const MatrixXd lj = log_joint(data, psi);
  std::vector<int> labels(static_cast<std::size_t>(data.n()));
  for (Eigen::Index i = 0; i < lj.rows(); ++i) {
    Eigen::Index k = 0;
    lj.row(i).maxCoeff(&k);
    labels[static_cast<std::size_t>(i)] = static_cast<int>(k);
  }
  return labels;
}

double classification_accuracy(const Coefficients& estimate, const Coefficients& truth,
                               const Dataset& validation, std::span<const int> z_true) {
  if (static_cast<int>(z_true.size()) != validation.n())
    throw ContractViolation("need one true label per validation row");
  const std::vector<int> sigma = align_components(estimate, truth);
  // inverse map: estimate label -> true label
  std::vector<int> to_true(sigma.size());
  for (std::size_t j = 0; j < sigma.size(); ++j) to_true[static_cast<std::size_t>(sigma[j])] = static_cast<int>(j);
  const std::vector<int> pred = predict_components(validation, estimate);
  int hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    hits += to_true[static_cast<std::size_t>(pred[i])] == z_true[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

double quantile_type7(std::span<const double> sorted, double prob) {
  if (sorted.empty()) throw SummaryUndefined("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

ReplicationSummary summarize_replicates(std::span<const double> values, std::string metric,
                                        int n_failed) {
  if (values.empty()) throw SummaryUndefined("no successful replicates to summarise");
  std::vector<double> v(values.begin(), values.end());
  for (double x : v)
    if (!std::isfinite(x)) throw ContractViolation("replicate values must be finite");
  std::sort(v.begin(), v.end());
  ReplicationSummary s;
  s.metric = std::move(metric);
  s.M = quantile_type7(v, 0.5);
  s.L = quantile_type7(v, 0.05);
  s.U = quantile_type7(v, 0.95);
  s.n_replicates = static_cast<int>(v.size()) + n_failed;
  s.n_failed = n_failed;
  return s;
}

}  // namespace fmpre
