#pragma once

// Label alignment, estimation and classification metrics, replicate summaries.

#include "fmpre/model.hpp"

#include <span>
#include <string>
#include <vector>

namespace fmpre {

/// Permutation sigma (sigma[j] = index in `estimate` matched to true component j)
/// minimising sum_j ||beta_hat_{sigma(j)} - beta_j||^2 over all J! permutations.
/// Ties resolve to the lexicographically smallest sigma.
std::vector<int> align_components(const Coefficients& estimate, const Coefficients& truth);

/// Reorders components by sigma and re-expresses the gating vectors against
/// `reference` (the reference column becomes zero; probabilities are unchanged).
Coefficients apply_alignment(const Coefficients& estimate, std::span<const int> sigma,
                             int reference);

enum class Block { Beta, Alpha };

/// (sum_j ||theta_hat_j - theta_j||^2 / n)^{1/2} for the chosen block; inputs aligned.
double sqrt_mse(const Coefficients& aligned, const Coefficients& truth, Block block, int n);

/// argmax_j tau_ij for each row.
std::vector<int> predict_components(const Dataset& data, const Coefficients& psi);

/// Fraction of rows whose posterior-argmax label, mapped through the alignment
/// of `estimate` to `truth`, equals z_true.
double classification_accuracy(const Coefficients& estimate, const Coefficients& truth,
                               const Dataset& validation, std::span<const int> z_true);

/// Median and 5th/95th percentiles (type-7 interpolation).
struct ReplicationSummary {
  std::string metric;
  double M = 0.0;
  double L = 0.0;
  double U = 0.0;
  int n_replicates = 0;
  int n_failed = 0;
};

/// Type-7 quantile of an ascending-sorted sample.
double quantile_type7(std::span<const double> sorted, double prob);

/// Throws SummaryUndefined on empty input and ContractViolation on non-finite values.
ReplicationSummary summarize_replicates(std::span<const double> values, std::string metric = {},
                                        int n_failed = 0);

}  // namespace fmpre
