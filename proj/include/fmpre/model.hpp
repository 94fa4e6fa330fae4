#pragma once

// Shared domain types for the finite mixture of Poisson regressions with
// multinomial-logit experts, plus observed and complete log-likelihoods.
//
// Component and class indices are 0-based throughout the C++ API.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fmpre {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Responses y (counts), component design X (n x p) and gating design
/// Omega (n x q). Validated on construction and immutable afterwards.
class Dataset {
 public:
  Dataset(VectorXd y, MatrixXd X, MatrixXd Omega);

  const VectorXd& y() const noexcept { return y_; }
  const MatrixXd& X() const noexcept { return X_; }
  const MatrixXd& Omega() const noexcept { return Omega_; }
  /// log(y_i!) via lgamma, cached.
  const VectorXd& log_factorial() const noexcept { return log_fact_; }

  int n() const noexcept { return static_cast<int>(y_.size()); }
  int p() const noexcept { return static_cast<int>(X_.cols()); }
  int q() const noexcept { return static_cast<int>(Omega_.cols()); }

  Dataset subset(std::span<const int> rows) const;

 private:
  VectorXd y_;
  MatrixXd X_;
  MatrixXd Omega_;
  VectorXd log_fact_;
};

/// Psi: beta is p x J (column j = component j), alpha is q x J with the
/// reference column held at zero.
struct Coefficients {
  MatrixXd beta;
  MatrixXd alpha;
  int reference = 0;

  int J() const noexcept { return static_cast<int>(beta.cols()); }
  /// Throws ContractViolation on shape, reference or finiteness problems.
  void validate(int p, int q) const;
};

struct PartitionState {
  std::vector<int> assignment;  // length n, entries in [0, J)
  std::vector<int> counts;      // length J

  static PartitionState from_assignment(std::vector<int> assignment, int J);
  int J() const noexcept { return static_cast<int>(counts.size()); }
  /// Row indices assigned to component j, in increasing order.
  std::vector<int> members(int j) const;
};

enum class Method { ML, Ridge, LT };
enum class EstimateSelection { BestLoglik, PostBurninMean };
enum class InitStrategy { RandomPartition, QuantileSplit };
/// Sign applied to the d * anchor term of the Liu-type update.
enum class LtSign { Subtract, Add };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct SemOptions {
  double epsilon = 1e-6;
  int max_iters = 500;
  int burn_in = 100;
  int n_restarts = 5;
  EstimateSelection selection = EstimateSelection::BestLoglik;
  InitStrategy init = InitStrategy::RandomPartition;
  std::uint64_t rng_seed = 20240601;

  // M-step solver settings.
  bool penalize_intercept = true;
  LtSign lt_sign = LtSign::Subtract;
  double inner_tol = 1e-8;
  int inner_max = 50;
  /// Recompute the Liu-type d parameters from the current partition at every
  /// M-step instead of holding the pipeline values fixed.
  bool retune_each_iteration = false;
  /// Argmax assignment instead of sampling (classification EM; deterministic).
  bool hard_assignment = false;

  void validate() const;
};

/// Ridge / Liu-type tuning. `anchor` holds the estimate the Liu-type term is
/// anchored on (the ridge fit); `source` records which fit the plug-ins came from.
struct TuningParams {
  VectorXd lambda_beta;
  VectorXd lambda_alpha;
  VectorXd d_beta;
  VectorXd d_alpha;
  std::vector<bool> lambda_beta_capped;
  std::vector<bool> lambda_alpha_capped;
  std::optional<Coefficients> anchor;
  std::string source;

  void validate(int J) const;
};

struct FitResult {
  Method method = Method::ML;
  Coefficients psi_hat;
  std::vector<double> loglik_trace;
  bool converged = false;
  int iterations_run = 0;
  std::optional<TuningParams> tuning;
  int selected_iteration = 0;  // 1-based; 0 means the initial value
  double loglik = 0.0;         // observed log-likelihood of psi_hat
  PartitionState partition;    // S-step partition that produced the selected iterate
  int restarts_failed = 0;
  int restart_used = 0;
  std::vector<std::string> diagnostics;
};

/// Linear predictor clamp so that exp() stays inside [1e-300, 1e300].
inline constexpr double kMaxLogMean = 690.7755278982137;   // log(1e300)
inline constexpr double kMinLogMean = -690.7755278982137;  // log(1e-300)

/// n x J matrix of log pi_j(omega_i, alpha), max-subtracted log-softmax.
MatrixXd log_gating(const MatrixXd& Omega, const MatrixXd& alpha);

/// n x J matrix of log pi_ij + log Poi(y_i | mu_j(x_i)).
MatrixXd log_joint(const Dataset& data, const Coefficients& psi);

/// l(Psi) = sum_i log sum_j pi_j(omega_i) Poi(y_i | mu_j(x_i)).
double observed_loglik(const Dataset& data, const Coefficients& psi);

/// sum_i [log pi_{z_i}(omega_i) + y_i log mu_{z_i} - mu_{z_i} - log y_i!].
double complete_loglik(const Dataset& data, const Coefficients& psi,
                       const PartitionState& part);

/// BIC = -2 l + k log n with k = J p + (J - 1) q.
double bic(double loglik, int n, int J, int p, int q);

}  // namespace fmpre
