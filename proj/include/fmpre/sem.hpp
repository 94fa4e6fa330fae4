#pragma once

// Stochastic EM driver: E-step responsibilities, S-step partition, penalised
// M-step, stopping rule, restarts and final-estimate selection.

#include "fmpre/model.hpp"
#include "fmpre/rng.hpp"

#include <optional>

namespace fmpre {

struct MixtureSpec {
  int J = 2;
  int reference = 0;
};

/// tau_ij proportional to pi_ij Poi(y_i | mu_ij), rows normalised in log space.
struct Responsibilities {
  MatrixXd tau;
};

Responsibilities e_step(const Dataset& data, const Coefficients& psi);

/// Draws z_i ~ Multinomial(1, tau_i.) for every row. Throws EmptyPartition when
/// some component receives no observation.
PartitionState s_step(const Responsibilities& resp, Rng& rng);

/// Deterministic argmax assignment (classification-EM variant, for testing).
PartitionState hard_step(const Responsibilities& resp);

/// Updates every beta_j with one penalised IRWLS step and the gating vectors
/// by coordinate descent. `tuning` is required for Ridge and LT (LT also needs
/// tuning->anchor).
Coefficients m_step(const Dataset& data, const PartitionState& part, const Coefficients& psi_t,
                    Method method, const TuningParams* tuning, const SemOptions& opts = {});

/// Initial Psi: beta_j from three ML IRWLS steps on a random balanced partition
/// (or a quantile split of y), alpha = 0. Degenerate groups fall back to
/// beta_j = (log(mean y_j + 0.5), 0, ..., 0).
Coefficients initialize(const Dataset& data, const MixtureSpec& spec, InitStrategy strategy,
                        Rng& rng);

/// Full SEM run with opts.n_restarts independent chains (seeded by
/// derive_seed(opts.rng_seed, restart)); returns the chain whose selected
/// estimate has the largest observed log-likelihood. When `initial` is given
/// it replaces the initialisation of every chain. Throws FitFailed when all
/// chains fail.
FitResult run_sem(const Dataset& data, const MixtureSpec& spec, const SemOptions& opts,
                  Method method, const TuningParams* tuning = nullptr,
                  const Coefficients* initial = nullptr);

/// ML -> ridge plug-ins -> ridge fit -> Liu-type plug-ins -> Liu-type fit.
struct PipelineResult {
  std::optional<FitResult> ml;
  std::optional<FitResult> ridge;
  std::optional<FitResult> lt;
  std::vector<std::string> failures;
};

PipelineResult fit_pipeline(const Dataset& data, const MixtureSpec& spec, const SemOptions& opts);

}  // namespace fmpre
