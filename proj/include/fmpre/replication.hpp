#pragma once

// Monte-Carlo replication: per-replicate data generation (or subsampling),
// the ML -> Ridge -> LT pipeline, metrics, and per-method summaries.
//
// Replicate r draws from streams derived from (seed, r) only, so results do
// not depend on the number of worker threads.

#include "fmpre/data_io.hpp"
#include "fmpre/metrics.hpp"
#include "fmpre/sem.hpp"
#include "fmpre/simulate.hpp"

#include <array>
#include <functional>
#include <iosfwd>

namespace fmpre {

inline constexpr std::array<Method, 3> kAllMethods{Method::ML, Method::Ridge, Method::LT};
inline constexpr std::uint64_t kDataStream = 0xD474;
inline constexpr std::uint64_t kFitStream = 0xF17;

struct MethodMetrics {
  bool ok = false;
  double beta_rmse = 0.0;
  double alpha_rmse = 0.0;
  double accuracy = 0.0;
};

struct ReplicateOutcome {
  std::array<MethodMetrics, 3> methods;  // indexed like kAllMethods
  std::vector<std::string> failures;
  int resampled_rows = 0;
};

struct SummaryRow {
  Method method = Method::ML;
  std::string block;  // "beta", "alpha" or "accuracy"
  ReplicationSummary summary;
  bool defined = true;  // false when every replicate failed for this method
};

struct StudyResult {
  std::vector<ReplicateOutcome> replicates;
  std::vector<SummaryRow> rows;

  int failed(Method m) const;
  const SummaryRow& row(Method m, const std::string& block) const;
};

/// Runs body(0..count-1) on `jobs` threads. Every index runs exactly once.
void parallel_for(int count, int jobs, const std::function<void(int)>& body);

/// Fits the pipeline on `train`, aligns each estimate to `truth` and scores
/// classification on `validation`.
ReplicateOutcome evaluate_replicate(const Dataset& train, const Dataset& validation,
                                    std::span<const int> z_validation, const Coefficients& truth,
                                    const SemOptions& sem);

StudyResult summarize_study(std::vector<ReplicateOutcome> replicates);

struct SimulationStudyConfig {
  SimulationDesign design;  // design.seed is the master seed
  int replicates = 200;
  int jobs = 1;
  int n_validation = 100;
  SemOptions sem;
};

StudyResult run_simulation_study(const SimulationStudyConfig& cfg);

struct HeartStudyConfig {
  int train_n = 30;
  int test_n = 100;
  int replicates = 200;
  int jobs = 1;
  int J = 2;
  std::uint64_t seed = 20240601;
  SemOptions sem;
};

/// Reference values for the heart study: the ML fit on the full data and the
/// posterior-argmax labels it implies.
struct HeartTruth {
  FitResult fit;
  std::vector<int> labels;
};

HeartTruth heart_truth(const Dataset& full, const HeartStudyConfig& cfg);

/// Each replicate draws train_n rows without replacement and test_n rows from
/// the remainder.
StudyResult run_heart_study(const Dataset& full, const HeartTruth& truth,
                            const HeartStudyConfig& cfg);

/// Columns: method, parameter_block, M, L, U, n_replicates, n_failed.
void write_summary_csv(std::ostream& os, const StudyResult& result);

/// Box plots of the replicate distribution of one block, one box per method.
void write_boxplot_svg(std::ostream& os, const StudyResult& result, const std::string& block,
                       const std::string& title);

}  // namespace fmpre
