#pragma once

// Simulation designs: collinear covariates, FMPRE responses drawn from a
// known Psi, and the two study presets.

#include "fmpre/model.hpp"
#include "fmpre/rng.hpp"

#include <iosfwd>
#include <string>

namespace fmpre {

/// How the shared latent factor enters: `PaperLinear` uses the (1 - phi^2)
/// multiplier verbatim, `SqrtConvention` uses sqrt(1 - phi^2) so that
/// cor(x1, x2) = phi^2 exactly.
enum class CollinearityForm { PaperLinear, SqrtConvention };

/// PhiPhiRhoRho: four covariates, pairs (1,2) loaded with phi and (3,4) with rho.
/// RhoRho: two covariates, both loaded with rho.
enum class CovariateLayout { PhiPhiRhoRho, RhoRho };

enum class Study { Study1, Study2 };

struct SimulationDesign {
  int n = 100;
  double phi = 0.90;
  double rho = 0.85;
  CovariateLayout layout = CovariateLayout::PhiPhiRhoRho;
  CollinearityForm form = CollinearityForm::PaperLinear;
  Coefficients truth;  // beta p x J, alpha q x J, reference column zero
  std::uint64_t seed = 1;

  int J() const noexcept { return truth.J(); }
  /// Number of non-intercept covariates implied by the layout.
  int n_covariates() const noexcept { return layout == CovariateLayout::PhiPhiRhoRho ? 4 : 2; }
  void validate() const;
};

SimulationDesign study_preset(Study which);
Study study_from_string(const std::string& s);
std::string to_string(CollinearityForm f);
CollinearityForm collinearity_from_string(const std::string& s);

struct Covariates {
  MatrixXd X;
  MatrixXd Omega;
};

/// Builds X and Omega, each with an intercept column and an independent
/// latent factor per matrix.
Covariates generate_covariates(const SimulationDesign& design, int n, Rng& rng);

struct SimulatedSample {
  VectorXd y;
  MatrixXd X;
  MatrixXd Omega;
  std::vector<int> z;  // true component labels (0-based)
  int resampled_rows = 0;  // rows redrawn because some x'beta_j exceeded kMaxSimLogMean
  Dataset dataset() const { return Dataset(y, X, Omega); }
};

inline constexpr double kMaxSimLogMean = 30.0;

/// Draws covariates, then z_i ~ Multinomial(pi(omega_i)) and y_i ~ Poisson(exp(x_i'beta_{z_i})).
SimulatedSample generate_fmpre_sample(const SimulationDesign& design, int n, Rng& rng);

/// Labels and responses for given covariates (no row resampling).
SimulatedSample sample_responses(const Coefficients& truth, MatrixXd X, MatrixXd Omega, Rng& rng);

// Plain-text `key = value` design files. Keys: n, phi, rho, layout
// (phiphirhorho | rhorho), collinearity (paper_linear | sqrt_convention),
// reference, seed, beta, alpha. Matrices are written component by component:
// `beta = 1,1,2,3,0.5; -1,-1,-2,-0.5,-2`. A `preset = study1|study2` line
// loads that preset first; later keys override it. '#' starts a comment.
void write_design(std::ostream& os, const SimulationDesign& design);
SimulationDesign read_design(std::istream& is);

/// Applies one design key; returns false for keys it does not know. Throws
/// FormatError (carrying `line`) on a bad value.
bool apply_design_key(SimulationDesign& design, const std::string& key, const std::string& value,
                      int line);

struct KeyValue {
  std::string key;
  std::string value;
  int line = 0;
};

/// Splits `key = value` lines, dropping blanks and '#' comments.
std::vector<KeyValue> parse_key_values(std::istream& is);

}  // namespace fmpre
