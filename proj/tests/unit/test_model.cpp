#include "fmpre/errors.hpp"
#include "fmpre/metrics.hpp"
#include "fmpre/model.hpp"
#include "fmpre/simulate.hpp"
#include "../support/oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace fmpre;

namespace {

Coefficients single(const VectorXd& beta, int q) {
  Coefficients c;
  c.beta = beta;
  c.alpha = MatrixXd::Zero(q, 1);
  c.reference = 0;
  return c;
}

}  // namespace

TEST_CASE("observed loglik of one zero count under unit mean is -1") {
  Dataset d(VectorXd::Zero(1), MatrixXd::Ones(1, 1), MatrixXd::Ones(1, 1));
  CHECK(observed_loglik(d, single(VectorXd::Zero(1), 1)) == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("identical components collapse to the one-component likelihood") {
  std::mt19937_64 rng(3);
  const MatrixXd X = oracle::random_design(30, 3, rng);
  const MatrixXd Om = oracle::random_design(30, 2, rng);
  VectorXd b(3);
  b << 0.3, -0.5, 0.2;
  const VectorXd y = oracle::poisson_draws(X, b, rng);
  Dataset d(y, X, Om);
  Coefficients two;
  two.beta = MatrixXd(3, 2);
  two.beta << b, b;
  two.alpha = MatrixXd::Zero(2, 2);
  two.alpha.col(0) << 0.7, -1.2;
  two.reference = 1;
  CHECK(observed_loglik(d, two) == doctest::Approx(observed_loglik(d, single(b, 2))).epsilon(1e-13));
}

TEST_CASE("observed loglik matches a per-observation summation on a study-2 sample") {
  const SimulationDesign design = study_preset(Study::Study2);
  Rng rng(77);
  const SimulatedSample s = generate_fmpre_sample(design, 20, rng);
  const double ours = observed_loglik(s.dataset(), design.truth);
  const double naive =
      oracle::naive_observed_loglik(s.y, s.X, s.Omega, design.truth.beta, design.truth.alpha);
  CHECK(std::abs(ours - naive) <= 1e-10 * std::abs(naive));
}

TEST_CASE("observed loglik stays finite for linear predictors near 30") {
  VectorXd y(2);
  y << 0, 1e13;
  MatrixXd X(2, 1);
  X << 1, 1;
  Dataset d(y, X, X);
  Coefficients c;
  c.beta = MatrixXd(1, 2);
  c.beta << 30, -30;
  c.alpha = MatrixXd::Zero(1, 2);
  CHECK(std::isfinite(observed_loglik(d, c)));
}

TEST_CASE("complete loglik") {
  SUBCASE("one component equals the observed loglik") {
    std::mt19937_64 rng(5);
    const MatrixXd X = oracle::random_design(15, 2, rng);
    VectorXd b(2);
    b << 0.4, 0.6;
    Dataset d(oracle::poisson_draws(X, b, rng), X, X);
    const auto part = PartitionState::from_assignment(std::vector<int>(15, 0), 1);
    CHECK(complete_loglik(d, single(b, 2), part) ==
          doctest::Approx(observed_loglik(d, single(b, 2))).epsilon(1e-14));
  }
  SUBCASE("all-zero coefficients and zero counts give 2(log 1/2 - 1)") {
    Dataset d(VectorXd::Zero(2), MatrixXd::Ones(2, 1), MatrixXd::Ones(2, 1));
    Coefficients c;
    c.beta = MatrixXd::Zero(1, 2);
    c.alpha = MatrixXd::Zero(1, 2);
    const auto part = PartitionState::from_assignment({0, 1}, 2);
    CHECK(complete_loglik(d, c, part) == doctest::Approx(2 * (std::log(0.5) - 1)).epsilon(1e-15));
  }
  SUBCASE("random instance matches term-by-term oracle") {
    std::mt19937_64 rng(11);
    const MatrixXd X = oracle::random_design(25, 3, rng);
    const MatrixXd Om = oracle::random_design(25, 2, rng);
    Coefficients c;
    c.beta = oracle::random_matrix(3, 3, rng, 0.5);
    c.alpha = oracle::random_matrix(2, 3, rng);
    c.alpha.col(2).setZero();
    c.reference = 2;
    const VectorXd y = oracle::poisson_draws(X, c.beta.col(0), rng);
    std::vector<int> z(25);
    for (int i = 0; i < 25; ++i) z[static_cast<std::size_t>(i)] = i % 3;
    Dataset d(y, X, Om);
    const double naive = oracle::naive_complete_loglik(y, X, Om, c.beta, c.alpha, z);
    CHECK(std::abs(complete_loglik(d, c, PartitionState::from_assignment(z, 3)) - naive) <=
          1e-12 * std::abs(naive));
  }
}

TEST_CASE("observed loglik is invariant under relabelling with re-expressed gating (J=3)") {
  std::mt19937_64 rng(21);
  const MatrixXd X = oracle::random_design(40, 2, rng);
  const MatrixXd Om = oracle::random_design(40, 3, rng);
  Coefficients c;
  c.beta = oracle::random_matrix(2, 3, rng, 0.7);
  c.alpha = oracle::random_matrix(3, 3, rng);
  c.alpha.col(0).setZero();
  c.reference = 0;
  Dataset d(oracle::poisson_draws(X, c.beta.col(1), rng), X, Om);
  const double base = observed_loglik(d, c);
  std::vector<int> sigma{0, 1, 2};
  do {
    const Coefficients p = apply_alignment(c, sigma, 0);
    CHECK(observed_loglik(d, p) == doctest::Approx(base).epsilon(1e-12));
  } while (std::next_permutation(sigma.begin(), sigma.end()));
}

TEST_CASE("contract violations") {
  CHECK_THROWS_AS(Dataset(VectorXd::Constant(2, 1.5), MatrixXd::Ones(2, 1), MatrixXd::Ones(2, 1)),
                  ContractViolation);
  CHECK_THROWS_AS(Dataset(VectorXd::Constant(2, -1), MatrixXd::Ones(2, 1), MatrixXd::Ones(2, 1)),
                  ContractViolation);
  CHECK_THROWS_AS(Dataset(VectorXd::Ones(2), MatrixXd::Ones(3, 1), MatrixXd::Ones(2, 1)),
                  ContractViolation);
  CHECK_THROWS_AS(Dataset(VectorXd(0), MatrixXd(0, 1), MatrixXd(0, 1)), ContractViolation);
  Dataset d(VectorXd::Ones(2), MatrixXd::Ones(2, 1), MatrixXd::Ones(2, 1));
  Coefficients wrong = single(VectorXd::Zero(2), 1);
  CHECK_THROWS_AS(observed_loglik(d, wrong), ContractViolation);
  Coefficients nonzero_ref = single(VectorXd::Zero(1), 1);
  nonzero_ref.alpha(0, 0) = 1.0;
  CHECK_THROWS_AS(observed_loglik(d, nonzero_ref), ContractViolation);
}

TEST_CASE("partition counts") {
  const auto p = PartitionState::from_assignment({1, 0, 1, 1}, 3);
  CHECK(p.counts == std::vector<int>{1, 3, 0});
  CHECK(p.members(1) == std::vector<int>{0, 2, 3});
  CHECK_THROWS_AS(PartitionState::from_assignment({3}, 3), ContractViolation);
}

TEST_CASE("BIC counts J p + (J - 1) q parameters") {
  CHECK(bic(-100.0, 50, 2, 3, 3) == doctest::Approx(200.0 + 9.0 * std::log(50.0)));
  CHECK(bic(-10.0, 20, 1, 2, 4) == doctest::Approx(20.0 + 2.0 * std::log(20.0)));
}

TEST_CASE("method names round-trip") {
  for (Method m : {Method::ML, Method::Ridge, Method::LT}) CHECK(method_from_string(to_string(m)) == m);
  CHECK_THROWS_AS(method_from_string("lasso"), ContractViolation);
}
