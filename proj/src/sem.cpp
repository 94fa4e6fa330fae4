#include "fmpre/sem.hpp"

#include "fmpre/errors.hpp"
#include "fmpre/gating.hpp"
#include "fmpre/metrics.hpp"
#include "fmpre/poisson_component.hpp"
#include "fmpre/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace fmpre {

Responsibilities e_step(const Dataset& data, const Coefficients& psi) {
  MatrixXd lj = log_joint(data, psi);
  for (Eigen::Index i = 0; i < lj.rows(); ++i) {
    const double mx = lj.row(i).maxCoeff();
    lj.row(i) = (lj.row(i).array() - mx).exp();
    lj.row(i) /= lj.row(i).sum();
  }
  if (!lj.allFinite()) throw NumericalFailure("responsibilities are not finite");
  return {std::move(lj)};
}

PartitionState s_step(const Responsibilities& resp, Rng& rng) {
  const auto n = resp.tau.rows();
  const auto J = static_cast<int>(resp.tau.cols());
  std::vector<int> z(static_cast<std::size_t>(n));
  std::vector<double> row(static_cast<std::size_t>(J));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < J; ++j) row[static_cast<std::size_t>(j)] = resp.tau(i, j);
    z[static_cast<std::size_t>(i)] = draw_categorical(row, rng);
  }
  PartitionState part = PartitionState::from_assignment(std::move(z), J);
  for (int j = 0; j < J; ++j)
    if (part.counts[static_cast<std::size_t>(j)] == 0) throw EmptyPartition(j);
  return part;
}

PartitionState hard_step(const Responsibilities& resp) {
  std::vector<int> z(static_cast<std::size_t>(resp.tau.rows()));
  for (Eigen::Index i = 0; i < resp.tau.rows(); ++i) {
    Eigen::Index k = 0;
    resp.tau.row(i).maxCoeff(&k);
    z[static_cast<std::size_t>(i)] = static_cast<int>(k);
  }
  PartitionState part = PartitionState::from_assignment(std::move(z), static_cast<int>(resp.tau.cols()));
  for (int j = 0; j < part.J(); ++j)
    if (part.counts[static_cast<std::size_t>(j)] == 0) throw EmptyPartition(j);
  return part;
}

namespace {

Penalty make_penalty(Method method, const TuningParams* tuning, bool for_beta, int j,
                     const SemOptions& opts) {
  Penalty pen;
  if (method != Method::ML) {
    if (tuning == nullptr) throw ContractViolation("ridge and Liu-type fits need tuning parameters");
    const double lambda = for_beta ? tuning->lambda_beta[j] : tuning->lambda_alpha[j];
    if (method == Method::Ridge) {
      pen = Penalty::ridge(lambda);
    } else {
      if (!tuning->anchor) throw ContractViolation("Liu-type fit needs a ridge anchor");
      const Coefficients& a = *tuning->anchor;
      pen = Penalty::liu_type(lambda, for_beta ? tuning->d_beta[j] : tuning->d_alpha[j],
                              for_beta ? VectorXd(a.beta.col(j)) : VectorXd(a.alpha.col(j)));
    }
  }
  pen.penalize_intercept = opts.penalize_intercept;
  pen.sign = opts.lt_sign;
  return pen;
}

}  // namespace

Coefficients m_step(const Dataset& data, const PartitionState& part, const Coefficients& psi_t,
                    Method method, const TuningParams* tuning, const SemOptions& opts) {
  psi_t.validate(data.p(), data.q());
  const int J = psi_t.J();
  if (part.J() != J || static_cast<int>(part.assignment.size()) != data.n())
    throw ContractViolation("partition does not match the data");
  if (tuning != nullptr) tuning->validate(J);

  Coefficients next = psi_t;
  for (int j = 0; j < J; ++j) {
    const ComponentWorkspace ws = build_workspace(data, part, j, psi_t.beta.col(j));
    Penalty pen = make_penalty(method, tuning, true, j, opts);
    if (method == Method::LT && opts.retune_each_iteration)
      pen.d = optimal_d_beta(ws.X, pen.lambda, pen.anchor, opts.penalize_intercept);
    next.beta.col(j) = irwls_beta_step(ws, pen);
  }

  std::vector<Penalty> pens;
  pens.reserve(static_cast<std::size_t>(J));
  for (int j = 0; j < J; ++j) pens.push_back(make_penalty(method, tuning, false, j, opts));
  CoordinateDescentOptions cd;
  cd.inner_tol = opts.inner_tol;
  cd.inner_max = opts.inner_max;
  next.alpha = coordinate_descent_alphas(data.Omega(), psi_t.alpha, psi_t.reference, part, pens, cd).alpha;
  return next;
}

namespace {

VectorXd fallback_beta(int p, double mean_y) {
  VectorXd b = VectorXd::Zero(p);
  b[0] = std::log(mean_y + 0.5);
  return b;
}

VectorXd warm_start_beta(const Dataset& data, const std::vector<int>& rows) {
  const int p = data.p();
  MatrixXd X(static_cast<Eigen::Index>(rows.size()), p);
  VectorXd y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    X.row(static_cast<Eigen::Index>(k)) = data.X().row(rows[k]);
    y[static_cast<Eigen::Index>(k)] = data.y()[rows[k]];
  }
  const double mean_y = y.size() > 0 ? y.mean() : 0.0;
  VectorXd b = fallback_beta(p, mean_y);
  if (rows.empty()) return b;
  try {
    for (int it = 0; it < 3; ++it) b = irwls_beta_step(make_workspace(X, y, b), Penalty::ml());
  } catch (const Error&) {
    return fallback_beta(p, mean_y);
  }
  return b;
}

}  // namespace

Coefficients initialize(const Dataset& data, const MixtureSpec& spec, InitStrategy strategy,
                        Rng& rng) {
  if (spec.J < 1 || spec.reference < 0 || spec.reference >= spec.J)
    throw ContractViolation("invalid mixture specification");
  const int n = data.n();
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::vector<int> label(static_cast<std::size_t>(n));
  if (strategy == InitStrategy::RandomPartition) {
    for (int i = n - 1; i > 0; --i) {
      const auto k = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(i) + 1));
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(k)]);
    }
    for (int r = 0; r < n; ++r) label[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] = r % spec.J;
  } else {
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return data.y()[a] < data.y()[b]; });
    for (int r = 0; r < n; ++r)
      label[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] =
          static_cast<int>(static_cast<long long>(r) * spec.J / n);
  }

  Coefficients psi;
  psi.beta.resize(data.p(), spec.J);
  psi.alpha = MatrixXd::Zero(data.q(), spec.J);
  psi.reference = spec.reference;
  for (int j = 0; j < spec.J; ++j) {
    std::vector<int> rows;
    for (int i = 0; i < n; ++i)
      if (label[static_cast<std::size_t>(i)] == j) rows.push_back(i);
    psi.beta.col(j) = warm_start_beta(data, rows);
  }
  return psi;
}

namespace {

struct ChainOutcome {
  FitResult fit;
};

Coefficients mean_of_aligned(const std::vector<Coefficients>& iterates, const Coefficients& target) {
  Coefficients mean = target;
  mean.beta.setZero();
  mean.alpha.setZero();
  for (const Coefficients& c : iterates) {
    const std::vector<int> sigma = align_components(c, target);
    const Coefficients a = apply_alignment(c, sigma, target.reference);
    mean.beta += a.beta;
    mean.alpha += a.alpha;
  }
  mean.beta /= static_cast<double>(iterates.size());
  mean.alpha /= static_cast<double>(iterates.size());
  mean.alpha.col(mean.reference).setZero();
  return mean;
}

FitResult run_chain(const Dataset& data, const MixtureSpec& spec, const SemOptions& opts,
                    Method method, const TuningParams* tuning, const Coefficients* initial,
                    Rng& rng) {
  Coefficients psi = initial != nullptr ? *initial : initialize(data, spec, opts.init, rng);
  psi.validate(data.p(), data.q());
  double prev = observed_loglik(data, psi);

  FitResult fit;
  fit.method = method;
  if (tuning != nullptr) fit.tuning = *tuning;

  std::vector<Coefficients> iterates;
  std::vector<PartitionState> partitions;
  iterates.reserve(static_cast<std::size_t>(opts.max_iters));
  for (int t = 1; t <= opts.max_iters; ++t) {
    const Responsibilities resp = e_step(data, psi);
    PartitionState part = opts.hard_assignment ? hard_step(resp) : s_step(resp, rng);
    psi = m_step(data, part, psi, method, tuning, opts);
    const double ll = observed_loglik(data, psi);
    fit.loglik_trace.push_back(ll);
    iterates.push_back(psi);
    partitions.push_back(std::move(part));
    fit.iterations_run = t;
    if (std::abs(ll - prev) < opts.epsilon) {
      fit.converged = true;
      break;
    }
    prev = ll;
  }

  // Candidates: post-burn-in iterates, or every iterate if the chain stopped earlier.
  const int first = fit.iterations_run > opts.burn_in ? opts.burn_in : 0;
  int best = first;
  for (int k = first; k < fit.iterations_run; ++k)
    if (fit.loglik_trace[static_cast<std::size_t>(k)] > fit.loglik_trace[static_cast<std::size_t>(best)]) best = k;

  fit.selected_iteration = best + 1;
  fit.partition = partitions[static_cast<std::size_t>(best)];
  if (opts.selection == EstimateSelection::BestLoglik) {
    fit.psi_hat = iterates[static_cast<std::size_t>(best)];
    fit.loglik = fit.loglik_trace[static_cast<std::size_t>(best)];
  } else {
    const std::vector<Coefficients> window(iterates.begin() + first, iterates.end());
    fit.psi_hat = mean_of_aligned(window, iterates[static_cast<std::size_t>(best)]);
    fit.loglik = observed_loglik(data, fit.psi_hat);
  }
  return fit;
}

}  // namespace

FitResult run_sem(const Dataset& data, const MixtureSpec& spec, const SemOptions& opts,
                  Method method, const TuningParams* tuning, const Coefficients* initial) {
  opts.validate();
  if (spec.J < 1 || spec.reference < 0 || spec.reference >= spec.J)
    throw ContractViolation("invalid mixture specification");
  std::optional<FitResult> best;
  std::vector<std::string> diagnostics;
  int failed = 0;
  for (int r = 0; r < opts.n_restarts; ++r) {
    Rng rng(derive_seed(opts.rng_seed, static_cast<std::uint64_t>(r)));
    try {
      FitResult fit = run_chain(data, spec, opts, method, tuning, initial, rng);
      fit.restart_used = r;
      if (!best || fit.loglik > best->loglik) best = std::move(fit);
    } catch (const EmptyPartition& e) {
      ++failed;
      diagnostics.push_back("restart " + std::to_string(r) + ": empty partition (" + e.what() + ")");
    } catch (const SingularSystem& e) {
      ++failed;
      diagnostics.push_back("restart " + std::to_string(r) + ": singular system (" + e.what() + ")");
    } catch (const NumericalFailure& e) {
      ++failed;
      diagnostics.push_back("restart " + std::to_string(r) + ": numerical failure (" + e.what() + ")");
    }
  }
  if (!best) {
    std::string msg = "all " + std::to_string(opts.n_restarts) + " SEM restarts failed";
    for (const auto& d : diagnostics) msg += "; " + d;
    throw FitFailed(msg);
  }
  best->restarts_failed = failed;
  best->diagnostics = std::move(diagnostics);
  return std::move(*best);
}

PipelineResult fit_pipeline(const Dataset& data, const MixtureSpec& spec, const SemOptions& opts) {
  PipelineResult out;
  try {
    out.ml = run_sem(data, spec, opts, Method::ML);
  } catch (const Error& e) {
    out.failures.push_back(std::string("ml: ") + e.what());
    return out;
  }
  try {
    const TuningParams rt = ridge_tuning(out.ml->psi_hat, data.p(), data.q());
    out.ridge = run_sem(data, spec, opts, Method::Ridge, &rt);
  } catch (const Error& e) {
    out.failures.push_back(std::string("ridge: ") + e.what());
    return out;
  }
  try {
    const TuningParams lt =
        liu_type_tuning(data, out.ridge->psi_hat, out.ridge->partition, opts.penalize_intercept);
    out.lt = run_sem(data, spec, opts, Method::LT, &lt);
  } catch (const Error& e) {
    out.failures.push_back(std::string("lt: ") + e.what());
  }
  return out;
}

}  // namespace fmpre
