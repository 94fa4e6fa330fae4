// Python bindings: simulation, fitting, likelihood and metrics on plain numpy arrays.

#include "fmpre/errors.hpp"
#include "fmpre/metrics.hpp"
#include "fmpre/replication.hpp"
#include "fmpre/sem.hpp"
#include "fmpre/simulate.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>

namespace py = pybind11;
using namespace fmpre;

namespace {

SemOptions sem_options(std::uint64_t seed, int max_iters, int burn_in, int restarts, double epsilon,
                       const std::string& selection) {
  SemOptions o;
  o.rng_seed = seed;
  o.max_iters = max_iters;
  o.burn_in = burn_in;
  o.n_restarts = restarts;
  o.epsilon = epsilon;
  if (selection == "best_loglik") o.selection = EstimateSelection::BestLoglik;
  else if (selection == "post_burnin_mean") o.selection = EstimateSelection::PostBurninMean;
  else throw ContractViolation("selection must be best_loglik or post_burnin_mean");
  o.validate();
  return o;
}

py::dict fit_dict(const FitResult& f) {
  py::dict d;
  d["method"] = to_string(f.method);
  d["beta"] = f.psi_hat.beta;
  d["alpha"] = f.psi_hat.alpha;
  d["reference"] = f.psi_hat.reference;
  d["loglik"] = f.loglik;
  d["loglik_trace"] = f.loglik_trace;
  d["converged"] = f.converged;
  d["iterations"] = f.iterations_run;
  d["selected_iteration"] = f.selected_iteration;
  d["restarts_failed"] = f.restarts_failed;
  d["diagnostics"] = f.diagnostics;
  if (f.tuning) {
    py::dict t;
    t["lambda_beta"] = f.tuning->lambda_beta;
    t["lambda_alpha"] = f.tuning->lambda_alpha;
    t["d_beta"] = f.tuning->d_beta;
    t["d_alpha"] = f.tuning->d_alpha;
    d["tuning"] = t;
  } else {
    d["tuning"] = py::none();
  }
  return d;
}

int default_reference(int J, int reference) { return reference < 0 ? J - 1 : reference; }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Finite mixtures of Poisson regressions with ML, ridge and Liu-type estimators";

  static py::exception<FitFailed> fit_failed(m, "FitFailed", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const FitFailed& e) {
      PyErr_SetString(fit_failed.ptr(), e.what());
    } catch (const ContractViolation& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const FormatError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  m.def(
      "simulate",
      [](const std::string& preset, int n, double phi, double rho, std::uint64_t seed) {
        SimulationDesign d = study_preset(study_from_string(preset));
        if (n > 0) d.n = n;
        if (phi >= 0) d.phi = phi;
        if (rho >= 0) d.rho = rho;
        Rng rng(seed);
        const SimulatedSample s = generate_fmpre_sample(d, d.n, rng);
        py::dict out;
        out["y"] = s.y;
        out["X"] = s.X;
        out["Omega"] = s.Omega;
        out["z"] = s.z;
        out["beta"] = d.truth.beta;
        out["alpha"] = d.truth.alpha;
        out["reference"] = d.truth.reference;
        return out;
      },
      py::arg("preset") = "study1", py::arg("n") = 0, py::arg("phi") = -1.0, py::arg("rho") = -1.0,
      py::arg("seed") = 1, "Draw one sample from a preset design (n/phi/rho override the preset).");

  m.def(
      "fit",
      [](const VectorXd& y, const MatrixXd& X, const MatrixXd& Omega, int J, const std::string& method,
         int reference, std::uint64_t seed, int max_iters, int burn_in, int restarts, double epsilon,
         const std::string& selection) {
        const Dataset data(y, X, Omega);
        const MixtureSpec spec{J, default_reference(J, reference)};
        const SemOptions o = sem_options(seed, max_iters, burn_in, restarts, epsilon, selection);
        const Method want = method_from_string(method);
        std::optional<FitResult> f;
        std::string why;
        {
          py::gil_scoped_release release;
          if (want == Method::ML) {
            f = run_sem(data, spec, o, Method::ML);
          } else {
            // ridge and Liu-type need the earlier stages for their tuning
            PipelineResult p = fit_pipeline(data, spec, o);
            f = want == Method::Ridge ? p.ridge : p.lt;
            for (const auto& s : p.failures) why += (why.empty() ? "" : "; ") + s;
          }
        }
        if (!f) throw FitFailed(to_string(want) + " fit failed: " + why);
        return fit_dict(*f);
      },
      py::arg("y"), py::arg("X"), py::arg("Omega"), py::arg("J") = 2, py::arg("method") = "ml",
      py::arg("reference") = -1, py::arg("seed") = 20240601, py::arg("max_iters") = 500,
      py::arg("burn_in") = 100, py::arg("restarts") = 5, py::arg("epsilon") = 1e-6,
      py::arg("selection") = "best_loglik",
      "Fit one estimator by stochastic EM. method is 'ml', 'ridge' or 'lt'.");

  m.def(
      "fit_all",
      [](const VectorXd& y, const MatrixXd& X, const MatrixXd& Omega, int J, int reference,
         std::uint64_t seed, int max_iters, int burn_in, int restarts, double epsilon) {
        const Dataset data(y, X, Omega);
        const SemOptions o = sem_options(seed, max_iters, burn_in, restarts, epsilon, "best_loglik");
        PipelineResult p;
        {
          py::gil_scoped_release release;
          p = fit_pipeline(data, MixtureSpec{J, default_reference(J, reference)}, o);
        }
        py::dict out;
        out["ml"] = p.ml ? py::object(fit_dict(*p.ml)) : py::none();
        out["ridge"] = p.ridge ? py::object(fit_dict(*p.ridge)) : py::none();
        out["lt"] = p.lt ? py::object(fit_dict(*p.lt)) : py::none();
        out["failures"] = p.failures;
        return out;
      },
      py::arg("y"), py::arg("X"), py::arg("Omega"), py::arg("J") = 2, py::arg("reference") = -1,
      py::arg("seed") = 20240601, py::arg("max_iters") = 500, py::arg("burn_in") = 100,
      py::arg("restarts") = 5, py::arg("epsilon") = 1e-6,
      "ML -> ridge -> Liu-type pipeline; failed stages are None.");

  m.def(
      "observed_loglik",
      [](const VectorXd& y, const MatrixXd& X, const MatrixXd& Omega, const MatrixXd& beta,
         const MatrixXd& alpha, int reference) {
        Coefficients c{beta, alpha, default_reference(static_cast<int>(beta.cols()), reference)};
        return observed_loglik(Dataset(y, X, Omega), c);
      },
      py::arg("y"), py::arg("X"), py::arg("Omega"), py::arg("beta"), py::arg("alpha"),
      py::arg("reference") = -1);

  m.def("bic", &bic, py::arg("loglik"), py::arg("n"), py::arg("J"), py::arg("p"), py::arg("q"));

  m.def(
      "sqrt_mse",
      [](const MatrixXd& beta_hat, const MatrixXd& alpha_hat, const MatrixXd& beta, const MatrixXd& alpha,
         int reference, const std::string& block, int n) {
        const int ref = default_reference(static_cast<int>(beta.cols()), reference);
        const Coefficients est{beta_hat, alpha_hat, ref}, truth{beta, alpha, ref};
        const Coefficients aligned = apply_alignment(est, align_components(est, truth), ref);
        if (block != "beta" && block != "alpha") throw ContractViolation("block must be beta or alpha");
        return sqrt_mse(aligned, truth, block == "beta" ? Block::Beta : Block::Alpha, n);
      },
      py::arg("beta_hat"), py::arg("alpha_hat"), py::arg("beta"), py::arg("alpha"), py::arg("reference") = -1,
      py::arg("block") = "beta", py::arg("n") = 1, "Label-aligned root mean squared error.");

  m.def(
      "simulation_study",
      [](const std::string& preset, int replicates, int n, double phi, double rho, std::uint64_t seed,
         int jobs, int max_iters, int burn_in, int restarts) {
        SimulationStudyConfig cfg;
        cfg.design = study_preset(study_from_string(preset));
        if (n > 0) cfg.design.n = n;
        if (phi >= 0) cfg.design.phi = phi;
        if (rho >= 0) cfg.design.rho = rho;
        cfg.design.seed = seed;
        cfg.replicates = replicates;
        cfg.jobs = jobs;
        cfg.sem.max_iters = max_iters;
        cfg.sem.burn_in = burn_in;
        cfg.sem.n_restarts = restarts;
        std::ostringstream os;
        {
          py::gil_scoped_release release;
          write_summary_csv(os, run_simulation_study(cfg));
        }
        return os.str();
      },
      py::arg("preset") = "study1", py::arg("replicates") = 200, py::arg("n") = 0, py::arg("phi") = -1.0,
      py::arg("rho") = -1.0, py::arg("seed") = 20240601, py::arg("jobs") = 1, py::arg("max_iters") = 500,
      py::arg("burn_in") = 100, py::arg("restarts") = 5, "Monte-Carlo study; returns the summary CSV text.");
}
