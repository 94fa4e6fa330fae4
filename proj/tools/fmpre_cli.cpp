// fmpre: fit, simulate, replicate and heart-study commands.

#include "fmpre/data_io.hpp"
#include "fmpre/errors.hpp"
#include "fmpre/replication.hpp"
#include "fmpre/sem.hpp"
#include "fmpre/simulate.hpp"
#include "fmpre/tuning.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fmpre;

namespace {

enum Exit { kOk = 0, kInputError = 1, kFitFailed = 2, kTooManyFailures = 3 };

struct SemFlags {
  double epsilon = 1e-6;
  int max_iters = 500;
  int burn_in = 100;
  int restarts = 5;
  std::string selection = "best_loglik";
  std::string init = "random";
  bool keep_intercept_unpenalized = false;

  void add(CLI::App* app) {
    app->add_option("--epsilon", epsilon, "log-likelihood change threshold")->capture_default_str();
    app->add_option("--max-iters", max_iters)->capture_default_str();
    app->add_option("--burn-in", burn_in)->capture_default_str();
    app->add_option("--restarts", restarts)->capture_default_str();
    app->add_option("--selection", selection)
        ->check(CLI::IsMember({"best_loglik", "post_burnin_mean"}))
        ->capture_default_str();
    app->add_option("--init", init)->check(CLI::IsMember({"random", "quantile"}))->capture_default_str();
    app->add_flag("--no-intercept-penalty", keep_intercept_unpenalized,
                  "leave intercepts out of the ridge/Liu-type penalty");
  }

  SemOptions options(std::uint64_t seed) const {
    SemOptions o;
    o.epsilon = epsilon;
    o.max_iters = max_iters;
    o.burn_in = burn_in;
    o.n_restarts = restarts;
    o.selection = selection == "best_loglik" ? EstimateSelection::BestLoglik
                                             : EstimateSelection::PostBurninMean;
    o.init = init == "random" ? InitStrategy::RandomPartition : InitStrategy::QuantileSplit;
    o.penalize_intercept = !keep_intercept_unpenalized;
    o.rng_seed = seed;
    o.validate();
    return o;
  }
};

json matrix_columns(const MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    json col = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) col.push_back(m(r, j));
    out.push_back(col);
  }
  return out;
}

json vec(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json fit_json(const FitResult& f, const Dataset& data) {
  json j;
  j["method"] = to_string(f.method);
  j["components"] = f.psi_hat.J();
  j["reference"] = f.psi_hat.reference;
  j["n"] = data.n();
  j["beta"] = matrix_columns(f.psi_hat.beta);
  j["alpha"] = matrix_columns(f.psi_hat.alpha);
  j["loglik"] = f.loglik;
  j["bic"] = bic(f.loglik, data.n(), f.psi_hat.J(), data.p(), data.q());
  j["converged"] = f.converged;
  j["iterations_run"] = f.iterations_run;
  j["selected_iteration"] = f.selected_iteration;
  j["restart_used"] = f.restart_used;
  j["restarts_failed"] = f.restarts_failed;
  j["loglik_trace"] = f.loglik_trace;
  j["diagnostics"] = f.diagnostics;
  if (f.tuning) {
    const auto& t = *f.tuning;
    j["tuning"] = {{"lambda_beta", vec(t.lambda_beta)},
                   {"lambda_alpha", vec(t.lambda_alpha)},
                   {"d_beta", vec(t.d_beta)},
                   {"d_alpha", vec(t.d_alpha)},
                   {"lambda_beta_capped", t.lambda_beta_capped},
                   {"lambda_alpha_capped", t.lambda_alpha_capped},
                   {"source", t.source}};
  }
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot write '" + path.string() + "'");
  f << text;
}

// Runs the pipeline up to `method`; throws FitFailed with the pipeline diagnostics.
FitResult fit_method(const Dataset& data, const MixtureSpec& spec, const SemOptions& sem,
                     Method method) {
  if (method == Method::ML) return run_sem(data, spec, sem, Method::ML);
  const PipelineResult p = fit_pipeline(data, spec, sem);
  const auto& r = method == Method::Ridge ? p.ridge : p.lt;
  if (!r) {
    std::string msg = "pipeline failed";
    for (const auto& f : p.failures) msg += "; " + f;
    throw FitFailed(msg);
  }
  return *r;
}

json bic_scan(const Dataset& data, int j_max, const SemOptions& sem, Method method, int& best_J) {
  json rows = json::array();
  double best = INFINITY;
  best_J = 0;
  for (int J = 1; J <= j_max; ++J) {
    json row{{"components", J}};
    try {
      const FitResult f = fit_method(data, MixtureSpec{J, J - 1}, sem, method);
      const double b = bic(f.loglik, data.n(), J, data.p(), data.q());
      row["loglik"] = f.loglik;
      row["bic"] = b;
      if (b < best) best = b, best_J = J;
    } catch (const Error& e) {
      row["error"] = e.what();
    }
    rows.push_back(row);
  }
  return rows;
}

int report_study(const StudyResult& r, const fs::path& out_dir, bool svg, const std::string& title) {
  std::ostringstream csv;
  write_summary_csv(csv, r);
  if (out_dir.empty()) {
    std::cout << csv.str();
  } else {
    write_text(out_dir / "summary.csv", csv.str());
    if (svg) {
      for (const char* block : {"beta", "alpha", "accuracy"}) {
        std::ostringstream s;
        write_boxplot_svg(s, r, block, title + " - " + block);
        write_text(out_dir / (std::string("boxplot_") + block + ".svg"), s.str());
      }
    }
    std::cerr << "wrote " << (out_dir / "summary.csv").string() << '\n';
  }
  int worst = 0;
  for (Method m : kAllMethods) worst = std::max(worst, r.failed(m));
  const int total = static_cast<int>(r.replicates.size());
  if (2 * worst > total) {
    std::cerr << "error: " << worst << " of " << total << " replicates failed\n";
    int shown = 0;
    for (const auto& rep : r.replicates)
      for (const auto& f : rep.failures)
        if (shown++ < 5) std::cerr << "  " << f << '\n';
    return kTooManyFailures;
  }
  return kOk;
}

std::vector<std::string> split_cols(const std::vector<std::string>& in) {
  std::vector<std::string> out;
  for (const auto& s : in) {
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite mixtures of Poisson regressions with multinomial-logit experts"};
  app.require_subcommand(1);

  // fit
  auto* fit = app.add_subcommand("fit", "fit one model to a CSV file");
  std::string data_path, response, method_name = "ml", out_dir;
  std::vector<std::string> x_cols, omega_cols;
  int components = 2, reference = -1, bic_max = 0;
  std::uint64_t seed = 20240601;
  SemFlags fit_flags;
  fit->add_option("--data", data_path, "CSV with a header row")->required()->check(CLI::ExistingFile);
  fit->add_option("--response", response)->required();
  fit->add_option("--x", x_cols, "component regressors (intercept added)")->required();
  fit->add_option("--omega", omega_cols, "gating concomitants (intercept added)")->required();
  fit->add_option("--method", method_name)->check(CLI::IsMember({"ml", "ridge", "lt"}))->capture_default_str();
  fit->add_option("--components,-J", components)->check(CLI::PositiveNumber)->capture_default_str();
  fit->add_option("--reference", reference, "0-based reference class (default: last)");
  fit->add_option("--bic-scan", bic_max, "also fit J = 1..J_max and report BIC");
  fit->add_option("--seed", seed)->capture_default_str();
  fit->add_option("--out", out_dir, "output directory")->required();
  fit_flags.add(fit);

  // simulate
  auto* sim = app.add_subcommand("simulate", "replicate a simulation study preset");
  std::string preset = "study1", collinearity = "paper_linear", sim_out;
  std::optional<double> phi, rho;
  std::optional<int> sim_n;
  int replicates = 200, jobs = 1, n_validation = 100;
  std::uint64_t sim_seed = 20240601;
  bool svg = false;
  SemFlags sim_flags;
  sim->add_option("--preset", preset)->check(CLI::IsMember({"study1", "study2"}))->capture_default_str();
  sim->add_option("--phi", phi);
  sim->add_option("--rho", rho);
  sim->add_option("--n", sim_n);
  sim->add_option("--replicates", replicates)->check(CLI::PositiveNumber)->capture_default_str();
  sim->add_option("--jobs", jobs)->check(CLI::PositiveNumber)->capture_default_str();
  sim->add_option("--n-validation", n_validation)->check(CLI::PositiveNumber)->capture_default_str();
  sim->add_option("--collinearity", collinearity)
      ->check(CLI::IsMember({"paper_linear", "sqrt_convention"}))
      ->capture_default_str();
  sim->add_option("--seed", sim_seed)->capture_default_str();
  sim->add_option("--out", sim_out, "output directory (default: CSV on stdout)");
  sim->add_flag("--svg", svg, "write box plots next to the CSV");
  sim_flags.add(sim);

  // sample
  auto* smp = app.add_subcommand("sample", "write one simulated data set as CSV");
  std::string smp_preset = "study1", smp_out;
  std::uint64_t smp_seed = 1;
  std::optional<int> smp_n;
  smp->add_option("--preset", smp_preset)->check(CLI::IsMember({"study1", "study2"}))->capture_default_str();
  smp->add_option("--n", smp_n);
  smp->add_option("--seed", smp_seed)->capture_default_str();
  smp->add_option("--out", smp_out, "CSV path")->required();

  // replicate
  auto* rep = app.add_subcommand("replicate", "run a study described by a key = value file");
  std::string config_path;
  rep->add_option("--config", config_path)->required()->check(CLI::ExistingFile);

  // heart
  auto* heart = app.add_subcommand("heart", "heart-disease subsampling study");
  std::string heart_path, heart_out, slope = "numeric";
  int train_n = 30, test_n = 100, heart_reps = 200, heart_jobs = 1, heart_bic = 0;
  std::uint64_t heart_seed = 20240601;
  bool heart_svg = false;
  SemFlags heart_flags;
  heart->add_option("--data", heart_path, "processed Cleveland file")->required()->check(CLI::ExistingFile);
  heart->add_option("--train-n", train_n)->check(CLI::PositiveNumber)->capture_default_str();
  heart->add_option("--test-n", test_n)->check(CLI::PositiveNumber)->capture_default_str();
  heart->add_option("--replicates", heart_reps)->check(CLI::NonNegativeNumber)->capture_default_str();
  heart->add_option("--jobs", heart_jobs)->check(CLI::PositiveNumber)->capture_default_str();
  heart->add_option("--bic-scan", heart_bic, "report BIC for J = 1..J_max on the full data");
  heart->add_option("--slope", slope)->check(CLI::IsMember({"numeric", "dummy"}))->capture_default_str();
  heart->add_option("--seed", heart_seed)->capture_default_str();
  heart->add_option("--out", heart_out, "output directory (default: CSV on stdout)");
  heart->add_flag("--svg", heart_svg);
  heart_flags.add(heart);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fit) {
      const Dataset data = dataset_from_table(read_csv(data_path), response, split_cols(x_cols),
                                              split_cols(omega_cols));
      const SemOptions sem = fit_flags.options(seed);
      const int ref = reference < 0 ? components - 1 : reference;
      const Method method = method_from_string(method_name);
      const fs::path out(out_dir);
      json result;
      try {
        result = fit_json(fit_method(data, MixtureSpec{components, ref}, sem, method), data);
      } catch (const FitFailed& e) {
        write_text(out / "diagnostics.txt", std::string(e.what()) + "\n");
        std::cerr << "error: " << e.what() << '\n';
        return kFitFailed;
      }
      if (bic_max > 0) {
        int best = 0;
        result["bic_scan"] = bic_scan(data, bic_max, sem, method, best);
        result["bic_best_components"] = best;
      }
      write_text(out / "fit.json", result.dump(2) + "\n");
      std::cerr << "wrote " << (out / "fit.json").string() << '\n';
      return kOk;
    }

    if (*sim) {
      SimulationStudyConfig cfg;
      cfg.design = study_preset(study_from_string(preset));
      if (phi) cfg.design.phi = *phi;
      if (rho) cfg.design.rho = *rho;
      if (sim_n) cfg.design.n = *sim_n;
      cfg.design.form = collinearity_from_string(collinearity);
      cfg.design.seed = sim_seed;
      cfg.replicates = replicates;
      cfg.jobs = jobs;
      cfg.n_validation = n_validation;
      cfg.sem = sim_flags.options(sim_seed);
      return report_study(run_simulation_study(cfg), sim_out, svg, preset);
    }

    if (*smp) {
      SimulationDesign d = study_preset(study_from_string(smp_preset));
      if (smp_n) d.n = *smp_n;
      Rng rng(derive_seed(smp_seed, 0, kDataStream));
      const SimulatedSample s = generate_fmpre_sample(d, d.n, rng);
      std::ostringstream os;
      const auto k = s.X.cols();
      os << "y";
      for (Eigen::Index c = 1; c < k; ++c) os << ",x" << c;
      for (Eigen::Index c = 1; c < k; ++c) os << ",w" << c;
      os << ",z\n";
      os.precision(17);
      for (Eigen::Index i = 0; i < s.X.rows(); ++i) {
        os << s.y[i];
        for (Eigen::Index c = 1; c < k; ++c) os << ',' << s.X(i, c);
        for (Eigen::Index c = 1; c < k; ++c) os << ',' << s.Omega(i, c);
        os << ',' << s.z[static_cast<std::size_t>(i)] << '\n';
      }
      write_text(smp_out, os.str());
      return kOk;
    }

    if (*rep) {
      std::ifstream in(config_path);
      SimulationStudyConfig cfg;
      cfg.design = study_preset(Study::Study1);
      SemFlags flags;
      std::string out;
      bool want_svg = false;
      for (const KeyValue& kv : parse_key_values(in)) {
        if (apply_design_key(cfg.design, kv.key, kv.value, kv.line)) continue;
        try {
          if (kv.key == "replicates") cfg.replicates = std::stoi(kv.value);
          else if (kv.key == "jobs") cfg.jobs = std::stoi(kv.value);
          else if (kv.key == "n_validation") cfg.n_validation = std::stoi(kv.value);
          else if (kv.key == "restarts") flags.restarts = std::stoi(kv.value);
          else if (kv.key == "max_iters") flags.max_iters = std::stoi(kv.value);
          else if (kv.key == "burn_in") flags.burn_in = std::stoi(kv.value);
          else if (kv.key == "epsilon") flags.epsilon = std::stod(kv.value);
          else if (kv.key == "selection") flags.selection = kv.value;
          else if (kv.key == "init") flags.init = kv.value;
          else if (kv.key == "out") out = kv.value;
          else if (kv.key == "svg") want_svg = kv.value == "true" || kv.value == "1";
          else throw FormatError("unknown key '" + kv.key + "'", kv.line);
        } catch (const std::logic_error&) {
          throw FormatError("bad value for '" + kv.key + "'", kv.line);
        }
      }
      cfg.design.validate();
      cfg.sem = flags.options(cfg.design.seed);
      if (!out.empty() && fs::path(out).is_relative())
        out = (fs::path(config_path).parent_path() / out).string();
      return report_study(run_simulation_study(cfg), out, want_svg, "replicate");
    }

    if (*heart) {
      HeartOptions ho;
      ho.slope = slope == "numeric" ? SlopeEncoding::Numeric : SlopeEncoding::Dummy;
      const HeartData hd = load_heart_dataset(heart_path, ho);
      std::fprintf(stderr, "loaded %d rows (%d dropped), cor(Z1, Z2) = %.4f\n", hd.data.n(),
                   hd.rows_dropped, correlation(hd.st_depression, hd.st_slope));
      HeartStudyConfig cfg;
      cfg.train_n = train_n;
      cfg.test_n = test_n;
      cfg.replicates = heart_reps;
      cfg.jobs = heart_jobs;
      cfg.seed = heart_seed;
      cfg.sem = heart_flags.options(heart_seed);
      const fs::path out(heart_out);
      if (heart_bic > 0) {
        int best = 0;
        const json scan = bic_scan(hd.data, heart_bic, cfg.sem, Method::ML, best);
        json j{{"bic_scan", scan}, {"bic_best_components", best}};
        if (heart_out.empty()) std::cout << j.dump(2) << '\n';
        else write_text(out / "bic.json", j.dump(2) + "\n");
      }
      if (heart_reps == 0) return kOk;
      const HeartTruth truth = heart_truth(hd.data, cfg);
      return report_study(run_heart_study(hd.data, truth, cfg), out, heart_svg, "heart");
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kOk;
}
