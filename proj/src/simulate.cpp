#include "fmpre/simulate.hpp"

#include "fmpre/errors.hpp"
#include "fmpre/gating.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace fmpre {

void SimulationDesign::validate() const {
  if (n < 1) throw ContractViolation("design sample size must be positive");
  if (!(phi >= 0.0 && phi < 1.0) || !(rho >= 0.0 && rho < 1.0))
    throw ContractViolation("phi and rho must lie in [0, 1)");
  const int k = n_covariates() + 1;
  truth.validate(k, k);
}

SimulationDesign study_preset(Study which) {
  SimulationDesign d;
  if (which == Study::Study1) {
    d.n = 100;
    d.phi = 0.90;
    d.rho = 0.85;
    d.layout = CovariateLayout::PhiPhiRhoRho;
    d.truth.beta.resize(5, 2);
    d.truth.beta.col(0) << 1, 1, 2, 3, 0.5;
    d.truth.beta.col(1) << -1, -1, -2, -0.5, -2;
    d.truth.alpha = MatrixXd::Zero(5, 2);
    d.truth.alpha.col(0) << 0.5, -1, -1, 0.3, -3;
    d.truth.reference = 1;
  } else {
    d.n = 300;
    d.phi = 0.0;
    d.rho = 0.90;
    d.layout = CovariateLayout::RhoRho;
    d.truth.beta.resize(3, 3);
    d.truth.beta.col(0) << 0.85, -1, 2;
    d.truth.beta.col(1) << 1, 0.5, 1;
    d.truth.beta.col(2) << -2, 2, -2;
    d.truth.alpha = MatrixXd::Zero(3, 3);
    d.truth.alpha.col(0) << 0.5, -1, -1;
    d.truth.alpha.col(1) << 0.1, 1, 0.05;
    d.truth.reference = 2;
  }
  return d;
}

Study study_from_string(const std::string& s) {
  if (s == "study1") return Study::Study1;
  if (s == "study2") return Study::Study2;
  throw ContractViolation("unknown preset '" + s + "' (expected study1 or study2)");
}

std::string to_string(CollinearityForm f) {
  return f == CollinearityForm::PaperLinear ? "paper_linear" : "sqrt_convention";
}

CollinearityForm collinearity_from_string(const std::string& s) {
  if (s == "paper_linear") return CollinearityForm::PaperLinear;
  if (s == "sqrt_convention") return CollinearityForm::SqrtConvention;
  throw ContractViolation("unknown collinearity form '" + s + "'");
}

namespace {

double own_loading(double c, CollinearityForm form) {
  return form == CollinearityForm::PaperLinear ? 1.0 - c * c : std::sqrt(1.0 - c * c);
}

// One row [1, x_1..x_k] with its own shared factor u_{k+1}.
void draw_row(const SimulationDesign& d, Rng& rng, std::normal_distribution<double>& normal,
              Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row) {
  const int k = d.n_covariates();
  double u[5];
  for (int l = 0; l <= k; ++l) u[l] = normal(rng);
  const double shared = u[k];
  row[0] = 1.0;
  for (int l = 0; l < k; ++l) {
    const double c = (d.layout == CovariateLayout::PhiPhiRhoRho && l < 2) ? d.phi : d.rho;
    row[l + 1] = own_loading(c, d.form) * u[l] + c * shared;
  }
}

}  // namespace

Covariates generate_covariates(const SimulationDesign& design, int n, Rng& rng) {
  const int k = design.n_covariates() + 1;
  Covariates c{MatrixXd(n, k), MatrixXd(n, k)};
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    draw_row(design, rng, normal, c.X.row(i));
    draw_row(design, rng, normal, c.Omega.row(i));
  }
  return c;
}

SimulatedSample sample_responses(const Coefficients& truth, MatrixXd X, MatrixXd Omega, Rng& rng) {
  truth.validate(static_cast<int>(X.cols()), static_cast<int>(Omega.cols()));
  const MatrixXd pi = gating_probabilities(Omega, truth.alpha, truth.reference);
  SimulatedSample s;
  const auto n = X.rows();
  s.y.resize(n);
  s.z.resize(static_cast<std::size_t>(n));
  std::vector<double> row(static_cast<std::size_t>(truth.J()));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < truth.J(); ++j) row[static_cast<std::size_t>(j)] = pi(i, j);
    const int z = draw_categorical(row, rng);
    const double eta = std::clamp(X.row(i).dot(truth.beta.col(z)), kMinLogMean, kMaxLogMean);
    std::poisson_distribution<long long> pois(std::exp(eta));
    s.z[static_cast<std::size_t>(i)] = z;
    s.y[i] = static_cast<double>(pois(rng));
  }
  s.X = std::move(X);
  s.Omega = std::move(Omega);
  return s;
}

SimulatedSample generate_fmpre_sample(const SimulationDesign& design, int n, Rng& rng) {
  design.validate();
  if (n < 1) throw ContractViolation("sample size must be positive");
  const int k = design.n_covariates() + 1;
  MatrixXd X(n, k), Omega(n, k);
  std::normal_distribution<double> normal(0.0, 1.0);
  int resampled = 0;
  for (int i = 0; i < n; ++i) {
    for (int attempt = 0;; ++attempt) {
      draw_row(design, rng, normal, X.row(i));
      draw_row(design, rng, normal, Omega.row(i));
      if ((X.row(i) * design.truth.beta).maxCoeff() <= kMaxSimLogMean) break;
      ++resampled;
      if (attempt > 1000) throw NumericalFailure("cannot draw a covariate row with bounded mean");
    }
  }
  SimulatedSample s = sample_responses(design.truth, std::move(X), std::move(Omega), rng);
  s.resampled_rows = resampled;
  return s;
}

// ---- key = value files ------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

double parse_double(const std::string& text, int line) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw FormatError("expected a number, got '" + t + "'", line);
  return v;
}

long long parse_integer(const std::string& text, int line) {
  const std::string t = trim(text);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw FormatError("expected an integer, got '" + t + "'", line);
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

MatrixXd parse_matrix(const std::string& value, int line) {
  const auto cols = split(value, ';');
  if (cols.empty()) throw FormatError("empty coefficient list", line);
  std::vector<std::vector<double>> data;
  for (const auto& c : cols) {
    std::vector<double> v;
    for (const auto& e : split(c, ',')) v.push_back(parse_double(e, line));
    if (!data.empty() && v.size() != data.front().size())
      throw FormatError("coefficient vectors differ in length", line);
    data.push_back(std::move(v));
  }
  MatrixXd m(static_cast<Eigen::Index>(data.front().size()), static_cast<Eigen::Index>(data.size()));
  for (std::size_t j = 0; j < data.size(); ++j)
    for (std::size_t r = 0; r < data[j].size(); ++r)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = data[j][r];
  return m;
}

std::string format_matrix(const MatrixXd& m) {
  std::ostringstream os;
  os.precision(17);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    if (j > 0) os << "; ";
    for (Eigen::Index r = 0; r < m.rows(); ++r) os << (r > 0 ? "," : "") << m(r, j);
  }
  return os.str();
}

}  // namespace

std::vector<KeyValue> parse_key_values(std::istream& is) {
  std::vector<KeyValue> out;
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw FormatError("expected 'key = value'", line);
    KeyValue kv{trim(s.substr(0, eq)), trim(s.substr(eq + 1)), line};
    if (kv.key.empty()) throw FormatError("missing key", line);
    out.push_back(std::move(kv));
  }
  return out;
}

bool apply_design_key(SimulationDesign& d, const std::string& key, const std::string& value,
                      int line) {
  try {
    if (key == "preset") {
      const std::uint64_t seed = d.seed;
      d = study_preset(study_from_string(value));
      d.seed = seed;
    } else if (key == "n") {
      d.n = static_cast<int>(parse_integer(value, line));
    } else if (key == "phi") {
      d.phi = parse_double(value, line);
    } else if (key == "rho") {
      d.rho = parse_double(value, line);
    } else if (key == "layout") {
      if (value == "phiphirhorho") d.layout = CovariateLayout::PhiPhiRhoRho;
      else if (value == "rhorho") d.layout = CovariateLayout::RhoRho;
      else throw FormatError("unknown layout '" + value + "'", line);
    } else if (key == "collinearity") {
      d.form = collinearity_from_string(value);
    } else if (key == "reference") {
      d.truth.reference = static_cast<int>(parse_integer(value, line));
    } else if (key == "seed") {
      d.seed = static_cast<std::uint64_t>(parse_integer(value, line));
    } else if (key == "beta") {
      d.truth.beta = parse_matrix(value, line);
    } else if (key == "alpha") {
      d.truth.alpha = parse_matrix(value, line);
    } else {
      return false;
    }
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw FormatError(e.what(), line);
  }
  return true;
}

SimulationDesign read_design(std::istream& is) {
  SimulationDesign d = study_preset(Study::Study1);
  for (const KeyValue& kv : parse_key_values(is))
    if (!apply_design_key(d, kv.key, kv.value, kv.line))
      throw FormatError("unknown design key '" + kv.key + "'", kv.line);
  try {
    d.validate();
  } catch (const ContractViolation& e) {
    throw FormatError(std::string("invalid design: ") + e.what());
  }
  return d;
}

void write_design(std::ostream& os, const SimulationDesign& d) {
  os.precision(17);
  os << "n = " << d.n << '\n'
     << "phi = " << d.phi << '\n'
     << "rho = " << d.rho << '\n'
     << "layout = " << (d.layout == CovariateLayout::PhiPhiRhoRho ? "phiphirhorho" : "rhorho") << '\n'
     << "collinearity = " << to_string(d.form) << '\n'
     << "reference = " << d.truth.reference << '\n'
     << "seed = " << d.seed << '\n'
     << "beta = " << format_matrix(d.truth.beta) << '\n'
     << "alpha = " << format_matrix(d.truth.alpha) << '\n';
}

}  // namespace fmpre
