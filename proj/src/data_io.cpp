#include "fmpre/data_io.hpp"

#include "fmpre/errors.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace fmpre {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_number(const std::string& t, double& v) {
  if (t.empty()) return false;
  const char* first = t.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
  return ec == std::errc() && ptr == t.data() + t.size() && std::isfinite(v);
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw FormatError("cannot open '" + path + "'");
  return f;
}

}  // namespace

HeartData parse_heart(std::istream& is, const HeartOptions& opts) {
  std::vector<double> stage, oldpeak, slope;
  std::string raw;
  int line = 0, read = 0, dropped = 0;
  while (std::getline(is, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (trim(raw).empty()) continue;
    ++read;
    const auto f = split_fields(raw);
    if (static_cast<int>(f.size()) != kHeartColumns)
      throw FormatError("expected " + std::to_string(kHeartColumns) + " fields, found " +
                            std::to_string(f.size()),
                        line);
    bool missing = false;
    for (int c = 0; c < kHeartColumns; ++c) {
      const bool used = c == kHeartOldpeakColumn || c == kHeartSlopeColumn || c == kHeartStageColumn;
      const std::string& t = f[static_cast<std::size_t>(c)];
      if (t == "?") {
        if (used || opts.drop_any_missing) missing = true;
        continue;
      }
      double v = 0.0;
      if (!parse_number(t, v))
        throw FormatError("field " + std::to_string(c + 1) + " is not numeric: '" + t + "'", line);
    }
    if (missing) {
      ++dropped;
      continue;
    }
    double op = 0, sl = 0, st = 0;
    parse_number(f[kHeartOldpeakColumn], op);
    parse_number(f[kHeartSlopeColumn], sl);
    parse_number(f[kHeartStageColumn], st);
    if (st < 0 || st > 4 || st != std::floor(st))
      throw FormatError("disease stage must be an integer in 0..4", line);
    if (opts.slope == SlopeEncoding::Dummy && sl != 1 && sl != 2 && sl != 3)
      throw FormatError("slope must be 1, 2 or 3 for dummy encoding", line);
    oldpeak.push_back(op);
    slope.push_back(sl);
    stage.push_back(st);
  }
  const auto n = static_cast<Eigen::Index>(stage.size());
  if (n == 0) throw FormatError("no complete rows in heart data");

  const Eigen::Index cols = opts.slope == SlopeEncoding::Numeric ? 3 : 4;
  MatrixXd X(n, cols);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    X(i, 0) = 1.0;
    X(i, 1) = oldpeak[k];
    if (opts.slope == SlopeEncoding::Numeric) {
      X(i, 2) = slope[k];
    } else {
      X(i, 2) = slope[k] == 2 ? 1.0 : 0.0;
      X(i, 3) = slope[k] == 3 ? 1.0 : 0.0;
    }
  }
  VectorXd y = Eigen::Map<VectorXd>(stage.data(), n);
  HeartData h{Dataset(std::move(y), X, X), Eigen::Map<VectorXd>(oldpeak.data(), n),
              Eigen::Map<VectorXd>(slope.data(), n), read, dropped};
  return h;
}

HeartData load_heart_dataset(const std::string& path, const HeartOptions& opts) {
  std::ifstream f = open_or_throw(path);
  return parse_heart(f, opts);
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] == name) return static_cast<int>(c);
  throw ContractViolation("column '" + name + "' not found");
}

CsvTable parse_csv(std::istream& is) {
  CsvTable t;
  std::string raw;
  int line = 0;
  std::vector<std::vector<double>> rows;
  while (std::getline(is, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (trim(raw).empty()) continue;
    auto f = split_fields(raw);
    if (t.header.empty()) {
      for (auto& h : f) {
        if (h.size() >= 2 && h.front() == '"' && h.back() == '"') h = h.substr(1, h.size() - 2);
        if (h.empty()) throw FormatError("empty column name in header", line);
      }
      t.header = std::move(f);
      continue;
    }
    if (f.size() != t.header.size())
      throw FormatError("expected " + std::to_string(t.header.size()) + " fields, found " +
                            std::to_string(f.size()),
                        line);
    std::vector<double> r(f.size());
    for (std::size_t c = 0; c < f.size(); ++c)
      if (!parse_number(f[c], r[c]))
        throw FormatError("column '" + t.header[c] + "' is not numeric: '" + f[c] + "'", line);
    rows.push_back(std::move(r));
  }
  if (t.header.empty()) throw FormatError("empty CSV input");
  if (rows.empty()) throw FormatError("CSV input has a header but no data rows");
  t.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.header.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t c = 0; c < rows[i].size(); ++c)
      t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
  return t;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream f = open_or_throw(path);
  return parse_csv(f);
}

Dataset dataset_from_table(const CsvTable& table, const std::string& response,
                           const std::vector<std::string>& x_cols,
                           const std::vector<std::string>& omega_cols) {
  const auto n = table.values.rows();
  auto design = [&](const std::vector<std::string>& names) {
    MatrixXd m(n, static_cast<Eigen::Index>(names.size()) + 1);
    m.col(0).setOnes();
    for (std::size_t k = 0; k < names.size(); ++k)
      m.col(static_cast<Eigen::Index>(k) + 1) = table.values.col(table.column(names[k]));
    return m;
  };
  return Dataset(table.values.col(table.column(response)), design(x_cols), design(omega_cols));
}

double correlation(const VectorXd& a, const VectorXd& b) {
  if (a.size() != b.size() || a.size() < 2) throw ContractViolation("correlation needs two equal-length samples");
  const VectorXd da = a.array() - a.mean();
  const VectorXd db = b.array() - b.mean();
  const double den = std::sqrt(da.squaredNorm() * db.squaredNorm());
  if (den == 0.0) throw NumericalFailure("correlation of a constant sample");
  return da.dot(db) / den;
}

}  // namespace fmpre
