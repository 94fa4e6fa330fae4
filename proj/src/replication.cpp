#include "fmpre/replication.hpp"

#include "fmpre/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

namespace fmpre {

namespace {

int method_index(Method m) {
  for (std::size_t k = 0; k < kAllMethods.size(); ++k)
    if (kAllMethods[k] == m) return static_cast<int>(k);
  throw ContractViolation("unknown method");
}

const std::array<const char*, 3> kBlocks{"beta", "alpha", "accuracy"};

double block_value(const MethodMetrics& m, const std::string& block) {
  if (block == "beta") return m.beta_rmse;
  if (block == "alpha") return m.alpha_rmse;
  return m.accuracy;
}

}  // namespace

int StudyResult::failed(Method m) const {
  const int k = method_index(m);
  int f = 0;
  for (const auto& r : replicates) f += r.methods[static_cast<std::size_t>(k)].ok ? 0 : 1;
  return f;
}

const SummaryRow& StudyResult::row(Method m, const std::string& block) const {
  for (const auto& r : rows)
    if (r.method == m && r.block == block) return r;
  throw ContractViolation("no summary row for " + to_string(m) + "/" + block);
}

void parallel_for(int count, int jobs, const std::function<void(int)>& body) {
  if (count <= 0) return;
  jobs = std::clamp(jobs, 1, count);
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> workers;
    workers.reserve(static_cast<std::size_t>(jobs));
    for (int w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (int i = next++; i < count; i = next++) {
          try {
            body(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
          }
        }
      });
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

ReplicateOutcome evaluate_replicate(const Dataset& train, const Dataset& validation,
                                    std::span<const int> z_validation, const Coefficients& truth,
                                    const SemOptions& sem) {
  ReplicateOutcome out;
  const MixtureSpec spec{truth.J(), truth.reference};
  const PipelineResult pipe = fit_pipeline(train, spec, sem);
  out.failures = pipe.failures;
  const std::array<const std::optional<FitResult>*, 3> fits{&pipe.ml, &pipe.ridge, &pipe.lt};
  for (std::size_t k = 0; k < fits.size(); ++k) {
    if (!fits[k]->has_value()) continue;
    const Coefficients& est = (*fits[k])->psi_hat;
    try {
      const std::vector<int> sigma = align_components(est, truth);
      const Coefficients aligned = apply_alignment(est, sigma, truth.reference);
      MethodMetrics& m = out.methods[k];
      m.beta_rmse = sqrt_mse(aligned, truth, Block::Beta, train.n());
      m.alpha_rmse = sqrt_mse(aligned, truth, Block::Alpha, train.n());
      m.accuracy = classification_accuracy(est, truth, validation, z_validation);
      m.ok = std::isfinite(m.beta_rmse) && std::isfinite(m.alpha_rmse);
    } catch (const Error& e) {
      out.failures.push_back(to_string(kAllMethods[k]) + " metrics: " + e.what());
    }
  }
  return out;
}

StudyResult summarize_study(std::vector<ReplicateOutcome> replicates) {
  StudyResult res;
  res.replicates = std::move(replicates);
  for (Method m : kAllMethods) {
    const auto k = static_cast<std::size_t>(method_index(m));
    for (const char* block : kBlocks) {
      std::vector<double> values;
      for (const auto& r : res.replicates)
        if (r.methods[k].ok) values.push_back(block_value(r.methods[k], block));
      const int failed = static_cast<int>(res.replicates.size() - values.size());
      SummaryRow row;
      row.method = m;
      row.block = block;
      if (values.empty()) {
        row.defined = false;
        row.summary.metric = block;
        row.summary.n_replicates = failed;
        row.summary.n_failed = failed;
      } else {
        row.summary = summarize_replicates(values, block, failed);
      }
      res.rows.push_back(std::move(row));
    }
  }
  return res;
}

StudyResult run_simulation_study(const SimulationStudyConfig& cfg) {
  cfg.design.validate();
  cfg.sem.validate();
  if (cfg.replicates < 1 || cfg.jobs < 1 || cfg.n_validation < 1)
    throw ContractViolation("replicates, jobs and validation size must be positive");
  std::vector<ReplicateOutcome> out(static_cast<std::size_t>(cfg.replicates));
  parallel_for(cfg.replicates, cfg.jobs, [&](int r) {
    auto& slot = out[static_cast<std::size_t>(r)];
    try {
      Rng rng(derive_seed(cfg.design.seed, static_cast<std::uint64_t>(r), kDataStream));
      const SimulatedSample train = generate_fmpre_sample(cfg.design, cfg.design.n, rng);
      const SimulatedSample valid = generate_fmpre_sample(cfg.design, cfg.n_validation, rng);
      SemOptions sem = cfg.sem;
      sem.rng_seed = derive_seed(cfg.design.seed, static_cast<std::uint64_t>(r), kFitStream);
      slot = evaluate_replicate(train.dataset(), valid.dataset(), valid.z, cfg.design.truth, sem);
      slot.resampled_rows = train.resampled_rows + valid.resampled_rows;
    } catch (const Error& e) {
      slot = ReplicateOutcome{};
      slot.failures.push_back(e.what());
    }
  });
  return summarize_study(std::move(out));
}

HeartTruth heart_truth(const Dataset& full, const HeartStudyConfig& cfg) {
  SemOptions sem = cfg.sem;
  sem.rng_seed = derive_seed(cfg.seed, 0, kFitStream);
  HeartTruth t;
  t.fit = run_sem(full, MixtureSpec{cfg.J, cfg.J - 1}, sem, Method::ML);
  t.labels = predict_components(full, t.fit.psi_hat);
  return t;
}

StudyResult run_heart_study(const Dataset& full, const HeartTruth& truth,
                            const HeartStudyConfig& cfg) {
  cfg.sem.validate();
  if (cfg.train_n < 1 || cfg.test_n < 1 || cfg.train_n + cfg.test_n > full.n())
    throw ContractViolation("training plus test size exceeds the data");
  if (cfg.replicates < 1 || cfg.jobs < 1) throw ContractViolation("replicates and jobs must be positive");
  std::vector<ReplicateOutcome> out(static_cast<std::size_t>(cfg.replicates));
  parallel_for(cfg.replicates, cfg.jobs, [&](int r) {
    auto& slot = out[static_cast<std::size_t>(r)];
    try {
      Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(r) + 1, kDataStream));
      std::vector<int> idx(static_cast<std::size_t>(full.n()));
      std::iota(idx.begin(), idx.end(), 0);
      // partial Fisher-Yates: first train_n + test_n positions are a random draw
      const int take = cfg.train_n + cfg.test_n;
      for (int i = 0; i < take; ++i) {
        const auto k = i + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(full.n() - i)));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(k)]);
      }
      const std::span<const int> all(idx);
      const auto train_rows = all.subspan(0, static_cast<std::size_t>(cfg.train_n));
      const auto test_rows = all.subspan(static_cast<std::size_t>(cfg.train_n),
                                         static_cast<std::size_t>(cfg.test_n));
      std::vector<int> z_test;
      for (int i : test_rows) z_test.push_back(truth.labels[static_cast<std::size_t>(i)]);
      SemOptions sem = cfg.sem;
      sem.rng_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(r) + 1, kFitStream);
      slot = evaluate_replicate(full.subset(train_rows), full.subset(test_rows), z_test,
                                truth.fit.psi_hat, sem);
    } catch (const Error& e) {
      slot = ReplicateOutcome{};
      slot.failures.push_back(e.what());
    }
  });
  return summarize_study(std::move(out));
}

void write_summary_csv(std::ostream& os, const StudyResult& result) {
  os << "method,parameter_block,M,L,U,n_replicates,n_failed\n";
  char buf[256];
  for (const auto& r : result.rows) {
    const auto& s = r.summary;
    if (r.defined)
      std::snprintf(buf, sizeof buf, "%s,%s,%.10g,%.10g,%.10g,%d,%d\n", to_string(r.method).c_str(),
                    r.block.c_str(), s.M, s.L, s.U, s.n_replicates, s.n_failed);
    else
      std::snprintf(buf, sizeof buf, "%s,%s,NA,NA,NA,%d,%d\n", to_string(r.method).c_str(),
                    r.block.c_str(), s.n_replicates, s.n_failed);
    os << buf;
  }
}

void write_boxplot_svg(std::ostream& os, const StudyResult& result, const std::string& block,
                       const std::string& title) {
  constexpr double W = 480, H = 320, left = 60, right = 20, top = 40, bottom = 40;
  std::array<std::vector<double>, 3> values;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t k = 0; k < kAllMethods.size(); ++k) {
    for (const auto& r : result.replicates)
      if (r.methods[k].ok) values[k].push_back(block_value(r.methods[k], block));
    std::sort(values[k].begin(), values[k].end());
    if (!values[k].empty()) {
      lo = std::min(lo, values[k].front());
      hi = std::max(hi, values[k].back());
    }
  }
  if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
  if (hi <= lo) hi = lo + 1.0;
  auto ypix = [&](double v) { return top + (H - top - bottom) * (hi - v) / (hi - lo); };
  char buf[512];
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"14\">" << title << "</text>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = lo + (hi - lo) * t / 4.0;
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%g\" x2=\"%g\" y1=\"%.2f\" y2=\"%.2f\" stroke=\"#ddd\"/>"
                  "<text x=\"%g\" y=\"%.2f\" text-anchor=\"end\" font-family=\"sans-serif\" "
                  "font-size=\"10\">%.3g</text>\n",
                  left, W - right, ypix(v), ypix(v), left - 4, ypix(v) + 3, v);
    os << buf;
  }
  const double slot = (W - left - right) / 3.0;
  for (std::size_t k = 0; k < 3; ++k) {
    const double cx = left + slot * (static_cast<double>(k) + 0.5);
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.2f\" y=\"%g\" text-anchor=\"middle\" font-family=\"sans-serif\" "
                  "font-size=\"12\">%s</text>\n",
                  cx, H - 14, to_string(kAllMethods[k]).c_str());
    os << buf;
    const auto& v = values[k];
    if (v.empty()) continue;
    const double q05 = quantile_type7(v, 0.05), q25 = quantile_type7(v, 0.25),
                 q50 = quantile_type7(v, 0.5), q75 = quantile_type7(v, 0.75),
                 q95 = quantile_type7(v, 0.95);
    const double bw = slot * 0.4;
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.2f\" x2=\"%.2f\" y1=\"%.2f\" y2=\"%.2f\" stroke=\"black\"/>\n"
                  "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"#9cc3e6\" "
                  "stroke=\"black\"/>\n"
                  "<line x1=\"%.2f\" x2=\"%.2f\" y1=\"%.2f\" y2=\"%.2f\" stroke=\"black\" "
                  "stroke-width=\"2\"/>\n",
                  cx, cx, ypix(q95), ypix(q05), cx - bw / 2, ypix(q75), bw, ypix(q25) - ypix(q75),
                  cx - bw / 2, cx + bw / 2, ypix(q50), ypix(q50));
    os << buf;
  }
  os << "</svg>\n";
}

}  // namespace fmpre
