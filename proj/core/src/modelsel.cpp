#include "pzt/modelsel.hpp"

#include "pzt/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace pzt {

Normalizer zscore_fit(const LabeledDataset& training) {
  const std::size_t n = training.size();
  if (n < 2) throw std::invalid_argument("zscore_fit: need at least 2 rows");
  const std::size_t d = training.dim();
  Normalizer norm{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0), std::vector<bool>(d, false)};
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = training.row(i);
    for (std::size_t k = 0; k < d; ++k) norm.mean[k] += r[k];
  }
  for (auto& m : norm.mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = training.row(i);
    for (std::size_t k = 0; k < d; ++k) {
      const double c = r[k] - norm.mean[k];
      norm.std[k] += c * c;
    }
  }
  for (std::size_t k = 0; k < d; ++k) {
    norm.std[k] = std::sqrt(norm.std[k] / static_cast<double>(n));
    if (!(norm.std[k] > 0.0)) {
      norm.std[k] = 1.0;
      norm.degenerate[k] = true;
    }
  }
  return norm;
}

std::vector<double> zscore_apply(const Normalizer& norm, std::span<const double> x) {
  if (x.size() != norm.dim()) throw std::invalid_argument("zscore_apply: dimension mismatch");
  std::vector<double> z(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) z[k] = (x[k] - norm.mean[k]) / norm.std[k];
  return z;
}

std::vector<double> zscore_inverse(const Normalizer& norm, std::span<const double> z) {
  if (z.size() != norm.dim()) throw std::invalid_argument("zscore_inverse: dimension mismatch");
  std::vector<double> x(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) x[k] = norm.mean[k] + z[k] * norm.std[k];
  return x;
}

LabeledDataset zscore_apply(const Normalizer& norm, const LabeledDataset& data) {
  LabeledDataset out(data.dim());
  for (std::size_t i = 0; i < data.size(); ++i) out.add(zscore_apply(norm, data.row(i)), data.label(i));
  return out;
}

namespace {

void shuffle(std::vector<std::size_t>& v, SplitMix64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(v[i - 1], v[j]);
  }
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_by_class(std::span<const int> labels) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] == 1 ? pos : neg).push_back(i);
  return {pos, neg};
}

} // namespace

std::vector<std::vector<std::size_t>> stratified_kfold(std::span<const int> labels, int m, std::uint64_t seed) {
  if (m < 2) throw std::invalid_argument("stratified_kfold: need at least 2 folds");
  auto [pos, neg] = split_by_class(labels);
  if (pos.size() < static_cast<std::size_t>(m) || neg.size() < static_cast<std::size_t>(m)) {
    throw std::invalid_argument("stratified_kfold: every class needs at least m members");
  }
  SplitMix64 rng(seed);
  std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(m));
  for (auto* cls : {&pos, &neg}) {
    shuffle(*cls, rng);
    for (std::size_t i = 0; i < cls->size(); ++i) folds[i % folds.size()].push_back((*cls)[i]);
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

std::vector<std::size_t> stratified_subsample(std::span<const int> labels, double fraction, std::size_t min_per_class,
                                              std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("stratified_subsample: fraction in (0, 1]");
  auto [pos, neg] = split_by_class(labels);
  SplitMix64 rng(seed);
  std::vector<std::size_t> out;
  for (auto* cls : {&pos, &neg}) {
    shuffle(*cls, rng);
    auto keep = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(cls->size())));
    keep = std::min(cls->size(), std::max(keep, min_per_class));
    out.insert(out.end(), cls->begin(), cls->begin() + static_cast<std::ptrdiff_t>(keep));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> AxisRange::values() const {
  std::vector<double> v;
  for (int i = 0;; ++i) {
    const double x = lo + i * step;
    if (x > hi + 1e-9 * step) break;
    v.push_back(x);
  }
  return v;
}

void GridSpec::validate() const {
  for (const auto* r : {&log2_c, &log2_gamma}) {
    if (!(r->step > 0.0) || !(r->lo <= r->hi)) throw std::invalid_argument("GridSpec: empty range or step <= 0");
  }
  if (!(fine_radius >= 0.0) || !(fine_step > 0.0)) throw std::invalid_argument("GridSpec: bad fine pass");
  if (folds < 2) throw std::invalid_argument("GridSpec: folds must be >= 2");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("GridSpec: fraction must lie in (0, 1]");
}

double GridResult::best_c() const { return std::exp2(best.log2_c); }
double GridResult::best_gamma() const { return std::exp2(best.log2_gamma); }

double cross_validate(const LabeledDataset& data, const std::vector<std::vector<std::size_t>>& folds,
                      const SmoOptions& options) {
  double sum = 0.0;
  std::vector<char> in_fold(data.size());
  for (const auto& validation : folds) {
    std::fill(in_fold.begin(), in_fold.end(), 0);
    for (auto i : validation) in_fold[i] = 1;
    std::vector<std::size_t> train_idx;
    for (std::size_t i = 0; i < data.size(); ++i)
      if (!in_fold[i]) train_idx.push_back(i);
    const auto model = train_smo(data.subset(train_idx), options);
    std::size_t correct = 0;
    for (auto i : validation) correct += (predict(model, data.row(i)) == data.label(i));
    sum += static_cast<double>(correct) / static_cast<double>(validation.size());
  }
  return sum / static_cast<double>(folds.size());
}

namespace {

bool better(const GridCell& a, const GridCell& b) {
  if (a.cv_accuracy != b.cv_accuracy) return a.cv_accuracy > b.cv_accuracy;
  if (a.log2_c != b.log2_c) return a.log2_c < b.log2_c;
  return a.log2_gamma < b.log2_gamma;
}

void evaluate_cells(std::vector<GridCell>& cells, const LabeledDataset& data,
                    const std::vector<std::vector<std::size_t>>& folds, const GridSpec& spec) {
  auto run = [&](std::size_t idx) {
    auto& cell = cells[idx];
    SmoOptions opt;
    opt.C = std::exp2(cell.log2_c);
    opt.gamma = std::exp2(cell.log2_gamma);
    opt.tol = spec.tol;
    opt.max_passes = spec.max_passes;
    opt.seed = spec.seed;
    try {
      cell.cv_accuracy = cross_validate(data, folds, opt);
    } catch (const std::exception&) {
      cell.cv_accuracy = 0.0;
      cell.failed = true;
    }
  };
  unsigned threads = spec.threads ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, cells.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) run(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < cells.size();) run(i);
    });
  }
}

} // namespace

GridResult grid_search(const LabeledDataset& data, const GridSpec& spec) {
  spec.validate();
  if (data.empty()) throw std::invalid_argument("grid_search: empty data");

  GridResult result;
  const auto sub_idx =
      stratified_subsample(data.labels(), spec.fraction, static_cast<std::size_t>(spec.folds), spec.seed);
  const auto sub = data.subset(sub_idx);
  result.subsample_size = sub.size();
  const auto folds = stratified_kfold(sub.labels(), spec.folds, derive_seed(spec.seed, 1));

  std::map<std::pair<double, double>, GridCell> evaluated;
  auto run_pass = [&](const std::vector<double>& cs, const std::vector<double>& gs) {
    std::vector<GridCell> pending;
    for (double c : cs)
      for (double g : gs)
        if (!evaluated.contains({c, g})) pending.push_back({c, g, 0.0, false});
    evaluate_cells(pending, sub, folds, spec);
    for (const auto& cell : pending) evaluated.emplace(std::pair{cell.log2_c, cell.log2_gamma}, cell);
  };
  auto argmax = [&] {
    const GridCell* best = nullptr;
    for (const auto& [key, cell] : evaluated)
      if (best == nullptr || better(cell, *best)) best = &cell;
    return *best;
  };

  run_pass(spec.log2_c.values(), spec.log2_gamma.values());
  const GridCell coarse = argmax();
  if (spec.fine_radius > 0.0) {
    const AxisRange fc{coarse.log2_c - spec.fine_radius, coarse.log2_c + spec.fine_radius, spec.fine_step};
    const AxisRange fg{coarse.log2_gamma - spec.fine_radius, coarse.log2_gamma + spec.fine_radius, spec.fine_step};
    run_pass(fc.values(), fg.values());
  }
  result.best = argmax();
  for (const auto& [key, cell] : evaluated) result.cells.push_back(cell);
  return result;
}

ConfusionMetrics ConfusionMetrics::from_counts(std::size_t gamma_total, std::size_t gamma_recognized,
                                               std::size_t hadron_total, std::size_t hadron_recognized) {
  if (gamma_recognized > gamma_total || hadron_recognized > hadron_total) {
    throw std::invalid_argument("ConfusionMetrics: recognized exceeds total");
  }
  return {{gamma_total, gamma_recognized}, {hadron_total, hadron_recognized}};
}

double ConfusionMetrics::accuracy() const noexcept {
  const auto total = gamma.total + hadron.total;
  if (total == 0) return 0.0;
  return static_cast<double>(gamma.recognized + hadron.recognized) / static_cast<double>(total);
}

ConfusionMetrics evaluate(const SvmModel& model, const LabeledDataset& test) {
  if (test.empty()) throw std::invalid_argument("evaluate: empty test set");
  ConfusionMetrics m;
  for (std::size_t i = 0; i < test.size(); ++i) {
    auto& cls = test.label(i) == 1 ? m.gamma : m.hadron;
    ++cls.total;
    if (predict_raw(model, test.row(i)) == test.label(i)) ++cls.recognized;
  }
  return m;
}

std::string format_percent(double ratio) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * ratio);
  return buf;
}

std::string format_metrics_table(const ConfusionMetrics& metrics) {
  std::ostringstream out;
  char line[128];
  std::snprintf(line, sizeof line, "%-8s| %8s | %10s | %7s\n", "", "Total", "Recognized", "Ratio");
  out << line;
  for (const auto& [name, c] : {std::pair{"Gammas", metrics.gamma}, std::pair{"Hadrons", metrics.hadron}}) {
    std::snprintf(line, sizeof line, "%-8s| %8zu | %10zu | %7s\n", name, c.total, c.recognized,
                  format_percent(c.ratio()).c_str());
    out << line;
  }
  out << "Overall accuracy: " << format_percent(metrics.accuracy()) << '\n';
  return out.str();
}

SvmModel fit_model(const LabeledDataset& raw, const SmoOptions& options) {
  const auto norm = zscore_fit(raw);
  auto model = train_smo(zscore_apply(norm, raw), options);
  model.normalizer = norm;
  return model;
}

} // namespace pzt
