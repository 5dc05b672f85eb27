#include "pzt/svm.hpp"

#include "pzt/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <stdexcept>

namespace pzt {

namespace {

double squared_distance(std::span<const double> x, std::span<const double> z) noexcept {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double d = x[k] - z[k];
    s += d * d;
  }
  return s;
}

/// LRU cache of kernel rows K(i, .).
class KernelRows {
public:
  KernelRows(const LabeledDataset& data, double gamma, std::size_t budget_bytes)
      : data_(data), gamma_(gamma), n_(data.size()), slot_(data.size(), kNone) {
    const std::size_t row_bytes = std::max<std::size_t>(n_ * sizeof(double), 1);
    capacity_ = std::clamp<std::size_t>(budget_bytes / row_bytes, 2, std::max<std::size_t>(n_, 2));
  }

  const double* row(std::size_t i) {
    if (slot_[i] != kNone) {
      lru_.splice(lru_.begin(), lru_, entries_[slot_[i]].pos);
      return entries_[slot_[i]].values.data();
    }
    std::size_t s;
    if (entries_.size() < capacity_) {
      s = entries_.size();
      entries_.push_back({});
      entries_[s].values.resize(n_);
    } else {
      s = lru_.back();
      lru_.pop_back();
      slot_[entries_[s].owner] = kNone;
    }
    auto& e = entries_[s];
    e.owner = i;
    const auto xi = data_.row(i);
    for (std::size_t k = 0; k < n_; ++k) e.values[k] = std::exp(-gamma_ * squared_distance(xi, data_.row(k)));
    lru_.push_front(s);
    e.pos = lru_.begin();
    slot_[i] = s;
    return e.values.data();
  }

private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  struct Entry {
    std::size_t owner = 0;
    std::vector<double> values;
    std::list<std::size_t>::iterator pos;
  };

  const LabeledDataset& data_;
  double gamma_;
  std::size_t n_;
  std::size_t capacity_ = 0;
  std::vector<std::size_t> slot_;
  std::vector<Entry> entries_;
  std::list<std::size_t> lru_;
};

void validate(const LabeledDataset& data, double C, double gamma) {
  if (data.size() < 2) throw std::invalid_argument("SVM training needs at least 2 examples");
  if (data.count(1) == 0 || data.count(-1) == 0) {
    throw std::invalid_argument("SVM training needs both classes present");
  }
  if (!(C > 0.0) || !std::isfinite(C)) throw std::invalid_argument("SVM: C must be positive");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("SVM: gamma must be positive");
}

bool in_up(int y, double a, double C) noexcept { return (y == 1 && a < C) || (y == -1 && a > 0.0); }
bool in_low(int y, double a, double C) noexcept { return (y == 1 && a > 0.0) || (y == -1 && a < C); }

// Bias from -y_i G_i, where G is the gradient of 1/2 a'Qa - e'a.
double bias_from_gradient(std::span<const int> y, std::span<const double> alpha, std::span<const double> grad,
                          double C) {
  double free_sum = 0.0;
  std::size_t free_count = 0;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    const double e = -y[i] * grad[i];
    if (alpha[i] > 0.0 && alpha[i] < C) {
      free_sum += e;
      ++free_count;
    } else if ((alpha[i] == 0.0) == (y[i] == 1)) {
      lower = std::max(lower, e);
    } else {
      upper = std::min(upper, e);
    }
  }
  if (free_count > 0) return free_sum / static_cast<double>(free_count);
  if (std::isinf(lower)) return upper;
  if (std::isinf(upper)) return lower;
  return 0.5 * (lower + upper);
}

} // namespace

double rbf_kernel(std::span<const double> x, std::span<const double> z, double gamma) {
  if (x.size() != z.size()) throw std::invalid_argument("rbf_kernel: length mismatch");
  if (!(gamma > 0.0)) throw std::invalid_argument("rbf_kernel: gamma must be positive");
  return std::exp(-gamma * squared_distance(x, z));
}

DualSolution solve_dual_smo(const LabeledDataset& data, const SmoOptions& opt) {
  validate(data, opt.C, opt.gamma);
  if (!(opt.tol > 0.0 && opt.tol <= 1e-2)) throw std::invalid_argument("SMO: tol must lie in (0, 1e-2]");
  if (opt.max_passes < 1) throw std::invalid_argument("SMO: max_passes must be >= 1");

  const std::size_t n = data.size();
  const double C = opt.C;
  const auto y = data.labels();
  KernelRows kernel(data, opt.gamma, opt.cache_bytes);
  SplitMix64 rng(opt.seed);

  DualSolution sol;
  sol.alpha.assign(n, 0.0);
  std::vector<double> grad(n, -1.0);
  auto& alpha = sol.alpha;

  constexpr double kTau = 1e-12;
  const std::size_t max_iter = std::max<std::size_t>(10'000'000, 100 * n);

  // f = 1/2 a'Qa - e'a = 1/2 sum a_i (G_i - 1), tracked per pass for stall detection.
  auto objective_min = [&] {
    double f = 0.0;
    for (std::size_t i = 0; i < n; ++i) f += alpha[i] * (grad[i] - 1.0);
    return 0.5 * f;
  };
  double pass_start_f = 0.0;
  int stalled_passes = 0;

  for (;;) {
    // i: maximal violator in I_up.
    double gmax = -std::numeric_limits<double>::infinity();
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (in_up(y[t], alpha[t], C)) {
        const double v = -y[t] * grad[t];
        if (v > gmax) {
          gmax = v;
          i = t;
        }
      }
    }
    // j: second-order choice among I_low; gmin tracks the stopping gap.
    double gmin = std::numeric_limits<double>::infinity();
    std::size_t j = n;
    double best = std::numeric_limits<double>::infinity();
    const double* ki = i < n ? kernel.row(i) : nullptr;
    for (std::size_t t = 0; t < n; ++t) {
      if (!in_low(y[t], alpha[t], C)) continue;
      const double v = -y[t] * grad[t];
      gmin = std::min(gmin, v);
      const double b = gmax - v;
      if (ki != nullptr && b > 0.0) {
        double a = 2.0 - 2.0 * ki[t];
        if (a <= 0.0) a = kTau;
        const double score = -(b * b) / a;
        if (score < best) {
          best = score;
          j = t;
        }
      }
    }
    sol.gap = gmax - gmin;
    if (i == n || j == n || sol.gap < opt.tol) {
      sol.converged = true;
      break;
    }
    if (sol.iterations >= max_iter) break;

    bool progressed = false;
    for (int attempt = 0; attempt < 2 && !progressed; ++attempt) {
      if (attempt == 1) {
        // Fallback: a seeded random violator from I_low.
        std::vector<std::size_t> candidates;
        for (std::size_t t = 0; t < n; ++t) {
          if (t != i && in_low(y[t], alpha[t], C) && gmax + y[t] * grad[t] > 0.0) candidates.push_back(t);
        }
        if (candidates.empty()) break;
        j = candidates[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(candidates.size()) - 1))];
      }
      const double* row_i = kernel.row(i);
      const double kij = row_i[j];
      const double old_ai = alpha[i], old_aj = alpha[j];
      double& ai = alpha[i];
      double& aj = alpha[j];

      if (y[i] != y[j]) {
        double quad = 2.0 - 2.0 * kij;
        if (quad <= 0.0) quad = kTau;
        const double delta = (-grad[i] - grad[j]) / quad;
        const double diff = ai - aj;
        ai += delta;
        aj += delta;
        if (diff > 0.0) {
          if (aj < 0.0) {
            aj = 0.0;
            ai = diff;
          }
        } else if (ai < 0.0) {
          ai = 0.0;
          aj = -diff;
        }
        if (diff > 0.0) {
          if (ai > C) {
            ai = C;
            aj = C - diff;
          }
        } else if (aj > C) {
          aj = C;
          ai = C + diff;
        }
      } else {
        double quad = 2.0 - 2.0 * kij;
        if (quad <= 0.0) quad = kTau;
        const double delta = (grad[i] - grad[j]) / quad;
        const double sum = ai + aj;
        ai -= delta;
        aj += delta;
        if (sum > C) {
          if (ai > C) {
            ai = C;
            aj = sum - C;
          }
        } else if (aj < 0.0) {
          aj = 0.0;
          ai = sum;
        }
        if (sum > C) {
          if (aj > C) {
            aj = C;
            ai = sum - C;
          }
        } else if (ai < 0.0) {
          ai = 0.0;
          aj = sum;
        }
      }

      const double dai = ai - old_ai;
      const double daj = aj - old_aj;
      if (dai == 0.0 && daj == 0.0) continue;
      progressed = true;
      // Row i may have been evicted while fetching row j; fetch j first.
      const double* row_j = kernel.row(j);
      const double* row_i2 = kernel.row(i);
      const double si = y[i] * dai, sj = y[j] * daj;
      for (std::size_t t = 0; t < n; ++t) grad[t] += y[t] * (row_i2[t] * si + row_j[t] * sj);
    }
    ++sol.iterations;

    if (sol.iterations % n == 0) {
      const double f = objective_min();
      if (!(f < pass_start_f - 1e-12 * std::max(1.0, std::abs(f)))) {
        if (++stalled_passes >= opt.max_passes) break;
      } else {
        stalled_passes = 0;
      }
      pass_start_f = f;
    }
    if (!progressed) {
      if (++stalled_passes >= opt.max_passes) break;
    }
  }

  sol.bias = bias_from_gradient(y, alpha, grad, C);
  sol.objective = -objective_min();
  return sol;
}

SvmModel model_from_dual(const LabeledDataset& data, const DualSolution& solution, const SmoOptions& options) {
  SvmModel m;
  m.gamma = options.gamma;
  m.C = options.C;
  m.tol = options.tol;
  m.seed = options.seed;
  m.bias = solution.bias;
  m.converged = solution.converged;
  m.iterations = solution.iterations;
  m.dim = data.dim();
  m.normalizer = Normalizer::identity(data.dim());
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (solution.alpha[i] > 0.0) {
      const auto r = data.row(i);
      m.support_vectors.insert(m.support_vectors.end(), r.begin(), r.end());
      m.dual_coeffs.push_back(solution.alpha[i] * data.label(i));
    }
  }
  return m;
}

SvmModel train_smo(const LabeledDataset& data, const SmoOptions& options) {
  return model_from_dual(data, solve_dual_smo(data, options), options);
}

double decision_value(const SvmModel& model, std::span<const double> x) {
  if (x.size() != model.dim) throw std::invalid_argument("decision_value: dimension mismatch");
  double f = 0.0;
  for (std::size_t i = 0; i < model.sv_count(); ++i) {
    f += model.dual_coeffs[i] * std::exp(-model.gamma * squared_distance(model.support_vector(i), x));
  }
  return f + model.bias;
}

double decision_value_raw(const SvmModel& model, std::span<const double> x) {
  if (x.size() != model.dim || model.normalizer.dim() != model.dim) {
    throw std::invalid_argument("decision_value_raw: dimension mismatch");
  }
  std::vector<double> z(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) z[k] = (x[k] - model.normalizer.mean[k]) / model.normalizer.std[k];
  return decision_value(model, z);
}

int predict(const SvmModel& model, std::span<const double> x) { return sign_label(decision_value(model, x)); }

int predict_raw(const SvmModel& model, std::span<const double> x) {
  return sign_label(decision_value_raw(model, x));
}

double dual_objective(const LabeledDataset& data, std::span<const double> alpha, double gamma) {
  const std::size_t n = data.size();
  double linear = 0.0, quad = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    linear += alpha[i];
    if (alpha[i] == 0.0) continue;
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (alpha[j] == 0.0) continue;
      row += alpha[j] * data.label(j) * std::exp(-gamma * squared_distance(data.row(i), data.row(j)));
    }
    quad += alpha[i] * data.label(i) * row;
  }
  return linear - 0.5 * quad;
}

namespace {

std::vector<double> kernel_expansion(const LabeledDataset& data, std::span<const double> alpha, double gamma) {
  const std::size_t n = data.size();
  std::vector<double> g(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (alpha[j] == 0.0) continue;
      g[i] += alpha[j] * data.label(j) * std::exp(-gamma * squared_distance(data.row(i), data.row(j)));
    }
  }
  return g;
}

} // namespace

double compute_bias(const LabeledDataset& data, std::span<const double> alpha, double C, double gamma) {
  const auto g = kernel_expansion(data, alpha, gamma);
  std::vector<double> grad(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) grad[i] = data.label(i) * g[i] - 1.0;
  return bias_from_gradient(data.labels(), alpha, grad, C);
}

double kkt_violation(const LabeledDataset& data, std::span<const double> alpha, double bias, double C, double gamma) {
  const auto g = kernel_expansion(data, alpha, gamma);
  double worst = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double margin = data.label(i) * (g[i] + bias);
    double v;
    if (alpha[i] <= 0.0) {
      v = std::max(0.0, 1.0 - margin);
    } else if (alpha[i] >= C) {
      v = std::max(0.0, margin - 1.0);
    } else {
      v = std::abs(margin - 1.0);
    }
    worst = std::max(worst, v);
  }
  return worst;
}

} // namespace pzt
