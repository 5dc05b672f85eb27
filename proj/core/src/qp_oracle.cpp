#include "pzt/qp_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pzt {

namespace {

double objective(const std::vector<double>& q, const std::vector<double>& a) {
  const std::size_t n = a.size();
  double lin = 0.0, quad = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    lin += a[i];
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += q[i * n + j] * a[j];
    quad += a[i] * row;
  }
  return lin - 0.5 * quad;
}

std::vector<double> gradient(const std::vector<double>& q, const std::vector<double>& a) {
  const std::size_t n = a.size();
  std::vector<double> g(n, 1.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) g[i] -= q[i * n + j] * a[j];
  return g;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

// Gaussian elimination with partial pivoting; false if numerically singular.
bool solve_linear(std::vector<double> a, std::vector<double>& b, std::size_t n) {
  double scale = 0.0;
  for (double v : a) scale = std::max(scale, std::abs(v));
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
    if (std::abs(a[piv * n + col]) <= 1e-13 * scale) return false;
    if (piv != col) {
      for (std::size_t k = 0; k < n; ++k) std::swap(a[col * n + k], a[piv * n + k]);
      std::swap(b[col], b[piv]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] / a[col * n + col];
      if (f == 0.0) continue;
      for (std::size_t k = col; k < n; ++k) a[r * n + k] -= f * a[col * n + k];
      b[r] -= f * b[col];
    }
  }
  for (std::size_t r = n; r-- > 0;) {
    double s = b[r];
    for (std::size_t k = r + 1; k < n; ++k) s -= a[r * n + k] * b[k];
    b[r] = s / a[r * n + r];
  }
  return true;
}

// Solves the stationarity system on the free set implied by `a`.
bool polish(const std::vector<double>& q, const std::vector<int>& y, double C, std::vector<double>& a) {
  const std::size_t n = a.size();
  const double snap = 1e-8 * C;
  std::vector<double> fixed(n, 0.0);
  std::vector<std::size_t> free_set;
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] <= snap) {
      fixed[i] = 0.0;
    } else if (a[i] >= C - snap) {
      fixed[i] = C;
    } else {
      free_set.push_back(i);
    }
  }
  const std::size_t f = free_set.size();
  std::vector<double> out = fixed;
  if (f > 0) {
    const std::size_t m = f + 1;
    std::vector<double> sys(m * m, 0.0), rhs(m, 0.0);
    double bound_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) bound_sum += y[i] * fixed[i];
    for (std::size_t r = 0; r < f; ++r) {
      const std::size_t i = free_set[r];
      for (std::size_t c = 0; c < f; ++c) sys[r * m + c] = q[i * n + free_set[c]];
      sys[r * m + f] = y[i];
      sys[f * m + r] = y[i];
      double s = 1.0;
      for (std::size_t j = 0; j < n; ++j) s -= q[i * n + j] * fixed[j];
      rhs[r] = s;
    }
    rhs[f] = -bound_sum;
    if (!solve_linear(sys, rhs, m)) return false;
    for (std::size_t r = 0; r < f; ++r) {
      const double v = rhs[r];
      if (v < -1e-9 * C || v > C * (1.0 + 1e-9)) return false;
      out[free_set[r]] = std::clamp(v, 0.0, C);
    }
  } else {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += y[i] * out[i];
    if (std::abs(s) > 1e-9 * C) return false;
  }
  a = std::move(out);
  return true;
}

} // namespace

std::vector<double> gram_matrix(const LabeledDataset& data, double gamma) {
  const std::size_t n = data.size();
  std::vector<double> k(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      const auto xi = data.row(i), xj = data.row(j);
      for (std::size_t d = 0; d < data.dim(); ++d) s += (xi[d] - xj[d]) * (xi[d] - xj[d]);
      k[i * n + j] = std::exp(-gamma * s);
    }
  }
  return k;
}

std::vector<double> project_feasible(const std::vector<double>& v, const std::vector<int>& y, double C) {
  const std::size_t n = v.size();
  auto at = [&](double mu, std::vector<double>* out) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double a = std::clamp(v[i] - mu * y[i], 0.0, C);
      if (out) (*out)[i] = a;
      s += y[i] * a;
    }
    return s;
  };
  double vmax = 0.0;
  for (double x : v) vmax = std::max(vmax, std::abs(x));
  double lo = -(vmax + C) - 1.0, hi = vmax + C + 1.0; // phi(lo) > 0 > phi(hi)
  double flo = at(lo, nullptr), fhi = at(hi, nullptr);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    const double fm = at(mid, nullptr);
    if (fm == 0.0) {
      lo = hi = mid;
      flo = fhi = 0.0;
      break;
    }
    if (fm > 0.0) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
      fhi = fm;
    }
  }
  // phi is linear on the final bracket.
  double mu = lo;
  if (hi != lo && flo != fhi) mu = lo + flo * (hi - lo) / (flo - fhi);
  std::vector<double> out(n);
  at(mu, &out);
  return out;
}

QpResult brute_force_qp(const LabeledDataset& data, double C, double gamma) {
  const std::size_t n = data.size();
  if (n > 12) throw std::invalid_argument("brute_force_qp: limited to n <= 12");
  if (data.count(1) == 0 || data.count(-1) == 0) throw std::invalid_argument("brute_force_qp: needs both classes");
  if (!(C > 0.0) || !(gamma > 0.0)) throw std::invalid_argument("brute_force_qp: C and gamma must be positive");

  const std::vector<int> y(data.labels().begin(), data.labels().end());
  const auto k = gram_matrix(data, gamma);
  std::vector<double> q(n * n);
  double lipschitz = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      q[i * n + j] = y[i] * y[j] * k[i * n + j];
      row += std::abs(q[i * n + j]);
    }
    lipschitz = std::max(lipschitz, row);
  }

  QpResult res;
  const double scale = std::max(1.0, C);
  double step = 1.0 / lipschitz;
  std::vector<double> x(n, 0.0), x_prev = x;
  double fx = objective(q, x);
  double momentum = 1.0;

  for (res.iterations = 0; res.iterations < 1'000'000; ++res.iterations) {
    const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    const double beta = (momentum - 1.0) / next_momentum;
    std::vector<double> probe(n);
    for (std::size_t i = 0; i < n; ++i) probe[i] = x[i] + beta * (x[i] - x_prev[i]);
    probe = project_feasible(probe, y, C);

    auto g = gradient(q, probe);
    std::vector<double> trial(n);
    for (std::size_t i = 0; i < n; ++i) trial[i] = probe[i] + step * g[i];
    trial = project_feasible(trial, y, C);
    double ft = objective(q, trial);

    if (ft < fx) {
      // Restart from x without momentum; halve the step while ascent fails.
      momentum = 1.0;
      g = gradient(q, x);
      for (;;) {
        for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] + step * g[i];
        trial = project_feasible(trial, y, C);
        ft = objective(q, trial);
        if (ft >= fx || step < 1e-30) break;
        step *= 0.5;
      }
    } else {
      momentum = next_momentum;
    }

    res.residual = max_abs_diff(trial, x) / scale;
    x_prev = x;
    if (ft >= fx) {
      x = trial;
      fx = ft;
    }
    if (res.residual < 1e-10) {
      res.converged = true;
      break;
    }
  }

  std::vector<double> polished = x;
  if (polish(q, y, C, polished)) {
    const double fp = objective(q, polished);
    if (fp >= fx - 1e-14 * std::max(1.0, std::abs(fx))) {
      x = polished;
      fx = fp;
      res.polished = true;
    }
  }
  res.alpha = std::move(x);
  res.objective = fx;
  return res;
}

std::vector<double> symmetric_eigenvalues(std::vector<double> a, std::size_t n) {
  if (a.size() != n * n) throw std::invalid_argument("symmetric_eigenvalues: size mismatch");
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0, diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      diag += a[i * n + i] * a[i * n + i];
      for (std::size_t j = i + 1; j < n; ++j) off += a[i * n + j] * a[i * n + j];
    }
    if (off <= 1e-30 * std::max(diag, 1e-300)) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t r = p + 1; r < n; ++r) {
        const double apr = a[p * n + r];
        if (apr == 0.0) continue;
        const double theta = (a[r * n + r] - a[p * n + p]) / (2.0 * apr);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p], akr = a[k * n + r];
          a[k * n + p] = c * akp - s * akr;
          a[k * n + r] = s * akp + c * akr;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k], ark = a[r * n + k];
          a[p * n + k] = c * apk - s * ark;
          a[r * n + k] = s * apk + c * ark;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a[i * n + i];
  std::sort(ev.begin(), ev.end());
  return ev;
}

} // namespace pzt
