#include "pzt/qp_oracle.hpp"
#include "pzt/rng.hpp"
#include "pzt/svm.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace pzt;

namespace {

LabeledDataset xor_data() {
  LabeledDataset d(2);
  d.add(std::vector<double>{0, 0}, 1);
  d.add(std::vector<double>{1, 1}, 1);
  d.add(std::vector<double>{0, 1}, -1);
  d.add(std::vector<double>{1, 0}, -1);
  return d;
}

LabeledDataset sample_data(SplitMix64& rng, std::size_t n, std::size_t dim) {
  LabeledDataset d(dim);
  std::vector<double> x(dim);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = i % 2 ? -1 : 1;
    for (auto& v : x) v = rng.normal() + 0.7 * y;
    d.add(x, y);
  }
  return d;
}

} // namespace

TEST_CASE("rbf kernel") {
  const std::vector<double> x{0.3, -1.2, 4.0};
  CHECK(rbf_kernel(x, x, 3.0) == 1.0);
  const std::vector<double> a{1.0, 0.0}, b{0.0, 1.0};
  CHECK(rbf_kernel(a, b, 1.07) == doctest::Approx(std::exp(-2.14)).epsilon(1e-15));
  CHECK(rbf_kernel(a, b, 1.07) == doctest::Approx(0.11765).epsilon(1e-4));
  SplitMix64 rng(5);
  for (int k = 0; k < 20; ++k) {
    std::vector<double> p(4), q(4);
    for (auto& v : p) v = rng.normal();
    for (auto& v : q) v = rng.normal();
    CHECK(rbf_kernel(p, q, 0.4) == rbf_kernel(q, p, 0.4));
    CHECK(rbf_kernel(p, q, 0.4) < 1.0);
  }
  CHECK_THROWS_AS(rbf_kernel(a, x, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(rbf_kernel(a, b, 0.0), std::invalid_argument);
}

TEST_CASE("two symmetric points") {
  LabeledDataset d(1);
  d.add(std::vector<double>{0.0}, 1);
  d.add(std::vector<double>{2.0}, -1);
  SmoOptions o;
  o.C = 10;
  o.gamma = 1;
  const auto m = train_smo(d, o);
  CHECK(std::abs(decision_value(m, std::vector<double>{1.0})) < 1e-9);
  CHECK(predict(m, std::vector<double>{0.9}) == 1);
  CHECK(predict(m, std::vector<double>{1.1}) == -1);

  const auto qp = brute_force_qp(d, 10, 1);
  CHECK(qp.alpha[0] == doctest::Approx(qp.alpha[1]).epsilon(1e-9));
  CHECK(qp.alpha[0] <= 10.0);
}

TEST_CASE("xor") {
  const auto d = xor_data();
  SmoOptions o;
  o.C = 1000;
  o.gamma = 1;
  o.tol = 1e-6;
  const auto sol = solve_dual_smo(d, o);
  CHECK(sol.converged);
  const auto m = model_from_dual(d, sol, o);
  CHECK(m.sv_count() == 4);
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(predict(m, d.row(i)) == d.label(i));
  CHECK(std::abs(decision_value(m, std::vector<double>{0.5, 0.5})) < 1e-6);

  const auto qp = brute_force_qp(d, 1000, 1);
  CHECK(std::abs(qp.objective - sol.objective) <= 1e-6 * std::abs(qp.objective));
}

TEST_CASE("margin support vectors sit on the margin") {
  SplitMix64 rng(11);
  const auto d = sample_data(rng, 40, 3);
  SmoOptions o;
  o.C = 5;
  o.gamma = 0.5;
  const auto sol = solve_dual_smo(d, o);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double a = sol.alpha[i];
    if (a > 1e-8 && a < o.C - 1e-8) {
      double f = sol.bias;
      for (std::size_t j = 0; j < d.size(); ++j) f += sol.alpha[j] * d.label(j) * rbf_kernel(d.row(j), d.row(i), o.gamma);
      CHECK(std::abs(d.label(i) * f - 1.0) <= 10 * o.tol);
    }
  }
}

TEST_CASE("dual feasibility and kkt residual after training") {
  SplitMix64 rng(12);
  for (int rep = 0; rep < 5; ++rep) {
    const auto d = sample_data(rng, 60, 4);
    SmoOptions o;
    o.C = rng.log_uniform(0.1, 100.0);
    o.gamma = rng.log_uniform(0.05, 2.0);
    const auto sol = solve_dual_smo(d, o);
    REQUIRE(sol.converged);
    double s = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      CHECK(sol.alpha[i] >= 0.0);
      CHECK(sol.alpha[i] <= o.C);
      s += sol.alpha[i] * d.label(i);
    }
    CHECK(std::abs(s) <= o.tol * o.C * d.size());
    CHECK(kkt_violation(d, sol.alpha, sol.bias, o.C, o.gamma) <= o.tol);

    const auto m = model_from_dual(d, sol, o);
    double sum = 0.0;
    for (double c : m.dual_coeffs) {
      CHECK(std::abs(c) <= o.C);
      CHECK(c != 0.0);
      sum += c;
    }
    CHECK(std::abs(sum) <= o.tol * o.C * d.size());
    CHECK(m.sv_count() >= 1);
  }
}

TEST_CASE("far from every support vector the decision is the bias") {
  const auto d = xor_data();
  SmoOptions o;
  o.C = 1000;
  o.gamma = 1;
  const auto m = train_smo(d, o);
  CHECK(decision_value(m, std::vector<double>{50.0, -40.0}) == doctest::Approx(m.bias).epsilon(1e-6));
}

TEST_CASE("tiny C pins alpha to the box") {
  // Imbalanced classes, so some alpha stay free and |b| is of order one.
  SplitMix64 rng(13);
  LabeledDataset d(2);
  std::vector<double> x(2);
  for (int i = 0; i < 10; ++i) {
    const int y = i < 7 ? 1 : -1;
    for (auto& v : x) v = rng.normal() + 0.7 * y;
    d.add(x, y);
  }
  SmoOptions o;
  o.C = 1e-9;
  o.gamma = 1;
  const auto sol = solve_dual_smo(d, o);
  for (double a : sol.alpha) {
    CHECK(a >= 0.0);
    CHECK(a <= o.C);
  }
  const auto m = model_from_dual(d, sol, o);
  CHECK(std::abs(m.bias) > 0.5);
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(std::abs(decision_value(m, d.row(i)) - m.bias) <= d.size() * o.C);
    CHECK(predict(m, d.row(i)) == sign_label(m.bias));
  }
}

TEST_CASE("sign tie-break") {
  CHECK(sign_label(2.3) == 1);
  CHECK(sign_label(-0.001) == -1);
  CHECK(sign_label(0.0) == 1);
  CHECK(sign_label(-0.0) == 1);
}

TEST_CASE("training is deterministic") {
  SplitMix64 rng(14);
  const auto d = sample_data(rng, 50, 3);
  SmoOptions o;
  o.C = 3;
  o.gamma = 0.3;
  o.seed = 9;
  const auto a = train_smo(d, o), b = train_smo(d, o);
  CHECK(a.dual_coeffs == b.dual_coeffs);
  CHECK(a.support_vectors == b.support_vectors);
  CHECK(a.bias == b.bias);
}

TEST_CASE("a small kernel cache gives the same solution") {
  SplitMix64 rng(15);
  const auto d = sample_data(rng, 80, 3);
  SmoOptions o;
  o.C = 4;
  o.gamma = 0.5;
  const auto full = solve_dual_smo(d, o);
  o.cache_bytes = 3 * 80 * sizeof(double);
  const auto tiny = solve_dual_smo(d, o);
  CHECK(full.alpha == tiny.alpha);
  CHECK(full.bias == tiny.bias);
}

TEST_CASE("invalid training input") {
  LabeledDataset one(1);
  one.add(std::vector<double>{0.0}, 1);
  one.add(std::vector<double>{1.0}, 1);
  CHECK_THROWS_AS(train_smo(one, SmoOptions{}), std::invalid_argument);
  const auto d = xor_data();
  SmoOptions o;
  o.tol = 0.5;
  CHECK_THROWS_AS(train_smo(d, o), std::invalid_argument);
  o.tol = 1e-3;
  o.C = 0;
  CHECK_THROWS_AS(train_smo(d, o), std::invalid_argument);
  const auto m = train_smo(d, SmoOptions{});
  CHECK_THROWS_AS(decision_value(m, std::vector<double>{1.0}), std::invalid_argument);
}
