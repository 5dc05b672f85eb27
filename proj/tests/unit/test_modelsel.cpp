#include "pzt/camera.hpp"
#include "pzt/generator.hpp"
#include "pzt/modelsel.hpp"
#include "pzt/pzernike.hpp"
#include "pzt/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace pzt;

namespace {

LabeledDataset blobs(std::size_t per_class, double separation, std::uint64_t seed) {
  SplitMix64 rng(seed);
  LabeledDataset d(2);
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const int y = i < per_class ? 1 : -1;
    d.add(std::vector<double>{rng.normal() + 0.5 * separation * y, rng.normal()}, y);
  }
  return d;
}

std::vector<int> labels_of(std::size_t gammas, std::size_t hadrons) {
  std::vector<int> y(gammas, 1);
  y.insert(y.end(), hadrons, -1);
  return y;
}

GridSpec small_grid() {
  GridSpec s;
  s.log2_c = {-2, 6, 2};
  s.log2_gamma = {-6, 2, 2};
  s.fine_radius = 0.5;
  s.fine_step = 0.25;
  s.folds = 4;
  s.fraction = 1.0;
  s.threads = 1;
  return s;
}

} // namespace

TEST_CASE("zscore_fit") {
  LabeledDataset d(2);
  d.add(std::vector<double>{0.0, 5.0}, 1);
  d.add(std::vector<double>{2.0, 5.0}, -1);
  const auto n = zscore_fit(d);
  CHECK(n.mean[0] == 1.0);
  CHECK(n.std[0] == 1.0);
  CHECK_FALSE(n.degenerate[0]);
  CHECK(n.std[1] == 1.0);
  CHECK(n.degenerate[1]);

  LabeledDataset one(1);
  one.add(std::vector<double>{1.0}, 1);
  CHECK_THROWS_AS(zscore_fit(one), std::invalid_argument);
}

TEST_CASE("zscore_apply and its inverse") {
  SplitMix64 rng(2);
  LabeledDataset d(3);
  for (int i = 0; i < 200; ++i) d.add(std::vector<double>{5 + 2 * rng.normal(), rng.uniform(-100, 300), rng.log_uniform(1e-3, 1e3)}, i % 2 ? 1 : -1);
  const auto n = zscore_fit(d);

  const auto z0 = zscore_apply(n, n.mean);
  for (double v : z0) CHECK(std::abs(v) <= 1e-15);
  std::vector<double> ms(3);
  for (int k = 0; k < 3; ++k) ms[k] = n.mean[k] + n.std[k];
  for (double v : zscore_apply(n, ms)) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));

  // Recompute the statistics of the normalized training set.
  const auto nd = zscore_apply(n, d);
  for (std::size_t k = 0; k < 3; ++k) {
    long double s = 0, s2 = 0;
    for (std::size_t i = 0; i < nd.size(); ++i) s += nd.row(i)[k];
    const long double mean = s / nd.size();
    for (std::size_t i = 0; i < nd.size(); ++i) s2 += (nd.row(i)[k] - mean) * (nd.row(i)[k] - mean);
    CHECK(std::abs(static_cast<double>(mean)) <= 1e-12);
    CHECK(std::abs(static_cast<double>(std::sqrt(s2 / nd.size())) - 1.0) <= 1e-12);
  }

  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto back = zscore_inverse(n, zscore_apply(n, d.row(i)));
    for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(back[k] - d.row(i)[k]) <= 1e-12 * std::max(1.0, std::abs(d.row(i)[k])));
  }
  CHECK_THROWS_AS(zscore_apply(n, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("most normalized features of a synthetic event set lie in [-1, 1]") {
  const auto g = build_geometry(11, 1.0);
  const auto t = build_basis_table(map_to_unit_disk(g), 7);
  const auto events = generate_events(500, 500, GeneratorParams{}, 7, g);
  LabeledDataset d(feature_count(7));
  for (const auto& e : events) d.add(extract_features(e, g, t, CleaningParams{}), label_sign(*e.label));
  const auto nd = zscore_apply(zscore_fit(d), d);
  std::size_t inside = 0, total = 0;
  for (std::size_t i = 0; i < nd.size(); ++i) {
    for (double v : nd.row(i)) {
      inside += std::abs(v) <= 1.0;
      ++total;
    }
  }
  CHECK(static_cast<double>(inside) / total >= 0.6);
}

TEST_CASE("stratified k-fold") {
  SUBCASE("10 + 10 into 5 folds") {
    const auto y = labels_of(10, 10);
    const auto folds = stratified_kfold(y, 5, 3);
    REQUIRE(folds.size() == 5);
    std::set<std::size_t> all;
    for (const auto& f : folds) {
      std::size_t g = 0;
      for (auto i : f) {
        g += y[i] == 1;
        CHECK(all.insert(i).second);
      }
      CHECK(g == 2);
      CHECK(f.size() == 4);
      CHECK(std::is_sorted(f.begin(), f.end()));
    }
    CHECK(all.size() == 20);
    CHECK(stratified_kfold(y, 5, 3) == folds);
    CHECK(stratified_kfold(y, 5, 4) != folds);
  }
  SUBCASE("12228 gammas and 12306 hadrons into 5 folds") {
    const auto y = labels_of(12228, 12306);
    const auto folds = stratified_kfold(y, 5, 1);
    std::size_t covered = 0;
    for (const auto& f : folds) {
      std::size_t g = 0;
      for (auto i : f) g += y[i] == 1;
      const std::size_t h = f.size() - g;
      CHECK((g == 2445 || g == 2446));
      CHECK((h == 2461 || h == 2462));
      covered += f.size();
    }
    CHECK(covered == y.size());
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(stratified_kfold(labels_of(3, 10), 5, 0), std::invalid_argument);
    CHECK_THROWS_AS(stratified_kfold(labels_of(10, 10), 1, 0), std::invalid_argument);
  }
}

TEST_CASE("stratified subsample") {
  const auto y = labels_of(1000, 600);
  const auto s = stratified_subsample(y, 0.05, 10, 2);
  std::size_t g = 0;
  for (auto i : s) g += y[i] == 1;
  CHECK(g == 50);
  CHECK(s.size() - g == 30);
  CHECK(std::is_sorted(s.begin(), s.end()));
  const auto tiny = stratified_subsample(y, 0.001, 10, 2);
  CHECK(tiny.size() == 20);
}

TEST_CASE("axis ranges and grid spec validation") {
  CHECK(AxisRange{-5, 17, 2}.values().size() == 12);
  CHECK(AxisRange{1, 1, 1}.values() == std::vector<double>{1.0});
  GridSpec s;
  CHECK_NOTHROW(s.validate());
  s.fraction = 0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = GridSpec{};
  s.log2_c.step = 0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = GridSpec{};
  s.log2_gamma = {3, -15, 2};
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = GridSpec{};
  s.folds = 1;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("the default coarse grid brackets C = 28526.2, gamma = 1.07") {
  const GridSpec s;
  const double lc = std::log2(28526.2), lg = std::log2(1.07);
  CHECK(lc == doctest::Approx(14.8).epsilon(0.01));
  CHECK(lg == doctest::Approx(0.1).epsilon(0.01));
  CHECK(s.log2_c.lo <= lc);
  CHECK(lc <= s.log2_c.hi);
  CHECK(s.log2_gamma.lo <= lg);
  CHECK(lg <= s.log2_gamma.hi);
  // Within the fine radius of a coarse point and at most half a fine step from a fine point.
  for (double v : {lc, lg}) {
    const double coarse = s.log2_c.lo + 2 * std::round((v - s.log2_c.lo) / 2);
    CHECK(std::abs(v - coarse) <= s.fine_radius);
    CHECK(std::abs(v - s.fine_step * std::round(v / s.fine_step)) <= s.fine_step / 2);
  }
}

TEST_CASE("grid with one point") {
  const auto d = blobs(20, 3.0, 4);
  GridSpec s = small_grid();
  s.log2_c = {1, 1, 1};
  s.log2_gamma = {-1, -1, 1};
  s.fine_radius = 0;
  const auto r = grid_search(d, s);
  CHECK(r.cells.size() == 1);
  CHECK(r.best.log2_c == 1.0);
  CHECK(r.best.log2_gamma == -1.0);
  CHECK(r.best_c() == 2.0);
  CHECK(r.best_gamma() == 0.5);
}

TEST_CASE("separable blobs: ties go to the smallest C, then gamma") {
  const auto d = zscore_apply(zscore_fit(blobs(20, 12.0, 5)), blobs(20, 12.0, 5));
  const auto r = grid_search(d, small_grid());
  std::size_t perfect = 0;
  const GridCell* first = nullptr;
  for (const auto& c : r.cells) {
    if (c.cv_accuracy == 1.0) {
      ++perfect;
      if (!first) first = &c;
    }
  }
  CHECK(perfect > 1);
  REQUIRE(first);
  CHECK(r.best.cv_accuracy == 1.0);
  CHECK(r.best.log2_c == first->log2_c);
  CHECK(r.best.log2_gamma == first->log2_gamma);
  for (std::size_t i = 1; i < r.cells.size(); ++i) {
    const auto& a = r.cells[i - 1];
    const auto& b = r.cells[i];
    CHECK((a.log2_c < b.log2_c || (a.log2_c == b.log2_c && a.log2_gamma < b.log2_gamma)));
  }
}

TEST_CASE("grid search is deterministic and thread-count independent") {
  const auto raw = blobs(30, 2.0, 6);
  const auto d = zscore_apply(zscore_fit(raw), raw);
  auto s = small_grid();
  const auto a = grid_search(d, s);
  s.threads = 3;
  const auto b = grid_search(d, s);
  REQUIRE(a.cells.size() == b.cells.size());
  for (std::size_t i = 0; i < a.cells.size(); ++i) CHECK(a.cells[i].cv_accuracy == b.cells[i].cv_accuracy);
  CHECK(a.best.log2_c == b.best.log2_c);
  CHECK(a.best.log2_gamma == b.best.log2_gamma);
}

TEST_CASE("argmax invariance under feature scaling") {
  const auto raw = blobs(30, 2.0, 8);
  const auto s = small_grid();
  const auto base = grid_search(zscore_apply(zscore_fit(raw), raw), s);
  for (double k : {4.0, 3.0}) {
    LabeledDataset scaled(raw.dim());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      std::vector<double> x(raw.row(i).begin(), raw.row(i).end());
      for (auto& v : x) v *= k;
      scaled.add(x, raw.label(i));
    }
    const auto r = grid_search(zscore_apply(zscore_fit(scaled), scaled), s);
    CHECK(r.best.log2_c == base.best.log2_c);
    CHECK(r.best.log2_gamma == base.best.log2_gamma);
    if (k == 4.0) {
      for (std::size_t i = 0; i < r.cells.size(); ++i) CHECK(r.cells[i].cv_accuracy == base.cells[i].cv_accuracy);
    }
  }
}

TEST_CASE("metrics") {
  const auto m = ConfusionMetrics::from_counts(6109, 5271, 6183, 4259);
  CHECK(format_percent(m.gamma.ratio()) == "86.3%");
  CHECK(format_percent(m.hadron.ratio()) == "68.9%");
  CHECK(m.accuracy() == doctest::Approx((5271.0 + 4259.0) / (6109.0 + 6183.0)).epsilon(1e-15));
  CHECK(format_percent(m.accuracy()) == "77.5%");
  const auto table = format_metrics_table(m);
  CHECK(table.find("86.3%") != std::string::npos);
  CHECK(table.find("68.9%") != std::string::npos);
  CHECK(table.find("77.5%") != std::string::npos);
  CHECK(table.find("Recognized") != std::string::npos);
  CHECK_THROWS_AS(ConfusionMetrics::from_counts(10, 11, 5, 5), std::invalid_argument);
}

TEST_CASE("evaluate is invariant to test set order") {
  const auto raw = blobs(40, 2.0, 9);
  SmoOptions o;
  o.C = 2;
  o.gamma = 0.5;
  const auto model = fit_model(raw, o);
  const auto test = blobs(25, 2.0, 10);
  std::vector<std::size_t> idx(test.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = idx.size() - 1 - i;
  const auto a = evaluate(model, test), b = evaluate(model, test.subset(idx));
  CHECK(a.gamma.recognized == b.gamma.recognized);
  CHECK(a.hadron.recognized == b.hadron.recognized);
  CHECK(a.gamma.total == 25);
  CHECK(a.hadron.total == 25);
  CHECK_THROWS_AS(evaluate(model, LabeledDataset(2)), std::invalid_argument);
}
