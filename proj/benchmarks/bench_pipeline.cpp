#include "pzt/camera.hpp"
#include "pzt/generator.hpp"
#include "pzt/modelsel.hpp"
#include "pzt/pzernike.hpp"
#include "pzt/svm.hpp"
#include "pzt/trigger.hpp"

#include <benchmark/benchmark.h>

using namespace pzt;

namespace {

struct Setup {
  CameraGeometry geometry = build_geometry(11, 1.0);
  BasisTable table = build_basis_table(map_to_unit_disk(geometry), 7);
  LabeledDataset train{feature_count(7)};
  SvmModel model;
  fx::TriggerImage trigger;
  std::vector<CherenkovImage> events;
  std::vector<std::vector<fx::raw_t>> quantized;

  Setup() {
    const GeneratorParams params;
    for (const auto& e : generate_events(200, 200, params, 1, geometry)) {
      train.add(extract_features(e, geometry, table, CleaningParams{}), label_sign(*e.label));
    }
    SmoOptions o;
    o.C = 16;
    o.gamma = 1.0 / 64;
    model = fit_model(train, o);
    trigger = fx::export_trigger(model, table, fx::TriggerFormats::defaults());
    for (const auto& e : generate_events(128, 128, params, 2, geometry, 1000)) {
      events.push_back(clean_image(e, geometry, 10.0, 5.0));
      quantized.push_back(fx::quantize_image(events.back().pixel_phe, trigger.formats.pixel));
    }
  }
};

const Setup& setup() {
  static const Setup s;
  return s;
}

void BM_Moments(benchmark::State& state) {
  const auto& s = setup();
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(moments(s.events[i++ % s.events.size()].pixel_phe, s.table));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Moments);

void BM_FloatPipeline(benchmark::State& state) {
  const auto& s = setup();
  std::size_t i = 0;
  for (auto _ : state) {
    const auto f = feature_vector(moments(s.events[i++ % s.events.size()].pixel_phe, s.table));
    benchmark::DoNotOptimize(predict_raw(s.model, f));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_FloatPipeline);

void BM_FixedPipeline(benchmark::State& state) {
  const auto& s = setup();
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fx::fx_pipeline(s.trigger, s.quantized[i++ % s.quantized.size()]));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_FixedPipeline);

void BM_SmoTrain(benchmark::State& state) {
  const auto& s = setup();
  const auto n = static_cast<std::size_t>(state.range(0));
  LabeledDataset d(s.train.dim());
  for (std::size_t k = 0; k < n; ++k) d.add(s.train.row(k * s.train.size() / n), s.train.label(k * s.train.size() / n));
  SmoOptions o;
  o.C = 16;
  o.gamma = 1.0 / 64;
  for (auto _ : state) benchmark::DoNotOptimize(fit_model(d, o));
}
BENCHMARK(BM_SmoTrain)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
