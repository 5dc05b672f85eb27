#include "commands.hpp"

#include "pzt/camera.hpp"
#include "pzt/io.hpp"
#include "pzt/svm.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace pzt::cli {

namespace {

CameraGeometry load_camera(const CameraOptions& o) {
  if (!o.geometry.empty()) return io::geometry_from_json(io::read_text(o.geometry));
  if (o.rings == 0 || !(o.pitch > 0.0)) throw UsageError("--rings must be >= 1 and --pitch > 0");
  return build_geometry(o.rings, o.pitch);
}

std::vector<CherenkovImage> load_events(const std::string& path, const CameraGeometry& g) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io::FormatError("cannot open " + path);
  auto events = io::read_events(in);
  for (const auto& e : events) {
    if (e.pixel_phe.size() != g.pixel_count()) {
      throw io::FormatError("event " + std::to_string(e.event_id) + " has " + std::to_string(e.pixel_phe.size()) +
                            " pixels, camera has " + std::to_string(g.pixel_count()));
    }
  }
  return events;
}

std::vector<io::FeatureRow> load_features(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io::FormatError("cannot open " + path);
  return io::read_features_csv(in);
}

SvmModel load_model(const std::string& path) { return io::model_from_json(io::read_text(path)); }

CleaningParams cleaning_params(const CleaningOptions& o) {
  if (!(o.core >= o.boundary && o.boundary >= 0.0)) throw UsageError("cleaning thresholds need core >= boundary >= 0");
  return {o.core, o.boundary};
}

/// Writes to a file, or stdout for "-".
template <class F>
void with_output(const std::string& path, F&& write) {
  if (path.empty() || path == "-") {
    write(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  write(out);
  if (!out) throw std::runtime_error("write failed: " + path);
}

int n_max_for_dim(std::size_t dim) {
  for (int n = 0; n <= kMaxOrder; ++n) {
    if (feature_count(n) == dim) return n;
  }
  throw io::FormatError("model dimension " + std::to_string(dim) + " is not a pseudo-Zernike feature count");
}

fx::QFormat parse_format(const std::string& text, const char* flag) {
  try {
    return fx::QFormat::parse(text);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string(flag) + ": " + e.what());
  }
}

fx::TriggerFormats resolve_formats(const FormatOverrides& o) {
  auto f = o.wide ? fx::TriggerFormats::wide() : fx::TriggerFormats::defaults();
  const std::pair<const std::string*, fx::QFormat*> slots[] = {
      {&o.basis, &f.basis},     {&o.sv, &f.support_vectors}, {&o.dual, &f.dual_coeffs},
      {&o.bias, &f.bias},       {&o.gamma, &f.gamma},        {&o.lut, &f.exp_lut},
      {&o.pixel, &f.pixel},     {&o.acc, &f.accumulator},    {&o.feature, &f.feature},
      {&o.kernel, &f.kernel}};
  for (const auto& [text, q] : slots) {
    if (!text->empty()) *q = parse_format(*text, "format");
  }
  if (!o.norm.empty()) f.norm_mean = f.norm_invstd = parse_format(o.norm, "--norm-format");
  try {
    f.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return f;
}

std::vector<CherenkovImage> cleaned(const std::vector<CherenkovImage>& events, const CameraGeometry& g,
                                    const CleaningParams& c) {
  std::vector<CherenkovImage> out;
  out.reserve(events.size());
  for (const auto& e : events) out.push_back(clean_image(e, g, c.core, c.boundary));
  return out;
}

double percentile(std::vector<double> v, double p) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto idx = static_cast<std::size_t>(p * static_cast<double>(v.size() - 1) + 0.5);
  return v[std::min(idx, v.size() - 1)];
}

} // namespace

AxisRange parse_range(const std::string& text) {
  AxisRange r;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%lf:%lf:%lf%c", &r.lo, &r.hi, &r.step, &tail) != 3) {
    throw UsageError("range must look like lo:hi:step, got '" + text + "'");
  }
  if (!(r.step > 0.0) || r.hi < r.lo) throw UsageError("range '" + text + "' is empty or has a non-positive step");
  return r;
}

int run_gen(const GenOptions& o) {
  const auto g = load_camera(o.camera);
  GeneratorParams params;
  params.noise.pedestal_sigma = o.noise_sigma;
  try {
    params.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto events = generate_events(o.gammas, o.hadrons, params, o.seed, g, o.first_id);
  with_output(o.out, [&](std::ostream& out) { io::write_events(out, events); });
  if (!o.geometry_out.empty()) io::write_text(o.geometry_out, io::geometry_to_json(g));
  std::cerr << "gen: " << events.size() << " events (" << o.gammas << " gamma, " << o.hadrons << " hadron), "
            << g.pixel_count() << " pixels\n";
  return kExitOk;
}

int run_extract(const ExtractOptions& o) {
  if (o.n_max < 0 || o.n_max > kMaxOrder) throw UsageError("--n-max must be in [0, " + std::to_string(kMaxOrder) + "]");
  const auto g = load_camera(o.camera);
  const auto cleaning = cleaning_params(o.cleaning);
  const auto events = load_events(o.events, g);
  const auto table = build_basis_table(map_to_unit_disk(g), o.n_max);
  std::vector<io::FeatureRow> rows;
  rows.reserve(events.size());
  for (const auto& e : events) rows.push_back({e.event_id, e.label, extract_features(e, g, table, cleaning)});
  with_output(o.out, [&](std::ostream& out) { io::write_features_csv(out, rows, table.moment_count()); });
  if (!o.basis_out.empty()) io::write_binary(o.basis_out, io::basis_to_bytes(table));
  std::cerr << "extract: " << rows.size() << " events, " << table.moment_count() << " features\n";
  return kExitOk;
}

int run_hillas(const HillasOptions& o) {
  const auto g = load_camera(o.camera);
  const auto cleaning = cleaning_params(o.cleaning);
  const auto events = load_events(o.events, g);
  std::size_t empty = 0;
  with_output(o.out, [&](std::ostream& out) {
    out << "event_id,label,size,cog_x,cog_y,length,width,dist,alpha,delta\n";
    for (const auto& e : events) {
      const auto c = clean_image(e, g, cleaning.core, cleaning.boundary);
      try {
        const auto h = hillas(c.pixel_phe, g);
        out << e.event_id << ',' << (e.label ? label_name(*e.label) : "");
        for (double v : {h.size, h.cog.x, h.cog.y, h.length, h.width, h.dist, h.alpha, h.delta}) {
          out << ',' << io::format_double(v);
        }
        out << '\n';
      } catch (const EmptyImageError&) {
        ++empty;
      }
    }
  });
  if (empty) std::cerr << "hillas: skipped " << empty << " events with no signal after cleaning\n";
  return kExitOk;
}

int run_train(const TrainOptions& o) {
  const auto data = io::to_dataset(load_features(o.features));
  SmoOptions smo{o.c, o.gamma, o.tol, o.max_passes, o.seed, o.cache_mb << 20};
  SvmModel model;
  try {
    model = fit_model(data, smo);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  with_output(o.out, [&](std::ostream& out) { out << io::model_to_json(model); });
  std::cerr << "train: " << data.size() << " rows, " << model.sv_count() << " support vectors, "
            << (model.converged ? "converged" : "NOT converged") << " after " << model.iterations << " updates\n";
  return kExitOk;
}

int run_gridsearch(const GridOptions& o) {
  const auto raw = io::to_dataset(load_features(o.features));
  GridSpec spec;
  spec.log2_c = parse_range(o.c_range);
  spec.log2_gamma = parse_range(o.gamma_range);
  spec.fine_radius = o.fine_radius;
  spec.fine_step = o.fine_step;
  spec.folds = o.folds;
  spec.fraction = o.fraction;
  spec.seed = o.seed;
  spec.tol = o.tol;
  spec.max_passes = o.max_passes;
  spec.threads = o.threads;
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto norm = zscore_fit(raw);
  const auto grid = grid_search(zscore_apply(norm, raw), spec);
  with_output(o.out, [&](std::ostream& out) { io::write_grid_csv(out, grid); });
  std::fprintf(stderr, "gridsearch: best log2C=%g log2gamma=%g (C=%.6g gamma=%.6g) cv_accuracy=%.4f on %zu rows\n",
               grid.best.log2_c, grid.best.log2_gamma, grid.best_c(), grid.best_gamma(), grid.best.cv_accuracy,
               grid.subsample_size);
  if (!o.model_out.empty()) {
    SmoOptions smo;
    smo.C = grid.best_c();
    smo.gamma = grid.best_gamma();
    smo.tol = o.tol;
    smo.max_passes = o.max_passes;
    smo.seed = o.seed;
    io::write_text(o.model_out, io::model_to_json(fit_model(raw, smo)));
  }
  return kExitOk;
}

int run_predict(const PredictOptions& o) {
  const auto model = load_model(o.model);
  const auto rows = load_features(o.features);
  with_output(o.out, [&](std::ostream& out) {
    out << "event_id,decision,label\n";
    for (const auto& r : rows) {
      if (r.features.size() != model.dim) throw io::FormatError("feature width does not match the model");
      const double f = decision_value_raw(model, r.features);
      out << r.event_id << ',' << io::format_double(f) << ',' << (sign_label(f) > 0 ? "gamma" : "hadron") << '\n';
    }
  });
  return kExitOk;
}

int run_evaluate(const EvaluateOptions& o) {
  ConfusionMetrics m;
  if (!o.counts.empty()) {
    std::size_t gt = 0, gr = 0, ht = 0, hr = 0;
    char tail = 0;
    if (std::sscanf(o.counts.c_str(), "%zu,%zu,%zu,%zu%c", &gt, &gr, &ht, &hr, &tail) != 4 || gr > gt || hr > ht) {
      throw UsageError("--counts must be gamma_total,gamma_recognized,hadron_total,hadron_recognized");
    }
    m = ConfusionMetrics::from_counts(gt, gr, ht, hr);
  } else {
    if (o.model.empty() || o.features.empty()) throw UsageError("evaluate needs --model and --features, or --counts");
    const auto model = load_model(o.model);
    const auto data = io::to_dataset(load_features(o.features));
    if (data.dim() != model.dim) throw io::FormatError("feature width does not match the model");
    m = evaluate(model, data);
  }
  std::cout << format_metrics_table(m);
  if (!o.out.empty()) io::write_text(o.out, io::metrics_to_json(m));
  return kExitOk;
}

int run_export(const ExportOptions& o) {
  const auto formats = resolve_formats(o.formats);
  const auto model = load_model(o.model);
  const auto g = load_camera(o.camera);
  const auto table = build_basis_table(map_to_unit_disk(g), n_max_for_dim(model.dim));
  fx::ExportReport report;
  auto trigger = fx::export_trigger(model, table, formats, &report);
  if (o.formats.lut_size != fx::kExpLutSize) {
    try {
      trigger.exp_lut = fx::make_exp_lut(formats.exp_lut, o.formats.lut_size);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  io::write_binary(o.out, io::trigger_to_bytes(trigger));
  std::ostringstream ss;
  ss << "table,format,saturations,max_quantization_error\n";
  const fx::QFormat* fmts[] = {&formats.basis,           &formats.norm_mean,   &formats.norm_invstd,
                               &formats.support_vectors, &formats.dual_coeffs, &formats.bias,
                               &formats.gamma,           &formats.exp_lut};
  for (std::size_t i = 0; i < 8; ++i) {
    const std::string name = fx::kTableNames[i];
    ss << name << ',' << fmts[i]->name() << ',' << report.saturations[name] << ','
       << io::format_double(report.max_quantization_error[name]) << '\n';
  }
  if (!o.report.empty()) io::write_text(o.report, ss.str());
  std::cerr << "fxp-export: " << trigger.n_sv << " support vectors, " << trigger.n_pixels << " pixels, "
            << trigger.n_features << " features\n";
  return kExitOk;
}

int run_fxp(const RunOptions& o) {
  const auto trigger = io::trigger_from_bytes(io::read_binary(o.trigger));
  const auto model = load_model(o.model);
  const auto g = load_camera(o.camera);
  if (g.pixel_count() != trigger.n_pixels) throw io::FormatError("trigger pixel count does not match the camera");
  if (model.dim != trigger.n_features) throw io::FormatError("trigger feature count does not match the model");
  const auto table = build_basis_table(map_to_unit_disk(g), trigger.n_max);
  const auto events = cleaned(load_events(o.events, g), g, cleaning_params(o.cleaning));
  const auto rep = fx::agreement_report(model, table, trigger, events);
  with_output(o.out, [&](std::ostream& out) { io::write_agreement_csv(out, rep); });

  double dev_in_window = 0.0;
  for (const auto& r : rep.rows) {
    if (std::abs(r.float_decision) <= o.dev_window) dev_in_window = std::max(dev_in_window, r.abs_err);
  }
  std::fprintf(stderr,
               "fxp-run: %zu events, agreement %.4f (%zu mismatches), max |dev| %.3g (%.3g where |float| <= %g), "
               "mean |dev| %.3g, %zu saturated\n",
               rep.rows.size(), rep.agreement(), rep.mismatches, rep.max_abs_dev, dev_in_window, o.dev_window,
               rep.mean_abs_dev, rep.saturated_events);
  if (o.gate) {
    const bool ok = rep.agreement() >= o.min_agreement && dev_in_window <= o.max_dev;
    std::fprintf(stderr, "gate: %s (agreement >= %g, |dev| <= %g where |float| <= %g)\n", ok ? "PASS" : "FAIL",
                 o.min_agreement, o.max_dev, o.dev_window);
    if (!ok) return kExitGate;
  }
  return kExitOk;
}

int run_bench(const BenchOptions& o) {
  if (o.repeat < 1) throw UsageError("--repeat must be >= 1");
  const auto trigger = io::trigger_from_bytes(io::read_binary(o.trigger));
  const auto model = load_model(o.model);
  const auto g = load_camera(o.camera);
  if (g.pixel_count() != trigger.n_pixels) throw io::FormatError("trigger pixel count does not match the camera");
  const auto table = build_basis_table(map_to_unit_disk(g), trigger.n_max);
  const auto events = cleaned(load_events(o.events, g), g, cleaning_params(o.cleaning));
  if (events.empty()) throw io::FormatError("no events");
  std::vector<std::vector<fx::raw_t>> quantized;
  for (const auto& e : events) quantized.push_back(fx::quantize_image(e.pixel_phe, trigger.formats.pixel));

  using clock = std::chrono::steady_clock;
  auto measure = [&](auto&& one) {
    std::vector<double> lat;
    lat.reserve(events.size() * static_cast<std::size_t>(o.repeat));
    const auto t0 = clock::now();
    for (int r = 0; r < o.repeat; ++r) {
      for (std::size_t i = 0; i < events.size(); ++i) {
        const auto s = clock::now();
        one(i);
        lat.push_back(std::chrono::duration<double, std::micro>(clock::now() - s).count());
      }
    }
    const double total = std::chrono::duration<double>(clock::now() - t0).count();
    return std::tuple{static_cast<double>(lat.size()) / total, percentile(lat, 0.5), percentile(lat, 0.99)};
  };
  volatile double sink = 0.0;
  const auto [f_rate, f_p50, f_p99] = measure([&](std::size_t i) {
    sink = sink + decision_value_raw(model, feature_vector(moments(events[i].pixel_phe, table)));
  });
  const auto [x_rate, x_p50, x_p99] =
      measure([&](std::size_t i) { sink = sink + fx::fx_pipeline(trigger, quantized[i]).decision_value; });
  std::printf("pipeline,events_per_s,p50_us,p99_us\n");
  std::printf("float,%.1f,%.2f,%.2f\n", f_rate, f_p50, f_p99);
  std::printf("fixed,%.1f,%.2f,%.2f\n", x_rate, x_p50, x_p99);
  return kExitOk;
}

int run_reconstruct(const ReconstructOptions& o) {
  if (o.n_max < 0 || o.n_max > kMaxOrder) throw UsageError("--n-max must be in [0, " + std::to_string(kMaxOrder) + "]");
  const auto g = load_camera(o.camera);
  const auto cleaning = cleaning_params(o.cleaning);
  const auto events = load_events(o.events, g);
  const auto it = std::find_if(events.begin(), events.end(), [&](const auto& e) { return e.event_id == o.event_id; });
  if (it == events.end()) throw io::FormatError("event " + std::to_string(o.event_id) + " not found");
  const auto mapping = map_to_unit_disk(g);
  const auto table = build_basis_table(mapping, o.n_max);
  const auto c = clean_image(*it, g, cleaning.core, cleaning.boundary);
  const auto rec = reconstruct(moments(c.pixel_phe, table), mapping);
  with_output(o.out, [&](std::ostream& out) {
    out << "pixel,x,y,original,cleaned,reconstructed\n";
    for (std::size_t p = 0; p < g.pixel_count(); ++p) {
      out << p << ',' << io::format_double(g.position(p).x) << ',' << io::format_double(g.position(p).y) << ','
          << io::format_double(it->pixel_phe[p]) << ',' << io::format_double(c.pixel_phe[p]) << ','
          << io::format_double(rec[p]) << '\n';
    }
  });
  return kExitOk;
}

} // namespace pzt::cli
