#include "pzt/trigger.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace pzt::fx {

TriggerFormats TriggerFormats::wide() {
  const QFormat w{64, 40};
  TriggerFormats f;
  f.basis = f.norm_mean = f.norm_invstd = f.support_vectors = f.dual_coeffs = f.bias = f.gamma = f.exp_lut = w;
  f.pixel = f.accumulator = f.feature = f.kernel = w;
  return f;
}

void TriggerFormats::validate() const {
  const std::array<const QFormat*, 12> all{&basis, &norm_mean, &norm_invstd, &support_vectors, &dual_coeffs, &bias,
                                           &gamma, &exp_lut,   &pixel,       &accumulator,      &feature,     &kernel};
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto& q = *all[i];
    q.validate();
    if (!q.is_signed || (q.total_bits != 8 && q.total_bits != 16 && q.total_bits != 32 && q.total_bits != 64)) {
      throw std::invalid_argument(std::string("format of '") + kTableNames[i] +
                                  "' must be signed with 8, 16, 32 or 64 total bits, got " + q.name());
    }
  }
  if (kernel.frac_bits > 48) throw std::invalid_argument("kernel format supports at most 48 fractional bits");
}

void TriggerImage::check_consistency() const {
  if (n_features != feature_count(n_max)) throw std::invalid_argument("trigger: n_features does not match n_max");
  auto expect = [](std::size_t have, std::size_t want, const char* name) {
    if (have != want) {
      throw std::invalid_argument(std::string("trigger: table '") + name + "' has " + std::to_string(have) +
                                  " values, expected " + std::to_string(want));
    }
  };
  expect(basis.size(), n_pixels * n_features * 2, "basis");
  expect(norm_mean.size(), n_features, "norm_mean");
  expect(norm_invstd.size(), n_features, "norm_invstd");
  expect(support_vectors.size(), n_sv * n_features, "support_vectors");
  expect(dual_coeffs.size(), n_sv, "dual_coeffs");
  if (exp_lut.entries.empty()) throw std::invalid_argument("trigger: empty exp LUT");
}

namespace {

std::string describe_range(double worst, QFormat q, bool headroom) {
  char buf[200];
  std::snprintf(buf, sizeof buf, "does not fit %s: max |value| = %.6g%s exceeds range [%.6g, %.6g]", q.name().c_str(),
                worst, headroom ? " (with one headroom bit)" : "", q.min_value(), q.max_value());
  return buf;
}

std::vector<raw_t> quantize_table(const char* name, std::span<const double> values, QFormat q, bool headroom,
                                  ExportReport* report) {
  const double factor = headroom ? 2.0 : 1.0;
  double worst = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) throw ExportRangeError(name, "contains a non-finite value");
    worst = std::max(worst, std::abs(v));
    const double scaled = std::nearbyint(std::ldexp(factor * v, q.frac_bits));
    if (scaled > static_cast<double>(q.max_raw()) + 1.0 || scaled < static_cast<double>(q.min_raw()) - 1.0) {
      throw ExportRangeError(name, describe_range(std::abs(v) * factor, q, headroom));
    }
  }
  Saturation sat;
  std::vector<raw_t> out;
  out.reserve(values.size());
  double max_err = 0.0;
  for (double v : values) {
    out.push_back(to_fixed(v, q, &sat));
    max_err = std::max(max_err, std::abs(to_double(out.back(), q) - v));
  }
  if (report) {
    report->saturations[name] = sat.count;
    report->max_quantization_error[name] = max_err;
  }
  return out;
}

} // namespace

TriggerImage export_trigger(const SvmModel& model, const BasisTable& table, const TriggerFormats& formats,
                            ExportReport* report) {
  formats.validate();
  if (!model.converged) throw std::invalid_argument("export: model is flagged non-converged");
  if (model.dim != table.moment_count() || model.normalizer.dim() != model.dim) {
    throw std::invalid_argument("export: model dimension " + std::to_string(model.dim) + " does not match basis (" +
                                std::to_string(table.moment_count()) + " moments)");
  }
  if (model.sv_count() == 0) throw std::invalid_argument("export: model has no support vectors");

  TriggerImage t;
  t.formats = formats;
  t.n_max = table.n_max();
  t.n_pixels = table.pixel_count();
  t.n_features = table.moment_count();
  t.n_sv = model.sv_count();

  std::vector<double> basis;
  basis.reserve(table.values().size() * 2);
  for (const auto& c : table.values()) {
    basis.push_back(c.real());
    basis.push_back(c.imag());
  }
  t.basis = quantize_table("basis", basis, formats.basis, false, report);
  t.norm_mean = quantize_table("norm_mean", model.normalizer.mean, formats.norm_mean, false, report);
  std::vector<double> invstd;
  for (double s : model.normalizer.std) invstd.push_back(1.0 / s);
  t.norm_invstd = quantize_table("norm_invstd", invstd, formats.norm_invstd, false, report);
  t.support_vectors = quantize_table("support_vectors", model.support_vectors, formats.support_vectors, false, report);
  t.dual_coeffs = quantize_table("dual_coeffs", model.dual_coeffs, formats.dual_coeffs, true, report);
  t.bias = quantize_table("bias", std::span(&model.bias, 1), formats.bias, true, report).front();
  t.gamma = quantize_table("gamma", std::span(&model.gamma, 1), formats.gamma, false, report).front();
  t.exp_lut = make_exp_lut(formats.exp_lut);
  if (report) {
    report->saturations["exp_lut"] = 0;
    double err = 0.0;
    const double h = std::log(2.0) / static_cast<double>(t.exp_lut.entries.size());
    for (std::size_t i = 0; i < t.exp_lut.entries.size(); ++i) {
      err = std::max(err, std::abs(to_double(t.exp_lut.entries[i], formats.exp_lut) - std::exp(-(i + 1.0) * h)));
    }
    report->max_quantization_error["exp_lut"] = err;
  }
  return t;
}

std::vector<raw_t> quantize_image(std::span<const double> pixel_phe, QFormat pixel, Saturation* sat) {
  std::vector<raw_t> out;
  out.reserve(pixel_phe.size());
  for (double v : pixel_phe) out.push_back(to_fixed(v, pixel, sat));
  return out;
}

namespace {

constexpr wide_t kWideMax = static_cast<wide_t>(~uwide_t{0} >> 1);
constexpr wide_t kWideMin = -kWideMax - 1;

// 128-bit multiply-accumulate that clamps instead of wrapping.
void mac(wide_t& acc, wide_t a, wide_t b, Saturation& sat) noexcept {
  wide_t prod;
  if (__builtin_mul_overflow(a, b, &prod)) {
    sat.hit();
    acc = ((a < 0) != (b < 0)) ? kWideMin : kWideMax;
    return;
  }
  if (__builtin_add_overflow(acc, prod, &acc)) {
    sat.hit();
    acc = prod < 0 ? kWideMin : kWideMax;
  }
}

template <bool kTrace>
void run_pipeline(const TriggerImage& t, std::span<const raw_t> pixels, PipelineTrace& trace) {
  if (pixels.size() != t.n_pixels) {
    throw std::invalid_argument("fx_pipeline: image has " + std::to_string(pixels.size()) + " pixels, trigger expects " +
                                std::to_string(t.n_pixels));
  }
  const auto& f = t.formats;
  const std::size_t nf = t.n_features;
  Saturation sat;

  // Moments: exact products summed in 128 bits, one rounding into the accumulator.
  constexpr std::size_t kMaxFeatures = 256;
  if (nf > kMaxFeatures) throw std::invalid_argument("fx_pipeline: too many features");
  std::array<wide_t, kMaxFeatures> re{}, im{};
  for (std::size_t p = 0; p < t.n_pixels; ++p) {
    const wide_t v = pixels[p];
    if (v == 0) continue;
    const raw_t* row = t.basis.data() + p * nf * 2;
    for (std::size_t k = 0; k < nf; ++k) {
      mac(re[k], v, row[2 * k], sat);
      mac(im[k], v, row[2 * k + 1], sat);
    }
  }
  const int product_frac = f.pixel.frac_bits + f.basis.frac_bits;

  std::array<raw_t, kMaxFeatures> z{};
  for (std::size_t k = 0; k < nf; ++k) {
    const raw_t acc_re = saturate(shift_round(re[k], product_frac - f.accumulator.frac_bits), f.accumulator, &sat);
    const raw_t acc_im = saturate(shift_round(im[k], product_frac - f.accumulator.frac_bits), f.accumulator, &sat);
    const raw_t fre = rescale(acc_re, f.accumulator, f.feature, &sat);
    const raw_t fim = rescale(acc_im, f.accumulator, f.feature, &sat);
    const raw_t mag = fx_hypot(fre, fim, f.feature, &sat);

    const raw_t mean = rescale(t.norm_mean[k], f.norm_mean, f.feature, &sat);
    const wide_t centered = static_cast<wide_t>(mag) - mean;
    const wide_t scaled = centered * t.norm_invstd[k];
    z[k] = saturate(shift_round(scaled, f.feature.frac_bits + f.norm_invstd.frac_bits - f.support_vectors.frac_bits),
                    f.support_vectors, &sat);
    if constexpr (kTrace) {
      trace.moment_re.push_back(acc_re);
      trace.moment_im.push_back(acc_im);
      trace.features.push_back(mag);
      trace.normalized.push_back(z[k]);
    }
  }

  // Kernel sum over support vectors.
  const int d2_frac = 2 * f.support_vectors.frac_bits;
  const int u_shift = f.gamma.frac_bits + f.accumulator.frac_bits - f.kernel.frac_bits;
  const int term_frac = f.dual_coeffs.frac_bits + f.kernel.frac_bits;
  wide_t decision = 0;
  for (std::size_t i = 0; i < t.n_sv; ++i) {
    const raw_t* sv = t.support_vectors.data() + i * nf;
    wide_t d2 = 0;
    for (std::size_t k = 0; k < nf; ++k) {
      const wide_t diff = static_cast<wide_t>(z[k]) - sv[k];
      mac(d2, diff, diff, sat);
    }
    const raw_t d2_acc = saturate(shift_round(d2, d2_frac - f.accumulator.frac_bits), f.accumulator, &sat);
    // Clamping the exponent argument only pushes exp(-u) further toward 0.
    const raw_t u = saturate(shift_round(static_cast<wide_t>(t.gamma) * d2_acc, u_shift), f.kernel);
    const raw_t kv = fx_exp_neg(u, f.kernel, t.exp_lut);
    mac(decision, t.dual_coeffs[i], kv, sat);
    if constexpr (kTrace) {
      trace.kernel_args.push_back(u);
      trace.kernel_values.push_back(kv);
    }
  }
  decision += shift_round(t.bias, f.bias.frac_bits - term_frac);

  auto& r = trace.result;
  r.decision = saturate(shift_round(decision, term_frac - f.accumulator.frac_bits), f.accumulator, &sat);
  r.decision_value = to_double(r.decision, f.accumulator);
  r.label = r.decision >= 0 ? 1 : -1;
  r.saturated = sat.any();
}

} // namespace

PipelineResult fx_pipeline(const TriggerImage& trigger, std::span<const raw_t> pixels) {
  PipelineTrace trace;
  run_pipeline<false>(trigger, pixels, trace);
  return trace.result;
}

PipelineTrace fx_pipeline_trace(const TriggerImage& trigger, std::span<const raw_t> pixels) {
  PipelineTrace trace;
  run_pipeline<true>(trigger, pixels, trace);
  return trace;
}

double decision_error_budget(const TriggerImage& t, const SvmModel& model, const BasisTable& table,
                             std::span<const double> cleaned) {
  const auto& f = t.formats;
  const double ep = f.pixel.ulp() / 2, eb = f.basis.ulp() / 2, ea = f.accumulator.ulp() / 2;
  const double ef = f.feature.ulp() / 2, es = f.support_vectors.ulp() / 2;
  const double em = f.norm_mean.ulp() / 2, ei = f.norm_invstd.ulp() / 2;
  const double eg = f.gamma.ulp() / 2, ed = f.dual_coeffs.ulp() / 2, ek = f.kernel.ulp() / 2;
  const double exp_err = exp_error_bound(f.kernel, t.exp_lut);
  const std::size_t nf = t.n_features;

  const auto mom = moments(cleaned, table);
  const auto x = feature_vector(mom);

  std::vector<double> dz(nf), z(nf);
  for (std::size_t k = 0; k < nf; ++k) {
    double dre = 0.0, dim = 0.0;
    for (std::size_t p = 0; p < cleaned.size(); ++p) {
      const auto b = table.entry(p, k);
      const double ip = std::abs(cleaned[p]);
      dre += ip * eb + std::abs(b.real()) * ep + ep * eb;
      dim += ip * eb + std::abs(b.imag()) * ep + ep * eb;
    }
    // accumulator and feature roundings on each component, then the isqrt floor
    const double dx = dre + dim + 2 * (ea + ef) + 2 * ef;
    const double inv = 1.0 / model.normalizer.std[k];
    z[k] = (x[k] - model.normalizer.mean[k]) * inv;
    dz[k] = (dx + em + ef) * (inv + ei) + std::abs(x[k] - model.normalizer.mean[k]) * ei + es;
  }

  double budget = f.bias.ulp() / 2 + ea;
  for (std::size_t i = 0; i < model.sv_count(); ++i) {
    const auto sv = model.support_vector(i);
    double d2 = 0.0, dd2 = ea;
    for (std::size_t k = 0; k < nf; ++k) {
      const double diff = std::abs(z[k] - sv[k]);
      const double e = dz[k] + es;
      d2 += diff * diff;
      dd2 += 2 * diff * e + e * e;
    }
    const double u = model.gamma * d2;
    const double du = model.gamma * dd2 + (d2 + dd2) * eg + ek;
    const double kv = std::exp(-u);
    const double dk = std::exp(-std::max(0.0, u - du)) * du + exp_err;
    budget += std::abs(model.dual_coeffs[i]) * dk + ed * (kv + dk);
  }
  return budget;
}

AgreementReport agreement_report(const SvmModel& model, const BasisTable& table, const TriggerImage& trigger,
                                 std::span<const CherenkovImage> events) {
  AgreementReport rep;
  double sum = 0.0;
  for (const auto& ev : events) {
    AgreementRow row;
    row.event_id = ev.event_id;
    const auto features = feature_vector(moments(ev.pixel_phe, table));
    row.float_decision = decision_value_raw(model, features);
    row.label_float = sign_label(row.float_decision);

    Saturation sat;
    const auto pixels = quantize_image(ev.pixel_phe, trigger.formats.pixel, &sat);
    const auto res = fx_pipeline(trigger, pixels);
    row.fx_decision = res.decision_value;
    row.label_fx = res.label;
    row.saturated = res.saturated || sat.any();
    row.abs_err = std::abs(row.fx_decision - row.float_decision);
    row.budget = decision_error_budget(trigger, model, table, ev.pixel_phe);

    rep.mismatches += row.label_fx != row.label_float;
    rep.saturated_events += row.saturated;
    rep.max_abs_dev = std::max(rep.max_abs_dev, row.abs_err);
    sum += row.abs_err;
    rep.rows.push_back(row);
  }
  if (!rep.rows.empty()) rep.mean_abs_dev = sum / static_cast<double>(rep.rows.size());
  return rep;
}

} // namespace pzt::fx
