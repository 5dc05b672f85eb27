#include "pzt/io.hpp"

#include <json.hpp>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace pzt::io {

using nlohmann::json;

namespace {

constexpr std::uint16_t kVersion = 1;

[[noreturn]] void fail(const std::string& what) { throw FormatError(what); }

template <class T>
T get_field(const json& j, const char* key, const char* where) {
  if (!j.is_object() || !j.contains(key)) fail(std::string(where) + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(std::string(where) + ": bad field '" + key + "': " + e.what());
  }
}

json parse_json(const std::string& text, const char* where) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string(where) + ": " + e.what());
  }
}

std::string dump(const json& j) { return j.dump(1, ' ', false, json::error_handler_t::strict) + "\n"; }

// Little-endian byte writer/reader.
class Writer {
public:
  void bytes(const char* s, std::size_t n) { buf_.insert(buf_.end(), s, s + n); }
  void uint(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u8(std::uint8_t v) { uint(v, 1); }
  void u16(std::uint16_t v) { uint(v, 2); }
  void u32(std::uint32_t v) { uint(v, 4); }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    uint(bits, 8);
  }
  void sint(fx::raw_t v, int width) { uint(static_cast<std::uint64_t>(v), width); }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

private:
  std::vector<std::uint8_t> buf_;
};

class Reader {
public:
  Reader(const std::vector<std::uint8_t>& b, const char* where) : b_(b), where_(where) {}
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) fail(std::string(where_) + ": truncated file");
  }
  std::uint64_t uint(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(uint(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(uint(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(uint(4)); }
  double f64() {
    const std::uint64_t bits = uint(8);
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  fx::raw_t sint(int width) {
    const std::uint64_t u = uint(width);
    if (width == 8) return static_cast<fx::raw_t>(u);
    const std::uint64_t sign = std::uint64_t{1} << (8 * width - 1);
    return static_cast<fx::raw_t>((u ^ sign) - sign);
  }
  void magic(const char* m) {
    need(4);
    if (std::memcmp(b_.data() + pos_, m, 4) != 0) fail(std::string(where_) + ": bad magic, expected " + m);
    pos_ += 4;
  }
  bool done() const { return pos_ == b_.size(); }

private:
  const std::vector<std::uint8_t>& b_;
  const char* where_;
  std::size_t pos_ = 0;
};

int n_max_for_features(std::size_t n_features, const char* where) {
  for (int n = 0; n <= kMaxOrder; ++n) {
    if (feature_count(n) == n_features) return n;
  }
  fail(std::string(where) + ": feature count " + std::to_string(n_features) + " matches no order");
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

double parse_double(const std::string& s, const char* where) {
  if (s.empty()) fail(std::string(where) + ": empty number");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) fail(std::string(where) + ": bad number '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s, const char* where) {
  if (s.empty() || s.front() == '-') fail(std::string(where) + ": bad id '" + s + "'");
  char* end = nullptr;
  const auto v = std::strtoull(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size()) fail(std::string(where) + ": bad id '" + s + "'");
  return v;
}

std::string feature_name(std::size_t k) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "f%02zu", k);
  return buf;
}

} // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---- geometry ----

std::string geometry_to_json(const CameraGeometry& g) {
  json pixels = json::array();
  for (std::size_t p = 0; p < g.pixel_count(); ++p) {
    pixels.push_back({{"id", p}, {"x", g.position(p).x}, {"y", g.position(p).y}});
  }
  json nb = json::array();
  for (const auto& n : g.neighbors()) nb.push_back(n);
  json j = {{"version", kVersion}, {"rings", g.rings()}, {"pixel_pitch", g.pixel_pitch()}, {"pixels", pixels},
            {"neighbors", nb}};
  return dump(j);
}

CameraGeometry geometry_from_json(const std::string& text) {
  const char* where = "geometry";
  const json j = parse_json(text, where);
  if (get_field<int>(j, "version", where) != kVersion) fail("geometry: unsupported version");
  const auto rings = get_field<std::size_t>(j, "rings", where);
  const auto pitch = get_field<double>(j, "pixel_pitch", where);
  const auto& px = j.at("pixels");
  if (!px.is_array()) fail("geometry: 'pixels' must be an array");
  std::vector<Point2> pos(px.size());
  for (const auto& p : px) {
    const auto id = get_field<std::size_t>(p, "id", where);
    if (id >= pos.size()) fail("geometry: pixel id out of range");
    pos[id] = {get_field<double>(p, "x", where), get_field<double>(p, "y", where)};
  }
  auto nb = get_field<std::vector<std::vector<std::uint32_t>>>(j, "neighbors", where);
  try {
    return make_geometry(rings, pitch, std::move(pos), std::move(nb));
  } catch (const std::invalid_argument& e) {
    fail(std::string("geometry: ") + e.what());
  }
}

// ---- events ----

std::string event_to_jsonl(const CherenkovImage& e) {
  json j;
  j["event_id"] = e.event_id;
  j["label"] = e.label ? json(label_name(*e.label)) : json(nullptr);
  j["seed"] = e.seed ? json(*e.seed) : json(nullptr);
  j["pixels"] = e.pixel_phe;
  return j.dump(-1, ' ', false, json::error_handler_t::strict);
}

CherenkovImage event_from_jsonl(const std::string& line) {
  const char* where = "event";
  const json j = parse_json(line, where);
  CherenkovImage e;
  e.event_id = get_field<std::uint64_t>(j, "event_id", where);
  if (j.contains("label") && !j.at("label").is_null()) {
    try {
      e.label = parse_label(get_field<std::string>(j, "label", where));
    } catch (const std::invalid_argument& ex) {
      fail(std::string("event: ") + ex.what());
    }
  }
  if (j.contains("seed") && !j.at("seed").is_null()) e.seed = get_field<std::uint64_t>(j, "seed", where);
  e.pixel_phe = get_field<std::vector<double>>(j, "pixels", where);
  return e;
}

void write_events(std::ostream& out, const std::vector<CherenkovImage>& events) {
  for (const auto& e : events) out << event_to_jsonl(e) << '\n';
}

std::vector<CherenkovImage> read_events(std::istream& in) {
  std::vector<CherenkovImage> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(event_from_jsonl(line));
    } catch (const FormatError& e) {
      fail("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

// ---- features ----

void write_features_csv(std::ostream& out, const std::vector<FeatureRow>& rows, std::size_t n_features) {
  out << "event_id,label";
  for (std::size_t k = 0; k < n_features; ++k) out << ',' << feature_name(k);
  out << '\n';
  for (const auto& r : rows) {
    if (r.features.size() != n_features) throw std::invalid_argument("features: row width mismatch");
    out << r.event_id << ',' << (r.label ? label_name(*r.label) : "");
    for (double v : r.features) out << ',' << format_double(v);
    out << '\n';
  }
}

std::vector<FeatureRow> read_features_csv(std::istream& in) {
  const char* where = "features";
  std::string line;
  if (!std::getline(in, line)) fail("features: empty file");
  const auto header = split_csv(line);
  if (header.size() < 3 || header[0] != "event_id" || header[1] != "label") fail("features: bad header");
  const std::size_t nf = header.size() - 2;
  for (std::size_t k = 0; k < nf; ++k) {
    if (header[k + 2] != feature_name(k)) fail("features: bad header column '" + header[k + 2] + "'");
  }
  std::vector<FeatureRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cols = split_csv(line);
    if (cols.size() != header.size()) fail("features: line " + std::to_string(lineno) + " has wrong column count");
    FeatureRow r;
    r.event_id = parse_u64(cols[0], where);
    if (!cols[1].empty()) {
      try {
        r.label = parse_label(cols[1]);
      } catch (const std::invalid_argument& e) {
        fail("features: line " + std::to_string(lineno) + ": " + e.what());
      }
    }
    r.features.reserve(nf);
    for (std::size_t k = 0; k < nf; ++k) r.features.push_back(parse_double(cols[k + 2], where));
    rows.push_back(std::move(r));
  }
  return rows;
}

LabeledDataset to_dataset(const std::vector<FeatureRow>& rows) {
  LabeledDataset d(rows.empty() ? 0 : rows.front().features.size());
  for (const auto& r : rows) {
    if (r.label) d.add(r.features, label_sign(*r.label));
  }
  return d;
}

// ---- model ----

std::string model_to_json(const SvmModel& m) {
  json svs = json::array();
  for (std::size_t i = 0; i < m.sv_count(); ++i) {
    const auto sv = m.support_vector(i);
    svs.push_back(std::vector<double>(sv.begin(), sv.end()));
  }
  json j;
  j["version"] = kVersion;
  j["kernel"] = "rbf";
  j["gamma"] = m.gamma;
  j["C"] = m.C;
  j["tol"] = m.tol;
  j["bias"] = m.bias;
  j["normalizer"] = {{"mean", m.normalizer.mean}, {"std", m.normalizer.std}};
  j["support_vectors"] = svs;
  j["dual_coeffs"] = m.dual_coeffs;
  j["converged"] = m.converged;
  j["seed"] = m.seed;
  return dump(j);
}

SvmModel model_from_json(const std::string& text) {
  const char* where = "model";
  const json j = parse_json(text, where);
  if (get_field<int>(j, "version", where) != kVersion) fail("model: unsupported version");
  if (get_field<std::string>(j, "kernel", where) != "rbf") fail("model: only the rbf kernel is supported");
  SvmModel m;
  m.gamma = get_field<double>(j, "gamma", where);
  m.C = get_field<double>(j, "C", where);
  m.tol = get_field<double>(j, "tol", where);
  m.bias = get_field<double>(j, "bias", where);
  m.converged = get_field<bool>(j, "converged", where);
  m.seed = get_field<std::uint64_t>(j, "seed", where);
  const auto& nz = j.at("normalizer");
  m.normalizer.mean = get_field<std::vector<double>>(nz, "mean", where);
  m.normalizer.std = get_field<std::vector<double>>(nz, "std", where);
  if (m.normalizer.mean.size() != m.normalizer.std.size()) fail("model: normalizer mean/std size mismatch");
  m.normalizer.degenerate.assign(m.normalizer.mean.size(), false);
  for (double s : m.normalizer.std) {
    if (!(s > 0.0)) fail("model: normalizer std must be positive");
  }
  m.dim = m.normalizer.dim();
  const auto svs = get_field<std::vector<std::vector<double>>>(j, "support_vectors", where);
  m.dual_coeffs = get_field<std::vector<double>>(j, "dual_coeffs", where);
  if (svs.size() != m.dual_coeffs.size()) fail("model: support vector and coefficient counts differ");
  for (const auto& sv : svs) {
    if (sv.size() != m.dim) fail("model: support vector dimension mismatch");
    m.support_vectors.insert(m.support_vectors.end(), sv.begin(), sv.end());
  }
  if (!(m.gamma > 0.0) || !(m.C > 0.0)) fail("model: C and gamma must be positive");
  return m;
}

// ---- basis table ----

namespace {

void basis_header(Writer& w, const BasisTable& t, std::uint16_t q_flag) {
  w.bytes("PZRT", 4);
  w.u16(kVersion);
  w.u16(q_flag);
  w.u16(static_cast<std::uint16_t>(t.n_max()));
  w.u32(static_cast<std::uint32_t>(t.pixel_count()));
}

} // namespace

std::vector<std::uint8_t> basis_to_bytes(const BasisTable& table) {
  Writer w;
  basis_header(w, table, 0);
  for (const auto& v : table.values()) {
    w.f64(v.real());
    w.f64(v.imag());
  }
  return w.take();
}

std::vector<std::uint8_t> basis_to_bytes_fixed(const BasisTable& table, fx::QFormat q) {
  q.validate();
  if (!q.is_signed || (q.total_bits % 8) != 0) throw std::invalid_argument("basis: format must be signed, whole bytes");
  Writer w;
  basis_header(w, table, 1);
  w.u8(static_cast<std::uint8_t>(q.total_bits));
  w.u8(static_cast<std::uint8_t>(q.frac_bits));
  const int width = q.total_bits / 8;
  for (const auto& v : table.values()) {
    w.sint(fx::to_fixed(v.real(), q), width);
    w.sint(fx::to_fixed(v.imag(), q), width);
  }
  return w.take();
}

BasisTable basis_from_bytes(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes, "basis");
  r.magic("PZRT");
  if (r.u16() != kVersion) fail("basis: unsupported version");
  const auto q_flag = r.u16();
  const int n_max = r.u16();
  const std::size_t n_pixels = r.u32();
  if (n_max > kMaxOrder) fail("basis: order too large");
  const std::size_t count = n_pixels * feature_count(n_max);
  std::vector<std::complex<double>> values;
  values.reserve(count);
  if (q_flag == 0) {
    r.need(count * 16);
    for (std::size_t i = 0; i < count; ++i) {
      const double re = r.f64();
      const double im = r.f64();
      values.emplace_back(re, im);
    }
  } else if (q_flag == 1) {
    fx::QFormat q{r.u8(), 0};
    q.frac_bits = r.u8();
    try {
      q.validate();
    } catch (const std::invalid_argument& e) {
      fail(std::string("basis: ") + e.what());
    }
    if (q.total_bits % 8 != 0) fail("basis: format width must be whole bytes");
    const int width = q.total_bits / 8;
    r.need(count * 2 * static_cast<std::size_t>(width));
    for (std::size_t i = 0; i < count; ++i) {
      const double re = fx::to_double(r.sint(width), q);
      const double im = fx::to_double(r.sint(width), q);
      values.emplace_back(re, im);
    }
  } else {
    fail("basis: unknown q_flag " + std::to_string(q_flag));
  }
  if (!r.done()) fail("basis: trailing bytes");
  return BasisTable(n_max, n_pixels, std::move(values));
}

// ---- trigger image ----

namespace {

std::array<fx::QFormat*, 12> format_slots(fx::TriggerFormats& f) {
  return {&f.basis,     &f.norm_mean, &f.norm_invstd, &f.support_vectors, &f.dual_coeffs, &f.bias,
          &f.gamma,     &f.exp_lut,   &f.pixel,       &f.accumulator,     &f.feature,     &f.kernel};
}

} // namespace

std::vector<std::uint8_t> trigger_to_bytes(const fx::TriggerImage& t) {
  t.formats.validate();
  t.check_consistency();
  fx::TriggerFormats f = t.formats;
  f.exp_lut = t.exp_lut.format;
  const auto slots = format_slots(f);
  const std::array<const std::vector<fx::raw_t>*, 8> payloads{&t.basis,           &t.norm_mean,   &t.norm_invstd,
                                                             &t.support_vectors, &t.dual_coeffs, nullptr,
                                                             nullptr,            &t.exp_lut.entries};
  const std::array<fx::raw_t, 2> scalars{t.bias, t.gamma};

  Writer w;
  w.bytes("PZTR", 4);
  w.u16(kVersion);
  for (std::size_t i = 0; i < slots.size(); ++i) {
    w.u8(static_cast<std::uint8_t>(slots[i]->total_bits));
    w.u8(static_cast<std::uint8_t>(slots[i]->frac_bits));
    const std::size_t count = i >= payloads.size() ? 0 : payloads[i] ? payloads[i]->size() : 1;
    w.u32(static_cast<std::uint32_t>(count));
  }
  for (std::size_t i = 0; i < payloads.size(); ++i) {
    const int width = slots[i]->total_bits / 8;
    if (payloads[i]) {
      for (auto v : *payloads[i]) w.sint(v, width);
    } else {
      w.sint(scalars[i - 5], width);
    }
  }
  return w.take();
}

fx::TriggerImage trigger_from_bytes(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes, "trigger");
  r.magic("PZTR");
  if (r.u16() != kVersion) fail("trigger: unsupported version");
  fx::TriggerImage t;
  const auto slots = format_slots(t.formats);
  std::array<std::size_t, 12> counts{};
  for (std::size_t i = 0; i < slots.size(); ++i) {
    slots[i]->total_bits = r.u8();
    slots[i]->frac_bits = r.u8();
    slots[i]->is_signed = true;
    counts[i] = r.u32();
  }
  try {
    t.formats.validate();
  } catch (const std::invalid_argument& e) {
    fail(std::string("trigger: ") + e.what());
  }
  for (std::size_t i = 8; i < counts.size(); ++i) {
    if (counts[i] != 0) fail(std::string("trigger: table '") + fx::kTableNames[i] + "' must carry no payload");
  }
  if (counts[5] != 1 || counts[6] != 1) fail("trigger: bias and gamma must be scalars");

  std::size_t total = 0;
  for (std::size_t i = 0; i < 8; ++i) total += counts[i] * static_cast<std::size_t>(slots[i]->total_bits / 8);
  r.need(total);
  auto read_table = [&](std::size_t i) {
    std::vector<fx::raw_t> v(counts[i]);
    for (auto& x : v) x = r.sint(slots[i]->total_bits / 8);
    return v;
  };
  t.basis = read_table(0);
  t.norm_mean = read_table(1);
  t.norm_invstd = read_table(2);
  t.support_vectors = read_table(3);
  t.dual_coeffs = read_table(4);
  t.bias = read_table(5).front();
  t.gamma = read_table(6).front();
  t.exp_lut.format = t.formats.exp_lut;
  t.exp_lut.entries = read_table(7);
  if (!r.done()) fail("trigger: trailing bytes");

  t.n_features = t.norm_mean.size();
  if (t.n_features == 0) fail("trigger: empty normalizer");
  t.n_max = n_max_for_features(t.n_features, "trigger");
  t.n_sv = t.dual_coeffs.size();
  if (t.basis.size() % (2 * t.n_features) != 0) fail("trigger: basis size is not a multiple of the moment count");
  t.n_pixels = t.basis.size() / (2 * t.n_features);
  const auto n_lut = t.exp_lut.entries.size();
  if (n_lut < 2 || (n_lut & (n_lut - 1)) != 0) fail("trigger: exp LUT size must be a power of two");
  try {
    t.check_consistency();
  } catch (const std::invalid_argument& e) {
    fail(std::string("trigger: ") + e.what());
  }
  return t;
}

// ---- reports ----

void write_grid_csv(std::ostream& out, const GridResult& grid) {
  out << "log2C,log2gamma,cv_accuracy\n";
  for (const auto& c : grid.cells) {
    out << format_double(c.log2_c) << ',' << format_double(c.log2_gamma) << ',' << format_double(c.cv_accuracy)
        << '\n';
  }
}

std::string metrics_to_json(const ConfusionMetrics& m) {
  auto cls = [](const ClassCounts& c) {
    return json{{"total", c.total}, {"recognized", c.recognized}, {"ratio", c.ratio()}};
  };
  json j;
  j["per_class"] = {{"gamma", cls(m.gamma)}, {"hadron", cls(m.hadron)}};
  j["accuracy"] = m.accuracy();
  return dump(j);
}

void write_agreement_csv(std::ostream& out, const fx::AgreementReport& report) {
  out << "event_id,float_decision,fx_decision,abs_err,label_float,label_fx,saturated\n";
  for (const auto& r : report.rows) {
    out << r.event_id << ',' << format_double(r.float_decision) << ',' << format_double(r.fx_decision) << ','
        << format_double(r.abs_err) << ',' << r.label_float << ',' << r.label_fx << ',' << (r.saturated ? 1 : 0)
        << '\n';
  }
}

// ---- files ----

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::uint8_t> read_binary(const std::filesystem::path& path) {
  const auto text = read_text(path);
  return {text.begin(), text.end()};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_binary(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  write_text(path, std::string(bytes.begin(), bytes.end()));
}

} // namespace pzt::io
