#pragma once

#include "pzt/camera.hpp"
#include "pzt/modelsel.hpp"
#include "pzt/pzernike.hpp"
#include "pzt/svm.hpp"
#include "pzt/trigger.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pzt::io {

/// Malformed or inconsistent input data.
class FormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Shortest round-trip decimal ("%.17g").
std::string format_double(double v);

// Geometry (JSON): {version:1, rings, pixel_pitch, pixels:[{id,x,y}], neighbors:[[...]]}
std::string geometry_to_json(const CameraGeometry& g);
CameraGeometry geometry_from_json(const std::string& text);

// Events (JSON Lines): {event_id, label: "gamma"|"hadron"|null, seed, pixels:[...]}
std::string event_to_jsonl(const CherenkovImage& e);
CherenkovImage event_from_jsonl(const std::string& line);
void write_events(std::ostream& out, const std::vector<CherenkovImage>& events);
std::vector<CherenkovImage> read_events(std::istream& in);

// Features (CSV): event_id,label,f00,...
struct FeatureRow {
  std::uint64_t event_id = 0;
  std::optional<Label> label;
  std::vector<double> features;
};
void write_features_csv(std::ostream& out, const std::vector<FeatureRow>& rows, std::size_t n_features);
std::vector<FeatureRow> read_features_csv(std::istream& in);
/// Labeled rows only; unlabeled rows are skipped.
LabeledDataset to_dataset(const std::vector<FeatureRow>& rows);

// Model (JSON)
std::string model_to_json(const SvmModel& m);
SvmModel model_from_json(const std::string& text);

// Basis table (binary): "PZRT", u16 version=1, u16 q_flag, u16 n_max, u32 n_pixels, payload.
// q_flag 0: float64 (re, im) pairs. q_flag 1: u8 total_bits, u8 frac_bits, then raw (re, im) integers.
std::vector<std::uint8_t> basis_to_bytes(const BasisTable& table);
std::vector<std::uint8_t> basis_to_bytes_fixed(const BasisTable& table, fx::QFormat q);
BasisTable basis_from_bytes(const std::vector<std::uint8_t>& bytes);

// TriggerImage (binary): "PZTR", u16 version=1, 12 descriptors {u8 total_bits, u8 frac_bits, u32 count}
// in kTableNames order, then the eight payloads as little-endian two's complement.
std::vector<std::uint8_t> trigger_to_bytes(const fx::TriggerImage& t);
fx::TriggerImage trigger_from_bytes(const std::vector<std::uint8_t>& bytes);

// Grid (CSV): log2C,log2gamma,cv_accuracy
void write_grid_csv(std::ostream& out, const GridResult& grid);

// Metrics (JSON): {per_class:{gamma:{total,recognized,ratio},hadron:{...}}, accuracy}
std::string metrics_to_json(const ConfusionMetrics& m);

// Agreement report (CSV): event_id,float_decision,fx_decision,abs_err,label_float,label_fx,saturated
void write_agreement_csv(std::ostream& out, const fx::AgreementReport& report);

std::string read_text(const std::filesystem::path& path);
std::vector<std::uint8_t> read_binary(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
void write_binary(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

} // namespace pzt::io
