#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace pzt {

/// Row-major feature matrix with +1 (gamma) / -1 (hadron) labels.
class LabeledDataset {
public:
  LabeledDataset() = default;
  explicit LabeledDataset(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }

  std::span<const double> row(std::size_t i) const noexcept { return {x_.data() + i * dim_, dim_}; }
  std::span<double> row(std::size_t i) noexcept { return {x_.data() + i * dim_, dim_}; }
  int label(std::size_t i) const noexcept { return labels_[i]; }
  std::span<const int> labels() const noexcept { return labels_; }

  /// Throws std::invalid_argument on a dimension mismatch or a label outside {+1, -1}.
  void add(std::span<const double> features, int label) {
    if (labels_.empty() && dim_ == 0) dim_ = features.size();
    if (features.size() != dim_) throw std::invalid_argument("LabeledDataset: feature dimension mismatch");
    if (label != 1 && label != -1) throw std::invalid_argument("LabeledDataset: labels must be +1 or -1");
    x_.insert(x_.end(), features.begin(), features.end());
    labels_.push_back(label);
  }

  LabeledDataset subset(std::span<const std::size_t> indices) const {
    LabeledDataset out(dim_);
    out.x_.reserve(indices.size() * dim_);
    out.labels_.reserve(indices.size());
    for (auto i : indices) out.add(row(i), labels_.at(i));
    return out;
  }

  std::size_t count(int label) const noexcept {
    std::size_t c = 0;
    for (int y : labels_) c += (y == label);
    return c;
  }

private:
  std::size_t dim_ = 0;
  std::vector<double> x_;
  std::vector<int> labels_;
};

/// Per-feature z-score transform fitted on training data.
struct Normalizer {
  std::vector<double> mean;
  std::vector<double> std;
  std::vector<bool> degenerate; ///< zero-variance features, std forced to 1

  std::size_t dim() const noexcept { return mean.size(); }

  static Normalizer identity(std::size_t dim) {
    return {std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0), std::vector<bool>(dim, false)};
  }
};

} // namespace pzt
