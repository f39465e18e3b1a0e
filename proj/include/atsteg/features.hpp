#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "atsteg/image_io.hpp"

namespace atsteg {

class FeatureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SpamParams {
  int truncation = 3;  // differences clamped to [-T, T]
  int order = 2;       // Markov order: 1 or 2
};

/// 2 * (2T + 1)^(order + 1); 686 for the defaults.
std::size_t spam_dimension(const SpamParams& params);

struct FeatureVector {
  std::vector<double> values;
  std::string image_id;
};

/// Dense row-major feature table with per-row image ids and optional labels.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  explicit FeatureMatrix(std::size_t cols) : cols_(cols) {}

  std::size_t rows() const noexcept { return ids_.size(); }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return ids_.empty(); }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

  const std::string& id(std::size_t i) const { return ids_[i]; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }

  /// Per-row labels; empty when the matrix is unlabeled.
  const std::vector<int>& labels() const noexcept { return labels_; }
  void set_labels(std::vector<int> labels);

  /// The first appended row fixes the column count of an empty matrix.
  void append(std::span<const double> values, std::string id);
  void append(const FeatureVector& v) { append(v.values, v.image_id); }

  FeatureVector vector(std::size_t i) const;

  /// Rows in the given order (labels follow when present).
  FeatureMatrix select_rows(std::span<const std::size_t> rows) const;
  /// Columns in the given order.
  FeatureMatrix select_columns(std::span<const std::size_t> cols) const;

  /// Stacks b under a; column counts must agree.
  static FeatureMatrix concat(const FeatureMatrix& a, const FeatureMatrix& b);

 private:
  std::size_t cols_ = 0;
  std::vector<double> data_;
  std::vector<std::string> ids_;
  std::vector<int> labels_;
};

enum class Direction { Right, Left, Down, Up, DownRight, UpLeft, DownLeft, UpRight };

/// Empirical Markov transition probabilities of truncated differences along
/// one direction, indexed by (d_0, ..., d_order) with each d shifted by +T.
/// The difference at p is I(p + dir) - I(p). Contexts never observed give 0.
std::vector<double> transition_matrix(const GrayImage& img, Direction dir,
                                      const SpamParams& params);

/// SPAM features: the four axis-direction matrices averaged into one block and
/// the four diagonal ones into a second block.
FeatureVector extract_spam(const GrayImage& img, const SpamParams& params = {});

FeatureMatrix extract_corpus(std::span<const GrayImage> images, const SpamParams& params = {},
                             unsigned threads = 1);

// CSV: header "image_id,f0,...,f{D-1}", 17 significant digits.
void write_feature_csv(std::ostream& out, const FeatureMatrix& m);
void write_feature_csv(const std::filesystem::path& path, const FeatureMatrix& m);
FeatureMatrix read_feature_csv(std::istream& in);

}  // namespace atsteg
