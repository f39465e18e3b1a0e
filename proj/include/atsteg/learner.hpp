#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "atsteg/features.hpp"

namespace atsteg {

class LearnerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Binary labels are +/-1 throughout. -1 is the A side (lambda'_1),
// +1 the C side (lambda'_2).
inline constexpr int kNegative = -1;
inline constexpr int kPositive = +1;

/// One-way ANOVA F per feature for two groups. Zero within-group variance
/// yields +inf when the group means differ and 0 when they do not.
std::vector<double> anova_f(const FeatureMatrix& X, std::span<const int> y);

/// Indices of the k largest scores (ties to the lower index), ascending.
std::vector<std::size_t> select_top_k(std::span<const double> scores, std::size_t k);

struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;  // population std; 1 for constant columns

  static Standardizer fit(const FeatureMatrix& X);
  FeatureMatrix apply(const FeatureMatrix& X) const;
  void apply_in_place(std::span<double> row) const;
};

struct SvmModel {
  FeatureMatrix support_vectors;  // standardized, selected
  std::vector<double> alphas;
  std::vector<int> sv_labels;
  double bias = 0.0;
  double gamma = 1.0;
  double C = 1.0;
  std::vector<double> feature_mean;   // per selected feature
  std::vector<double> feature_std;
  std::vector<std::size_t> selected_indices;
  std::size_t input_dimension = 0;

  /// Decision value on an already standardized, selected vector.
  double decision_prepared(std::span<const double> x) const;
  /// Decision value on a raw vector of the original dimension.
  double decision(std::span<const double> raw) const;
};

struct Prediction {
  int label;  // kNegative or kPositive; a decision of exactly 0 maps to kNegative
  double decision;
};

Prediction predict(const SvmModel& model, std::span<const double> raw);

struct SmoOptions {
  double tolerance = 1e-3;
  std::size_t max_iterations = 10'000'000;
};

/// Dual solution on a precomputed kernel. Exposed for tests and grid search.
struct DualSolution {
  std::vector<double> alpha;
  double bias = 0.0;
  double objective = 0.0;  // sum(alpha) - 0.5 alpha' Q alpha
  std::size_t iterations = 0;
};

/// Soft-margin SVM dual by SMO. kernel is the row-major n x n Gram matrix
/// (or a view of it through `index`, when non-empty).
DualSolution solve_dual(std::span<const double> kernel, std::size_t stride,
                        std::span<const std::size_t> index, std::span<const int> y, double C,
                        const SmoOptions& options = {});

/// Gaussian-kernel SVM on standardized features. The model's preprocessing is
/// the identity (all features, mean 0, std 1).
SvmModel train_gsvm(const FeatureMatrix& X, std::span<const int> y, double C, double gamma,
                    const SmoOptions& options = {});

double gaussian_kernel(std::span<const double> a, std::span<const double> b, double gamma);

/// Row-major n x n matrix of squared Euclidean distances.
std::vector<double> squared_distances(const FeatureMatrix& X);

std::vector<double> c_grid();      // 2^-5, 2^-3, ..., 2^15
std::vector<double> gamma_grid();  // 2^-15, 2^-13, ..., 2^3

/// Fold index (0..folds-1) per sample, shuffled by seed and stratified by
/// label. When `groups` is non-empty, samples sharing a group id always land
/// in the same fold (groups are dealt round-robin in shuffled order).
std::vector<int> stratified_folds(std::span<const int> y, int folds, std::uint64_t seed,
                                  std::span<const std::size_t> groups = {});

struct GridResult {
  double C = 0.0;
  double gamma = 0.0;
  double cv_accuracy = 0.0;
};

/// k-fold accuracy at one (C, gamma) on standardized features.
double cross_validate(const FeatureMatrix& X, std::span<const int> y, double C, double gamma,
                      std::span<const int> fold_of);

/// Exhaustive search of the C x gamma grid by stratified k-fold accuracy.
/// Ties go to the smaller C, then the smaller gamma.
GridResult grid_search(const FeatureMatrix& X, std::span<const int> y, int folds,
                       std::uint64_t seed, unsigned threads = 1,
                       std::span<const std::size_t> groups = {});

/// Same search on a caller-supplied fold assignment.
GridResult grid_search_folds(const FeatureMatrix& X, std::span<const int> y,
                             std::span<const int> fold_of, unsigned threads = 1);

struct LearnerParams {
  std::size_t k_features = 500;
  int folds = 5;
  std::uint64_t fold_seed = 0x5eed;
  unsigned threads = 1;
};

struct TrainedClassifier {
  SvmModel model;
  GridResult grid;
  std::vector<double> f_scores;  // over all raw features
  Standardizer standardizer;     // over the selected features
};

/// ANOVA selection, standardization, grid search and final training, all fit
/// on (X, y) only. `groups` ties related rows to the same CV fold. When the
/// smaller class has fewer than 2 rows the grid search is skipped and
/// C = 1, gamma = 1 / k is used.
TrainedClassifier fit_classifier(const FeatureMatrix& X, std::span<const int> y,
                                 const LearnerParams& params,
                                 std::span<const std::size_t> groups = {});

/// CV accuracy of the whole stack: (C, gamma) is chosen by grid search and
/// then re-scored on a fresh fold split drawn with a different seed.
double stack_cv_accuracy(const FeatureMatrix& X, std::span<const int> y,
                         const LearnerParams& params,
                         std::span<const std::size_t> groups = {});

// Versioned JSON document; see README for the layout.
std::string model_to_json(const SvmModel& model);
SvmModel model_from_json(const std::string& text);

}  // namespace atsteg
