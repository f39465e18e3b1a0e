#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "atsteg/features.hpp"
#include "atsteg/image_io.hpp"
#include "atsteg/learner.hpp"
#include "atsteg/stego.hpp"

namespace atsteg {

class AtsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ImageLabel { Cover, Stego };

std::string to_string(ImageLabel label);
ImageLabel parse_label(std::string_view text);

struct AtsParams {
  EmbedConfig split = EmbedConfig::lsbm(0.25, 0x5b117);
  SpamParams features;
  LearnerParams learner;
  unsigned threads = 1;  // image-level parallelism (embedding, features)
};

struct ImageVerdict {
  std::string id;
  ImageLabel label;
  double decision;  // SVM decision on b_i; > 0 means the C side
};

/// Confusion counts with stego as the positive class. Doubles so that
/// averages over repeats fit the same type.
struct Confusion {
  double tp = 0, tn = 0, fp = 0, fn = 0;
  double total() const { return tp + tn + fp + fn; }
  double accuracy() const { return total() > 0 ? (tp + tn) / total() : 0.0; }
};

struct AtsDiagnostics {
  double ac_cv_accuracy = 0.0;  // best grid-search CV accuracy of A vs C
  std::size_t n = 0;
  std::size_t train_a = 0;
  std::size_t train_c = 0;
  double predicted_stego_fraction = 0.0;
  double C = 0.0;
  double gamma = 0.0;
  std::vector<std::string> warnings;
};

struct AtsReport {
  std::vector<ImageVerdict> per_image;
  std::optional<Confusion> counts;
  std::optional<double> accuracy;
  AtsDiagnostics diagnostics;
};

using GroundTruth = std::map<std::string, ImageLabel, std::less<>>;

/// Features of A, B = s[A] and C = s[B], row i of each derived from a_i.
struct AtsFeatures {
  FeatureMatrix a;
  FeatureMatrix b;
  FeatureMatrix c;
};

/// Per-id memo of (a, b, c) feature rows. Valid for one AtsParams split and
/// feature configuration and for images whose content is fixed by their id.
class AtsFeatureCache {
 public:
  struct Entry {
    std::vector<double> a, b, c;
    std::string b_id, c_id;
  };
  std::size_t size() const noexcept { return entries_.size(); }
  const Entry* find(const std::string& id) const;
  void insert(const std::string& id, Entry entry);

 private:
  std::unordered_map<std::string, Entry> entries_;
};

/// Steps 1 and 2: B := s[A], C := s[B], then features of all three.
AtsFeatures build_ats_features(std::span<const GrayImage> A, const AtsParams& params,
                               AtsFeatureCache* cache = nullptr);

/// Everything one run produces; the report plus what later stages reuse.
struct AtsRun {
  AtsReport report;
  TrainedClassifier classifier;
  std::vector<int> b_labels;  // SVM label of each b_i
  std::vector<std::string> training_ids;
  std::vector<std::string> test_ids;
};

/// Steps 3 to 5 on precomputed features.
AtsRun run_ats(const AtsFeatures& features, const AtsParams& params,
               const GroundTruth* truth = nullptr);

/// Unsupervised cover/stego classification of A through the artificial
/// training set (A, cover side) u (s[s[A]], stego side).
AtsReport ats_classify(std::span<const GrayImage> A, const AtsParams& params,
                       const GroundTruth* truth = nullptr);

/// Checks the structural contract of a run and throws AtsError on violation:
/// |A| = |B| = |C|, a balanced training set, disjoint train/test ids and a
/// report covering every id of A once.
void verify_run(const AtsFeatures& features, const AtsRun& run);

struct DisjointnessProbe {
  double a_vs_c = 0.0;
  double a_vs_b = 0.0;
  double b_vs_c = 0.0;
};

/// CV accuracy of the learner stack on two feature sets (rows related by
/// index are kept in the same fold).
double pair_cv_accuracy(const FeatureMatrix& first, const FeatureMatrix& second,
                        const LearnerParams& params);

DisjointnessProbe disjointness_probe(std::span<const GrayImage> A, const AtsParams& params);

/// Confusion of predicted labels against truth; every id must be in truth.
Confusion confusion(std::span<const ImageVerdict> verdicts, const GroundTruth& truth);

}  // namespace atsteg
