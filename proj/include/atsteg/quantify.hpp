#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "atsteg/ats.hpp"

namespace atsteg {

class DegeneratePartition : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-dimension arithmetic mean.
FeatureVector centroid(std::span<const FeatureVector> vectors);

/// S = d(A_stego, B_stego) / d(A_cover, A_stego) with Euclidean d. Throws
/// DegeneratePartition when the denominator is zero.
double score_S(const FeatureVector& a_cover, const FeatureVector& a_stego,
               const FeatureVector& b_stego);

struct ScoreEntry {
  double tentative_rate = 0.0;
  double score = 0.0;  // +inf when the partition was degenerate
  AtsReport report;
};

/// Number of top-F features the centroids are computed over.
inline constexpr std::size_t kCentroidFeatures = 50;

/// Score S of one finished run: centroids in the standardized space of the
/// run's kCentroidFeatures best ANOVA features. The stego part of B is the
/// set of b_i whose a_i was labeled cover.
double run_score(const AtsFeatures& features, const AtsRun& run);

/// Runs ATS once per tentative rate (same split key, features and learner
/// settings as `base`) and ranks the runs by ascending S; ties go to the
/// lower rate, degenerate runs sort last with S = +inf.
std::vector<ScoreEntry> search_bitrate(std::span<const GrayImage> A, Algorithm algorithm,
                                       std::span<const double> candidates,
                                       const AtsParams& base);

/// One re-classification round of the streaming mode.
struct StreamRound {
  std::size_t round = 0;  // 1-based
  std::size_t n = 0;      // images collected when the round ran
  std::map<std::string, ImageLabel> labels;
  std::map<std::string, double> confidence;
};

/// Streaming ATS: images arrive one at a time; once n_min have arrived, the
/// whole collected set is re-classified on every `batch_every`-th arrival and
/// each image keeps the history of its labels. Not thread-safe; one owner
/// calls add().
class StreamState {
 public:
  explicit StreamState(AtsParams params, std::size_t n_min = 10, std::size_t batch_every = 1,
                       AtsFeatureCache* shared_cache = nullptr);

  /// Appends img; returns the fresh labels when a round ran.
  std::optional<StreamRound> add(GrayImage img);

  /// m_l / n_l: share of this image's rounds that agree with its latest label.
  double confidence(const std::string& id) const;

  const std::vector<ImageLabel>& history(const std::string& id) const;
  std::size_t size() const noexcept { return collected_.size(); }
  std::size_t n_min() const noexcept { return n_min_; }
  std::size_t rounds() const noexcept { return rounds_; }
  const std::vector<GrayImage>& collected() const noexcept { return collected_; }
  const std::optional<AtsReport>& last_report() const noexcept { return last_report_; }

 private:
  AtsParams params_;
  std::size_t n_min_;
  std::size_t batch_every_;
  std::vector<GrayImage> collected_;
  std::map<std::string, std::vector<ImageLabel>, std::less<>> history_;
  std::optional<AtsReport> last_report_;
  std::size_t rounds_ = 0;
  AtsFeatureCache own_cache_;
  AtsFeatureCache* cache_;
};

/// Closed-form number of labels image k (1-based arrival index) holds after
/// n arrivals when every arrival past n_min triggers a round.
std::size_t expected_history_length(std::size_t n, std::size_t k, std::size_t n_min);

/// Confidence from a label history (latest label last).
double confidence_of(std::span<const ImageLabel> history);

std::string stream_round_json(const StreamRound& round);

}  // namespace atsteg
