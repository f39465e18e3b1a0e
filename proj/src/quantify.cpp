#include "atsteg/quantify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

namespace atsteg {

FeatureVector centroid(std::span<const FeatureVector> vectors) {
  if (vectors.empty()) throw std::invalid_argument("centroid of an empty set");
  const std::size_t d = vectors.front().values.size();
  FeatureVector c{std::vector<double>(d, 0.0), "centroid"};
  for (const auto& v : vectors) {
    if (v.values.size() != d) throw std::invalid_argument("centroid: dimension mismatch");
    for (std::size_t i = 0; i < d; ++i) c.values[i] += v.values[i];
  }
  for (auto& x : c.values) x /= static_cast<double>(vectors.size());
  return c;
}

namespace {

double euclidean(const FeatureVector& a, const FeatureVector& b) {
  if (a.values.size() != b.values.size()) throw std::invalid_argument("distance: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double t = a.values[i] - b.values[i];
    s += t * t;
  }
  return std::sqrt(s);
}

}  // namespace

double score_S(const FeatureVector& a_cover, const FeatureVector& a_stego,
               const FeatureVector& b_stego) {
  const double denom = euclidean(a_cover, a_stego);
  if (!(denom > 0.0)) {
    throw DegeneratePartition("degenerate partition: cover and stego centroids coincide");
  }
  return euclidean(a_stego, b_stego) / denom;
}

double run_score(const AtsFeatures& f, const AtsRun& run) {
  const auto top = select_top_k(run.classifier.f_scores, kCentroidFeatures);
  // Standardize with statistics of the run's own training set A u C.
  const auto train_top = FeatureMatrix::concat(f.a, f.c).select_columns(top);
  const auto standardizer = Standardizer::fit(train_top);
  const auto a = standardizer.apply(f.a.select_columns(top));
  const auto b = standardizer.apply(f.b.select_columns(top));

  std::vector<FeatureVector> a_cover, a_stego, b_stego;
  for (std::size_t i = 0; i < run.report.per_image.size(); ++i) {
    if (run.report.per_image[i].label == ImageLabel::Cover) {
      a_cover.push_back(a.vector(i));
      b_stego.push_back(b.vector(i));
    } else {
      a_stego.push_back(a.vector(i));
    }
  }
  if (a_cover.empty() || a_stego.empty()) {
    throw DegeneratePartition("degenerate partition: one predicted class is empty");
  }
  return score_S(centroid(a_cover), centroid(a_stego), centroid(b_stego));
}

std::vector<ScoreEntry> search_bitrate(std::span<const GrayImage> A, Algorithm algorithm,
                                       std::span<const double> candidates,
                                       const AtsParams& base) {
  if (candidates.empty()) throw std::invalid_argument("no tentative bit rates given");
  std::vector<ScoreEntry> entries;
  for (double rate : candidates) {
    AtsParams params = base;
    params.split = EmbedConfig(algorithm, rate, base.split.key());
    const auto features = build_ats_features(A, params);
    auto run = run_ats(features, params);
    verify_run(features, run);
    ScoreEntry e;
    e.tentative_rate = rate;
    try {
      e.score = run_score(features, run);
    } catch (const DegeneratePartition&) {
      e.score = std::numeric_limits<double>::infinity();
    }
    e.report = std::move(run.report);
    entries.push_back(std::move(e));
  }
  std::stable_sort(entries.begin(), entries.end(), [](const ScoreEntry& x, const ScoreEntry& y) {
    if (x.score != y.score) return x.score < y.score;
    return x.tentative_rate < y.tentative_rate;
  });
  if (std::isinf(entries.front().score)) {
    throw DegeneratePartition("every tentative bit rate produced a degenerate partition");
  }
  return entries;
}

std::size_t expected_history_length(std::size_t n, std::size_t k, std::size_t n_min) {
  const auto count = [](std::size_t a, std::size_t b) { return a + 1 > b ? a + 1 - b : 0; };
  return k <= n_min ? count(n, n_min) : count(n, k);
}

double confidence_of(std::span<const ImageLabel> history) {
  if (history.empty()) throw std::invalid_argument("image has not been classified yet");
  const auto latest = history.back();
  const auto agree = std::count(history.begin(), history.end(), latest);
  return static_cast<double>(agree) / static_cast<double>(history.size());
}

StreamState::StreamState(AtsParams params, std::size_t n_min, std::size_t batch_every,
                         AtsFeatureCache* shared_cache)
    : params_(std::move(params)),
      n_min_(n_min),
      batch_every_(batch_every),
      cache_(shared_cache ? shared_cache : &own_cache_) {
  if (n_min_ < 2) throw std::invalid_argument("n_min must be at least 2");
  if (batch_every_ < 1) throw std::invalid_argument("batch_every must be at least 1");
}

std::optional<StreamRound> StreamState::add(GrayImage img) {
  if (history_.count(img.id) || std::any_of(collected_.begin(), collected_.end(),
                                            [&](const GrayImage& g) { return g.id == img.id; })) {
    throw std::invalid_argument("duplicate image id in stream: " + img.id);
  }
  collected_.push_back(std::move(img));
  const std::size_t n = collected_.size();
  if (n < n_min_ || (n - n_min_) % batch_every_ != 0) return std::nullopt;

  const auto features = build_ats_features(collected_, params_, cache_);
  auto run = run_ats(features, params_);
  verify_run(features, run);

  StreamRound round;
  round.round = ++rounds_;
  round.n = n;
  for (const auto& v : run.report.per_image) {
    history_[v.id].push_back(v.label);
    round.labels[v.id] = v.label;
  }
  for (const auto& v : run.report.per_image) round.confidence[v.id] = confidence(v.id);
  last_report_ = std::move(run.report);
  return round;
}

const std::vector<ImageLabel>& StreamState::history(const std::string& id) const {
  static const std::vector<ImageLabel> kEmpty;
  const auto it = history_.find(id);
  return it == history_.end() ? kEmpty : it->second;
}

double StreamState::confidence(const std::string& id) const {
  const auto it = history_.find(id);
  if (it == history_.end()) throw std::invalid_argument("image never classified: " + id);
  return confidence_of(it->second);
}

std::string stream_round_json(const StreamRound& round) {
  nlohmann::json j;
  j["round"] = round.round;
  j["n"] = round.n;
  auto labels = nlohmann::json::object();
  for (const auto& [id, label] : round.labels) labels[id] = to_string(label);
  j["labels"] = std::move(labels);
  auto conf = nlohmann::json::object();
  for (const auto& [id, c] : round.confidence) conf[id] = c;
  j["confidence"] = std::move(conf);
  return j.dump();
}

}  // namespace atsteg
