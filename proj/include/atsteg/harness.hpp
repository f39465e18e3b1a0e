#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "atsteg/ats.hpp"

namespace atsteg {

class ExperimentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A family of synthetic covers. Smoothness is drawn uniformly per image.
struct SyntheticComponent {
  std::size_t count = 0;
  std::size_t width = 512;
  std::size_t height = 512;
  double smoothness_min = 4.0;
  double smoothness_max = 8.0;
  // Fraction of each testing set drawn from this component; when no
  // component sets a share, images are drawn from the pooled corpus.
  std::optional<double> share;
};

struct CorpusSource {
  std::optional<std::filesystem::path> directory;
  std::vector<SyntheticComponent> synthetic;
};

struct ExperimentSpec {
  CorpusSource corpus;
  std::size_t n_cover = 125;
  std::size_t n_stego = 125;
  EmbedConfig embed = EmbedConfig::lsbm(0.25, 0x57e90);  // steganographer
  EmbedConfig split = EmbedConfig::lsbm(0.25, 0xa75);    // steganalyst
  std::size_t repeats = 1;
  std::uint64_t seed = 1;
  std::optional<ClipSize> clip;
  SpamParams features;
  LearnerParams learner;
  unsigned threads = 1;

  void validate() const;
  AtsParams ats_params() const;
};

/// Cover images the experiment draws from, tagged by component.
struct CoverPool {
  std::vector<GrayImage> images;
  std::vector<std::size_t> component;  // per image
  std::vector<std::optional<double>> shares;
};

CoverPool build_pool(const ExperimentSpec& spec);

/// One testing set: n_cover covers plus n_stego embedded images (their
/// original covers removed), in random order, with ground truth.
struct TestingSet {
  std::vector<GrayImage> images;
  GroundTruth truth;
};

TestingSet draw_testing_set(const ExperimentSpec& spec, const CoverPool& pool,
                            std::size_t repeat);

struct ExperimentResult {
  std::size_t n_cover = 0;
  std::size_t n_stego = 0;
  std::size_t repeats = 0;
  Confusion mean_counts;  // arithmetic mean over repeats
  double mean_accuracy = 0.0;
  std::vector<AtsReport> reports;
  std::vector<std::string> warnings;
};

ExperimentResult run_experiment(const ExperimentSpec& spec);
ExperimentResult run_experiment(const ExperimentSpec& spec, const CoverPool& pool);

/// Rows from (N covers, 0 stego) to (0, N) in steps of `step` stego images.
std::vector<ExperimentResult> ratio_sweep(const ExperimentSpec& spec, std::size_t step);

struct StreamPoint {
  std::size_t n = 0;
  double mean_accuracy = 0.0;
  double mean_confidence = 0.0;
};

/// Feeds one testing set image by image in seeded orders and averages the
/// accuracy and mean confidence of every round across the orders.
std::vector<StreamPoint> stream_experiment(const ExperimentSpec& spec,
                                           std::span<const std::uint64_t> order_seeds,
                                           std::size_t n_min = 10,
                                           std::size_t batch_every = 1);

/// What an experiment file asks for besides the spec itself.
struct ExperimentPlan {
  enum class Mode { Single, Sweep, Stream };
  ExperimentSpec spec;
  Mode mode = Mode::Single;
  std::size_t sweep_step = 0;
  std::vector<std::uint64_t> stream_seeds;
  std::size_t stream_n_min = 10;
  std::size_t stream_batch_every = 1;
};

ExperimentPlan parse_experiment_json(const std::string& text);
ExperimentPlan load_experiment(const std::filesystem::path& path);

void write_results_csv(std::ostream& out, const ExperimentSpec& spec,
                       std::span<const ExperimentResult> rows);
void write_stream_csv(std::ostream& out, const ExperimentSpec& spec,
                      std::span<const StreamPoint> points);

}  // namespace atsteg
