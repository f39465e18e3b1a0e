#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "atsteg/image_io.hpp"

namespace atsteg {

// Only LSB matching is implemented; adaptive schemes would slot in here.
enum class Algorithm { Lsbm };

std::string to_string(Algorithm algo);
Algorithm parse_algorithm(std::string_view name);

/// One splitting function: an embedding algorithm at a fixed bit rate.
/// The key seeds pixel selection and payload; it is not part of the identity
/// of the function (two configs differing only in key split the same way).
class EmbedConfig {
 public:
  /// Throws std::invalid_argument unless 0 < rate <= 1.
  EmbedConfig(Algorithm algorithm, double rate, std::uint64_t key);

  static EmbedConfig lsbm(double rate, std::uint64_t key) {
    return EmbedConfig(Algorithm::Lsbm, rate, key);
  }

  Algorithm algorithm() const noexcept { return algorithm_; }
  double rate() const noexcept { return rate_; }
  std::uint64_t key() const noexcept { return key_; }

  EmbedConfig with_key(std::uint64_t key) const { return EmbedConfig(algorithm_, rate_, key); }
  EmbedConfig with_rate(double rate) const { return EmbedConfig(algorithm_, rate, key_); }

 private:
  Algorithm algorithm_;
  double rate_;
  std::uint64_t key_;
};

// Generation tags: "x" -> "x:g1" -> "x:g2". The tag records how many times
// the splitting function has been applied and keeps A, B and C ids distinct.
int generation_of(std::string_view id);
std::string base_id(std::string_view id);
std::string with_generation(std::string_view id, int generation);

/// Parses a 64-bit key given as decimal or 0x-prefixed hex.
std::uint64_t parse_key(std::string_view text);

/// Short hex digest of a key, safe to print in manifests.
std::string key_fingerprint(std::uint64_t key);

/// Number of pixels carrying payload: ceil(rate * n).
std::size_t payload_pixels(double rate, std::size_t n);

/// LSB matching. ceil(rate * n) pixels are picked by a keyed permutation and a
/// uniform payload bit is drawn for each; on LSB mismatch the pixel moves by
/// +1 or -1 at random (+1 at 0, -1 at 255). The output id advances one
/// generation.
GrayImage lsbm_embed(const GrayImage& img, const EmbedConfig& cfg);

/// Dispatches on cfg.algorithm().
GrayImage embed(const GrayImage& img, const EmbedConfig& cfg);

/// Key used for one image at one generation.
std::uint64_t image_subkey(std::uint64_t master, std::string_view id, int generation);

/// Applies the splitting function to every image, preserving order. Each image
/// gets its own subkey from (master key, id, next generation), so results do
/// not depend on set composition, ordering or thread schedule.
std::vector<GrayImage> apply_splitting(std::span<const GrayImage> images, const EmbedConfig& cfg,
                                       unsigned threads = 1);

/// Fraction of pixel positions that differ.
double change_rate(const GrayImage& a, const GrayImage& b);

}  // namespace atsteg
