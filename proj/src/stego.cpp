#include "atsteg/stego.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "atsteg/parallel.hpp"
#include "atsteg/random.hpp"

namespace atsteg {

std::string to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::Lsbm:
      return "lsbm";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "lsbm" || name == "LSBM") return Algorithm::Lsbm;
  throw std::invalid_argument("unknown embedding algorithm '" + std::string(name) +
                              "' (supported: lsbm)");
}

EmbedConfig::EmbedConfig(Algorithm algorithm, double rate, std::uint64_t key)
    : algorithm_(algorithm), rate_(rate), key_(key) {
  if (!(rate > 0.0 && rate <= 1.0)) {
    throw std::invalid_argument("embedding rate must be in (0, 1], got " + std::to_string(rate));
  }
}

namespace {
constexpr std::string_view kGenTag = ":g";

// Position of a trailing ":g<digits>" tag, or npos.
std::size_t tag_position(std::string_view id) {
  const auto pos = id.rfind(kGenTag);
  if (pos == std::string_view::npos || pos + kGenTag.size() == id.size()) {
    return std::string_view::npos;
  }
  for (auto i = pos + kGenTag.size(); i < id.size(); ++i) {
    if (id[i] < '0' || id[i] > '9') return std::string_view::npos;
  }
  return pos;
}
}  // namespace

int generation_of(std::string_view id) {
  const auto pos = tag_position(id);
  if (pos == std::string_view::npos) return 0;
  int gen = 0;
  const auto digits = id.substr(pos + kGenTag.size());
  std::from_chars(digits.data(), digits.data() + digits.size(), gen);
  return gen;
}

std::string base_id(std::string_view id) {
  const auto pos = tag_position(id);
  return std::string(pos == std::string_view::npos ? id : id.substr(0, pos));
}

std::string with_generation(std::string_view id, int generation) {
  auto base = base_id(id);
  if (generation == 0) return base;
  return base + std::string(kGenTag) + std::to_string(generation);
}

std::uint64_t parse_key(std::string_view text) {
  std::uint64_t key = 0;
  int base = 10;
  if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
    text.remove_prefix(2);
    base = 16;
  }
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, key, base);
  if (text.empty() || ec != std::errc{} || ptr != end) {
    throw std::invalid_argument("invalid key '" + std::string(text) + "'");
  }
  return key;
}

std::string key_fingerprint(std::uint64_t key) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%08llx",
                static_cast<unsigned long long>(mix64(key ^ 0x6b657966ULL) >> 32));
  return buf;
}

std::size_t payload_pixels(double rate, std::size_t n) {
  // The small slack keeps e.g. 0.1 * 1000 from rounding up to 101.
  const double exact = rate * static_cast<double>(n);
  const auto m = static_cast<std::size_t>(std::ceil(exact - 1e-9 * exact));
  return std::min(m, n);
}

GrayImage lsbm_embed(const GrayImage& img, const EmbedConfig& cfg) {
  const std::size_t n = img.data.size();
  const std::size_t m = payload_pixels(cfg.rate(), n);
  Engine eng(derive_seed(cfg.key(), img.id, 0x15b3));

  GrayImage out{img.width, img.height, img.data,
                with_generation(img.id, generation_of(img.id) + 1)};

  // Partial Fisher-Yates: the first m slots become a uniform random subset.
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::uint64_t bits = 0;
  int bits_left = 0;
  auto next_bit = [&] {
    if (bits_left == 0) {
      bits = eng();
      bits_left = 64;
    }
    const auto b = static_cast<unsigned>(bits & 1u);
    bits >>= 1;
    --bits_left;
    return b;
  };
  for (std::size_t i = 0; i < m; ++i) {
    const auto j = i + uniform_below(eng, n - i);
    std::swap(order[i], order[j]);
    auto& px = out.data[order[i]];
    const unsigned message_bit = next_bit();
    if ((px & 1u) == message_bit) continue;
    if (px == 0) {
      px = 1;
    } else if (px == 255) {
      px = 254;
    } else {
      px = static_cast<std::uint8_t>(next_bit() ? px + 1 : px - 1);
    }
  }
  return out;
}

GrayImage embed(const GrayImage& img, const EmbedConfig& cfg) {
  switch (cfg.algorithm()) {
    case Algorithm::Lsbm:
      return lsbm_embed(img, cfg);
  }
  throw std::logic_error("unhandled algorithm");
}

std::uint64_t image_subkey(std::uint64_t master, std::string_view id, int generation) {
  return derive_seed(master, id, static_cast<std::uint64_t>(generation));
}

std::vector<GrayImage> apply_splitting(std::span<const GrayImage> images, const EmbedConfig& cfg,
                                       unsigned threads) {
  require_unique_ids(images);
  std::vector<GrayImage> out(images.size());
  parallel_for(images.size(), threads, [&](std::size_t i) {
    const auto& img = images[i];
    const int next_gen = generation_of(img.id) + 1;
    out[i] = embed(img, cfg.with_key(image_subkey(cfg.key(), img.id, next_gen)));
  });
  return out;
}

double change_rate(const GrayImage& a, const GrayImage& b) {
  if (a.width != b.width || a.height != b.height) {
    throw ImageError("change_rate: dimension mismatch between " + a.id + " and " + b.id);
  }
  if (a.data.empty()) return 0.0;
  std::size_t diff = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) diff += a.data[i] != b.data[i];
  return static_cast<double>(diff) / static_cast<double>(a.data.size());
}

}  // namespace atsteg
