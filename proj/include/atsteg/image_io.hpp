#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace atsteg {

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 8-bit grayscale raster, row-major.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> data;
  std::string id;

  std::size_t size() const noexcept { return data.size(); }
  std::uint8_t at(std::size_t x, std::size_t y) const { return data[y * width + x]; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

/// Builds an image and checks that the buffer matches the dimensions.
GrayImage make_image(std::size_t width, std::size_t height, std::vector<std::uint8_t> data,
                     std::string id);

struct ClipSize {
  std::size_t width = 0;
  std::size_t height = 0;
};

/// Parses "WxH" (e.g. "512x512").
ClipSize parse_clip(const std::string& text);

/// Reads a binary PGM (P5, maxval 255) or an 8-bit gray/RGB PNG.
/// Color input is collapsed with integer luma round(0.299R + 0.587G + 0.114B).
/// The image id is the file stem.
GrayImage load_image(const std::filesystem::path& path);

void save_pgm(const GrayImage& img, const std::filesystem::path& path);

/// Centered w x h window; offsets are floor((W - w) / 2) and floor((H - h) / 2).
GrayImage clip_center(const GrayImage& img, std::size_t w, std::size_t h);

/// Deterministic synthetic cover: uniform noise averaged over a toroidal box
/// of radius ceil(smoothness), mapped to [0, 255]. Larger smoothness gives
/// flatter images with smaller neighbour differences.
GrayImage synth_cover(std::uint64_t seed, std::size_t width, std::size_t height,
                      double smoothness, std::string id = {});

/// Loads every .pgm/.png in a directory, sorted by file name, optionally clipped.
std::vector<GrayImage> load_directory(const std::filesystem::path& dir,
                                      std::optional<ClipSize> clip = std::nullopt);

/// Throws if two images share an id.
void require_unique_ids(std::span<const GrayImage> images);

}  // namespace atsteg
