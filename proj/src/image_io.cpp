#include "atsteg/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <unordered_set>

#include "atsteg/random.hpp"

namespace atsteg {

namespace fs = std::filesystem;

GrayImage make_image(std::size_t width, std::size_t height, std::vector<std::uint8_t> data,
                     std::string id) {
  if (width == 0 || height == 0) throw ImageError("zero-area image");
  if (data.size() != width * height) {
    throw ImageError("pixel buffer size " + std::to_string(data.size()) + " does not match " +
                     std::to_string(width) + "x" + std::to_string(height));
  }
  return GrayImage{width, height, std::move(data), std::move(id)};
}

ClipSize parse_clip(const std::string& text) {
  const auto x = text.find_first_of("xX");
  ClipSize size;
  auto parse = [&](std::string_view part, std::size_t& out) {
    const auto* end = part.data() + part.size();
    auto [ptr, ec] = std::from_chars(part.data(), end, out);
    return ec == std::errc{} && ptr == end && out > 0;
  };
  if (x == std::string::npos || !parse(std::string_view(text).substr(0, x), size.width) ||
      !parse(std::string_view(text).substr(x + 1), size.height)) {
    throw std::invalid_argument("clip size must look like WxH, got '" + text + "'");
  }
  return size;
}

namespace {

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageError("unreadable file: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (bytes.empty()) throw ImageError("unreadable file: " + path.string() + " is empty");
  return bytes;
}

// Header tokens of a netpbm file, skipping whitespace and '#' comments.
class PnmHeader {
 public:
  explicit PnmHeader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::size_t next_number(const std::string& what) {
    skip_space();
    std::size_t value = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_++] - '0');
      if (++digits > 9) throw ImageError("PGM " + what + " out of range");
    }
    if (digits == 0) throw ImageError("malformed PGM header: missing " + what);
    return value;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw ImageError("malformed PGM header");
    }
    return pos_ + 1;
  }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 2;
};

GrayImage decode_pgm(const std::vector<std::uint8_t>& bytes, std::string id) {
  PnmHeader header(bytes);
  const auto width = header.next_number("width");
  const auto height = header.next_number("height");
  const auto maxval = header.next_number("maxval");
  if (maxval != 255) {
    throw ImageError("unsupported PGM maxval " + std::to_string(maxval) + " (only 255)");
  }
  if (width == 0 || height == 0) throw ImageError("zero-area image");
  const auto offset = header.raster_offset();
  const auto count = width * height;
  if (bytes.size() - offset < count) throw ImageError("truncated PGM raster");
  std::vector<std::uint8_t> data(bytes.begin() + static_cast<std::ptrdiff_t>(offset),
                                 bytes.begin() + static_cast<std::ptrdiff_t>(offset + count));
  return make_image(width, height, std::move(data), std::move(id));
}

std::uint8_t luma(unsigned r, unsigned g, unsigned b) {
  // round(0.299R + 0.587G + 0.114B) in exact integer arithmetic
  return static_cast<std::uint8_t>((299 * r + 587 * g + 114 * b + 500) / 1000);
}

GrayImage decode_png(const std::vector<std::uint8_t>& bytes, std::string id) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw ImageError(std::string("unreadable PNG: ") + image.message);
  }
  struct Guard {
    png_image* img;
    ~Guard() { png_image_free(img); }
  } guard{&image};

  if (image.format & PNG_FORMAT_FLAG_LINEAR) {
    throw ImageError("unsupported PNG bit depth (only 8-bit)");
  }
  if (image.width == 0 || image.height == 0) throw ImageError("zero-area image");

  const bool color = image.format & PNG_FORMAT_FLAG_COLOR;
  const bool alpha = image.format & PNG_FORMAT_FLAG_ALPHA;
  // Alpha is read and then dropped rather than composited.
  image.format = color ? (alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB)
                       : (alpha ? PNG_FORMAT_GA : PNG_FORMAT_GRAY);
  const std::size_t channels = PNG_IMAGE_PIXEL_CHANNELS(image.format);
  std::vector<std::uint8_t> raw(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, raw.data(), 0, nullptr)) {
    throw ImageError(std::string("unreadable PNG: ") + image.message);
  }

  const std::size_t count = std::size_t{image.width} * image.height;
  std::vector<std::uint8_t> gray(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto* px = &raw[i * channels];
    gray[i] = color ? luma(px[0], px[1], px[2]) : px[0];
  }
  return make_image(image.width, image.height, std::move(gray), std::move(id));
}

bool has_png_signature(const std::vector<std::uint8_t>& bytes) {
  static constexpr std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  return bytes.size() >= 8 && std::equal(std::begin(sig), std::end(sig), bytes.begin());
}

}  // namespace

GrayImage load_image(const fs::path& path) {
  const auto bytes = read_bytes(path);
  auto id = path.stem().string();
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') {
    return decode_pgm(bytes, std::move(id));
  }
  if (has_png_signature(bytes)) return decode_png(bytes, std::move(id));
  throw ImageError("unsupported format: " + path.string() + " (expected P5 PGM or PNG)");
}

void save_pgm(const GrayImage& img, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageError("cannot write " + path.string());
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data.data()),
            static_cast<std::streamsize>(img.data.size()));
  if (!out) throw ImageError("write failed: " + path.string());
}

GrayImage clip_center(const GrayImage& img, std::size_t w, std::size_t h) {
  if (w == 0 || h == 0) throw ImageError("zero-area clip");
  if (w > img.width || h > img.height) {
    throw ImageError("clip " + std::to_string(w) + "x" + std::to_string(h) + " exceeds image " +
                     img.id + " (" + std::to_string(img.width) + "x" +
                     std::to_string(img.height) + ")");
  }
  const std::size_t x0 = (img.width - w) / 2;
  const std::size_t y0 = (img.height - h) / 2;
  std::vector<std::uint8_t> data;
  data.reserve(w * h);
  for (std::size_t y = 0; y < h; ++y) {
    const auto* row = &img.data[(y0 + y) * img.width + x0];
    data.insert(data.end(), row, row + w);
  }
  return GrayImage{w, h, std::move(data), img.id};
}

GrayImage synth_cover(std::uint64_t seed, std::size_t width, std::size_t height,
                      double smoothness, std::string id) {
  if (width == 0 || height == 0) throw ImageError("zero-area image");
  if (!(smoothness >= 0.0)) throw std::invalid_argument("smoothness must be >= 0");
  const auto radius = static_cast<std::size_t>(std::ceil(smoothness));

  constexpr int kNoiseBits = 24;
  Engine eng(derive_seed(seed, 0x5e7c0fe5ULL));
  std::vector<std::uint64_t> noise(width * height);
  for (auto& v : noise) v = eng() >> (64 - kNoiseBits);

  // Separable toroidal box sums with running windows. enter[i] / leave[i] are
  // the wrapped indices entering and leaving the window after position i.
  auto window_steps = [radius](std::size_t n) {
    std::vector<std::size_t> enter(n), leave(n);
    for (std::size_t i = 0; i < n; ++i) {
      enter[i] = (i + radius + 1) % n;
      leave[i] = (i + n - radius % n) % n;
    }
    return std::pair{enter, leave};
  };
  const auto [x_enter, x_leave] = window_steps(width);
  const auto [y_enter, y_leave] = window_steps(height);
  const auto r = static_cast<long>(radius);

  std::vector<std::uint64_t> rows(width * height);
  for (std::size_t y = 0; y < height; ++y) {
    const auto* in = &noise[y * width];
    auto* out = &rows[y * width];
    std::uint64_t acc = 0;
    for (long k = -r; k <= r; ++k) {
      acc += in[static_cast<std::size_t>(((k % static_cast<long>(width)) + static_cast<long>(width)) %
                                         static_cast<long>(width))];
    }
    for (std::size_t x = 0; x < width; ++x) {
      out[x] = acc;
      acc += in[x_enter[x]];
      acc -= in[x_leave[x]];
    }
  }
  const std::uint64_t window = (2 * radius + 1) * (2 * radius + 1);
  std::vector<std::uint64_t> acc(width, 0);
  for (long k = -r; k <= r; ++k) {
    const auto y = static_cast<std::size_t>(((k % static_cast<long>(height)) + static_cast<long>(height)) %
                                            static_cast<long>(height));
    for (std::size_t x = 0; x < width; ++x) acc[x] += rows[y * width + x];
  }
  std::vector<std::uint8_t> data(width * height);
  for (std::size_t y = 0; y < height; ++y) {
    const auto* enter = &rows[y_enter[y] * width];
    const auto* leave = &rows[y_leave[y] * width];
    for (std::size_t x = 0; x < width; ++x) {
      // floor(256 * mean) with mean in [0, 1): every level equally likely at radius 0
      const std::uint64_t level = (acc[x] << 8) / (window << kNoiseBits);
      data[y * width + x] = static_cast<std::uint8_t>(std::min<std::uint64_t>(level, 255));
      acc[x] += enter[x];
      acc[x] -= leave[x];
    }
  }
  if (id.empty()) id = "synth_" + std::to_string(seed);
  return GrayImage{width, height, std::move(data), std::move(id)};
}

std::vector<GrayImage> load_directory(const fs::path& dir, std::optional<ClipSize> clip) {
  if (!fs::is_directory(dir)) throw ImageError("not a directory: " + dir.string());
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext == ".pgm" || ext == ".png") paths.push_back(entry.path());
  }
  std::sort(paths.begin(), paths.end());
  std::vector<GrayImage> images;
  images.reserve(paths.size());
  for (const auto& p : paths) {
    auto img = load_image(p);
    if (clip) img = clip_center(img, clip->width, clip->height);
    images.push_back(std::move(img));
  }
  require_unique_ids(images);
  return images;
}

void require_unique_ids(std::span<const GrayImage> images) {
  std::unordered_set<std::string_view> seen;
  for (const auto& img : images) {
    if (!seen.insert(img.id).second) throw ImageError("duplicate image id: " + img.id);
  }
}

}  // namespace atsteg
