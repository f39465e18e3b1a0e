#include "atsteg/features.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "atsteg/parallel.hpp"

namespace atsteg {

std::size_t spam_dimension(const SpamParams& params) {
  std::size_t per_block = 1;
  const auto levels = static_cast<std::size_t>(2 * params.truncation + 1);
  for (int i = 0; i <= params.order; ++i) per_block *= levels;
  return 2 * per_block;
}

void FeatureMatrix::set_labels(std::vector<int> labels) {
  if (!labels.empty() && labels.size() != rows()) {
    throw FeatureError("label count " + std::to_string(labels.size()) + " != row count " +
                       std::to_string(rows()));
  }
  labels_ = std::move(labels);
}

void FeatureMatrix::append(std::span<const double> values, std::string id) {
  if (ids_.empty() && data_.empty() && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_) {
    throw FeatureError("row for " + id + " has dimension " + std::to_string(values.size()) +
                       ", expected " + std::to_string(cols_));
  }
  if (!labels_.empty()) throw FeatureError("cannot append to a labeled matrix");
  data_.insert(data_.end(), values.begin(), values.end());
  ids_.push_back(std::move(id));
}

FeatureVector FeatureMatrix::vector(std::size_t i) const {
  const auto r = row(i);
  return FeatureVector{{r.begin(), r.end()}, ids_[i]};
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> rows) const {
  FeatureMatrix out(cols_);
  out.data_.reserve(rows.size() * cols_);
  for (auto r : rows) out.append(row(r), ids_[r]);
  if (!labels_.empty()) {
    std::vector<int> labels;
    labels.reserve(rows.size());
    for (auto r : rows) labels.push_back(labels_[r]);
    out.labels_ = std::move(labels);
  }
  return out;
}

FeatureMatrix FeatureMatrix::select_columns(std::span<const std::size_t> cols) const {
  FeatureMatrix out(cols.size());
  out.data_.resize(rows() * cols.size());
  for (std::size_t r = 0; r < rows(); ++r) {
    const auto* src = data_.data() + r * cols_;
    auto* dst = out.data_.data() + r * cols.size();
    for (std::size_t c = 0; c < cols.size(); ++c) dst[c] = src[cols[c]];
  }
  out.ids_ = ids_;
  out.labels_ = labels_;
  return out;
}

FeatureMatrix FeatureMatrix::concat(const FeatureMatrix& a, const FeatureMatrix& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  if (a.cols_ != b.cols_) throw FeatureError("concat: column count mismatch");
  if (a.labels_.empty() != b.labels_.empty()) {
    throw FeatureError("concat: only one side is labeled");
  }
  FeatureMatrix out = a;
  out.data_.insert(out.data_.end(), b.data_.begin(), b.data_.end());
  out.ids_.insert(out.ids_.end(), b.ids_.begin(), b.ids_.end());
  out.labels_.insert(out.labels_.end(), b.labels_.begin(), b.labels_.end());
  return out;
}

namespace {

struct Step {
  int dx;
  int dy;
};

void check_params(const SpamParams& params) {
  if (params.truncation < 1) throw FeatureError("truncation T must be >= 1");
  if (params.order != 1 && params.order != 2) throw FeatureError("order must be 1 or 2");
}

// Forward orientation of each direction and whether the direction is its
// reverse. Reversing a chain of differences negates and reverses it, so the
// reverse histogram is a relabelling of the forward one.
struct Orientation {
  Step step;
  bool reversed;
};

constexpr Orientation orientation_of(Direction d) {
  switch (d) {
    case Direction::Right: return {{1, 0}, false};
    case Direction::Left: return {{1, 0}, true};
    case Direction::Down: return {{0, 1}, false};
    case Direction::Up: return {{0, 1}, true};
    case Direction::DownRight: return {{1, 1}, false};
    case Direction::UpLeft: return {{1, 1}, true};
    case Direction::DownLeft: return {{-1, 1}, false};
    case Direction::UpRight: return {{-1, 1}, true};
  }
  return {{0, 0}, false};
}

// Joint histogram of (order+1)-tuples of consecutive truncated differences
// I(p + step) - I(p) along a forward orientation; entries indexed
// base-(2T+1), first difference most significant.
std::vector<std::uint32_t> forward_counts(const GrayImage& img, Step step,
                                          const SpamParams& params) {
  const int T = params.truncation;
  const auto levels = static_cast<std::size_t>(2 * T + 1);
  const int span = params.order + 1;
  std::size_t cells = 1;
  for (int i = 0; i <= params.order; ++i) cells *= levels;
  std::vector<std::uint32_t> counts(cells, 0);

  const auto [dx, dy] = step;
  const auto W = static_cast<long>(img.width);
  const auto H = static_cast<long>(img.height);
  // Start positions p such that p + span * step stays inside the image.
  const long x_lo = dx < 0 ? span : 0;
  const long x_hi = dx > 0 ? W - span : W;
  const long y_hi = dy > 0 ? H - span : H;
  if (x_lo >= x_hi || y_hi <= 0) return counts;

  // Truncated difference codes for every pixel whose neighbour exists.
  const long stride = dy * W + dx;
  const long cx_lo = dx < 0 ? 1 : 0, cx_hi = dx > 0 ? W - 1 : W;
  const long cy_hi = dy > 0 ? H - 1 : H;
  std::vector<std::uint8_t> code(img.data.size(), 0);
  const auto* px = img.data.data();
  for (long y = 0; y < cy_hi; ++y) {
    for (long x = cx_lo; x < cx_hi; ++x) {
      const long p = y * W + x;
      const int d = static_cast<int>(px[p + stride]) - static_cast<int>(px[p]);
      code[static_cast<std::size_t>(p)] = static_cast<std::uint8_t>(std::clamp(d, -T, T) + T);
    }
  }
  const auto* c = code.data();
  for (long y = 0; y < y_hi; ++y) {
    const long row = y * W;
    if (params.order == 2) {
      for (long x = x_lo; x < x_hi; ++x) {
        const long p = row + x;
        ++counts[(c[p] * levels + c[p + stride]) * levels + c[p + 2 * stride]];
      }
    } else {
      for (long x = x_lo; x < x_hi; ++x) {
        const long p = row + x;
        ++counts[c[p] * levels + c[p + stride]];
      }
    }
  }
  return counts;
}

std::vector<std::uint32_t> reverse_counts(const std::vector<std::uint32_t>& fwd, int levels,
                                          int order) {
  const auto L = static_cast<std::size_t>(levels);
  std::vector<std::uint32_t> rev(fwd.size());
  std::vector<std::size_t> digits(static_cast<std::size_t>(order) + 1);
  for (std::size_t cell = 0; cell < fwd.size(); ++cell) {
    std::size_t rest = cell;
    for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
      *it = rest % L;
      rest /= L;
    }
    std::size_t mirrored = 0;
    for (auto it = digits.rbegin(); it != digits.rend(); ++it) mirrored = mirrored * L + (L - 1 - *it);
    rev[mirrored] = fwd[cell];
  }
  return rev;
}

std::vector<std::uint32_t> joint_counts(const GrayImage& img, Direction dir,
                                        const SpamParams& params) {
  const auto o = orientation_of(dir);
  auto fwd = forward_counts(img, o.step, params);
  if (!o.reversed) return fwd;
  return reverse_counts(fwd, 2 * params.truncation + 1, params.order);
}

// Normalizes each context (all but the last difference) to a conditional
// distribution.
std::vector<double> to_transition(const std::vector<std::uint32_t>& counts, int levels) {
  std::vector<double> probs(counts.size(), 0.0);
  const auto L = static_cast<std::size_t>(levels);
  for (std::size_t ctx = 0; ctx < counts.size(); ctx += L) {
    std::uint64_t total = 0;
    for (std::size_t k = 0; k < L; ++k) total += counts[ctx + k];
    if (total == 0) continue;
    for (std::size_t k = 0; k < L; ++k) {
      probs[ctx + k] = static_cast<double>(counts[ctx + k]) / static_cast<double>(total);
    }
  }
  return probs;
}

void require_size(const GrayImage& img, const SpamParams& params) {
  const auto need = static_cast<std::size_t>(params.order + 2);
  if (std::max(img.width, img.height) < need) {
    throw FeatureError("image " + img.id + " too small for order-" +
                       std::to_string(params.order) + " features");
  }
}

}  // namespace

std::vector<double> transition_matrix(const GrayImage& img, Direction dir,
                                      const SpamParams& params) {
  check_params(params);
  require_size(img, params);
  return to_transition(joint_counts(img, dir, params), 2 * params.truncation + 1);
}

FeatureVector extract_spam(const GrayImage& img, const SpamParams& params) {
  check_params(params);
  require_size(img, params);
  const int levels = 2 * params.truncation + 1;
  const std::size_t block = spam_dimension(params) / 2;

  static constexpr std::array<Direction, 4> kAxis = {Direction::Right, Direction::Left,
                                                     Direction::Down, Direction::Up};
  static constexpr std::array<Direction, 4> kDiag = {Direction::DownRight, Direction::UpLeft,
                                                     Direction::DownLeft, Direction::UpRight};
  FeatureVector out;
  out.image_id = img.id;
  out.values.assign(2 * block, 0.0);
  // Forward and reverse directions share one histogram pass.
  auto accumulate = [&](const std::array<Direction, 4>& dirs, std::size_t offset) {
    for (std::size_t k = 0; k < dirs.size(); k += 2) {
      const auto fwd = forward_counts(img, orientation_of(dirs[k]).step, params);
      const auto rev = reverse_counts(fwd, levels, params.order);
      for (const auto* counts : {&fwd, &rev}) {
        const auto probs = to_transition(*counts, levels);
        for (std::size_t i = 0; i < block; ++i) out.values[offset + i] += probs[i];
      }
    }
    for (std::size_t i = 0; i < block; ++i) out.values[offset + i] /= 4.0;
  };
  accumulate(kAxis, 0);
  accumulate(kDiag, block);
  return out;
}

FeatureMatrix extract_corpus(std::span<const GrayImage> images, const SpamParams& params,
                             unsigned threads) {
  check_params(params);
  std::vector<FeatureVector> rows(images.size());
  parallel_for(images.size(), threads, [&](std::size_t i) {
    try {
      rows[i] = extract_spam(images[i], params);
    } catch (const std::exception& e) {
      throw FeatureError("feature extraction failed for " + images[i].id + ": " + e.what());
    }
  });
  FeatureMatrix m(spam_dimension(params));
  for (const auto& r : rows) m.append(r);
  return m;
}

void write_feature_csv(std::ostream& out, const FeatureMatrix& m) {
  out << "image_id";
  for (std::size_t c = 0; c < m.cols(); ++c) out << ",f" << c;
  out << '\n';
  char buf[32];
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out << m.id(r);
    for (double v : m.row(r)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
}

void write_feature_csv(const std::filesystem::path& path, const FeatureMatrix& m) {
  std::ofstream out(path);
  if (!out) throw FeatureError("cannot write " + path.string());
  write_feature_csv(out, m);
}

FeatureMatrix read_feature_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FeatureError("feature CSV is empty");
  const auto cols = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
  if (line.rfind("image_id", 0) != 0) throw FeatureError("feature CSV header must start with image_id");
  FeatureMatrix m(cols);
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string id, cell;
    std::getline(row, id, ',');
    values.clear();
    while (std::getline(row, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw FeatureError("bad value '" + cell + "' for " + id);
      }
    }
    m.append(values, id);
  }
  return m;
}

}  // namespace atsteg
