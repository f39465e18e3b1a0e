#pragma once

#include <unistd.h>

#include <filesystem>
#include <string>
#include <vector>

#include "atsteg/image_io.hpp"
#include "atsteg/random.hpp"

namespace testing {

// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("atsteg_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::vector<atsteg::GrayImage> synth_set(std::size_t n, std::size_t size,
                                                std::uint64_t seed, double smin = 4.0,
                                                double smax = 8.0) {
  std::vector<atsteg::GrayImage> out;
  atsteg::Engine eng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = smin + (smax - smin) * atsteg::uniform01(eng);
    out.push_back(atsteg::synth_cover(atsteg::derive_seed(seed, i), size, size, s,
                                      "img" + std::to_string(i)));
  }
  return out;
}

}  // namespace testing
