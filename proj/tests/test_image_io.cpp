#include <doctest.h>
#include <png.h>

#include <fstream>

#include "atsteg/image_io.hpp"
#include "support.hpp"

using namespace atsteg;

namespace {

void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

void write_png(const std::filesystem::path& p, std::uint32_t w, std::uint32_t h,
               std::uint32_t format, const std::vector<std::uint8_t>& pixels) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = w;
  img.height = h;
  img.format = format;
  REQUIRE(png_image_write_to_file(&img, p.c_str(), 0, pixels.data(), 0, nullptr));
}

GrayImage ramp(std::size_t w, std::size_t h) {
  std::vector<std::uint8_t> d(w * h);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<std::uint8_t>(i * 7 + 3);
  return make_image(w, h, std::move(d), "ramp");
}

}  // namespace

TEST_CASE("pgm bytes pass through") {
  testing::TempDir dir("pgm");
  write_bytes(dir / "tiny.pgm", std::string("P5\n2 2\n255\n") + std::string("\x00\xff\x80\x07", 4));
  const auto img = load_image(dir / "tiny.pgm");
  CHECK(img.width == 2);
  CHECK(img.height == 2);
  CHECK(img.data == std::vector<std::uint8_t>{0, 255, 128, 7});
  CHECK(img.id == "tiny");
}

TEST_CASE("pgm header comments are skipped") {
  testing::TempDir dir("pgmc");
  write_bytes(dir / "c.pgm", std::string("P5\n# made by hand\n3 1\n255\n") + "abc");
  const auto img = load_image(dir / "c.pgm");
  CHECK(img.data == std::vector<std::uint8_t>{'a', 'b', 'c'});
}

TEST_CASE("pgm save/load round trip") {
  testing::TempDir dir("rt");
  const auto img = synth_cover(5, 37, 21, 2.0, "round");
  save_pgm(img, dir / "round.pgm");
  CHECK(load_image(dir / "round.pgm") == img);
}

TEST_CASE("load errors") {
  testing::TempDir dir("err");
  write_bytes(dir / "empty.pgm", "");
  CHECK_THROWS_WITH_AS(load_image(dir / "empty.pgm"), doctest::Contains("unreadable file"),
                       ImageError);
  CHECK_THROWS_AS(load_image(dir / "missing.pgm"), ImageError);
  write_bytes(dir / "deep.pgm", std::string("P5\n1 1\n65535\n") + std::string(2, '\0'));
  CHECK_THROWS_AS(load_image(dir / "deep.pgm"), ImageError);
  write_bytes(dir / "ascii.pgm", "P2\n1 1\n255\n7\n");
  CHECK_THROWS_AS(load_image(dir / "ascii.pgm"), ImageError);
  write_bytes(dir / "short.pgm", std::string("P5\n4 4\n255\n") + "abc");
  CHECK_THROWS_AS(load_image(dir / "short.pgm"), ImageError);
  write_bytes(dir / "zero.pgm", "P5\n0 3\n255\n");
  CHECK_THROWS_AS(load_image(dir / "zero.pgm"), ImageError);
  write_bytes(dir / "junk.txt", "hello");
  CHECK_THROWS_AS(load_image(dir / "junk.txt"), ImageError);
}

TEST_CASE("png gray and rgb") {
  testing::TempDir dir("png");
  write_png(dir / "red.png", 1, 1, PNG_FORMAT_RGB, {255, 0, 0});
  CHECK(load_image(dir / "red.png").data == std::vector<std::uint8_t>{76});

  // Luma oracle: round(0.299 R + 0.587 G + 0.114 B) computed in doubles.
  std::vector<std::uint8_t> rgb;
  std::vector<std::uint8_t> expect;
  atsteg::Engine eng(9);
  for (int i = 0; i < 64; ++i) {
    const int r = static_cast<int>(uniform_below(eng, 256));
    const int g = static_cast<int>(uniform_below(eng, 256));
    const int b = static_cast<int>(uniform_below(eng, 256));
    rgb.insert(rgb.end(), {std::uint8_t(r), std::uint8_t(g), std::uint8_t(b)});
    expect.push_back(static_cast<std::uint8_t>(std::lround(0.299 * r + 0.587 * g + 0.114 * b)));
  }
  write_png(dir / "rgb.png", 8, 8, PNG_FORMAT_RGB, rgb);
  const auto img = load_image(dir / "rgb.png");
  CHECK(img.width == 8);
  CHECK(img.data == expect);

  write_png(dir / "gray.png", 2, 1, PNG_FORMAT_GRAY, {9, 200});
  CHECK(load_image(dir / "gray.png").data == std::vector<std::uint8_t>{9, 200});
}

TEST_CASE("clip_center") {
  const auto img = ramp(4, 4);
  CHECK(clip_center(img, 4, 4) == img);
  const auto c = clip_center(img, 2, 2);
  CHECK(c.width == 2);
  CHECK(c.id == img.id);
  CHECK(c.data == std::vector<std::uint8_t>{img.at(1, 1), img.at(2, 1), img.at(1, 2), img.at(2, 2)});
  CHECK_THROWS_AS(clip_center(ramp(3, 3), 4, 4), ImageError);

  const auto odd = ramp(7, 5);
  const auto c2 = clip_center(odd, 4, 2);
  CHECK(c2.at(0, 0) == odd.at(1, 1));
  CHECK(clip_center(c2, 4, 2) == c2);
}

TEST_CASE("parse_clip") {
  const auto c = parse_clip("512x384");
  CHECK(c.width == 512);
  CHECK(c.height == 384);
  CHECK_THROWS(parse_clip("512"));
  CHECK_THROWS(parse_clip("0x4"));
  CHECK_THROWS(parse_clip("ax4"));
}

TEST_CASE("synth_cover determinism") {
  const auto a = synth_cover(11, 64, 48, 3.5);
  CHECK(a == synth_cover(11, 64, 48, 3.5));
  CHECK(a.width == 64);
  CHECK(a.height == 48);
  CHECK(a.id == "synth_11");
  CHECK(a.data != synth_cover(12, 64, 48, 3.5).data);
  CHECK_THROWS(synth_cover(1, 0, 4, 1.0));
  CHECK_THROWS(synth_cover(1, 4, 4, -1.0));
}

TEST_CASE("synth_cover smoothness 0 is uniform") {
  const auto img = synth_cover(2024, 512, 512, 0.0);
  std::vector<double> hist(256, 0.0);
  for (auto v : img.data) hist[v] += 1.0;
  const double expected = img.size() / 256.0;
  double chi2 = 0.0;
  for (double h : hist) chi2 += (h - expected) * (h - expected) / expected;
  // chi-square 0.99 quantile with 255 degrees of freedom
  CHECK(chi2 < 310.457);
}

TEST_CASE("synth_cover smoother images have smaller differences") {
  auto mean_abs_diff = [](const GrayImage& img) {
    double s = 0.0;
    for (std::size_t y = 0; y < img.height; ++y) {
      for (std::size_t x = 0; x + 1 < img.width; ++x) s += std::abs(img.at(x + 1, y) - img.at(x, y));
    }
    return s / double(img.height * (img.width - 1));
  };
  CHECK(mean_abs_diff(synth_cover(3, 128, 128, 1.0)) > mean_abs_diff(synth_cover(3, 128, 128, 6.0)));
}

TEST_CASE("load_directory sorts and clips") {
  testing::TempDir dir("dir");
  save_pgm(synth_cover(1, 10, 10, 1.0, "b"), dir / "b.pgm");
  save_pgm(synth_cover(2, 12, 12, 1.0, "a"), dir / "a.pgm");
  write_bytes(dir / "notes.txt", "ignored");
  const auto all = load_directory(dir.path());
  REQUIRE(all.size() == 2);
  CHECK(all[0].id == "a");
  CHECK(all[1].id == "b");
  const auto clipped = load_directory(dir.path(), ClipSize{8, 8});
  CHECK(clipped[0].width == 8);
  CHECK(clipped[1].height == 8);
  CHECK_THROWS(load_directory(dir / "nope"));
}

TEST_CASE("duplicate ids are rejected") {
  std::vector<GrayImage> v{synth_cover(1, 4, 4, 0, "x"), synth_cover(2, 4, 4, 0, "x")};
  CHECK_THROWS_AS(require_unique_ids(v), ImageError);
  v[1].id = "y";
  CHECK_NOTHROW(require_unique_ids(v));
}

TEST_CASE("make_image checks the buffer") {
  CHECK_THROWS(make_image(2, 2, {1, 2, 3}, "bad"));
  CHECK_THROWS(make_image(0, 0, {}, "empty"));
}
