#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "atsteg/stego.hpp"
#include "support.hpp"

using namespace atsteg;

namespace {

GrayImage constant(std::size_t w, std::size_t h, std::uint8_t v, std::string id = "k") {
  return make_image(w, h, std::vector<std::uint8_t>(w * h, v), std::move(id));
}

// P(pixel differs from the original) after two independent LSBM passes at
// rate r: p = r/2 per pass; a pixel re-selected after a change stays changed
// with probability 3/4.
double double_change_oracle(double r) {
  const double p = r / 2.0;
  return (1.0 - r) * p + r * ((1.0 - p) * 0.5 + p * 0.75);
}

}  // namespace

TEST_CASE("EmbedConfig bounds") {
  CHECK_THROWS_AS(EmbedConfig::lsbm(0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(EmbedConfig::lsbm(-0.1, 1), std::invalid_argument);
  CHECK_THROWS_AS(EmbedConfig::lsbm(1.0001, 1), std::invalid_argument);
  CHECK_THROWS_AS(EmbedConfig::lsbm(std::numeric_limits<double>::quiet_NaN(), 1),
                  std::invalid_argument);
  CHECK_NOTHROW(EmbedConfig::lsbm(1.0, 1));
  const auto c = EmbedConfig::lsbm(0.25, 7).with_key(9).with_rate(0.5);
  CHECK(c.key() == 9);
  CHECK(c.rate() == 0.5);
}

TEST_CASE("algorithm names and keys") {
  CHECK(parse_algorithm("lsbm") == Algorithm::Lsbm);
  CHECK(parse_algorithm("LSBM") == Algorithm::Lsbm);
  CHECK(to_string(Algorithm::Lsbm) == "lsbm");
  CHECK_THROWS(parse_algorithm("hugo"));
  CHECK(parse_key("0x10") == 16);
  CHECK(parse_key("10") == 10);
  CHECK(parse_key("0xFFFFFFFFFFFFFFFF") == ~0ull);
  CHECK_THROWS(parse_key("zz"));
  CHECK_THROWS(parse_key(""));
  CHECK(key_fingerprint(1).size() == 8);
  CHECK(key_fingerprint(1) != key_fingerprint(2));
}

TEST_CASE("generation tags") {
  CHECK(generation_of("x") == 0);
  CHECK(generation_of("x:g1") == 1);
  CHECK(generation_of("x:g12") == 12);
  CHECK(base_id("x:g2") == "x");
  CHECK(base_id("a:b") == "a:b");
  CHECK(with_generation("x", 2) == "x:g2");
  CHECK(with_generation("x:g1", 0) == "x");
}

TEST_CASE("payload_pixels is ceil") {
  CHECK(payload_pixels(0.25, 100) == 25);
  CHECK(payload_pixels(0.1, 10) == 1);
  CHECK(payload_pixels(0.3, 10) == 3);  // 0.3 * 10 is 3.0000000000000004 in doubles
  CHECK(payload_pixels(0.01, 150) == 2);
  CHECK(payload_pixels(1.0, 7) == 7);
}

TEST_CASE("rate 1 on a constant image changes half the pixels by one") {
  const auto img = constant(1000, 1000, 128, "flat");
  const auto out = lsbm_embed(img, EmbedConfig::lsbm(1.0, 42));
  std::size_t up = 0, down = 0;
  for (std::size_t i = 0; i < img.size(); ++i) {
    const int d = int(out.data[i]) - int(img.data[i]);
    REQUIRE(std::abs(d) <= 1);
    up += d == 1;
    down += d == -1;
  }
  const double frac = double(up + down) / double(img.size());
  CHECK(std::abs(frac - 0.5) < 0.01);
  CHECK(std::abs(double(up) / double(up + down) - 0.5) < 0.01);
  CHECK(out.id == "flat:g1");
}

TEST_CASE("saturation") {
  const auto white = lsbm_embed(constant(100, 100, 255), EmbedConfig::lsbm(1.0, 3));
  CHECK(std::all_of(white.data.begin(), white.data.end(), [](auto v) { return v >= 254; }));
  CHECK(std::count(white.data.begin(), white.data.end(), 254) > 0);
  const auto black = lsbm_embed(constant(100, 100, 0), EmbedConfig::lsbm(1.0, 3));
  CHECK(std::all_of(black.data.begin(), black.data.end(), [](auto v) { return v <= 1; }));
  CHECK(std::count(black.data.begin(), black.data.end(), 1) > 0);
}

TEST_CASE("embedding changes at most ceil(rate n) pixels, each by at most 1") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Engine eng(seed);
    const double rate = 0.01 + 0.99 * uniform01(eng);
    const auto img = synth_cover(seed, 40 + seed, 30, double(seed % 4));
    const auto out = lsbm_embed(img, EmbedConfig::lsbm(rate, seed * 31));
    std::size_t changed = 0;
    for (std::size_t i = 0; i < img.size(); ++i) {
      const int d = int(out.data[i]) - int(img.data[i]);
      REQUIRE(std::abs(d) <= 1);
      changed += d != 0;
    }
    CHECK(changed <= payload_pixels(rate, img.size()));
    CHECK(change_rate(img, out) <= rate);
  }
}

TEST_CASE("determinism and key sensitivity") {
  const auto img = synth_cover(8, 128, 128, 3.0, "d");
  const auto cfg = EmbedConfig::lsbm(0.2, 0xabc);
  CHECK(lsbm_embed(img, cfg) == lsbm_embed(img, cfg));
  CHECK(embed(img, cfg) == lsbm_embed(img, cfg));
  CHECK(lsbm_embed(img, cfg).data != lsbm_embed(img, cfg.with_key(0xabd)).data);
  auto renamed = img;
  renamed.id = "e";
  CHECK(lsbm_embed(img, cfg).data != lsbm_embed(renamed, cfg).data);
}

TEST_CASE("single embedding change rate is rate/2") {
  const auto img = synth_cover(77, 512, 512, 5.0);
  for (double r : {0.10, 0.25, 0.40}) {
    const auto out = lsbm_embed(img, EmbedConfig::lsbm(r, 5));
    CHECK(std::abs(change_rate(img, out) - r / 2) < 0.005);
  }
}

TEST_CASE("double embedding change rate") {
  CHECK(double_change_oracle(0.10) == doctest::Approx(0.09625));
  CHECK(double_change_oracle(0.40) == doctest::Approx(0.34));
  const auto covers = testing::synth_set(4, 512, 99);
  for (double r : {0.10, 0.40}) {
    const auto cfg = EmbedConfig::lsbm(r, 0x77);
    const auto B = apply_splitting(covers, cfg);
    const auto C = apply_splitting(B, cfg);
    double mean = 0.0;
    for (std::size_t i = 0; i < covers.size(); ++i) mean += change_rate(covers[i], C[i]);
    mean /= double(covers.size());
    CHECK(std::abs(mean - double_change_oracle(r)) < 0.003);
    if (r == 0.10) CHECK(std::abs(mean - 0.0975) < 0.005);
  }
}

TEST_CASE("apply_splitting keeps the bijection") {
  CHECK(apply_splitting({}, EmbedConfig::lsbm(0.5, 1)).empty());
  auto imgs = testing::synth_set(3, 32, 5);
  const auto cfg = EmbedConfig::lsbm(0.5, 1);
  const auto out = apply_splitting(imgs, cfg);
  REQUIRE(out.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(out[i].id == imgs[i].id + ":g1");
    CHECK(change_rate(imgs[i], out[i]) <= 0.5);
  }
  const auto twice = apply_splitting(out, cfg);
  CHECK(twice[2].id == imgs[2].id + ":g2");

  // Order and thread count do not matter.
  std::vector<GrayImage> reversed(imgs.rbegin(), imgs.rend());
  const auto out_rev = apply_splitting(reversed, cfg, 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(out_rev[2 - i] == out[i]);

  imgs[1].id = imgs[0].id;
  CHECK_THROWS(apply_splitting(imgs, cfg));
}

TEST_CASE("successive generations use different subkeys") {
  CHECK(image_subkey(1, "x", 1) != image_subkey(1, "x", 2));
  CHECK(image_subkey(1, "x", 1) != image_subkey(1, "y", 1));
  CHECK(image_subkey(1, "x", 1) != image_subkey(2, "x", 1));
}

TEST_CASE("change_rate") {
  const auto a = constant(3, 3, 10);
  CHECK(change_rate(a, a) == 0.0);
  CHECK(change_rate(constant(1, 1, 0), constant(1, 1, 255)) == 1.0);
  CHECK_THROWS(change_rate(a, constant(3, 2, 10)));
}
