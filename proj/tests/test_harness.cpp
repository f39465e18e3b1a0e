#include <doctest.h>

#include <cmath>
#include <sstream>

#include "atsteg/harness.hpp"
#include "support.hpp"

using namespace atsteg;

namespace {

ExperimentSpec small_spec(std::size_t pool, std::size_t n_cover, std::size_t n_stego,
                          std::size_t size = 64) {
  ExperimentSpec spec;
  SyntheticComponent comp;
  comp.count = pool;
  comp.width = comp.height = size;
  spec.corpus.synthetic.push_back(comp);
  spec.n_cover = n_cover;
  spec.n_stego = n_stego;
  spec.seed = 42;
  return spec;
}

}  // namespace

TEST_CASE("spec validation") {
  auto spec = small_spec(10, 1, 0);
  CHECK_THROWS_AS(spec.validate(), ExperimentError);
  spec.n_cover = 2;
  CHECK_NOTHROW(spec.validate());
  spec.repeats = 0;
  CHECK_THROWS_AS(spec.validate(), ExperimentError);
  spec.repeats = 1;
  spec.corpus.synthetic.clear();
  CHECK_THROWS_AS(spec.validate(), ExperimentError);
  spec = small_spec(10, 2, 2);
  spec.corpus.synthetic[0].smoothness_min = 5;
  spec.corpus.synthetic[0].smoothness_max = 4;
  CHECK_THROWS_AS(spec.validate(), ExperimentError);
}

TEST_CASE("pool and testing set") {
  const auto spec = small_spec(12, 5, 3);
  const auto pool = build_pool(spec);
  REQUIRE(pool.images.size() == 12);
  CHECK(pool.images[3].id == "c0_3");
  CHECK(build_pool(spec).images[7] == pool.images[7]);

  const auto set = draw_testing_set(spec, pool, 0);
  REQUIRE(set.images.size() == 8);
  std::size_t stego = 0;
  for (const auto& img : set.images) {
    const auto label = set.truth.at(img.id);
    const auto& cover = *std::find_if(pool.images.begin(), pool.images.end(),
                                      [&](const GrayImage& p) { return p.id == img.id; });
    if (label == ImageLabel::Stego) {
      ++stego;
      CHECK(img.data != cover.data);
      CHECK(change_rate(img, cover) <= spec.embed.rate());
    } else {
      CHECK(img == cover);
    }
  }
  CHECK(stego == 3);
  require_unique_ids(set.images);

  const auto other = draw_testing_set(spec, pool, 1);
  std::vector<std::string> ids0, ids1;
  for (const auto& i : set.images) ids0.push_back(i.id);
  for (const auto& i : other.images) ids1.push_back(i.id);
  CHECK(ids0 != ids1);
  CHECK(draw_testing_set(spec, pool, 0).images == set.images);

  CHECK_THROWS_WITH_AS(draw_testing_set(small_spec(5, 4, 2), build_pool(small_spec(5, 4, 2)), 0),
                       doctest::Contains("corpus exhausted"), ExperimentError);
}

TEST_CASE("component shares") {
  auto spec = small_spec(10, 6, 4);
  spec.corpus.synthetic[0].share = 0.7;
  SyntheticComponent second;
  second.count = 10;
  second.width = second.height = 48;
  second.share = 0.3;
  spec.corpus.synthetic.push_back(second);
  const auto pool = build_pool(spec);
  const auto set = draw_testing_set(spec, pool, 0);
  const auto from_second = std::count_if(set.images.begin(), set.images.end(),
                                         [](const GrayImage& g) { return g.id.rfind("c1_", 0) == 0; });
  CHECK(from_second == 3);

  spec.corpus.synthetic[1].count = 2;
  CHECK_THROWS_AS(draw_testing_set(spec, build_pool(spec), 0), ExperimentError);
}

TEST_CASE("run_experiment with two images") {
  const auto r = run_experiment(small_spec(4, 1, 1, 128));
  CHECK(r.reports.size() == 1);
  const auto& c = r.mean_counts;
  CHECK(c.total() == 2.0);
  for (double v : {c.tp, c.tn, c.fp, c.fn}) CHECK(v == std::floor(v));
  CHECK(c.tp + c.fn == 1.0);
  CHECK(c.tn + c.fp == 1.0);
}

TEST_CASE("repeats average and reproduce") {
  auto spec = small_spec(30, 6, 4, 96);
  spec.repeats = 3;
  const auto a = run_experiment(spec);
  CHECK(a.reports.size() == 3);
  CHECK(a.mean_counts.tp + a.mean_counts.fn == doctest::Approx(4.0));
  CHECK(a.mean_counts.tn + a.mean_counts.fp == doctest::Approx(6.0));
  double acc = 0.0;
  for (const auto& rep : a.reports) acc += *rep.accuracy;
  CHECK(a.mean_accuracy == doctest::Approx(acc / 3));

  spec.threads = 3;
  const auto b = run_experiment(spec);
  CHECK(b.mean_accuracy == a.mean_accuracy);
  CHECK(b.mean_counts.tp == a.mean_counts.tp);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t i = 0; i < 10; ++i) {
      CHECK(b.reports[r].per_image[i].decision == a.reports[r].per_image[i].decision);
    }
  }
}

TEST_CASE("all-cover regime is flagged") {
  const auto r = run_experiment(small_spec(12, 10, 0));
  REQUIRE_FALSE(r.warnings.empty());
  CHECK(r.warnings[0].find("all-cover regime") != std::string::npos);
  CHECK(r.mean_counts.tp == 0);
  CHECK(r.mean_counts.fn == 0);
}

TEST_CASE("ratio sweep") {
  const auto rows = ratio_sweep(small_spec(12, 5, 5), 5);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].n_cover == 10);
  CHECK(rows[0].n_stego == 0);
  CHECK(rows[1].n_stego == 5);
  CHECK(rows[2].n_cover == 0);
  CHECK(ratio_sweep(small_spec(12, 4, 4), 2).size() == 5);
  CHECK_THROWS_AS(ratio_sweep(small_spec(12, 5, 5), 3), ExperimentError);
  CHECK_THROWS_AS(ratio_sweep(small_spec(12, 5, 5), 0), ExperimentError);
}

TEST_CASE("stream experiment") {
  const auto spec = small_spec(20, 10, 6);
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  const auto points = stream_experiment(spec, seeds, 10);
  REQUIRE(points.size() == 7);
  CHECK(points.front().n == 10);
  CHECK(points.back().n == 16);
  for (const auto& p : points) {
    CHECK(p.mean_confidence > 0.0);
    CHECK(p.mean_confidence <= 1.0);
    CHECK(p.mean_accuracy >= 0.0);
    CHECK(p.mean_accuracy <= 1.0);
  }
  CHECK(points.front().mean_confidence == 1.0);
  const auto batched = stream_experiment(spec, seeds, 10, 3);
  CHECK(batched.size() == 3);
  CHECK_THROWS(stream_experiment(spec, std::vector<std::uint64_t>{}, 10));
}

TEST_CASE("experiment json") {
  const auto plan = parse_experiment_json(R"({
    "corpus": {"synthetic": [{"count": 40, "width": 256, "height": 128, "smoothness": [2, 5], "share": 0.5},
                             {"count": 20, "smoothness": 3, "share": 0.5}]},
    "n_cover": 10, "n_stego": 6,
    "embed": {"algorithm": "lsbm", "rate": 0.4, "key": "0x99"},
    "repeats": 3, "seed": 7, "clip": "64x64",
    "learner": {"k_features": 100, "folds": 4},
    "mode": "stream", "stream": {"n_min": 5, "orders": 2}
  })");
  const auto& s = plan.spec;
  REQUIRE(s.corpus.synthetic.size() == 2);
  CHECK(s.corpus.synthetic[0].width == 256);
  CHECK(s.corpus.synthetic[0].smoothness_max == 5);
  CHECK(s.corpus.synthetic[1].smoothness_min == 3);
  CHECK(s.corpus.synthetic[1].width == 512);
  CHECK(*s.corpus.synthetic[1].share == 0.5);
  CHECK(s.embed.rate() == 0.4);
  CHECK(s.embed.key() == 0x99);
  CHECK(s.split.rate() == 0.4);
  CHECK(s.split.key() != s.embed.key());
  CHECK(s.repeats == 3);
  CHECK(s.clip->width == 64);
  CHECK(s.learner.k_features == 100);
  CHECK(s.learner.folds == 4);
  CHECK(plan.mode == ExperimentPlan::Mode::Stream);
  CHECK(plan.stream_n_min == 5);
  CHECK(plan.stream_seeds == std::vector<std::uint64_t>{7, 8});

  const auto sweep = parse_experiment_json(
      R"({"corpus": {"directory": "/data"}, "mode": "sweep", "sweep_step": 25,
          "split": {"rate": 0.1}})");
  CHECK(sweep.mode == ExperimentPlan::Mode::Sweep);
  CHECK(sweep.sweep_step == 25);
  CHECK(sweep.spec.corpus.directory->string() == "/data");
  CHECK(sweep.spec.split.rate() == 0.1);

  CHECK_THROWS_AS(parse_experiment_json("{"), ExperimentError);
  CHECK_THROWS_AS(parse_experiment_json(R"({"corpus": {"directory": "x"}, "mode": "fast"})"),
                  ExperimentError);
  CHECK_THROWS_AS(parse_experiment_json(R"({"corpus": {"directory": "x"}, "embed": {"rate": 0}})"),
                  ExperimentError);
  CHECK_THROWS_AS(parse_experiment_json(R"({"n_cover": 3})"), ExperimentError);
}

TEST_CASE("directory corpus") {
  testing::TempDir dir("corpus");
  for (const auto& img : testing::synth_set(6, 80, 3)) save_pgm(img, dir / (img.id + ".pgm"));
  ExperimentSpec spec;
  spec.corpus.directory = dir.path();
  spec.n_cover = 3;
  spec.n_stego = 2;
  spec.clip = ClipSize{64, 64};
  const auto pool = build_pool(spec);
  REQUIRE(pool.images.size() == 6);
  CHECK(pool.images[0].width == 64);
  const auto r = run_experiment(spec, pool);
  CHECK(r.mean_counts.total() == 5);
}

TEST_CASE("results csv") {
  const auto spec = small_spec(10, 2, 2);
  ExperimentResult r;
  r.n_cover = 2;
  r.n_stego = 2;
  r.mean_accuracy = 0.75;
  r.mean_counts = {1.5, 1.5, 0.5, 0.5};
  std::ostringstream out;
  write_results_csv(out, spec, std::span(&r, 1));
  const auto text = out.str();
  CHECK(text.rfind("# ", 0) == 0);
  CHECK(text.find("n_cover,n_stego,Acc,TP,TN,FP,FN\n2,2,0.75,1.5,1.5,0.5,0.5\n") != std::string::npos);

  std::ostringstream s;
  const std::vector<StreamPoint> pts{{10, 0.5, 1.0}};
  write_stream_csv(s, spec, pts);
  CHECK(s.str().find("n,accuracy,confidence\n10,0.5,1\n") != std::string::npos);
}
