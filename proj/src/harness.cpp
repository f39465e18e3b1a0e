#include "atsteg/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "atsteg/parallel.hpp"
#include "atsteg/quantify.hpp"
#include "atsteg/random.hpp"

namespace atsteg {

void ExperimentSpec::validate() const {
  if (n_cover + n_stego < 2) throw ExperimentError("n_cover + n_stego must be at least 2");
  if (repeats < 1) throw ExperimentError("repeats must be at least 1");
  if (!corpus.directory && corpus.synthetic.empty()) {
    throw ExperimentError("corpus needs a directory or synthetic components");
  }
  for (const auto& c : corpus.synthetic) {
    if (c.width == 0 || c.height == 0) throw ExperimentError("synthetic size must be positive");
    if (c.smoothness_min < 0 || c.smoothness_max < c.smoothness_min) {
      throw ExperimentError("invalid smoothness range");
    }
    if (c.share && (*c.share < 0.0 || *c.share > 1.0)) {
      throw ExperimentError("component share must be in [0, 1]");
    }
  }
}

AtsParams ExperimentSpec::ats_params() const {
  AtsParams p;
  p.split = split;
  p.features = features;
  p.learner = learner;
  p.threads = threads;
  return p;
}

CoverPool build_pool(const ExperimentSpec& spec) {
  spec.validate();
  CoverPool pool;
  if (spec.corpus.directory) {
    pool.images = load_directory(*spec.corpus.directory, spec.clip);
    pool.component.assign(pool.images.size(), 0);
    pool.shares.push_back(std::nullopt);
    return pool;
  }
  for (std::size_t k = 0; k < spec.corpus.synthetic.size(); ++k) {
    const auto& comp = spec.corpus.synthetic[k];
    pool.shares.push_back(comp.share);
    const std::size_t first = pool.images.size();
    pool.images.resize(first + comp.count);
    parallel_for(comp.count, spec.threads, [&](std::size_t i) {
      const auto image_seed = derive_seed(derive_seed(spec.seed, 0xc0de + k), i);
      Engine eng(image_seed);
      const double s =
          comp.smoothness_min + (comp.smoothness_max - comp.smoothness_min) * uniform01(eng);
      auto img = synth_cover(image_seed, comp.width, comp.height, s,
                             "c" + std::to_string(k) + "_" + std::to_string(i));
      if (spec.clip) img = clip_center(img, spec.clip->width, spec.clip->height);
      pool.images[first + i] = std::move(img);
    });
    pool.component.insert(pool.component.end(), comp.count, k);
  }
  return pool;
}

namespace {

// Largest-remainder split of `total` by shares.
std::vector<std::size_t> apportion(std::size_t total, const std::vector<double>& shares) {
  const double sum = std::accumulate(shares.begin(), shares.end(), 0.0);
  if (!(sum > 0.0)) throw ExperimentError("component shares sum to zero");
  std::vector<std::size_t> counts(shares.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < shares.size(); ++k) {
    const double exact = static_cast<double>(total) * shares[k] / sum;
    counts[k] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[k];
    remainders.emplace_back(-(exact - std::floor(exact)), k);
  }
  std::sort(remainders.begin(), remainders.end());
  for (std::size_t r = 0; assigned < total; ++r, ++assigned) ++counts[remainders[r].second];
  return counts;
}

}  // namespace

TestingSet draw_testing_set(const ExperimentSpec& spec, const CoverPool& pool,
                            std::size_t repeat) {
  const std::size_t total = spec.n_cover + spec.n_stego;
  Engine eng(derive_seed(spec.seed, 0xd7a0 + repeat));

  std::vector<std::size_t> chosen;
  const bool use_shares = std::any_of(pool.shares.begin(), pool.shares.end(),
                                      [](const auto& s) { return s.has_value(); });
  if (use_shares) {
    std::vector<double> shares;
    for (const auto& s : pool.shares) shares.push_back(s.value_or(0.0));
    const auto counts = apportion(total, shares);
    for (std::size_t k = 0; k < counts.size(); ++k) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < pool.images.size(); ++i) {
        if (pool.component[i] == k) members.push_back(i);
      }
      if (members.size() < counts[k]) {
        throw ExperimentError("corpus exhausted: component " + std::to_string(k) + " has " +
                              std::to_string(members.size()) + " images, need " +
                              std::to_string(counts[k]));
      }
      shuffle(members.begin(), members.end(), eng);
      chosen.insert(chosen.end(), members.begin(),
                    members.begin() + static_cast<std::ptrdiff_t>(counts[k]));
    }
  } else {
    if (pool.images.size() < total) {
      throw ExperimentError("corpus exhausted: " + std::to_string(pool.images.size()) +
                            " covers available, need " + std::to_string(total));
    }
    chosen.resize(pool.images.size());
    std::iota(chosen.begin(), chosen.end(), std::size_t{0});
    shuffle(chosen.begin(), chosen.end(), eng);
    chosen.resize(total);
  }
  // Stego membership is random; the set itself is kept in pool order.
  shuffle(chosen.begin(), chosen.end(), eng);
  std::vector<std::pair<std::size_t, bool>> members;
  for (std::size_t k = 0; k < chosen.size(); ++k) members.emplace_back(chosen[k], k < spec.n_stego);
  std::sort(members.begin(), members.end());

  const auto stego_key = derive_seed(spec.embed.key(), 0x57e9 + repeat);
  TestingSet set;
  set.images.resize(members.size());
  parallel_for(members.size(), spec.threads, [&](std::size_t k) {
    const auto& cover = pool.images[members[k].first];
    if (!members[k].second) {
      set.images[k] = cover;
      return;
    }
    auto stego = embed(cover, spec.embed.with_key(image_subkey(stego_key, cover.id, 1)));
    stego.id = cover.id;  // the steganalyst sees an ordinary image
    set.images[k] = std::move(stego);
  });
  for (const auto& [index, is_stego] : members) {
    set.truth[pool.images[index].id] = is_stego ? ImageLabel::Stego : ImageLabel::Cover;
  }
  return set;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  return run_experiment(spec, build_pool(spec));
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const CoverPool& pool) {
  spec.validate();
  ExperimentResult result;
  result.n_cover = spec.n_cover;
  result.n_stego = spec.n_stego;
  result.repeats = spec.repeats;
  result.reports.resize(spec.repeats);

  // Repeats run in parallel; each ATS run is then single-threaded.
  const bool parallel_repeats = spec.repeats > 1 && resolve_threads(spec.threads) > 1;
  ExperimentSpec inner = spec;
  if (parallel_repeats) inner.threads = 1;
  auto params = inner.ats_params();
  params.learner.threads = inner.threads;
  parallel_for(spec.repeats, parallel_repeats ? spec.threads : 1, [&](std::size_t r) {
    const auto set = draw_testing_set(inner, pool, r);
    result.reports[r] = ats_classify(set.images, params, &set.truth);
  });

  for (const auto& rep : result.reports) {
    result.mean_counts.tp += rep.counts->tp;
    result.mean_counts.tn += rep.counts->tn;
    result.mean_counts.fp += rep.counts->fp;
    result.mean_counts.fn += rep.counts->fn;
    result.mean_accuracy += *rep.accuracy;
  }
  const auto reps = static_cast<double>(spec.repeats);
  result.mean_counts.tp /= reps;
  result.mean_counts.tn /= reps;
  result.mean_counts.fp /= reps;
  result.mean_counts.fn /= reps;
  result.mean_accuracy /= reps;

  if (spec.n_stego == 0) {
    result.warnings.push_back(
        "all-cover regime: the testing set holds no stego images, so the partition found by "
        "ATS is expected to be poor");
  }
  std::size_t flagged = 0;
  for (const auto& rep : result.reports) flagged += !rep.diagnostics.warnings.empty();
  if (flagged > 0) {
    result.warnings.push_back(std::to_string(flagged) + " of " + std::to_string(spec.repeats) +
                              " runs predicted a stego fraction outside [0.10, 0.95]");
  }
  return result;
}

std::vector<ExperimentResult> ratio_sweep(const ExperimentSpec& spec, std::size_t step) {
  const std::size_t total = spec.n_cover + spec.n_stego;
  if (step == 0 || total % step != 0) {
    throw ExperimentError("sweep step " + std::to_string(step) + " must divide " +
                          std::to_string(total));
  }
  const auto pool = build_pool(spec);
  std::vector<ExperimentResult> rows;
  for (std::size_t stego = 0; stego <= total; stego += step) {
    ExperimentSpec row = spec;
    row.n_cover = total - stego;
    row.n_stego = stego;
    rows.push_back(run_experiment(row, pool));
  }
  return rows;
}

std::vector<StreamPoint> stream_experiment(const ExperimentSpec& spec,
                                           std::span<const std::uint64_t> order_seeds,
                                           std::size_t n_min, std::size_t batch_every) {
  spec.validate();
  if (order_seeds.empty()) throw ExperimentError("stream experiment needs at least one order seed");
  const auto pool = build_pool(spec);
  const auto set = draw_testing_set(spec, pool, 0);
  auto params = spec.ats_params();

  // Features depend only on image id, so every ordering shares one cache.
  AtsFeatureCache cache;
  std::vector<std::vector<StreamPoint>> per_seed;
  for (auto seed : order_seeds) {
    std::vector<std::size_t> order(set.images.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Engine eng(derive_seed(seed, 0x0de7));
    shuffle(order.begin(), order.end(), eng);

    StreamState state(params, n_min, batch_every, &cache);
    std::vector<StreamPoint> series;
    for (auto idx : order) {
      const auto round = state.add(set.images[idx]);
      if (!round) continue;
      std::size_t correct = 0;
      double conf = 0.0;
      for (const auto& [id, label] : round->labels) {
        correct += set.truth.at(id) == label;
        conf += round->confidence.at(id);
      }
      const auto n = static_cast<double>(round->labels.size());
      series.push_back({round->n, static_cast<double>(correct) / n, conf / n});
    }
    per_seed.push_back(std::move(series));
  }

  std::vector<StreamPoint> mean(per_seed.front().size());
  for (std::size_t i = 0; i < mean.size(); ++i) {
    mean[i].n = per_seed.front()[i].n;
    for (const auto& s : per_seed) {
      mean[i].mean_accuracy += s[i].mean_accuracy;
      mean[i].mean_confidence += s[i].mean_confidence;
    }
    mean[i].mean_accuracy /= static_cast<double>(per_seed.size());
    mean[i].mean_confidence /= static_cast<double>(per_seed.size());
  }
  return mean;
}

namespace {

using nlohmann::json;

EmbedConfig parse_embed(const json& j, const EmbedConfig& fallback) {
  const auto algo = j.contains("algorithm") ? parse_algorithm(j.at("algorithm").get<std::string>())
                                            : fallback.algorithm();
  const double rate = j.value("rate", fallback.rate());
  std::uint64_t key = fallback.key();
  if (j.contains("key")) {
    const auto& k = j.at("key");
    key = k.is_string() ? parse_key(k.get<std::string>()) : k.get<std::uint64_t>();
  }
  return EmbedConfig(algo, rate, key);
}

}  // namespace

ExperimentPlan parse_experiment_json(const std::string& text) {
  ExperimentPlan plan;
  auto& spec = plan.spec;
  try {
    const auto j = json::parse(text);
    const auto& corpus = j.at("corpus");
    if (corpus.contains("directory")) {
      spec.corpus.directory = corpus.at("directory").get<std::string>();
    }
    if (corpus.contains("synthetic")) {
      for (const auto& c : corpus.at("synthetic")) {
        SyntheticComponent comp;
        comp.count = c.at("count").get<std::size_t>();
        comp.width = c.value("width", comp.width);
        comp.height = c.value("height", comp.height);
        if (c.contains("smoothness")) {
          const auto& s = c.at("smoothness");
          if (s.is_array()) {
            comp.smoothness_min = s.at(0).get<double>();
            comp.smoothness_max = s.at(1).get<double>();
          } else {
            comp.smoothness_min = comp.smoothness_max = s.get<double>();
          }
        }
        if (c.contains("share")) comp.share = c.at("share").get<double>();
        spec.corpus.synthetic.push_back(comp);
      }
    }
    spec.n_cover = j.value("n_cover", spec.n_cover);
    spec.n_stego = j.value("n_stego", spec.n_stego);
    if (j.contains("embed")) spec.embed = parse_embed(j.at("embed"), spec.embed);
    spec.split = j.contains("split") ? parse_embed(j.at("split"), spec.split)
                                     : spec.split.with_rate(spec.embed.rate());
    spec.repeats = j.value("repeats", spec.repeats);
    spec.seed = j.value("seed", spec.seed);
    if (j.contains("clip")) spec.clip = parse_clip(j.at("clip").get<std::string>());
    if (j.contains("features")) {
      spec.features.truncation = j.at("features").value("truncation", spec.features.truncation);
      spec.features.order = j.at("features").value("order", spec.features.order);
    }
    if (j.contains("learner")) {
      const auto& l = j.at("learner");
      spec.learner.k_features = l.value("k_features", spec.learner.k_features);
      spec.learner.folds = l.value("folds", spec.learner.folds);
    }
    const auto mode = j.value("mode", std::string("single"));
    if (mode == "single") {
      plan.mode = ExperimentPlan::Mode::Single;
    } else if (mode == "sweep") {
      plan.mode = ExperimentPlan::Mode::Sweep;
      plan.sweep_step = j.at("sweep_step").get<std::size_t>();
    } else if (mode == "stream") {
      plan.mode = ExperimentPlan::Mode::Stream;
      const auto s = j.value("stream", json::object());
      plan.stream_n_min = s.value("n_min", plan.stream_n_min);
      plan.stream_batch_every = s.value("batch_every", plan.stream_batch_every);
      if (s.contains("seeds")) {
        plan.stream_seeds = s.at("seeds").get<std::vector<std::uint64_t>>();
      } else {
        const auto count = s.value("orders", std::size_t{1});
        for (std::size_t i = 0; i < count; ++i) plan.stream_seeds.push_back(spec.seed + i);
      }
    } else {
      throw ExperimentError("unknown mode '" + mode + "' (single, sweep, stream)");
    }
  } catch (const json::exception& e) {
    throw ExperimentError(std::string("malformed experiment spec: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ExperimentError(std::string("invalid experiment spec: ") + e.what());
  }
  spec.validate();
  return plan;
}

ExperimentPlan load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ExperimentError("cannot read experiment spec " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_experiment_json(buf.str());
}

namespace {

void write_metadata(std::ostream& out, const ExperimentSpec& spec) {
  out << "# corpus: "
      << (spec.corpus.directory ? spec.corpus.directory->string()
                                : std::to_string(spec.corpus.synthetic.size()) +
                                      " synthetic component(s)")
      << '\n';
  out << "# embed: " << to_string(spec.embed.algorithm()) << ' ' << spec.embed.rate() << " bpp\n";
  out << "# split: " << to_string(spec.split.algorithm()) << ' ' << spec.split.rate() << " bpp\n";
  out << "# repeats: " << spec.repeats << "\n# seed: " << spec.seed << '\n';
}

}  // namespace

void write_results_csv(std::ostream& out, const ExperimentSpec& spec,
                       std::span<const ExperimentResult> rows) {
  write_metadata(out, spec);
  out << "n_cover,n_stego,Acc,TP,TN,FP,FN\n";
  for (const auto& r : rows) {
    out << r.n_cover << ',' << r.n_stego << ',' << r.mean_accuracy << ',' << r.mean_counts.tp
        << ',' << r.mean_counts.tn << ',' << r.mean_counts.fp << ',' << r.mean_counts.fn << '\n';
  }
}

void write_stream_csv(std::ostream& out, const ExperimentSpec& spec,
                      std::span<const StreamPoint> points) {
  write_metadata(out, spec);
  out << "n,accuracy,confidence\n";
  for (const auto& p : points) {
    out << p.n << ',' << p.mean_accuracy << ',' << p.mean_confidence << '\n';
  }
}

}  // namespace atsteg
