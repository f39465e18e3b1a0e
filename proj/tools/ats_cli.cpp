// atsteg: unsupervised targeted steganalysis with artificial training sets.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "atsteg/ats.hpp"
#include "atsteg/harness.hpp"
#include "atsteg/quantify.hpp"
#include "atsteg/random.hpp"

namespace fs = std::filesystem;
using namespace atsteg;
using nlohmann::json;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GlobalOptions {
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::string clip;
  std::string format = "json";

  std::optional<ClipSize> clip_size() const {
    if (clip.empty()) return std::nullopt;
    try {
      return parse_clip(clip);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }

  // The steganalyst's splitting key and CV fold seed both come from --seed.
  AtsParams ats_params(Algorithm algo, double rate) const {
    AtsParams p;
    p.split = EmbedConfig(algo, rate, derive_seed(seed, hash_string("split")));
    p.learner.fold_seed = seed;
    p.learner.threads = threads;
    p.threads = threads;
    return p;
  }
};

Algorithm algorithm_arg(const std::string& name) {
  try {
    return parse_algorithm(name);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

void check_rate(double rate) {
  if (!(rate > 0.0 && rate <= 1.0)) {
    throw UsageError("--rate must be in (0, 1], got " + std::to_string(rate));
  }
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

// Writes to `path`, or stdout when empty.
template <typename Fn>
void emit(const std::string& path, Fn&& write) {
  if (path.empty()) {
    write(std::cout);
    std::cout.flush();
  } else {
    auto out = open_output(path);
    write(out);
  }
}

json report_json(const AtsReport& r) {
  json j;
  auto rows = json::array();
  for (const auto& v : r.per_image) {
    rows.push_back({{"id", v.id}, {"label", to_string(v.label)}, {"decision", v.decision}});
  }
  j["per_image"] = std::move(rows);
  if (r.counts) {
    j["counts"] = {{"tp", r.counts->tp}, {"tn", r.counts->tn}, {"fp", r.counts->fp},
                   {"fn", r.counts->fn}};
  }
  if (r.accuracy) j["accuracy"] = *r.accuracy;
  const auto& d = r.diagnostics;
  j["diagnostics"] = {{"ac_cv_accuracy", d.ac_cv_accuracy},
                      {"n", d.n},
                      {"predicted_stego_fraction", d.predicted_stego_fraction},
                      {"train_a", d.train_a},
                      {"train_c", d.train_c},
                      {"C", d.C},
                      {"gamma", d.gamma},
                      {"warnings", d.warnings}};
  return j;
}

void write_report_csv(std::ostream& out, const AtsReport& r) {
  out << "id,label,decision\n";
  char buf[32];
  for (const auto& v : r.per_image) {
    std::snprintf(buf, sizeof buf, "%.17g", v.decision);
    out << v.id << ',' << to_string(v.label) << ',' << buf << '\n';
  }
}

void print_table(std::ostream& out, const Confusion& c, double acc) {
  char line[128];
  std::snprintf(line, sizeof line, "%-6s %8s %8s %8s %8s\n", "Acc", "TP", "TN", "FP", "FN");
  out << line;
  std::snprintf(line, sizeof line, "%-6.2f %8.1f %8.1f %8.1f %8.1f\n", acc, c.tp, c.tn, c.fp,
                c.fn);
  out << line;
}

GroundTruth load_truth(const fs::path& path, std::span<const GrayImage> images) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read truth file " + path.string());
  GroundTruth truth;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw UsageError("bad truth line: " + line);
    const auto id = line.substr(0, comma);
    const auto label = line.substr(comma + 1);
    if (id == "id" && label == "label") continue;
    try {
      truth[id] = parse_label(label);
    } catch (const AtsError& e) {
      throw UsageError(e.what());
    }
  }
  std::set<std::string, std::less<>> ids;
  for (const auto& img : images) ids.insert(img.id);
  for (const auto& [id, label] : truth) {
    if (!ids.count(id)) throw UsageError("truth/id mismatch: " + id + " is not in --in");
  }
  for (const auto& id : ids) {
    if (!truth.count(id)) throw UsageError("truth/id mismatch: no label for " + id);
  }
  return truth;
}

std::vector<double> parse_rates(const std::string& list) {
  std::vector<double> rates;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const double r = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      check_rate(r);
      rates.push_back(r);
    } catch (const std::logic_error&) {
      throw UsageError("bad rate '" + item + "' in --rates");
    }
  }
  if (rates.empty()) throw UsageError("--rates is empty");
  return rates;
}

// ---------------------------------------------------------------- commands

int cmd_synth(const GlobalOptions& g, const std::string& out_dir, std::size_t count,
              const std::string& size, double smin, double smax) {
  const auto dims = parse_clip(size);
  if (smax < smin) smax = smin;
  fs::create_directories(out_dir);
  for (std::size_t i = 0; i < count; ++i) {
    const auto image_seed = derive_seed(g.seed, i);
    Engine eng(image_seed);
    const double s = smin + (smax - smin) * uniform01(eng);
    char name[32];
    std::snprintf(name, sizeof name, "img%05zu", i);
    const auto img = synth_cover(image_seed, dims.width, dims.height, s, name);
    save_pgm(img, fs::path(out_dir) / (img.id + ".pgm"));
  }
  return 0;
}

int cmd_embed(const GlobalOptions& g, const std::string& in_dir, const std::string& out_dir,
              double rate, const std::string& key_text, const std::string& algo_name) {
  check_rate(rate);
  std::uint64_t key = 0;
  try {
    key = parse_key(key_text);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto cfg = EmbedConfig(algorithm_arg(algo_name), rate, key);
  const auto images = load_directory(in_dir, g.clip_size());
  const auto stego = apply_splitting(images, cfg, g.threads);
  fs::create_directories(out_dir);
  auto manifest = open_output(fs::path(out_dir) / "manifest.csv");
  manifest << "id,rate,key_fingerprint\n";
  for (std::size_t i = 0; i < stego.size(); ++i) {
    // Files keep the cover's stem so the outputs can be mixed into a test set.
    auto out = stego[i];
    out.id = images[i].id;
    save_pgm(out, fs::path(out_dir) / (out.id + ".pgm"));
    manifest << out.id << ',' << rate << ',' << key_fingerprint(key) << '\n';
  }
  std::cerr << "embedded " << stego.size() << " image(s)\n";
  return 0;
}

int cmd_features(const GlobalOptions& g, const std::string& in_dir, const std::string& out,
                 int truncation, int order) {
  const auto images = load_directory(in_dir, g.clip_size());
  SpamParams params{truncation, order};
  const auto m = extract_corpus(images, params, g.threads);
  emit(out, [&](std::ostream& os) { write_feature_csv(os, m); });
  return 0;
}

int cmd_analyze(const GlobalOptions& g, const std::string& in_dir, const std::string& algo,
                double rate, const std::string& truth_path, const std::string& model_path,
                const std::string& out) {
  check_rate(rate);
  const auto params = g.ats_params(algorithm_arg(algo), rate);
  const auto images = load_directory(in_dir, g.clip_size());
  if (images.size() < 2) {
    throw UsageError("analyze needs at least 2 images, found " + std::to_string(images.size()));
  }
  std::optional<GroundTruth> truth;
  if (!truth_path.empty()) truth = load_truth(truth_path, images);

  const auto features = build_ats_features(images, params);
  const auto run = run_ats(features, params, truth ? &*truth : nullptr);
  verify_run(features, run);
  const auto& report = run.report;

  emit(out, [&](std::ostream& os) {
    if (g.format == "csv") {
      write_report_csv(os, report);
    } else {
      os << report_json(report).dump(2) << '\n';
    }
  });
  if (!model_path.empty()) {
    auto os = open_output(model_path);
    os << model_to_json(run.classifier.model) << '\n';
  }
  for (const auto& w : report.diagnostics.warnings) std::cerr << "warning: " << w << '\n';
  if (report.counts) print_table(std::cerr, *report.counts, *report.accuracy);
  return 0;
}

int cmd_search(const GlobalOptions& g, const std::string& in_dir, const std::string& algo,
               const std::string& rates_text, const std::string& out) {
  const auto rates = parse_rates(rates_text);
  const auto images = load_directory(in_dir, g.clip_size());
  if (images.size() < 2) throw UsageError("search needs at least 2 images");
  const auto algorithm = algorithm_arg(algo);
  const auto entries = search_bitrate(images, algorithm, rates, g.ats_params(algorithm, rates[0]));
  emit(out, [&](std::ostream& os) {
    if (g.format == "csv") {
      os << "tentative_rate,score,predicted_stego_fraction\n";
      for (const auto& e : entries) {
        os << e.tentative_rate << ',' << e.score << ','
           << e.report.diagnostics.predicted_stego_fraction << '\n';
      }
      return;
    }
    json j;
    j["centroid_features"] = kCentroidFeatures;
    j["centroid_selection"] = "ANOVA top features refit per tentative rate";
    auto arr = json::array();
    for (const auto& e : entries) {
      json row = {{"tentative_rate", e.tentative_rate},
                  {"score", std::isinf(e.score) ? json(nullptr) : json(e.score)},
                  {"report", report_json(e.report)}};
      arr.push_back(std::move(row));
    }
    j["ranking"] = std::move(arr);
    os << j.dump(2) << '\n';
  });
  char line[96];
  std::snprintf(line, sizeof line, "%-16s %10s\n", "Tentative rate", "Score");
  std::cerr << line;
  for (const auto& e : entries) {
    std::snprintf(line, sizeof line, "%-16.2f %10.4f\n", e.tentative_rate, e.score);
    std::cerr << line;
  }
  return 0;
}

int cmd_stream(const GlobalOptions& g, const std::string& watch_dir, bool from_stdin,
               const std::string& algo, double rate, std::size_t n_min, std::size_t batch_every,
               int poll_ms, int idle_exit_ms) {
  check_rate(rate);
  if (watch_dir.empty() == !from_stdin) throw UsageError("give exactly one of --watch or --stdin");
  if (n_min < 2) throw UsageError("--nmin must be at least 2");
  if (batch_every < 1) throw UsageError("--batch-every must be at least 1");
  StreamState state(g.ats_params(algorithm_arg(algo), rate), n_min, batch_every);
  const auto clip = g.clip_size();

  auto feed = [&](const fs::path& path) {
    auto img = load_image(path);
    if (clip) img = clip_center(img, clip->width, clip->height);
    if (const auto round = state.add(std::move(img))) {
      std::cout << stream_round_json(*round) << std::endl;
    }
  };

  if (from_stdin) {
    std::string line;
    while (std::getline(std::cin, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) feed(line);
    }
    return 0;
  }

  std::set<fs::path> seen;
  auto idle = std::chrono::steady_clock::now();
  for (;;) {
    std::vector<fs::path> fresh;
    for (const auto& entry : fs::directory_iterator(watch_dir)) {
      const auto ext = entry.path().extension();
      if (entry.is_regular_file() && (ext == ".pgm" || ext == ".png") &&
          !seen.count(entry.path())) {
        fresh.push_back(entry.path());
      }
    }
    std::sort(fresh.begin(), fresh.end());
    for (const auto& p : fresh) {
      seen.insert(p);
      feed(p);
    }
    const auto now = std::chrono::steady_clock::now();
    if (!fresh.empty()) idle = now;
    if (idle_exit_ms > 0 &&
        now - idle >= std::chrono::milliseconds(idle_exit_ms)) {
      return 0;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(poll_ms));
  }
}

int cmd_experiment(const GlobalOptions& g, const std::string& spec_path, const std::string& out) {
  ExperimentPlan plan;
  try {
    plan = load_experiment(spec_path);
  } catch (const ExperimentError& e) {
    throw UsageError(e.what());
  }
  plan.spec.threads = g.threads;
  plan.spec.learner.threads = g.threads;
  if (const auto clip = g.clip_size()) plan.spec.clip = clip;

  switch (plan.mode) {
    case ExperimentPlan::Mode::Single: {
      const auto r = run_experiment(plan.spec);
      emit(out, [&](std::ostream& os) { write_results_csv(os, plan.spec, std::span(&r, 1)); });
      for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
      print_table(std::cerr, r.mean_counts, r.mean_accuracy);
      break;
    }
    case ExperimentPlan::Mode::Sweep: {
      const auto rows = ratio_sweep(plan.spec, plan.sweep_step);
      emit(out, [&](std::ostream& os) { write_results_csv(os, plan.spec, rows); });
      break;
    }
    case ExperimentPlan::Mode::Stream: {
      const auto points = stream_experiment(plan.spec, plan.stream_seeds, plan.stream_n_min,
                                            plan.stream_batch_every);
      emit(out, [&](std::ostream& os) { write_stream_csv(os, plan.spec, points); });
      break;
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"atsteg: unsupervised targeted steganalysis via artificial training sets"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--seed", g.seed, "Seed for all randomness (split key, CV folds, synthesis)");
  app.add_option("--threads", g.threads, "Worker threads (0 = hardware concurrency)");
  app.add_option("--clip", g.clip, "Clip every image to its centered WxH window");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"json", "csv"}));

  std::string in_dir, out_dir, out, algo = "lsbm", key = "0", truth, model, rates, watch, spec;
  std::string size = "512x512";
  double rate = 0.0, smin = 4.0, smax = 8.0;
  std::size_t count = 10, n_min = 10, batch_every = 1;
  int truncation = 3, order = 2, poll_ms = 500, idle_exit_ms = 0;
  bool from_stdin = false;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic cover corpus");
  synth->add_option("--out", out_dir, "Output directory")->required();
  synth->add_option("--count", count, "Number of images");
  synth->add_option("--size", size, "Image size WxH");
  synth->add_option("--smoothness-min", smin, "Lower smoothness bound");
  synth->add_option("--smoothness-max", smax, "Upper smoothness bound");

  auto* embed_cmd = app.add_subcommand("embed", "Embed every image of a directory");
  embed_cmd->add_option("--in", in_dir, "Input directory")->required();
  embed_cmd->add_option("--out", out_dir, "Output directory")->required();
  embed_cmd->add_option("--rate", rate, "Embedding rate in bpp, (0, 1]")->required();
  embed_cmd->add_option("--key", key, "Embedding key (decimal or 0x hex)");
  embed_cmd->add_option("--algo", algo, "Embedding algorithm");

  auto* features_cmd = app.add_subcommand("features", "Extract SPAM features to CSV");
  features_cmd->add_option("--in", in_dir, "Input directory")->required();
  features_cmd->add_option("--out", out, "Output CSV (default stdout)");
  features_cmd->add_option("-T,--truncation", truncation, "Difference truncation");
  features_cmd->add_option("--order", order, "Markov order (1 or 2)");

  auto* analyze = app.add_subcommand("analyze", "Classify a directory as cover/stego");
  analyze->add_option("--in", in_dir, "Testing set directory")->required();
  analyze->add_option("--algo", algo, "Targeted algorithm");
  analyze->add_option("--rate", rate, "Targeted rate in bpp")->required();
  analyze->add_option("--truth", truth, "CSV of id,label for scoring");
  analyze->add_option("--save-model", model, "Write the trained classifier as JSON");
  analyze->add_option("--out", out, "Report path (default stdout)");

  auto* search = app.add_subcommand("search", "Rank tentative bit rates by score S");
  search->add_option("--in", in_dir, "Testing set directory")->required();
  search->add_option("--algo", algo, "Targeted algorithm");
  search->add_option("--rates", rates, "Comma-separated tentative rates")->required();
  search->add_option("--out", out, "Output path (default stdout)");

  auto* stream = app.add_subcommand("stream", "Classify images as they arrive");
  stream->add_option("--watch", watch, "Directory to poll for new images");
  stream->add_flag("--stdin", from_stdin, "Read image paths from stdin, one per line");
  stream->add_option("--algo", algo, "Targeted algorithm");
  stream->add_option("--rate", rate, "Targeted rate in bpp")->required();
  stream->add_option("--nmin", n_min, "Images collected before the first round");
  stream->add_option("--batch-every", batch_every, "Re-classify on every k-th arrival");
  stream->add_option("--poll-ms", poll_ms, "Directory poll interval");
  stream->add_option("--idle-exit-ms", idle_exit_ms, "Stop watching after this long idle (0 = never)");

  auto* experiment = app.add_subcommand("experiment", "Run an experiment spec (JSON)");
  experiment->add_option("--spec", spec, "Experiment spec file")->required();
  experiment->add_option("--out", out, "Results CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*synth) return cmd_synth(g, out_dir, count, size, smin, smax);
    if (*embed_cmd) return cmd_embed(g, in_dir, out_dir, rate, key, algo);
    if (*features_cmd) return cmd_features(g, in_dir, out, truncation, order);
    if (*analyze) return cmd_analyze(g, in_dir, algo, rate, truth, model, out);
    if (*search) return cmd_search(g, in_dir, algo, rates, out);
    if (*stream) {
      return cmd_stream(g, watch, from_stdin, algo, rate, n_min, batch_every, poll_ms,
                        idle_exit_ms);
    }
    if (*experiment) return cmd_experiment(g, spec, out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
