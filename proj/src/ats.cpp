#include "atsteg/ats.hpp"

#include <algorithm>
#include <unordered_set>

namespace atsteg {

std::string to_string(ImageLabel label) {
  return label == ImageLabel::Cover ? "cover" : "stego";
}

ImageLabel parse_label(std::string_view text) {
  if (text == "cover" || text == "0") return ImageLabel::Cover;
  if (text == "stego" || text == "1") return ImageLabel::Stego;
  throw AtsError("unknown label '" + std::string(text) + "' (expected cover/stego or 0/1)");
}

const AtsFeatureCache::Entry* AtsFeatureCache::find(const std::string& id) const {
  const auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second;
}

void AtsFeatureCache::insert(const std::string& id, Entry entry) {
  entries_.insert_or_assign(id, std::move(entry));
}

AtsFeatures build_ats_features(std::span<const GrayImage> A, const AtsParams& params,
                               AtsFeatureCache* cache) {
  require_unique_ids(A);
  std::vector<GrayImage> missing;
  for (const auto& img : A) {
    if (!cache || !cache->find(img.id)) missing.push_back(img);
  }
  const auto B = apply_splitting(missing, params.split, params.threads);
  const auto C = apply_splitting(B, params.split, params.threads);
  const auto fa = extract_corpus(missing, params.features, params.threads);
  const auto fb = extract_corpus(B, params.features, params.threads);
  const auto fc = extract_corpus(C, params.features, params.threads);

  const std::size_t dim = spam_dimension(params.features);
  AtsFeatures out{FeatureMatrix(dim), FeatureMatrix(dim), FeatureMatrix(dim)};
  if (!cache) {
    out.a = fa;
    out.b = fb;
    out.c = fc;
    return out;
  }
  for (std::size_t i = 0; i < missing.size(); ++i) {
    auto row = [](const FeatureMatrix& m, std::size_t r) {
      const auto s = m.row(r);
      return std::vector<double>(s.begin(), s.end());
    };
    cache->insert(missing[i].id,
                  {row(fa, i), row(fb, i), row(fc, i), fb.id(i), fc.id(i)});
  }
  for (const auto& img : A) {
    const auto* e = cache->find(img.id);
    out.a.append(e->a, img.id);
    out.b.append(e->b, e->b_id);
    out.c.append(e->c, e->c_id);
  }
  return out;
}

Confusion confusion(std::span<const ImageVerdict> verdicts, const GroundTruth& truth) {
  Confusion c;
  for (const auto& v : verdicts) {
    const auto it = truth.find(v.id);
    if (it == truth.end()) throw AtsError("no ground truth for image " + v.id);
    const bool actual_stego = it->second == ImageLabel::Stego;
    const bool predicted_stego = v.label == ImageLabel::Stego;
    if (actual_stego) {
      (predicted_stego ? c.tp : c.fn) += 1;
    } else {
      (predicted_stego ? c.fp : c.tn) += 1;
    }
  }
  return c;
}

namespace {

// Row i of a and row i of c share group i so CV never splits a pair.
std::vector<std::size_t> paired_groups(std::size_t n) {
  std::vector<std::size_t> g(2 * n);
  for (std::size_t i = 0; i < n; ++i) g[i] = g[n + i] = i;
  return g;
}

FeatureMatrix labeled_pair(const FeatureMatrix& first, const FeatureMatrix& second,
                           std::vector<int>& y) {
  y.assign(first.rows(), kNegative);
  y.insert(y.end(), second.rows(), kPositive);
  return FeatureMatrix::concat(first, second);
}

// Share of predicted stego outside which the partition is suspect
// (e.g. an all-cover testing set).
constexpr double kLowStegoFraction = 0.10;
constexpr double kHighStegoFraction = 0.95;

}  // namespace

namespace {

AtsRun run_ats_sorted(const AtsFeatures& f, const AtsParams& params, const GroundTruth* truth) {
  const std::size_t n = f.a.rows();
  AtsRun run;
  std::vector<int> y;
  const auto T = labeled_pair(f.a, f.c, y);
  run.training_ids = T.ids();
  run.test_ids = f.b.ids();
  run.classifier = fit_classifier(T, y, params.learner, paired_groups(n));

  auto& report = run.report;
  report.per_image.reserve(n);
  std::size_t stego = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = predict(run.classifier.model, f.b.row(i));
    run.b_labels.push_back(p.label);
    // b_i on the C side means a_i carried a payload already.
    const auto label = p.label == kPositive ? ImageLabel::Stego : ImageLabel::Cover;
    stego += label == ImageLabel::Stego;
    report.per_image.push_back({f.a.id(i), label, p.decision});
  }

  auto& diag = report.diagnostics;
  diag.n = n;
  diag.train_a = f.a.rows();
  diag.train_c = f.c.rows();
  diag.ac_cv_accuracy = run.classifier.grid.cv_accuracy;
  diag.C = run.classifier.grid.C;
  diag.gamma = run.classifier.grid.gamma;
  diag.predicted_stego_fraction = static_cast<double>(stego) / static_cast<double>(n);
  if (diag.predicted_stego_fraction < kLowStegoFraction ||
      diag.predicted_stego_fraction > kHighStegoFraction) {
    diag.warnings.push_back(
        "predicted stego fraction " + std::to_string(diag.predicted_stego_fraction) +
        " is outside [0.10, 0.95]; the testing set may be (nearly) all cover or all stego and "
        "the partition is unreliable");
  }

  if (truth) {
    report.counts = confusion(report.per_image, *truth);
    report.accuracy = report.counts->accuracy();
  }
  return run;
}

}  // namespace

AtsRun run_ats(const AtsFeatures& f, const AtsParams& params, const GroundTruth* truth) {
  const std::size_t n = f.a.rows();
  if (n < 2) throw AtsError("ATS needs at least 2 images, got " + std::to_string(n));
  if (f.b.rows() != n || f.c.rows() != n) throw AtsError("A, B and C differ in size");

  // Rows are processed in id order so fold assignment and solver round-off
  // do not depend on how A was listed.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return f.a.id(x) < f.a.id(y); });
  if (std::is_sorted(order.begin(), order.end())) return run_ats_sorted(f, params, truth);

  const AtsFeatures sorted{f.a.select_rows(order), f.b.select_rows(order),
                           f.c.select_rows(order)};
  auto run = run_ats_sorted(sorted, params, truth);
  auto per_image = run.report.per_image;
  auto b_labels = run.b_labels;
  for (std::size_t k = 0; k < n; ++k) {
    run.report.per_image[order[k]] = per_image[k];
    run.b_labels[order[k]] = b_labels[k];
  }
  return run;
}

void verify_run(const AtsFeatures& f, const AtsRun& run) {
  const std::size_t n = f.a.rows();
  if (f.b.rows() != n || f.c.rows() != n) throw AtsError("invariant: |A| = |B| = |C| violated");
  for (std::size_t i = 0; i < n; ++i) {
    const int g = generation_of(f.a.id(i));
    const auto base = base_id(f.a.id(i));
    if (base_id(f.b.id(i)) != base || base_id(f.c.id(i)) != base ||
        generation_of(f.b.id(i)) != g + 1 || generation_of(f.c.id(i)) != g + 2) {
      throw AtsError("invariant: bijection broken at row " + std::to_string(i) + " (" +
                     f.a.id(i) + ", " + f.b.id(i) + ", " + f.c.id(i) + ")");
    }
  }
  const auto& d = run.report.diagnostics;
  if (d.train_a != d.train_c || d.train_a != n) {
    throw AtsError("invariant: artificial training set is not balanced");
  }
  std::vector<std::string> train_expected(f.a.ids());
  train_expected.insert(train_expected.end(), f.c.ids().begin(), f.c.ids().end());
  std::vector<std::string> train_actual(run.training_ids);
  std::sort(train_expected.begin(), train_expected.end());
  std::sort(train_actual.begin(), train_actual.end());
  if (train_actual != train_expected) {
    throw AtsError("invariant: training set is not A u C");
  }
  std::unordered_set<std::string> train(run.training_ids.begin(), run.training_ids.end());
  for (const auto& id : run.test_ids) {
    if (train.count(id)) throw AtsError("invariant: test image " + id + " is in the training set");
  }
  if (run.report.per_image.size() != n) throw AtsError("invariant: report size mismatch");
  std::vector<std::string> reported, expected(f.a.ids());
  for (const auto& v : run.report.per_image) reported.push_back(v.id);
  std::sort(reported.begin(), reported.end());
  std::sort(expected.begin(), expected.end());
  if (reported != expected) throw AtsError("invariant: report ids differ from A");
}

AtsReport ats_classify(std::span<const GrayImage> A, const AtsParams& params,
                       const GroundTruth* truth) {
  if (A.size() < 2) throw AtsError("ATS needs at least 2 images, got " + std::to_string(A.size()));
  const auto features = build_ats_features(A, params);
  auto run = run_ats(features, params, truth);
  verify_run(features, run);
  return std::move(run.report);
}

double pair_cv_accuracy(const FeatureMatrix& first, const FeatureMatrix& second,
                        const LearnerParams& params) {
  if (first.rows() != second.rows()) throw AtsError("pair sets must have equal size");
  std::vector<int> y;
  const auto X = labeled_pair(first, second, y);
  return stack_cv_accuracy(X, y, params, paired_groups(first.rows()));
}

DisjointnessProbe disjointness_probe(std::span<const GrayImage> A, const AtsParams& params) {
  if (A.size() < 4) throw AtsError("disjointness probe needs at least 4 images");
  const auto f = build_ats_features(A, params);
  return {pair_cv_accuracy(f.a, f.c, params.learner), pair_cv_accuracy(f.a, f.b, params.learner),
          pair_cv_accuracy(f.b, f.c, params.learner)};
}

}  // namespace atsteg
