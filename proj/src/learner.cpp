#include "atsteg/learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "atsteg/parallel.hpp"
#include "atsteg/random.hpp"

namespace atsteg {

namespace {

void check_labels(const FeatureMatrix& X, std::span<const int> y) {
  if (X.rows() != y.size()) {
    throw LearnerError("label count " + std::to_string(y.size()) + " != row count " +
                       std::to_string(X.rows()));
  }
  bool neg = false, pos = false;
  for (int v : y) {
    if (v == kNegative) {
      neg = true;
    } else if (v == kPositive) {
      pos = true;
    } else {
      throw LearnerError("labels must be -1 or +1");
    }
  }
  if (!neg || !pos) throw LearnerError("single-class input: both labels must be present");
}

std::size_t count_label(std::span<const int> y, int label) {
  return static_cast<std::size_t>(std::count(y.begin(), y.end(), label));
}

}  // namespace

std::vector<double> anova_f(const FeatureMatrix& X, std::span<const int> y) {
  check_labels(X, y);
  const std::size_t d = X.cols();
  const std::size_t n = X.rows();
  const double n_neg = static_cast<double>(count_label(y, kNegative));
  const double n_pos = static_cast<double>(count_label(y, kPositive));

  std::vector<double> sum_neg(d, 0.0), sum_pos(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    auto& acc = y[r] == kPositive ? sum_pos : sum_neg;
    const auto row = X.row(r);
    for (std::size_t c = 0; c < d; ++c) acc[c] += row[c];
  }
  std::vector<double> mean_neg(d), mean_pos(d), ssw(d, 0.0), scale(d, 0.0);
  for (std::size_t c = 0; c < d; ++c) {
    mean_neg[c] = sum_neg[c] / n_neg;
    mean_pos[c] = sum_pos[c] / n_pos;
  }
  for (std::size_t r = 0; r < n; ++r) {
    const auto& mean = y[r] == kPositive ? mean_pos : mean_neg;
    const auto row = X.row(r);
    for (std::size_t c = 0; c < d; ++c) {
      const double dev = row[c] - mean[c];
      ssw[c] += dev * dev;
      scale[c] += row[c] * row[c];
    }
  }

  // Sums of squares below this fraction of the raw second moment are rounding
  // noise from the mean computation.
  constexpr double kZero = 1e-24;
  const double df_within = static_cast<double>(n) - 2.0;
  std::vector<double> f(d);
  for (std::size_t c = 0; c < d; ++c) {
    const double grand = (sum_neg[c] + sum_pos[c]) / static_cast<double>(n);
    const double ssb = n_neg * (mean_neg[c] - grand) * (mean_neg[c] - grand) +
                       n_pos * (mean_pos[c] - grand) * (mean_pos[c] - grand);
    const double tiny = kZero * scale[c];
    const bool no_between = ssb <= tiny;
    const bool no_within = ssw[c] <= tiny || df_within <= 0.0;
    if (no_within) {
      f[c] = no_between ? 0.0 : std::numeric_limits<double>::infinity();
    } else {
      f[c] = no_between ? 0.0 : ssb / (ssw[c] / df_within);
    }
  }
  return f;
}

std::vector<std::size_t> select_top_k(std::span<const double> scores, std::size_t k) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  // NaN ranks last.
  auto key = [&](std::size_t i) {
    return std::isnan(scores[i]) ? -std::numeric_limits<double>::infinity() : scores[i];
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return key(a) > key(b); });
  order.resize(std::min(k, order.size()));
  std::sort(order.begin(), order.end());
  return order;
}

Standardizer Standardizer::fit(const FeatureMatrix& X) {
  if (X.empty()) throw LearnerError("cannot fit a standardizer on an empty matrix");
  const std::size_t d = X.cols();
  const double n = static_cast<double>(X.rows());
  Standardizer s;
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 0.0);
  for (std::size_t r = 0; r < X.rows(); ++r) {
    const auto row = X.row(r);
    for (std::size_t c = 0; c < d; ++c) s.mean[c] += row[c];
  }
  for (auto& m : s.mean) m /= n;
  for (std::size_t r = 0; r < X.rows(); ++r) {
    const auto row = X.row(r);
    for (std::size_t c = 0; c < d; ++c) {
      const double dev = row[c] - s.mean[c];
      s.scale[c] += dev * dev;
    }
  }
  for (std::size_t c = 0; c < d; ++c) {
    const double sd = std::sqrt(s.scale[c] / n);
    s.scale[c] = sd > 1e-12 * std::max(1.0, std::abs(s.mean[c])) ? sd : 1.0;
  }
  return s;
}

void Standardizer::apply_in_place(std::span<double> row) const {
  for (std::size_t c = 0; c < row.size(); ++c) row[c] = (row[c] - mean[c]) / scale[c];
}

FeatureMatrix Standardizer::apply(const FeatureMatrix& X) const {
  if (X.cols() != mean.size()) throw LearnerError("standardizer dimension mismatch");
  FeatureMatrix out = X;
  for (std::size_t r = 0; r < out.rows(); ++r) apply_in_place(out.row(r));
  return out;
}

double gaussian_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    d2 += t * t;
  }
  return std::exp(-gamma * d2);
}

double SvmModel::decision_prepared(std::span<const double> x) const {
  double f = bias;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    f += alphas[i] * sv_labels[i] * gaussian_kernel(support_vectors.row(i), x, gamma);
  }
  return f;
}

double SvmModel::decision(std::span<const double> raw) const {
  if (raw.size() != input_dimension) {
    throw LearnerError("feature dimension " + std::to_string(raw.size()) +
                       " does not match model input dimension " +
                       std::to_string(input_dimension));
  }
  std::vector<double> x(selected_indices.size());
  for (std::size_t c = 0; c < x.size(); ++c) {
    x[c] = (raw[selected_indices[c]] - feature_mean[c]) / feature_std[c];
  }
  return decision_prepared(x);
}

Prediction predict(const SvmModel& model, std::span<const double> raw) {
  const double f = model.decision(raw);
  return {f > 0.0 ? kPositive : kNegative, f};
}

// SMO with second-order working-set selection: i is the maximal KKT
// violator, j maximizes the second-order objective decrease.
DualSolution solve_dual(std::span<const double> kernel, std::size_t stride,
                        std::span<const std::size_t> index, std::span<const int> y, double C,
                        const SmoOptions& options) {
  const std::size_t n = y.size();
  if (!(C > 0.0)) throw LearnerError("C must be positive");
  auto kidx = [&](std::size_t t) { return index.empty() ? t : index[t]; };
  auto K = [&](std::size_t a, std::size_t b) { return kernel[kidx(a) * stride + kidx(b)]; };

  constexpr double kTau = 1e-12;
  std::vector<double> alpha(n, 0.0), G(n, -1.0), QD(n);
  for (std::size_t t = 0; t < n; ++t) QD[t] = K(t, t);
  std::vector<double> Qi(n), Qj(n);
  auto load_row = [&](std::size_t i, std::vector<double>& out) {
    const auto base = kidx(i) * stride;
    for (std::size_t t = 0; t < n; ++t) out[t] = y[i] * y[t] * kernel[base + kidx(t)];
  };
  auto upper = [&](std::size_t t) { return alpha[t] >= C; };
  auto lower = [&](std::size_t t) { return alpha[t] <= 0.0; };

  std::size_t iter = 0;
  while (iter < options.max_iterations) {
    double gmax = -std::numeric_limits<double>::infinity();
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] == kPositive) {
        if (!upper(t) && -G[t] >= gmax) {
          gmax = -G[t];
          i = t;
        }
      } else if (!lower(t) && G[t] >= gmax) {
        gmax = G[t];
        i = t;
      }
    }
    if (i == n) break;
    load_row(i, Qi);

    double gmax2 = -std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    std::size_t j = n;
    for (std::size_t t = 0; t < n; ++t) {
      double grad_diff, quad;
      if (y[t] == kPositive) {
        if (lower(t)) continue;
        gmax2 = std::max(gmax2, G[t]);
        grad_diff = gmax + G[t];
        quad = QD[i] + QD[t] - 2.0 * y[i] * Qi[t];
      } else {
        if (upper(t)) continue;
        gmax2 = std::max(gmax2, -G[t]);
        grad_diff = gmax - G[t];
        quad = QD[i] + QD[t] + 2.0 * y[i] * Qi[t];
      }
      if (grad_diff > 0.0) {
        const double obj = -(grad_diff * grad_diff) / (quad > 0.0 ? quad : kTau);
        if (obj <= best) {
          best = obj;
          j = t;
        }
      }
    }
    if (gmax + gmax2 < options.tolerance || j == n) break;
    ++iter;
    load_row(j, Qj);

    const double old_i = alpha[i], old_j = alpha[j];
    if (y[i] != y[j]) {
      double quad = QD[i] + QD[j] + 2.0 * Qi[j];
      if (quad <= 0.0) quad = kTau;
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = C - diff;
        }
      } else if (alpha[j] > C) {
        alpha[j] = C;
        alpha[i] = C + diff;
      }
    } else {
      double quad = QD[i] + QD[j] - 2.0 * Qi[j];
      if (quad <= 0.0) quad = kTau;
      const double delta = (G[i] - G[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = sum - C;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > C) {
        if (alpha[j] > C) {
          alpha[j] = C;
          alpha[i] = sum - C;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }
    const double di = alpha[i] - old_i, dj = alpha[j] - old_j;
    for (std::size_t t = 0; t < n; ++t) G[t] += Qi[t] * di + Qj[t] * dj;
  }

  // Offset: mean of y*G over free variables, else the midpoint of the
  // feasible interval.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yG = y[t] * G[t];
    if (upper(t)) {
      if (y[t] == kNegative) ub = std::min(ub, yG); else lb = std::max(lb, yG);
    } else if (lower(t)) {
      if (y[t] == kPositive) ub = std::min(ub, yG); else lb = std::max(lb, yG);
    } else {
      ++n_free;
      sum_free += yG;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;

  DualSolution sol;
  // With G = Q alpha - 1: alpha'Q alpha = sum alpha_t (G_t + 1).
  double quad_term = 0.0, linear = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    quad_term += alpha[t] * (G[t] + 1.0);
    linear += alpha[t];
  }
  sol.objective = linear - 0.5 * quad_term;
  sol.alpha = std::move(alpha);
  sol.bias = -rho;
  sol.iterations = iter;
  return sol;
}

std::vector<double> squared_distances(const FeatureMatrix& X) {
  const std::size_t n = X.rows();
  std::vector<double> D(n * n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    const auto ra = X.row(a);
    for (std::size_t b = a + 1; b < n; ++b) {
      const auto rb = X.row(b);
      double d2 = 0.0;
      for (std::size_t c = 0; c < ra.size(); ++c) {
        const double t = ra[c] - rb[c];
        d2 += t * t;
      }
      D[a * n + b] = D[b * n + a] = d2;
    }
  }
  return D;
}

namespace {

std::vector<double> kernel_from_distances(const std::vector<double>& D, double gamma) {
  std::vector<double> K(D.size());
  for (std::size_t i = 0; i < D.size(); ++i) K[i] = std::exp(-gamma * D[i]);
  return K;
}

SvmModel model_from_solution(const FeatureMatrix& X, std::span<const int> y,
                             const DualSolution& sol, double C, double gamma) {
  constexpr double kSupportThreshold = 1e-8;
  SvmModel m;
  m.C = C;
  m.gamma = gamma;
  m.bias = sol.bias;
  m.input_dimension = X.cols();
  m.support_vectors = FeatureMatrix(X.cols());
  for (std::size_t t = 0; t < y.size(); ++t) {
    if (sol.alpha[t] > kSupportThreshold) {
      m.support_vectors.append(X.row(t), X.id(t));
      m.alphas.push_back(sol.alpha[t]);
      m.sv_labels.push_back(y[t]);
    }
  }
  m.selected_indices.resize(X.cols());
  std::iota(m.selected_indices.begin(), m.selected_indices.end(), std::size_t{0});
  m.feature_mean.assign(X.cols(), 0.0);
  m.feature_std.assign(X.cols(), 1.0);
  return m;
}

// Accuracy of one fold split on a precomputed kernel.
double folds_accuracy(const std::vector<double>& K, std::size_t n, std::span<const int> y,
                      std::span<const int> fold_of, int folds, double C) {
  std::size_t correct = 0;
  std::vector<std::size_t> train, test;
  std::vector<int> y_train;
  for (int f = 0; f < folds; ++f) {
    train.clear();
    test.clear();
    y_train.clear();
    for (std::size_t t = 0; t < n; ++t) {
      if (fold_of[t] == f) {
        test.push_back(t);
      } else {
        train.push_back(t);
        y_train.push_back(y[t]);
      }
    }
    if (test.empty()) continue;
    const bool both = std::count(y_train.begin(), y_train.end(), kPositive) > 0 &&
                      std::count(y_train.begin(), y_train.end(), kNegative) > 0;
    if (!both) throw LearnerError("a CV training fold lost one class");
    const auto sol = solve_dual(K, n, train, y_train, C);
    for (auto s : test) {
      double f_val = sol.bias;
      for (std::size_t a = 0; a < train.size(); ++a) {
        if (sol.alpha[a] > 0.0) f_val += sol.alpha[a] * y_train[a] * K[train[a] * n + s];
      }
      const int label = f_val > 0.0 ? kPositive : kNegative;
      correct += label == y[s];
    }
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

int fold_count(std::span<const int> fold_of) {
  return fold_of.empty() ? 0 : *std::max_element(fold_of.begin(), fold_of.end()) + 1;
}

}  // namespace

SvmModel train_gsvm(const FeatureMatrix& X, std::span<const int> y, double C, double gamma,
                    const SmoOptions& options) {
  check_labels(X, y);
  if (!(gamma > 0.0)) throw LearnerError("gamma must be positive");
  for (std::size_t r = 0; r < X.rows(); ++r) {
    for (double v : X.row(r)) {
      if (!std::isfinite(v)) throw LearnerError("non-finite feature in row " + X.id(r));
    }
  }
  const auto K = kernel_from_distances(squared_distances(X), gamma);
  const auto sol = solve_dual(K, X.rows(), {}, y, C, options);
  return model_from_solution(X, y, sol, C, gamma);
}

std::vector<double> c_grid() {
  std::vector<double> g;
  for (int e = -5; e <= 15; e += 2) g.push_back(std::ldexp(1.0, e));
  return g;
}

std::vector<double> gamma_grid() {
  std::vector<double> g;
  for (int e = -15; e <= 3; e += 2) g.push_back(std::ldexp(1.0, e));
  return g;
}

std::vector<int> stratified_folds(std::span<const int> y, int folds, std::uint64_t seed,
                                  std::span<const std::size_t> groups) {
  if (folds < 2) throw LearnerError("need at least 2 folds");
  if (!groups.empty() && groups.size() != y.size()) {
    throw LearnerError("group count does not match label count");
  }
  for (int label : {kNegative, kPositive}) {
    if (count_label(y, label) < static_cast<std::size_t>(folds)) {
      throw LearnerError("class too small for stratification: " +
                         std::to_string(count_label(y, label)) + " samples of label " +
                         std::to_string(label) + " for " + std::to_string(folds) + " folds");
    }
  }
  Engine eng(derive_seed(seed, 0xf01d));
  std::vector<int> fold_of(y.size(), -1);
  if (groups.empty()) {
    for (int label : {kNegative, kPositive}) {
      std::vector<std::size_t> members;
      for (std::size_t t = 0; t < y.size(); ++t) {
        if (y[t] == label) members.push_back(t);
      }
      shuffle(members.begin(), members.end(), eng);
      for (std::size_t k = 0; k < members.size(); ++k) {
        fold_of[members[k]] = static_cast<int>(k % static_cast<std::size_t>(folds));
      }
    }
    return fold_of;
  }
  // Groups in first-appearance order, then shuffled and dealt out.
  std::vector<std::size_t> distinct;
  for (auto g : groups) {
    if (std::find(distinct.begin(), distinct.end(), g) == distinct.end()) distinct.push_back(g);
  }
  if (distinct.size() < static_cast<std::size_t>(folds)) {
    throw LearnerError("fewer groups than folds");
  }
  shuffle(distinct.begin(), distinct.end(), eng);
  for (std::size_t k = 0; k < distinct.size(); ++k) {
    const int f = static_cast<int>(k % static_cast<std::size_t>(folds));
    for (std::size_t t = 0; t < y.size(); ++t) {
      if (groups[t] == distinct[k]) fold_of[t] = f;
    }
  }
  return fold_of;
}

double cross_validate(const FeatureMatrix& X, std::span<const int> y, double C, double gamma,
                      std::span<const int> fold_of) {
  check_labels(X, y);
  if (fold_of.size() != y.size()) throw LearnerError("fold assignment size mismatch");
  const auto K = kernel_from_distances(squared_distances(X), gamma);
  return folds_accuracy(K, X.rows(), y, fold_of, fold_count(fold_of), C);
}

GridResult grid_search_folds(const FeatureMatrix& X, std::span<const int> y,
                             std::span<const int> fold_of, unsigned threads) {
  check_labels(X, y);
  if (fold_of.size() != y.size()) throw LearnerError("fold assignment size mismatch");
  const auto Cs = c_grid();
  const auto gammas = gamma_grid();
  const auto D = squared_distances(X);
  const int folds = fold_count(fold_of);
  const std::size_t n = X.rows();

  std::vector<double> acc(Cs.size() * gammas.size());
  parallel_for(gammas.size(), threads, [&](std::size_t g) {
    const auto K = kernel_from_distances(D, gammas[g]);
    for (std::size_t c = 0; c < Cs.size(); ++c) {
      acc[c * gammas.size() + g] = folds_accuracy(K, n, y, fold_of, folds, Cs[c]);
    }
  });
  // Row-major over (C, gamma) ascending: the first strict maximum wins ties.
  GridResult best{Cs[0], gammas[0], -1.0};
  for (std::size_t c = 0; c < Cs.size(); ++c) {
    for (std::size_t g = 0; g < gammas.size(); ++g) {
      if (acc[c * gammas.size() + g] > best.cv_accuracy) {
        best = {Cs[c], gammas[g], acc[c * gammas.size() + g]};
      }
    }
  }
  return best;
}

GridResult grid_search(const FeatureMatrix& X, std::span<const int> y, int folds,
                       std::uint64_t seed, unsigned threads,
                       std::span<const std::size_t> groups) {
  check_labels(X, y);
  const auto fold_of = stratified_folds(y, folds, seed, groups);
  return grid_search_folds(X, y, fold_of, threads);
}

namespace {

std::size_t distinct_count(std::span<const std::size_t> groups) {
  std::vector<std::size_t> g(groups.begin(), groups.end());
  std::sort(g.begin(), g.end());
  return static_cast<std::size_t>(std::unique(g.begin(), g.end()) - g.begin());
}

// Folds actually usable: limited by the smaller class and the group count.
int usable_folds(std::span<const int> y, int requested, std::span<const std::size_t> groups) {
  std::size_t limit = std::min(count_label(y, kNegative), count_label(y, kPositive));
  if (!groups.empty()) limit = std::min(limit, distinct_count(groups));
  return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(requested), limit));
}

}  // namespace

TrainedClassifier fit_classifier(const FeatureMatrix& X, std::span<const int> y,
                                 const LearnerParams& params,
                                 std::span<const std::size_t> groups) {
  check_labels(X, y);
  if (params.k_features == 0) throw LearnerError("k_features must be >= 1");
  TrainedClassifier out;
  out.f_scores = anova_f(X, y);
  const auto selected = select_top_k(out.f_scores, params.k_features);
  const auto Xs = X.select_columns(selected);
  out.standardizer = Standardizer::fit(Xs);
  const auto Z = out.standardizer.apply(Xs);

  const int folds = usable_folds(y, params.folds, groups);
  if (folds >= 2) {
    out.grid = grid_search(Z, y, folds, params.fold_seed, params.threads, groups);
  } else {
    out.grid = {1.0, 1.0 / static_cast<double>(selected.size()), 0.0};
  }
  out.model = train_gsvm(Z, y, out.grid.C, out.grid.gamma);
  out.model.selected_indices = selected;
  out.model.feature_mean = out.standardizer.mean;
  out.model.feature_std = out.standardizer.scale;
  out.model.input_dimension = X.cols();
  return out;
}

double stack_cv_accuracy(const FeatureMatrix& X, std::span<const int> y,
                         const LearnerParams& params, std::span<const std::size_t> groups) {
  check_labels(X, y);
  const int folds = usable_folds(y, params.folds, groups);
  if (folds < 2) throw LearnerError("too few samples for cross-validation");
  const auto selected = select_top_k(anova_f(X, y), params.k_features);
  const auto Xs = X.select_columns(selected);
  const auto Z = Standardizer::fit(Xs).apply(Xs);
  const auto grid = grid_search(Z, y, folds, params.fold_seed, params.threads, groups);
  const auto fresh = stratified_folds(y, folds, derive_seed(params.fold_seed, 0xc0ffee), groups);
  return cross_validate(Z, y, grid.C, grid.gamma, fresh);
}

namespace {
constexpr int kModelFormatVersion = 1;
}

std::string model_to_json(const SvmModel& m) {
  nlohmann::json j;
  j["format"] = "atsteg-gsvm";
  j["version"] = kModelFormatVersion;
  j["gamma"] = m.gamma;
  j["C"] = m.C;
  j["bias"] = m.bias;
  j["alphas"] = m.alphas;
  j["labels"] = m.sv_labels;
  j["input_dimension"] = m.input_dimension;
  j["selected_indices"] = m.selected_indices;
  j["feature_mean"] = m.feature_mean;
  j["feature_std"] = m.feature_std;
  auto sv = nlohmann::json::array();
  for (std::size_t r = 0; r < m.support_vectors.rows(); ++r) {
    const auto row = m.support_vectors.row(r);
    sv.push_back(std::vector<double>(row.begin(), row.end()));
  }
  j["support_vectors"] = std::move(sv);
  return j.dump();
}

SvmModel model_from_json(const std::string& text) {
  SvmModel m;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format") != "atsteg-gsvm") throw LearnerError("not a model document");
    if (j.at("version").get<int>() != kModelFormatVersion) {
      throw LearnerError("unsupported model version " + j.at("version").dump());
    }
    m.gamma = j.at("gamma").get<double>();
    m.C = j.at("C").get<double>();
    m.bias = j.at("bias").get<double>();
    m.alphas = j.at("alphas").get<std::vector<double>>();
    m.sv_labels = j.at("labels").get<std::vector<int>>();
    m.input_dimension = j.at("input_dimension").get<std::size_t>();
    m.selected_indices = j.at("selected_indices").get<std::vector<std::size_t>>();
    m.feature_mean = j.at("feature_mean").get<std::vector<double>>();
    m.feature_std = j.at("feature_std").get<std::vector<double>>();
    m.support_vectors = FeatureMatrix(m.selected_indices.size());
    for (const auto& row : j.at("support_vectors")) {
      m.support_vectors.append(row.get<std::vector<double>>(), {});
    }
  } catch (const nlohmann::json::exception& e) {
    throw LearnerError(std::string("malformed model JSON: ") + e.what());
  }
  if (m.alphas.size() != m.sv_labels.size() || m.alphas.size() != m.support_vectors.rows() ||
      m.feature_mean.size() != m.selected_indices.size() ||
      m.feature_std.size() != m.selected_indices.size()) {
    throw LearnerError("inconsistent model JSON");
  }
  return m;
}

}  // namespace atsteg
