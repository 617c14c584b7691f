#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "whitekit/error.hpp"
#include "whitekit/matrix.hpp"
#include "whitekit/whitening.hpp"

namespace whitekit {

using Label = std::uint32_t;

/// Embeddings with one class id per row.
struct LabeledEmbeddings {
  Matrix features;
  std::vector<Label> labels;
  std::size_t num_classes;

  LabeledEmbeddings(Matrix x, std::vector<Label> y)
      : LabeledEmbeddings(std::move(x), std::move(y), 0) {}

  /// num_classes = 0 means max(label) + 1.
  LabeledEmbeddings(Matrix x, std::vector<Label> y, std::size_t classes)
      : features(std::move(x)), labels(std::move(y)), num_classes(classes) {
    if (labels.size() != features.rows()) {
      throw Error(ErrorKind::ShapeMismatch, std::to_string(labels.size()) + " labels for " +
                                                std::to_string(features.rows()) + " rows");
    }
    const std::size_t needed = static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end())) + 1;
    if (num_classes == 0) num_classes = needed;
    if (needed > num_classes) {
      throw Error(ErrorKind::ShapeMismatch, "label " + std::to_string(needed - 1) +
                                                " is out of range for " +
                                                std::to_string(num_classes) + " classes");
    }
  }

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dim() const noexcept { return features.cols(); }
};

struct ProbeScores {
  double top1 = 0.0;
  double top5 = 0.0;
};

struct LinearProbeConfig {
  double l2 = 1e-4;
  double lr = 0.1;
  std::size_t max_iters = 2000;
  double tol = 1e-6;
};

struct LinearModel {
  Matrix weights;                    // f x classes
  std::vector<double> bias;          // classes
  std::size_t iterations = 0;        // attempted steps, accepted or not
  bool converged = false;
  std::vector<double> loss_history;  // loss after every accepted step, starting at init
};

inline constexpr std::size_t kTopK = 5;

namespace detail {

inline void require_same_dim(std::size_t expected, std::size_t got) {
  if (expected != got) {
    throw Error(ErrorKind::ShapeMismatch, "feature dimension " + std::to_string(got) +
                                              " does not match " + std::to_string(expected));
  }
}

/// Fraction of rows whose label is among the first 1 / first 5 ranked classes.
template <typename RankFn>
ProbeScores score_rankings(const LabeledEmbeddings& test, RankFn&& ranked_classes) {
  std::size_t hit1 = 0;
  std::size_t hit5 = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const std::vector<Label> ranking = ranked_classes(i);
    const Label truth = test.labels[i];
    if (!ranking.empty() && ranking[0] == truth) ++hit1;
    const std::size_t limit = std::min(kTopK, ranking.size());
    if (std::find(ranking.begin(), ranking.begin() + limit, truth) != ranking.begin() + limit) {
      ++hit5;
    }
  }
  const double n = static_cast<double>(test.size());
  return {static_cast<double>(hit1) / n, static_cast<double>(hit5) / n};
}

struct SoftmaxLoss {
  double loss;
  Matrix grad_w;
  std::vector<double> grad_b;
};

inline SoftmaxLoss softmax_loss(const LabeledEmbeddings& data, const Matrix& w,
                                std::span<const double> b, double l2) {
  const std::size_t n = data.size();
  const std::size_t f = data.dim();
  const std::size_t k = w.cols();
  Matrix residual = matmul(data.features, w);  // logits, then P - Y
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto z = residual.row(i);
    double zmax = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      z[c] += b[c];
      zmax = std::max(zmax, z[c]);
    }
    double denom = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      z[c] = std::exp(z[c] - zmax);
      denom += z[c];
    }
    const Label y = data.labels[i];
    loss += -std::log(z[y] / denom);
    for (std::size_t c = 0; c < k; ++c) z[c] /= denom;
    z[y] -= 1.0;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  loss *= inv_n;

  Matrix grad_w = matmul_tn(data.features, residual);
  grad_w *= inv_n;
  double reg = 0.0;
  for (std::size_t i = 0; i < f * k; ++i) {
    const double wi = w.data()[i];
    reg += wi * wi;
    grad_w.data()[i] += l2 * wi;
  }
  loss += 0.5 * l2 * reg;

  std::vector<double> grad_b(k, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < k; ++c) grad_b[c] += residual(i, c);
  for (double& g : grad_b) g *= inv_n;
  return {loss, std::move(grad_w), std::move(grad_b)};
}

}  // namespace detail

/**
 * Multinomial logistic regression fit by full-batch gradient descent.
 *
 * Starts from zero weights and a constant step size. A step that raises the
 * L2-regularized cross-entropy is rejected and the step size halved. Stops
 * once the gradient max-norm is below tol or max_iters steps were tried.
 */
inline LinearModel linear_probe_fit(const LabeledEmbeddings& train,
                                    const LinearProbeConfig& cfg = {}) {
  if (!(cfg.lr > 0.0) || !(cfg.l2 >= 0.0) || !(cfg.tol >= 0.0)) {
    throw Error(ErrorKind::InvalidConfig, "linear probe needs lr > 0, l2 >= 0, tol >= 0");
  }
  const Label first = train.labels.front();
  if (std::all_of(train.labels.begin(), train.labels.end(), [&](Label y) { return y == first; })) {
    throw Error(ErrorKind::SingleClass,
                "training labels contain a single class (" + std::to_string(first) + ")");
  }

  const std::size_t k = train.num_classes;
  LinearModel model{Matrix(train.dim(), k), std::vector<double>(k, 0.0), 0, false, {}};
  auto current = detail::softmax_loss(train, model.weights, model.bias, cfg.l2);
  model.loss_history.push_back(current.loss);

  double step = cfg.lr;
  while (model.iterations < cfg.max_iters) {
    double gmax = 0.0;
    for (double g : current.grad_w.data()) gmax = std::max(gmax, std::abs(g));
    for (double g : current.grad_b) gmax = std::max(gmax, std::abs(g));
    if (gmax < cfg.tol) {
      model.converged = true;
      break;
    }
    if (step < 1e-30) break;

    ++model.iterations;
    Matrix w = model.weights;
    for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] -= step * current.grad_w.data()[i];
    std::vector<double> b = model.bias;
    for (std::size_t c = 0; c < k; ++c) b[c] -= step * current.grad_b[c];

    auto candidate = detail::softmax_loss(train, w, b, cfg.l2);
    if (!(candidate.loss <= current.loss)) {
      step *= 0.5;
      continue;
    }
    model.weights = std::move(w);
    model.bias = std::move(b);
    current = std::move(candidate);
    model.loss_history.push_back(current.loss);
  }
  return model;
}

/// Classes ordered by logit, ties to the lower class id.
inline std::vector<Label> rank_by_logits(std::span<const double> logits) {
  std::vector<Label> order(logits.size());
  std::iota(order.begin(), order.end(), Label{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Label a, Label b) { return logits[a] > logits[b]; });
  return order;
}

inline ProbeScores linear_probe_eval(const LinearModel& model, const LabeledEmbeddings& test) {
  detail::require_same_dim(model.weights.rows(), test.dim());
  const Matrix logits = matmul(test.features, model.weights);
  std::vector<double> row(model.bias.size());
  return detail::score_rankings(test, [&](std::size_t i) {
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = logits(i, c) + model.bias[c];
    return rank_by_logits(row);
  });
}

/**
 * Class ranking for one query from its k nearest training rows.
 *
 * Neighbors are the k smallest squared Euclidean distances, ties to the
 * lower training index. Classes rank by vote count (desc), then distance of
 * their nearest voting member (asc), then class id; classes without votes
 * follow in id order.
 */
inline std::vector<Label> knn_rank_classes(const LabeledEmbeddings& train,
                                           std::span<const double> query, std::size_t k) {
  const std::size_t n = train.size();
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = train.features.row(i);
    double d = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      const double diff = row[j] - query[j];
      d += diff * diff;
    }
    dist[i] = {d, i};
  }
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());

  const std::size_t classes = train.num_classes;
  std::vector<std::size_t> votes(classes, 0);
  std::vector<double> nearest(classes, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < k; ++i) {
    const Label y = train.labels[dist[i].second];
    ++votes[y];
    nearest[y] = std::min(nearest[y], dist[i].first);
  }
  std::vector<Label> order(classes);
  std::iota(order.begin(), order.end(), Label{0});
  std::sort(order.begin(), order.end(), [&](Label a, Label b) {
    if (votes[a] != votes[b]) return votes[a] > votes[b];
    if (nearest[a] != nearest[b]) return nearest[a] < nearest[b];
    return a < b;
  });
  return order;
}

/// Exact brute-force k-NN classifier, unweighted majority vote.
inline ProbeScores knn_probe(const LabeledEmbeddings& train, const LabeledEmbeddings& test,
                             std::size_t k) {
  if (train.size() == 0) throw Error(ErrorKind::EmptyTrain, "no training rows");
  if (k < 1 || k > train.size()) {
    throw Error(ErrorKind::InvalidConfig, "k = " + std::to_string(k) + " must be in [1, " +
                                              std::to_string(train.size()) + "]");
  }
  detail::require_same_dim(train.dim(), test.dim());
  return detail::score_rankings(
      test, [&](std::size_t i) { return knn_rank_classes(train, test.features.row(i), k); });
}

struct WhiteningGain {
  ProbeScores raw;
  ProbeScores whitened;
};

/// Replaces the features, keeping labels and class count.
inline LabeledEmbeddings with_features(const LabeledEmbeddings& data, Matrix features) {
  return LabeledEmbeddings(std::move(features), data.labels, data.num_classes);
}

/// k-NN scores before and after whitening. The transform is fit on the
/// training rows only and applied unchanged to the test rows.
inline WhiteningGain whitening_gain(const LabeledEmbeddings& train, const LabeledEmbeddings& test,
                                    const WhiteningConfig& cfg, std::size_t k) {
  detail::require_same_dim(train.dim(), test.dim());
  const WhiteningResult fit = whiten(train.features, cfg);
  const LabeledEmbeddings train_w = with_features(train, fit.whitened);
  const LabeledEmbeddings test_w = with_features(test, fit.apply(test.features));
  return {knn_probe(train, test, k), knn_probe(train_w, test_w, k)};
}

}  // namespace whitekit
