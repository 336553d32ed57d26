#pragma once

// L2-penalized logistic regression fitted by batch gradient descent with
// backtracking line search.

#include <algorithm>
#include <cmath>
#include <vector>

#include "netforest/core.hpp"
#include "netforest/parallel.hpp"

namespace netforest {

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// log(1 + e^z) without overflow.
inline double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

struct LogisticModel {
  std::vector<double> weights;
  double bias = 0.0;
  double l2_lambda = 1.0;
  std::size_t max_iter = 1000;
  std::size_t iterations = 0;
  std::vector<double> loss_history;  ///< objective after each accepted step, starting at w=0

  std::size_t n_features() const { return weights.size(); }

  double decision(std::span<const double> row) const {
    if (row.size() != weights.size())
      throw Error("logistic model expects " + std::to_string(weights.size()) + " features, got " +
                  std::to_string(row.size()));
    double z = bias;
    for (std::size_t j = 0; j < row.size(); ++j) z += weights[j] * row[j];
    return z;
  }

  Proba predict_proba(std::span<const double> row) const {
    const double p1 = sigmoid(decision(row));
    return {1.0 - p1, p1};
  }

  friend bool operator==(const LogisticModel&, const LogisticModel&) = default;
};

namespace detail {
// Rows are summed in fixed blocks and the block sums added in order, so the
// result does not depend on the thread count.
inline constexpr std::size_t kLogisticBlock = 256;

template <class Body>
std::vector<std::vector<double>> block_sums(std::size_t rows, std::size_t width, Body&& body) {
  const std::size_t blocks = (rows + kLogisticBlock - 1) / kLogisticBlock;
  std::vector<std::vector<double>> partial(blocks, std::vector<double>(width, 0.0));
  parallel_for(blocks, [&](std::size_t b) {
    const std::size_t end = std::min(rows, (b + 1) * kLogisticBlock);
    for (std::size_t i = b * kLogisticBlock; i < end; ++i) body(i, partial[b]);
  });
  return partial;
}

inline double score(std::span<const double> x, std::span<const double> w, double b) {
  double z = b;
  for (std::size_t j = 0; j < x.size(); ++j) z += w[j] * x[j];
  return z;
}
}  // namespace detail

/// Mean log-loss + lambda/2 ||w||^2; the bias is unpenalized.
inline double logistic_objective(const Dataset& ds, std::span<const double> w, double b, double lambda) {
  const auto partial = detail::block_sums(ds.rows(), 1, [&](std::size_t i, std::vector<double>& acc) {
    const double z = detail::score(ds.row(i), w, b);
    acc[0] += softplus(z) - static_cast<double>(code(ds.label(i))) * z;
  });
  double loss = 0;
  for (const auto& p : partial) loss += p[0];
  double norm2 = 0;
  for (double v : w) norm2 += v * v;
  return loss / static_cast<double>(ds.rows()) + 0.5 * lambda * norm2;
}

/// Gradient of logistic_objective; the last entry is d/d bias.
inline std::vector<double> logistic_gradient(const Dataset& ds, std::span<const double> w, double b, double lambda) {
  const std::size_t d = ds.cols();
  const auto partial = detail::block_sums(ds.rows(), d + 1, [&](std::size_t i, std::vector<double>& acc) {
    const auto x = ds.row(i);
    const double r = sigmoid(detail::score(x, w, b)) - static_cast<double>(code(ds.label(i)));
    for (std::size_t j = 0; j < d; ++j) acc[j] += r * x[j];
    acc[d] += r;
  });
  std::vector<double> g(d + 1, 0.0);
  for (const auto& p : partial)
    for (std::size_t j = 0; j <= d; ++j) g[j] += p[j];
  const double n = static_cast<double>(ds.rows());
  for (std::size_t j = 0; j < d; ++j) g[j] = g[j] / n + lambda * w[j];
  g[d] /= n;
  return g;
}

/// Starts at w = 0, b = 0. Stops after max_iter accepted steps, when the
/// gradient norm drops below 1e-6, or when the line search cannot make
/// progress. The seed is accepted for interface symmetry; the fit is
/// deterministic.
inline LogisticModel logreg_fit(const Dataset& ds, double l2_lambda, std::size_t max_iter, RandomSeed = {}) {
  if (ds.empty()) throw Error("cannot fit logistic regression on an empty dataset");
  if (!(l2_lambda >= 0) || !std::isfinite(l2_lambda)) throw Error("l2 lambda must be finite and >= 0");
  for (double v : ds.values())
    if (!std::isfinite(v)) throw Error("logistic regression requires finite features");

  const std::size_t d = ds.cols();
  LogisticModel m;
  m.weights.assign(d, 0.0);
  m.l2_lambda = l2_lambda;
  m.max_iter = max_iter;
  double f = logistic_objective(ds, m.weights, m.bias, l2_lambda);
  m.loss_history.push_back(f);
  double step = 1.0;
  std::vector<double> w_new(d);

  for (std::size_t it = 0; it < max_iter; ++it) {
    const auto g = logistic_gradient(ds, m.weights, m.bias, l2_lambda);
    double gnorm2 = 0;
    for (double v : g) gnorm2 += v * v;
    if (std::sqrt(gnorm2) < 1e-6) break;

    bool accepted = false;
    step = std::min(1.0, step * 2.0);
    while (step > 1e-16) {
      for (std::size_t j = 0; j < d; ++j) w_new[j] = m.weights[j] - step * g[j];
      const double b_new = m.bias - step * g[d];
      const double f_new = logistic_objective(ds, w_new, b_new, l2_lambda);
      if (f_new <= f - 1e-4 * step * gnorm2) {
        m.weights = w_new;
        m.bias = b_new;
        f = f_new;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    ++m.iterations;
    m.loss_history.push_back(f);
  }
  return m;
}

}  // namespace netforest
