#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "trafficlens/core/error.hpp"
#include "trafficlens/core/matrix.hpp"
#include "trafficlens/core/numeric.hpp"
#include "trafficlens/tabular/gbdt.hpp"

namespace trafficlens::tabular {

struct LogisticParams {
  int steps = 1000;
  double step_size = 0.0;  // 0 selects 1/L from the data
  double l2 = 1e-4;

  bool operator==(const LogisticParams&) const = default;
};

// Multinomial logistic regression. weights is K x (D+1); the last column
// is the bias.
struct LogisticModel {
  int num_classes = 0;
  std::size_t num_features = 0;
  LogisticParams params;
  double step_size = 0.0;  // the rate actually used
  Matrix weights;
  std::vector<double> loss_history;

  bool operator==(const LogisticModel&) const = default;
};

inline void logits_row(const Matrix& W, std::span<const double> row, std::span<double> out) {
  const std::size_t D = row.size();
  for (std::size_t k = 0; k < W.rows(); ++k) {
    const auto w = W.row(k);
    double acc = w[D];
    for (std::size_t j = 0; j < D; ++j) acc += w[j] * row[j];
    out[k] = acc;
  }
}

inline void predict_row(const LogisticModel& m, std::span<const double> row, std::span<double> out) {
  logits_row(m.weights, row, out);
  softmax_inplace(out);
}

inline Matrix predict_proba(const LogisticModel& m, const Matrix& X) {
  require(X.cols() == m.num_features, ErrorKind::kShape,
          "feature matrix has " + std::to_string(X.cols()) + " columns, model expects " +
              std::to_string(m.num_features));
  Matrix out(X.rows(), static_cast<std::size_t>(m.num_classes));
  for (std::size_t r = 0; r < X.rows(); ++r) predict_row(m, X.row(r), out.row(r));
  return out;
}

// Mean softmax cross-entropy plus (l2/2)||W||^2. Writes dLoss/dW to grad
// when given.
inline double logistic_objective(const Matrix& W, const Matrix& X, std::span<const int> labels,
                                 double l2, Matrix* grad = nullptr) {
  const std::size_t n = X.rows();
  const std::size_t D = X.cols();
  const std::size_t K = W.rows();
  if (grad) *grad = Matrix(K, D + 1);
  std::vector<double> p(K);
  double loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto x = X.row(r);
    logits_row(W, x, p);
    softmax_inplace(p);
    const auto y = static_cast<std::size_t>(labels[r]);
    loss -= std::log(std::max(p[y], 1e-300));
    if (grad) {
      for (std::size_t k = 0; k < K; ++k) {
        const double d = (p[k] - (k == y ? 1.0 : 0.0)) * inv_n;
        auto g = grad->row(k);
        for (std::size_t j = 0; j < D; ++j) g[j] += d * x[j];
        g[D] += d;
      }
    }
  }
  loss *= inv_n;
  double sq = 0.0;
  for (double w : W.data()) sq += w * w;
  loss += 0.5 * l2 * sq;
  if (grad) {
    auto& g = grad->data();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += l2 * W.data()[i];
  }
  return loss;
}

// Upper bound on the gradient's Lipschitz constant: the softmax Hessian
// block is bounded by 1/2, times the largest eigenvalue of the augmented
// second-moment matrix (power iteration, padded by 10%), plus l2.
inline double logistic_lipschitz(const Matrix& X, double l2) {
  const std::size_t n = X.rows();
  const std::size_t D = X.cols() + 1;
  std::vector<double> v(D, 1.0 / std::sqrt(static_cast<double>(D))), next(D);
  double lambda = 0.0;
  for (int it = 0; it < 100; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      const auto x = X.row(r);
      double dot = v[D - 1];
      for (std::size_t j = 0; j + 1 < D; ++j) dot += x[j] * v[j];
      for (std::size_t j = 0; j + 1 < D; ++j) next[j] += dot * x[j];
      next[D - 1] += dot;
    }
    double norm = 0.0;
    for (double& e : next) {
      e /= static_cast<double>(n);
      norm += e * e;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) break;
    lambda = norm;
    for (std::size_t j = 0; j < D; ++j) v[j] = next[j] / norm;
  }
  return 0.5 * 1.1 * lambda + l2;
}

// Full-batch gradient descent from zero weights.
inline LogisticModel fit_logistic(const Matrix& X, std::span<const int> labels,
                                  const LogisticParams& params = {}, int num_classes = 3) {
  require(X.rows() > 0, ErrorKind::kShape, "cannot fit on zero rows");
  require(params.steps >= 0, ErrorKind::kConfig, "steps must be non-negative");
  require(params.l2 >= 0.0 && params.step_size >= 0.0, ErrorKind::kConfig,
          "step size and l2 must be non-negative");
  check_labels(labels, num_classes, X.rows());

  LogisticModel m;
  m.num_classes = num_classes;
  m.num_features = X.cols();
  m.params = params;
  m.step_size = params.step_size > 0.0 ? params.step_size : 1.0 / logistic_lipschitz(X, params.l2);
  m.weights = Matrix(static_cast<std::size_t>(num_classes), X.cols() + 1);
  Matrix grad;
  for (int step = 0; step < params.steps; ++step) {
    const double loss = logistic_objective(m.weights, X, labels, params.l2, &grad);
    m.loss_history.push_back(loss);
    auto& w = m.weights.data();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= m.step_size * grad.data()[i];
  }
  m.loss_history.push_back(logistic_objective(m.weights, X, labels, params.l2));
  return m;
}

}  // namespace trafficlens::tabular
