#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace trafficlens {

struct MinimizeOptions {
  int max_iter = 500;
  double rel_tol = 1e-10;    // stop when relative improvement falls below this
  double grad_step = 1e-6;   // central-difference step, scaled by max(1, |x_i|)
};

struct MinimizeResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

template <typename F>
std::vector<double> numerical_gradient(F& f, const std::vector<double>& x, double step) {
  std::vector<double> g(x.size());
  std::vector<double> probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = step * std::max(1.0, std::abs(x[i]));
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// BFGS on an inverse-Hessian approximation with Armijo backtracking and
// numerical gradients. Non-finite objective values are treated as +inf so
// the line search backs away from them.
template <typename F>
MinimizeResult minimize_bfgs(F&& objective, std::vector<double> x0,
                             const MinimizeOptions& opts = {}) {
  auto f = [&](const std::vector<double>& x) {
    const double v = objective(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };
  const std::size_t n = x0.size();
  MinimizeResult result;
  result.x = std::move(x0);
  result.value = f(result.x);
  if (n == 0) {
    result.converged = true;
    return result;
  }

  std::vector<double> hinv(n * n, 0.0);
  auto reset = [&](double scale) {
    std::fill(hinv.begin(), hinv.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) hinv[i * n + i] = scale;
  };
  reset(1.0);
  bool scaled = false;

  std::vector<double> g = numerical_gradient(f, result.x, opts.grad_step);
  std::vector<double> dir(n), trial(n), s(n), y(n), hy(n);

  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    result.iterations = iter;
    double gnorm = 0.0;
    for (double gi : g) gnorm += gi * gi;
    if (gnorm == 0.0) {
      result.converged = true;
      return result;
    }

    bool stepped = false;
    double new_value = result.value;
    for (int attempt = 0; attempt < 2 && !stepped; ++attempt) {
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc -= hinv[i * n + j] * g[j];
        dir[i] = acc;
      }
      double slope = 0.0;
      for (std::size_t i = 0; i < n; ++i) slope += g[i] * dir[i];
      if (!(slope < 0.0)) {
        reset(1.0);
        scaled = false;
        continue;
      }
      // Before curvature information exists, limit the step to unit length
      // so a steep start cannot jump into a flat, saturated region.
      double t = 1.0;
      if (!scaled) {
        double dnorm = 0.0;
        for (double di : dir) dnorm += di * di;
        t = std::min(1.0, 1.0 / std::sqrt(dnorm));
      }
      while (t > 1e-20) {
        for (std::size_t i = 0; i < n; ++i) trial[i] = result.x[i] + t * dir[i];
        new_value = f(trial);
        if (new_value <= result.value + 1e-4 * t * slope) {
          stepped = true;
          break;
        }
        t *= 0.5;
      }
      if (!stepped) {
        reset(1.0);
        scaled = false;
      }
    }
    if (!stepped) {
      // No descent possible at working precision.
      result.converged = true;
      return result;
    }

    const double improvement =
        (result.value - new_value) / std::max(std::abs(result.value), 1e-300);
    std::vector<double> g_new = numerical_gradient(f, trial, opts.grad_step);
    double sy = 0.0;
    double yy = 0.0;
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = trial[i] - result.x[i];
      y[i] = g_new[i] - g[i];
      sy += s[i] * y[i];
      yy += y[i] * y[i];
      ss += s[i] * s[i];
    }
    result.x = trial;
    result.value = new_value;
    g = std::move(g_new);

    // Skip the update when curvature is not positive.
    if (sy > 1e-12 * std::sqrt(yy * ss)) {
      if (!scaled) {
        reset(sy / yy);
        scaled = true;
      }
      // H+ = (I - rho s y^T) H (I - rho y s^T) + rho s s^T
      const double rho = 1.0 / sy;
      double yhy = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += hinv[i * n + j] * y[j];
        hy[i] = acc;
        yhy += y[i] * acc;
      }
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          hinv[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) +
                             (rho * rho * yhy + rho) * s[i] * s[j];
        }
      }
    }

    if (improvement < opts.rel_tol) {
      result.converged = true;
      return result;
    }
  }
  result.converged = false;
  return result;
}

}  // namespace trafficlens
