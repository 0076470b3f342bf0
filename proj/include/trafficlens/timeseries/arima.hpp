#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "trafficlens/core/error.hpp"
#include "trafficlens/core/optimize.hpp"
#include "trafficlens/core/random.hpp"
#include "trafficlens/datamodel.hpp"
#include "trafficlens/timeseries/decompose.hpp"

namespace trafficlens::timeseries {

// ---------------------------------------------------------------------------
// Differencing
// ---------------------------------------------------------------------------

// (1 - L)^d applied to x.
inline std::vector<double> difference(std::span<const double> x, int d) {
  require(d >= 0, ErrorKind::kConfig, "difference order must be non-negative");
  require(static_cast<std::size_t>(d) < x.size(), ErrorKind::kLength,
          "difference order " + std::to_string(d) + " needs more than " + std::to_string(d) +
              " values");
  std::vector<double> out(x.begin(), x.end());
  for (int k = 0; k < d; ++k) {
    for (std::size_t i = 0; i + 1 < out.size(); ++i) out[i] = out[i + 1] - out[i];
    out.pop_back();
  }
  return out;
}

// First value of each differencing level 0..d-1; the data undifference needs.
inline std::vector<double> difference_heads(std::span<const double> x, int d) {
  std::vector<double> heads;
  std::vector<double> level(x.begin(), x.end());
  for (int k = 0; k < d; ++k) {
    heads.push_back(level.front());
    level = difference(level, 1);
  }
  return heads;
}

// Cumulative-sum inversion of difference(x, heads.size()).
inline std::vector<double> undifference(std::span<const double> w,
                                        std::span<const double> heads) {
  std::vector<double> out(w.begin(), w.end());
  for (std::size_t k = heads.size(); k-- > 0;) {
    std::vector<double> up;
    up.reserve(out.size() + 1);
    up.push_back(heads[k]);
    for (double v : out) up.push_back(up.back() + v);
    out = std::move(up);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Polynomial helpers
// ---------------------------------------------------------------------------

// Maps partial autocorrelations in (-1,1) to coefficients of a stationary
// AR polynomial 1 - sum phi_i z^i (Durbin-Levinson recursion).
inline std::vector<double> pacf_to_ar(std::span<const double> pacf) {
  std::vector<double> phi;
  std::vector<double> prev;
  for (std::size_t k = 0; k < pacf.size(); ++k) {
    prev = phi;
    phi.assign(k + 1, 0.0);
    for (std::size_t j = 0; j < k; ++j) phi[j] = prev[j] - pacf[k] * prev[k - 1 - j];
    phi[k] = pacf[k];
  }
  return phi;
}

// True when 1 - sum phi_i z^i has every root strictly outside the unit
// circle (step-down recursion: all partial autocorrelations in (-1,1)).
inline bool is_stationary(std::span<const double> phi) {
  std::vector<double> a(phi.begin(), phi.end());
  for (std::size_t k = a.size(); k > 0; --k) {
    const double r = a[k - 1];
    if (!(std::abs(r) < 1.0)) return false;
    std::vector<double> lower(k - 1);
    for (std::size_t j = 0; j + 1 < k; ++j) {
      lower[j] = (a[j] + r * a[k - 2 - j]) / (1.0 - r * r);
    }
    a = std::move(lower);
  }
  return true;
}

// 1 + sum theta_j z^j is invertible iff 1 - sum (-theta_j) z^j is stationary.
inline bool is_invertible(std::span<const double> theta) {
  std::vector<double> neg(theta.begin(), theta.end());
  for (double& v : neg) v = -v;
  return is_stationary(neg);
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

struct ArimaOrder {
  int p = 0;
  int d = 0;
  int q = 0;

  bool operator==(const ArimaOrder&) const = default;
};

inline void validate(const ArimaOrder& order) {
  require(order.p >= 0 && order.d >= 0 && order.q >= 0, ErrorKind::kConfig,
          "ARIMA orders must be non-negative");
  require(order.p <= 5 && order.q <= 5 && order.d <= 2, ErrorKind::kConfig,
          "ARIMA orders limited to p<=5, d<=2, q<=5");
}

struct ArimaConfig {
  MinimizeOptions optimizer{};
  // When > 0, a classical seasonal profile of this period is removed before
  // fitting and added back to forecasts.
  std::size_t seasonal_period = 0;
};

struct ArimaModel {
  ArimaOrder order;
  std::vector<double> phi;    // AR coefficients
  std::vector<double> theta;  // MA coefficients
  double mean = 0.0;          // level of the differenced (adjusted) series
  double sigma2 = 0.0;
  double css = 0.0;
  std::vector<double> residuals;  // one-step errors from index max(p,q) onward
  std::size_t n_obs = 0;
  int iterations = 0;
  bool converged = false;

  std::size_t seasonal_period = 0;
  std::vector<double> seasonal_profile;
  std::vector<double> tail;  // trailing original-scale observations
};

class ArimaConvergenceError : public Error {
 public:
  ArimaConvergenceError(const std::string& message, ArimaModel best)
      : Error(ErrorKind::kConvergence, message), best_(std::move(best)) {}
  const ArimaModel& best() const noexcept { return best_; }

 private:
  ArimaModel best_;
};

namespace detail {

// Conditional residual recursion: pre-sample residuals are zero and the
// recursion starts at index max(p,q). Returns the sum of squares.
inline double css_residuals(std::span<const double> w, double mean, std::span<const double> phi,
                            std::span<const double> theta, std::vector<double>* residuals) {
  const std::size_t p = phi.size();
  const std::size_t q = theta.size();
  const std::size_t m = std::max(p, q);
  const std::size_t n = w.size();
  std::vector<double> e(n, 0.0);
  double css = 0.0;
  for (std::size_t t = m; t < n; ++t) {
    double v = w[t] - mean;
    for (std::size_t i = 0; i < p; ++i) v -= phi[i] * (w[t - 1 - i] - mean);
    for (std::size_t j = 0; j < q; ++j) v -= theta[j] * e[t - 1 - j];
    e[t] = v;
    css += v * v;
  }
  if (residuals) residuals->assign(e.begin() + static_cast<std::ptrdiff_t>(m), e.end());
  return css;
}

struct Unpacked {
  double mean;
  std::vector<double> phi;
  std::vector<double> theta;
};

// Parameter vector layout: [mean, atanh-pacf of AR (p), atanh-pacf of MA (q)].
inline Unpacked unpack(const std::vector<double>& x, int p, int q) {
  Unpacked u;
  u.mean = x[0];
  std::vector<double> r(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) r[static_cast<std::size_t>(i)] = std::tanh(x[1 + static_cast<std::size_t>(i)]);
  u.phi = pacf_to_ar(r);
  r.assign(static_cast<std::size_t>(q), 0.0);
  for (int j = 0; j < q; ++j) {
    r[static_cast<std::size_t>(j)] = std::tanh(x[1 + static_cast<std::size_t>(p + j)]);
  }
  u.theta = pacf_to_ar(r);
  for (double& v : u.theta) v = -v;
  return u;
}

inline std::vector<double> seasonal_adjust(std::span<const double> x,
                                           std::span<const double> profile,
                                           std::size_t start_phase) {
  std::vector<double> out(x.begin(), x.end());
  if (profile.empty()) return out;
  for (std::size_t t = 0; t < out.size(); ++t) out[t] -= profile[(start_phase + t) % profile.size()];
  return out;
}

}  // namespace detail

// Conditional-sum-of-squares ARIMA fit.
//
// The series is seasonally adjusted (optional), differenced d times, and
// the CSS is minimised over (mean, AR, MA) with coefficients constrained to
// the stationary/invertible region through tanh-mapped partial
// autocorrelations. Starts from zero coefficients and the sample mean.
inline ArimaModel fit_arima(std::span<const double> series, const ArimaOrder& order,
                            const ArimaConfig& cfg = {}) {
  validate(order);
  const std::size_t n = series.size();
  const std::size_t min_len = 10 * static_cast<std::size_t>(order.p + order.q + 1);
  require(n >= min_len, ErrorKind::kLength,
          "ARIMA fit needs at least " + std::to_string(min_len) + " observations, got " +
              std::to_string(n));
  for (double v : series) require(std::isfinite(v), ErrorKind::kValue, "series holds non-finite values");

  ArimaModel model;
  model.order = order;
  model.n_obs = n;
  model.seasonal_period = cfg.seasonal_period;
  if (cfg.seasonal_period > 0) {
    model.seasonal_profile = decompose(series, cfg.seasonal_period).profile;
  }
  const auto adjusted = detail::seasonal_adjust(series, model.seasonal_profile, 0);
  const auto w = difference(adjusted, order.d);

  const double sample_mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
  if (order.p + order.q > 0) {
    double ss = 0.0;
    for (double v : w) ss += (v - sample_mean) * (v - sample_mean);
    require(ss > 0.0, ErrorKind::kDegenerate,
            "series is constant after differencing; AR/MA terms are unidentifiable");
  }

  const int p = order.p;
  const int q = order.q;
  std::vector<double> x0(static_cast<std::size_t>(1 + p + q), 0.0);
  x0[0] = sample_mean;
  auto objective = [&](const std::vector<double>& x) {
    const auto u = detail::unpack(x, p, q);
    return detail::css_residuals(w, u.mean, u.phi, u.theta, nullptr);
  };
  const auto result = minimize_bfgs(objective, x0, cfg.optimizer);

  const auto u = detail::unpack(result.x, p, q);
  model.mean = u.mean;
  model.phi = u.phi;
  model.theta = u.theta;
  model.css = detail::css_residuals(w, u.mean, u.phi, u.theta, &model.residuals);
  model.sigma2 = model.css / static_cast<double>(model.residuals.size());
  model.iterations = result.iterations;
  model.converged = result.converged;
  const std::size_t keep = std::min(n, static_cast<std::size_t>(std::max(p, 1) + order.d));
  model.tail.assign(series.end() - static_cast<std::ptrdiff_t>(keep), series.end());

  if (!result.converged) {
    throw ArimaConvergenceError("ARIMA optimiser did not converge within " +
                                    std::to_string(cfg.optimizer.max_iter) + " iterations",
                                std::move(model));
  }
  require(model.sigma2 > 0.0, ErrorKind::kDegenerate, "fitted innovation variance is zero");
  return model;
}

inline ArimaModel fit_arima(const TrafficSeries& series, const ArimaOrder& order,
                            const ArimaConfig& cfg = {}) {
  return fit_arima(series.values(), order, cfg);
}

// ---------------------------------------------------------------------------
// Forecasting
// ---------------------------------------------------------------------------

struct Forecast {
  std::size_t horizon = 0;
  std::vector<double> point;
  std::vector<double> std_error;  // one-sided standard error per step
};

inline constexpr std::size_t kPsiTerms = 1000;

// Coefficients of the MA(infinity) form of the model, including the
// differencing factor (1 - L)^d.
inline std::vector<double> psi_weights(const ArimaModel& model, std::size_t count) {
  std::vector<double> ar(model.phi);
  for (int k = 0; k < model.order.d; ++k) {
    // multiply (1 - sum ar_i L^i) by (1 - L)
    std::vector<double> next(ar.size() + 1, 0.0);
    for (std::size_t i = 0; i < ar.size(); ++i) next[i] += ar[i];
    next[0] += 1.0;
    for (std::size_t i = 0; i < ar.size(); ++i) next[i + 1] -= ar[i];
    ar = std::move(next);
  }
  std::vector<double> psi(count, 0.0);
  if (count == 0) return psi;
  psi[0] = 1.0;
  for (std::size_t k = 1; k < count; ++k) {
    double v = k <= model.theta.size() ? model.theta[k - 1] : 0.0;
    for (std::size_t i = 1; i <= std::min(k, ar.size()); ++i) v += ar[i - 1] * psi[k - i];
    psi[k] = v;
  }
  return psi;
}

namespace detail {

struct ForecastState {
  std::vector<double> w;          // differenced history (most recent last)
  std::vector<double> residuals;  // most recent last
  std::vector<double> levels;     // last value of differencing levels 0..d-1
  std::size_t next_phase = 0;
};

inline ForecastState state_from_history(const ArimaModel& model, std::span<const double> history,
                                        std::size_t start_index, bool refilter) {
  ForecastState st;
  const std::size_t P = model.seasonal_profile.size();
  const std::size_t start_phase = P ? start_index % P : 0;
  const auto adjusted = seasonal_adjust(history, model.seasonal_profile, start_phase);
  std::vector<double> level(adjusted.begin(), adjusted.end());
  for (int k = 0; k < model.order.d; ++k) {
    st.levels.push_back(level.back());
    level = difference(level, 1);
  }
  st.w = std::move(level);
  if (refilter) {
    css_residuals(st.w, model.mean, model.phi, model.theta, &st.residuals);
  } else {
    st.residuals = model.residuals;
  }
  st.next_phase = P ? (start_index + history.size()) % P : 0;
  return st;
}

}  // namespace detail

inline Forecast forecast_from_state(const ArimaModel& model, const detail::ForecastState& st,
                                    std::size_t horizon) {
  const std::size_t p = model.phi.size();
  const std::size_t q = model.theta.size();
  require(st.w.size() >= p, ErrorKind::kLength, "not enough history for the AR terms");
  require(st.residuals.size() >= q, ErrorKind::kLength, "not enough residuals for the MA terms");

  std::vector<double> z(st.w.end() - static_cast<std::ptrdiff_t>(p), st.w.end());
  for (double& v : z) v -= model.mean;
  std::vector<double> e(st.residuals.end() - static_cast<std::ptrdiff_t>(q), st.residuals.end());

  Forecast fc;
  fc.horizon = horizon;
  std::vector<double> wf(horizon);
  for (std::size_t h = 0; h < horizon; ++h) {
    double v = 0.0;
    for (std::size_t i = 0; i < p; ++i) v += model.phi[i] * z[z.size() - 1 - i];
    for (std::size_t j = 0; j < q; ++j) v += model.theta[j] * e[e.size() - 1 - j];
    z.push_back(v);
    e.push_back(0.0);
    wf[h] = v + model.mean;
  }
  for (std::size_t k = st.levels.size(); k-- > 0;) {
    double acc = st.levels[k];
    for (double& v : wf) {
      acc += v;
      v = acc;
    }
  }
  const std::size_t P = model.seasonal_profile.size();
  if (P) {
    for (std::size_t h = 0; h < horizon; ++h) wf[h] += model.seasonal_profile[(st.next_phase + h) % P];
  }
  fc.point = std::move(wf);

  const auto psi = psi_weights(model, std::min(horizon, kPsiTerms));
  fc.std_error.resize(horizon);
  double acc = 0.0;
  for (std::size_t h = 0; h < horizon; ++h) {
    if (h < psi.size()) acc += psi[h] * psi[h];
    fc.std_error[h] = std::sqrt(model.sigma2 * acc);
  }
  return fc;
}

// Forecast continuing the series the model was fitted on.
inline Forecast forecast(const ArimaModel& model, std::size_t horizon) {
  require(horizon >= 1, ErrorKind::kConfig, "forecast horizon must be at least 1");
  const std::size_t start = model.n_obs - model.tail.size();
  return forecast_from_state(model, detail::state_from_history(model, model.tail, start, false),
                             horizon);
}

// Forecast continuing `history`, whose first value sits at time index
// `start_index` of the fitted series' clock (this fixes the seasonal
// phase). Residuals are recomputed over the history with the model's
// parameters.
inline Forecast forecast(const ArimaModel& model, std::span<const double> history,
                         std::size_t horizon, std::size_t start_index = 0) {
  require(horizon >= 1, ErrorKind::kConfig, "forecast horizon must be at least 1");
  const std::size_t need =
      static_cast<std::size_t>(std::max(model.order.p, model.order.q) + model.order.d);
  require(history.size() > need, ErrorKind::kLength,
          "forecast needs more than " + std::to_string(need) + " trailing observations");
  return forecast_from_state(model, detail::state_from_history(model, history, start_index, true),
                             horizon);
}

// ---------------------------------------------------------------------------
// Simulation and scoring
// ---------------------------------------------------------------------------

inline constexpr std::size_t kBurnIn = 500;

inline std::vector<double> simulate_arma(std::span<const double> phi, std::span<const double> theta,
                                         double mean, double sigma, std::size_t n,
                                         std::uint64_t seed) {
  require(is_stationary(phi), ErrorKind::kStability, "AR coefficients are not stationary");
  require(is_invertible(theta), ErrorKind::kStability, "MA coefficients are not invertible");
  require(sigma > 0.0, ErrorKind::kConfig, "noise sigma must be positive");
  require(n >= 1, ErrorKind::kConfig, "simulation length must be at least 1");
  Rng rng(seed);
  const std::size_t total = n + kBurnIn;
  std::vector<double> z(total, 0.0);
  std::vector<double> eps(total, 0.0);
  for (std::size_t t = 0; t < total; ++t) {
    eps[t] = sigma * rng.normal();
    double v = eps[t];
    for (std::size_t i = 0; i < phi.size() && i < t; ++i) v += phi[i] * z[t - 1 - i];
    for (std::size_t j = 0; j < theta.size() && j < t; ++j) v += theta[j] * eps[t - 1 - j];
    z[t] = v;
  }
  std::vector<double> out(n);
  for (std::size_t t = 0; t < n; ++t) out[t] = mean + z[kBurnIn + t];
  return out;
}

inline double mae(std::span<const double> actual, std::span<const double> predicted) {
  require(actual.size() == predicted.size(), ErrorKind::kShape,
          "MAE inputs differ in length: " + std::to_string(actual.size()) + " vs " +
              std::to_string(predicted.size()));
  require(!actual.empty(), ErrorKind::kShape, "MAE of empty sequences is undefined");
  double acc = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) acc += std::abs(actual[i] - predicted[i]);
  return acc / static_cast<double>(actual.size());
}

}  // namespace trafficlens::timeseries
