// Copyright 2026 The tdafault Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Classical additive seasonal-trend decomposition:
//   x = trend + seasonal + residual
// with the trend a centered moving average of one period and the seasonal
// component the zero-mean per-phase average of the detrended series.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "tdafault/types.hpp"

namespace tdafault {

template <typename Scalar>
struct Decomposition {
  Vector<Scalar> trend;
  Vector<Scalar> seasonal;
  Vector<Scalar> residual;
  Index period = 0;
  // Half-open range [valid_begin, valid_end) where the centered average has
  // full support. Outside it the trend is edge-replicated.
  Index valid_begin = 0;
  Index valid_end = 0;

  Index size() const { return trend.size(); }
};

// Half-width of the centered average: P/2 for even P (2xP average), (P-1)/2 for odd P.
constexpr Index centered_half_width(Index period) { return period / 2; }

// Centered moving average of length `period`. For even periods the 2xP
// weighting (half weight on the two end samples) keeps the filter symmetric.
// Only [h, N - h) is written; other entries are edge-replicated.
template <typename Derived>
Vector<typename Derived::Scalar> centered_moving_average(const Eigen::MatrixBase<Derived>& x,
                                                         Index period) {
  using Scalar = typename Derived::Scalar;
  const Index n = x.size();
  const Index h = centered_half_width(period);
  Vector<Scalar> trend(n);
  const Scalar inv_p = Scalar(1) / Scalar(period);
  for (Index t = h; t < n - h; ++t) {
    if (period % 2 == 1) {
      trend(t) = x.segment(t - h, period).sum() * inv_p;
    } else {
      const Scalar inner = x.segment(t - h + 1, period - 1).sum();
      trend(t) = (inner + Scalar(0.5) * (x(t - h) + x(t + h))) * inv_p;
    }
  }
  for (Index t = 0; t < h; ++t) trend(t) = trend(h);
  for (Index t = n - h; t < n; ++t) trend(t) = trend(n - h - 1);
  return trend;
}

template <typename Derived>
Decomposition<typename Derived::Scalar> decompose_additive(const Eigen::MatrixBase<Derived>& x,
                                                           Index period) {
  using Scalar = typename Derived::Scalar;
  if (period < 2) throw std::invalid_argument("decompose_additive: period must be >= 2");
  if (x.size() < 2 * period)
    throw std::invalid_argument("decompose_additive: series of length " + std::to_string(x.size()) +
                                " is shorter than two periods (" + std::to_string(2 * period) + ")");
  const Index n = x.size();
  const Index h = centered_half_width(period);

  Decomposition<Scalar> d;
  d.period = period;
  d.valid_begin = h;
  d.valid_end = n - h;
  d.trend = centered_moving_average(x, period);

  Vector<Scalar> phase_sum = Vector<Scalar>::Zero(period);
  Vector<Scalar> phase_count = Vector<Scalar>::Zero(period);
  for (Index t = d.valid_begin; t < d.valid_end; ++t) {
    phase_sum(t % period) += x(t) - d.trend(t);
    phase_count(t % period) += Scalar(1);
  }
  Vector<Scalar> phase_mean = (phase_sum.array() / phase_count.array()).matrix();
  phase_mean.array() -= phase_mean.mean();

  d.seasonal.resize(n);
  for (Index t = 0; t < n; ++t) d.seasonal(t) = phase_mean(t % period);
  d.residual = x - d.trend - d.seasonal;
  return d;
}

inline Decomposition<double> decompose_additive(const TimeSeries& series, Index period) {
  series.validate();
  return decompose_additive(series.samples, period);
}

// Biased sample autocorrelation at `lag`, normalized by the lag-0 term.
template <typename Derived>
typename Derived::Scalar autocorrelation(const Eigen::MatrixBase<Derived>& x, Index lag) {
  using Scalar = typename Derived::Scalar;
  const Index n = x.size();
  const Vector<Scalar> centered = (x.array() - x.mean()).matrix();
  const Scalar denom = centered.squaredNorm();
  if (denom == Scalar(0) || lag >= n) return Scalar(0);
  return centered.head(n - lag).dot(centered.tail(n - lag)) / denom;
}

// Seasonal period in samples. With a frequency hint the period is
// round(fs / hint); otherwise the autocorrelation argmax over lags
// [2, N/4], ties going to the smaller lag.
inline Index estimate_period(const TimeSeries& series, std::optional<double> hint_hz = std::nullopt) {
  series.validate();
  const Index n = series.size();
  if (n < 16) throw std::invalid_argument("estimate_period: need at least 16 samples");
  if (hint_hz) {
    if (!(*hint_hz > 0.0)) throw std::invalid_argument("estimate_period: hint must be positive");
    if (*hint_hz >= series.sample_rate_hz / 2.0)
      throw std::invalid_argument("estimate_period: hint at or above Nyquist gives a period under 2 samples");
    return static_cast<Index>(std::llround(series.sample_rate_hz / *hint_hz));
  }
  const Vector<double> centered = (series.samples.array() - series.samples.mean()).matrix();
  const double denom = centered.squaredNorm();
  if (denom == 0.0) return 2;
  Index best_lag = 2;
  double best = -2.0;
  for (Index lag = 2; lag <= n / 4; ++lag) {
    const double r = centered.head(n - lag).dot(centered.tail(n - lag)) / denom;
    if (r > best) {
      best = r;
      best_lag = lag;
    }
  }
  return best_lag;
}

// Shaft-rotation period in samples for a given sampling rate and speed.
inline Index shaft_period_samples(double sample_rate_hz, double shaft_rpm = 1772.0) {
  return static_cast<Index>(std::llround(sample_rate_hz * 60.0 / shaft_rpm));
}

}  // namespace tdafault
