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

// Weighted, exponential and Hull-style moving averages over Eigen vectors.
//
// Every filter returns a series of the input's length. Indices before
// `valid_from` come from the warm-up rule (partial-window weighting for WMA,
// seeding with the first sample for EMA) and should be excluded from any
// downstream statistic.

#include <cmath>
#include <stdexcept>
#include <string>

#include "tdafault/types.hpp"

namespace tdafault {

enum class AlphaRule { from_window, fixed };
enum class HullMode { hull_standard, paper_literal };

struct MaConfig {
  Index window = 16;
  AlphaRule alpha_rule = AlphaRule::from_window;
  double fixed_alpha = 0.2;
  HullMode hull_mode = HullMode::hull_standard;

  void validate() const {
    if (window < 1) throw std::invalid_argument("MaConfig: window must be >= 1");
    if (alpha_rule == AlphaRule::fixed && !(fixed_alpha > 0.0 && fixed_alpha <= 1.0))
      throw std::invalid_argument("MaConfig: fixed alpha must lie in (0, 1]");
  }

  // Smoothing factor used by an EMA stage spanning `n` samples.
  double alpha_for(Index n) const {
    if (alpha_rule == AlphaRule::fixed) return fixed_alpha;
    return 2.0 / (static_cast<double>(n) + 1.0);
  }
};

template <typename Scalar>
struct FilteredSeries {
  Vector<Scalar> values;
  Index valid_from = 0;

  Index size() const { return values.size(); }
};

// ceil(n / 2)
constexpr Index half_window(Index n) { return (n + 1) / 2; }

// round(sqrt(n)), at least 1.
inline Index hull_final_window(Index n) {
  const auto r = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(n))));
  return r < 1 ? 1 : r;
}

inline std::string to_string(HullMode mode) {
  return mode == HullMode::hull_standard ? "hull_standard" : "paper_literal";
}

inline HullMode hull_mode_from_string(const std::string& s) {
  if (s == "hull_standard") return HullMode::hull_standard;
  if (s == "paper_literal") return HullMode::paper_literal;
  throw std::invalid_argument("unknown hull mode '" + s + "'");
}

// Linearly weighted moving average, weight k on the k-th oldest sample of the
// window so the newest sample carries weight n. For t < n - 1 the available
// t + 1 samples are weighted 1..t+1.
//
// The sum is taken relative to the newest sample so constants pass through
// bit-exactly.
template <typename Derived>
FilteredSeries<typename Derived::Scalar> wma(const Eigen::MatrixBase<Derived>& x, Index n) {
  using Scalar = typename Derived::Scalar;
  if (n < 1) throw std::invalid_argument("wma: window must be >= 1");
  if (x.size() == 0) throw std::invalid_argument("wma: empty input");
  const Index len = x.size();
  const Vector<Scalar> weights = Vector<Scalar>::LinSpaced(n, Scalar(1), Scalar(n));

  FilteredSeries<Scalar> out;
  out.values.resize(len);
  out.valid_from = n - 1 < len ? n - 1 : len;
  for (Index t = 0; t < len; ++t) {
    const Index m = t + 1 < n ? t + 1 : n;
    const Scalar newest = x(t);
    const Scalar norm = Scalar(m) * Scalar(m + 1) / Scalar(2);
    const Scalar offset =
        ((x.segment(t - m + 1, m).array() - newest).matrix()).dot(weights.head(m)) / norm;
    out.values(t) = newest + offset;
  }
  return out;
}

// Exponential moving average seeded with the first sample.
template <typename Derived>
FilteredSeries<typename Derived::Scalar> ema(const Eigen::MatrixBase<Derived>& x, double alpha) {
  using Scalar = typename Derived::Scalar;
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("ema: alpha must lie in (0, 1]");
  if (x.size() == 0) throw std::invalid_argument("ema: empty input");
  const Scalar a = static_cast<Scalar>(alpha);

  FilteredSeries<Scalar> out;
  out.values.resize(x.size());
  out.values(0) = x(0);
  for (Index t = 1; t < x.size(); ++t) {
    const Scalar prev = out.values(t - 1);
    out.values(t) = prev + a * (x(t) - prev);
  }
  out.valid_from = 0;
  return out;
}

namespace detail {

template <typename Scalar>
Vector<Scalar> hull_diff(const Vector<Scalar>& fast, const Vector<Scalar>& slow) {
  return (Scalar(2) * fast.array() - slow.array()).matrix();
}

inline Index clamp_valid(Index v, Index len) { return v < len ? v : len; }

}  // namespace detail

// Hull moving average.
//
//   hull_standard: WMA(round(sqrt n)) of 2*WMA(ceil(n/2)) - WMA(n)
//   paper_literal: WMA(n) of 2*WMA(ceil(n/2)) - WMA(ceil(n/2))
//
// The literal form collapses algebraically to WMA(n) applied to
// WMA(ceil(n/2)); it is kept for comparison.
template <typename Derived>
FilteredSeries<typename Derived::Scalar> hma(const Eigen::MatrixBase<Derived>& x,
                                             const MaConfig& cfg) {
  using Scalar = typename Derived::Scalar;
  cfg.validate();
  const Index n = cfg.window;
  if (n < 2) throw std::invalid_argument("hma: window must be >= 2");
  const Index half = half_window(n);
  const Vector<Scalar> input = x;

  FilteredSeries<Scalar> out;
  if (cfg.hull_mode == HullMode::hull_standard) {
    const Index final_n = hull_final_window(n);
    const Vector<Scalar> diff = detail::hull_diff<Scalar>(wma(input, half).values, wma(input, n).values);
    out = wma(diff, final_n);
    out.valid_from = detail::clamp_valid((n - 1) + (final_n - 1), input.size());
  } else {
    const Vector<Scalar> first = wma(input, half).values;
    const Vector<Scalar> second = wma(input, half).values;
    out = wma(detail::hull_diff<Scalar>(first, second), n);
    out.valid_from = detail::clamp_valid((half - 1) + (n - 1), input.size());
  }
  return out;
}

// Hull construction with EMA stages. Stage alphas follow cfg.alpha_rule for
// each stage's window.
template <typename Derived>
FilteredSeries<typename Derived::Scalar> hema(const Eigen::MatrixBase<Derived>& x,
                                              const MaConfig& cfg) {
  using Scalar = typename Derived::Scalar;
  cfg.validate();
  const Index n = cfg.window;
  if (n < 2) throw std::invalid_argument("hema: window must be >= 2");
  const Index half = half_window(n);
  const Vector<Scalar> input = x;

  FilteredSeries<Scalar> out;
  if (cfg.hull_mode == HullMode::hull_standard) {
    const Index final_n = hull_final_window(n);
    const Vector<Scalar> diff = detail::hull_diff<Scalar>(ema(input, cfg.alpha_for(half)).values,
                                                          ema(input, cfg.alpha_for(n)).values);
    out = ema(diff, cfg.alpha_for(final_n));
    out.valid_from = detail::clamp_valid((n - 1) + (final_n - 1), input.size());
  } else {
    const Vector<Scalar> first = ema(input, cfg.alpha_for(half)).values;
    const Vector<Scalar> second = ema(input, cfg.alpha_for(half)).values;
    out = ema(detail::hull_diff<Scalar>(first, second), cfg.alpha_for(n));
    out.valid_from = detail::clamp_valid((half - 1) + (n - 1), input.size());
  }
  return out;
}

}  // namespace tdafault
