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

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tdafault/decompose.hpp"
#include "tdafault/movavg.hpp"
#include "tdafault/types.hpp"

namespace tdafault {

// Population central-moment statistics. Degenerate (constant) inputs yield 0.

template <typename Derived>
typename Derived::Scalar skewness(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  if (x.size() < 3) throw std::invalid_argument("skewness: need at least 3 samples");
  const auto centered = (x.array() - x.mean()).eval();
  const Scalar m2 = centered.square().mean();
  if (m2 < Scalar(1e-24)) return Scalar(0);
  const Scalar m3 = centered.cube().mean();
  return m3 / (m2 * std::sqrt(m2));
}

template <typename Derived>
typename Derived::Scalar kurtosis_excess(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  if (x.size() < 4) throw std::invalid_argument("kurtosis_excess: need at least 4 samples");
  const auto centered = (x.array() - x.mean()).eval();
  const Scalar m2 = centered.square().mean();
  if (m2 < Scalar(1e-24)) return Scalar(0);
  const Scalar m4 = centered.square().square().mean();
  return m4 / (m2 * m2) - Scalar(3);
}

template <typename Derived>
typename Derived::Scalar rms(const Eigen::MatrixBase<Derived>& x) {
  return std::sqrt(x.squaredNorm() / typename Derived::Scalar(x.size()));
}

// Least-squares slope of x against its sample index.
template <typename Derived>
typename Derived::Scalar ls_slope(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const Index n = x.size();
  if (n < 2) return Scalar(0);
  const auto t = Vector<Scalar>::LinSpaced(n, Scalar(0), Scalar(n - 1)).array();
  const auto tc = (t - t.mean()).eval();
  return (tc * (x.array() - x.mean())).sum() / tc.square().sum();
}

// Lag-1 autocorrelation; 0 for constant input.
template <typename Derived>
typename Derived::Scalar lag1_autocorrelation(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const Index n = x.size();
  if (n < 2) return Scalar(0);
  const Vector<Scalar> c = (x.array() - x.mean()).matrix();
  const Scalar denom = c.squaredNorm();
  if (denom < Scalar(1e-24)) return Scalar(0);
  return c.head(n - 1).dot(c.tail(n - 1)) / denom;
}

struct WindowSpec {
  Index length = 256;
  Index stride = 128;

  void validate() const {
    if (length < 8) throw std::invalid_argument("WindowSpec: length must be >= 8");
    if (stride < 1) throw std::invalid_argument("WindowSpec: stride must be >= 1");
  }

  // floor((N - W) / S) + 1, or 0 when the series is shorter than one window.
  Index count(Index series_length) const {
    if (series_length < length) return 0;
    return (series_length - length) / stride + 1;
  }
};

struct ChannelRange {
  Index begin = 0;
  Index size = 0;
  Index end() const { return begin + size; }
};

struct ChannelMap {
  ChannelRange residual{0, 5};
  ChannelRange trend{5, 2};
  ChannelRange seasonal{7, 2};
  Index width() const { return seasonal.end(); }
};

inline constexpr Index kFeatureCount = 9;

const std::array<std::string, kFeatureCount>& feature_names();

// Per-feature affine standardization fitted on training tokens.
struct Standardizer {
  Vector<double> mean;
  Vector<double> scale;
  std::vector<bool> constant;

  static Standardizer fit(const std::vector<Matrix<double>>& token_blocks);
  Matrix<double> apply(const Matrix<double>& tokens) const;
  bool empty() const { return mean.size() == 0; }
};

struct TokenSequence {
  Matrix<double> tokens;  // T x F
  ChannelMap channel_map;
  std::optional<std::string> label;
  std::optional<Standardizer> standardization;

  Index length() const { return tokens.rows(); }
};

// Per-window features of one decomposed recording:
//   residual: HEMA last value, HEMA mean over its valid range, skewness,
//             excess kurtosis, RMS
//   trend:    mean, least-squares slope
//   seasonal: RMS, lag-1 autocorrelation
TokenSequence featurize(const Decomposition<double>& d, const WindowSpec& spec, const MaConfig& ma);

// Features of a single window, given the three component slices.
RowVector<double> window_features(const Eigen::Ref<const Vector<double>>& residual,
                                  const Eigen::Ref<const Vector<double>>& trend,
                                  const Eigen::Ref<const Vector<double>>& seasonal, const MaConfig& ma);

}  // namespace tdafault
