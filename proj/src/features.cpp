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

#include "tdafault/features.hpp"

#include <cmath>

namespace tdafault {

const std::array<std::string, kFeatureCount>& feature_names() {
  static const std::array<std::string, kFeatureCount> names = {
      "residual_hema_last", "residual_hema_mean", "residual_skewness",
      "residual_kurtosis",  "residual_rms",       "trend_mean",
      "trend_slope",        "seasonal_rms",       "seasonal_lag1_autocorr"};
  return names;
}

RowVector<double> window_features(const Eigen::Ref<const Vector<double>>& residual,
                                  const Eigen::Ref<const Vector<double>>& trend,
                                  const Eigen::Ref<const Vector<double>>& seasonal, const MaConfig& ma) {
  const auto smoothed = hema(residual, ma);
  const Index tail = smoothed.size() - smoothed.valid_from;
  const double hema_mean = tail > 0 ? smoothed.values.tail(tail).mean() : smoothed.values.mean();

  RowVector<double> f(kFeatureCount);
  f << smoothed.values(smoothed.size() - 1), hema_mean, skewness(residual), kurtosis_excess(residual),
      rms(residual), trend.mean(), ls_slope(trend), rms(seasonal), lag1_autocorrelation(seasonal);
  return f;
}

TokenSequence featurize(const Decomposition<double>& d, const WindowSpec& spec, const MaConfig& ma) {
  spec.validate();
  ma.validate();
  const Index n = d.size();
  if (n < spec.length)
    throw std::invalid_argument("featurize: window of " + std::to_string(spec.length) +
                                " samples is longer than the series (" + std::to_string(n) + ")");
  const Index windows = spec.count(n);
  TokenSequence seq;
  seq.tokens.resize(windows, kFeatureCount);
  for (Index w = 0; w < windows; ++w) {
    const Index start = w * spec.stride;
    seq.tokens.row(w) = window_features(d.residual.segment(start, spec.length),
                                        d.trend.segment(start, spec.length),
                                        d.seasonal.segment(start, spec.length), ma);
  }
  if (!seq.tokens.allFinite()) throw NumericalError("featurize: non-finite feature value");
  return seq;
}

Standardizer Standardizer::fit(const std::vector<Matrix<double>>& token_blocks) {
  Index rows = 0;
  Index cols = -1;
  for (const auto& b : token_blocks) {
    if (cols >= 0 && b.cols() != cols) throw std::invalid_argument("Standardizer: inconsistent feature width");
    cols = b.cols();
    rows += b.rows();
  }
  if (rows == 0) throw std::invalid_argument("Standardizer: no training tokens");
  Matrix<double> all(rows, cols);
  Index r = 0;
  for (const auto& b : token_blocks) {
    all.middleRows(r, b.rows()) = b;
    r += b.rows();
  }
  Standardizer s;
  s.mean = all.colwise().mean().transpose();
  s.scale.resize(cols);
  s.constant.assign(static_cast<size_t>(cols), false);
  for (Index c = 0; c < cols; ++c) {
    const double var = (all.col(c).array() - s.mean(c)).square().mean();
    const double sd = std::sqrt(var);
    if (sd < 1e-12 * std::max(1.0, std::abs(s.mean(c)))) {
      s.scale(c) = 1.0;
      s.constant[static_cast<size_t>(c)] = true;
    } else {
      s.scale(c) = sd;
    }
  }
  return s;
}

Matrix<double> Standardizer::apply(const Matrix<double>& tokens) const {
  if (tokens.cols() != mean.size())
    throw std::invalid_argument("Standardizer: expected " + std::to_string(mean.size()) + " features, got " +
                                std::to_string(tokens.cols()));
  return ((tokens.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array()).matrix();
}

}  // namespace tdafault
