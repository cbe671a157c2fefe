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

// Brute-force reference implementations used only by the tests. Each one
// works from the defining formula with plain loops and shares no code with
// the library routine it checks.

#include <cmath>
#include <cstdint>
#include <vector>

namespace oracle {

using Series = std::vector<double>;
using Grid = std::vector<std::vector<double>>;

// Weighted average of the last min(t+1, n) samples, weight k on the k-th oldest.
inline Series wma(const Series& x, int n) {
  Series out(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) {
    const int m = static_cast<int>(t) + 1 < n ? static_cast<int>(t) + 1 : n;
    double num = 0.0, den = 0.0;
    for (int k = 1; k <= m; ++k) {
      num += k * x[t - static_cast<std::size_t>(m - k)];
      den += k;
    }
    out[t] = num / den;
  }
  return out;
}

// Closed form of the seeded recursion: sum of geometrically weighted samples.
inline Series ema(const Series& x, double a) {
  Series out(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) {
    double acc = std::pow(1.0 - a, static_cast<double>(t)) * x[0];
    for (std::size_t j = 1; j <= t; ++j) acc += a * std::pow(1.0 - a, static_cast<double>(t - j)) * x[j];
    out[t] = acc;
  }
  return out;
}

inline Series diff(const Series& fast, const Series& slow) {
  Series out(fast.size());
  for (std::size_t i = 0; i < fast.size(); ++i) out[i] = 2.0 * fast[i] - slow[i];
  return out;
}

inline int half(int n) { return (n + 1) / 2; }
inline int root(int n) {
  int r = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
  return r < 1 ? 1 : r;
}
inline double alpha(int n) { return 2.0 / (n + 1.0); }

inline Series hma_standard(const Series& x, int n) { return wma(diff(wma(x, half(n)), wma(x, n)), root(n)); }
inline Series hma_literal(const Series& x, int n) { return wma(diff(wma(x, half(n)), wma(x, half(n))), n); }
inline Series hema_standard(const Series& x, int n) {
  return ema(diff(ema(x, alpha(half(n))), ema(x, alpha(n))), alpha(root(n)));
}
inline Series hema_literal(const Series& x, int n) {
  return ema(diff(ema(x, alpha(half(n))), ema(x, alpha(half(n)))), alpha(n));
}

// softmax over each row, written out term by term.
inline Grid softmax_rows(const Grid& s) {
  Grid out = s;
  for (auto& row : out) {
    double mx = row[0];
    for (double v : row) mx = v > mx ? v : mx;
    double sum = 0.0;
    for (double& v : row) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (double& v : row) v /= sum;
  }
  return out;
}

// One branch: softmax(((Q K^T) scaled per key column by alpha) / sqrt(dk)) V.
inline Grid attention_branch(const Grid& q, const Grid& k, const Grid& v, const std::vector<double>& alpha) {
  const std::size_t t = q.size(), dk = q[0].size(), dv = v[0].size();
  Grid scores(t, std::vector<double>(t, 0.0));
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t j = 0; j < t; ++j) {
      double dot = 0.0;
      for (std::size_t c = 0; c < dk; ++c) dot += q[i][c] * k[j][c];
      scores[i][j] = dot * alpha[j] / std::sqrt(static_cast<double>(dk));
    }
  const Grid w = softmax_rows(scores);
  Grid out(t, std::vector<double>(dv, 0.0));
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t c = 0; c < dv; ++c)
      for (std::size_t j = 0; j < t; ++j) out[i][c] += w[i][j] * v[j][c];
  return out;
}

inline Grid attention_tda(const Grid& q, const Grid& k, const Grid& vt, const Grid& vs, const std::vector<double>& at,
                          const std::vector<double>& as) {
  Grid a = attention_branch(q, k, vt, at);
  const Grid b = attention_branch(q, k, vs, as);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t c = 0; c < a[i].size(); ++c) a[i][c] += b[i][c];
  return a;
}

// Per-class one-vs-rest counts from raw label pairs.
struct Counts {
  std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
};

inline Counts count_pairs(const std::vector<int>& actual, const std::vector<int>& predicted, int cls) {
  Counts c;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const bool is = actual[i] == cls, said = predicted[i] == cls;
    if (is && said) ++c.tp;
    else if (!is && said) ++c.fp;
    else if (is && !said) ++c.fn;
    else ++c.tn;
  }
  return c;
}

inline double safe_ratio(std::int64_t a, std::int64_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); }

// Population moments computed with explicit sums.
inline double skewness(const Series& x) {
  double mean = 0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double m2 = 0, m3 = 0;
  for (double v : x) {
    m2 += (v - mean) * (v - mean);
    m3 += (v - mean) * (v - mean) * (v - mean);
  }
  m2 /= static_cast<double>(x.size());
  m3 /= static_cast<double>(x.size());
  return m2 < 1e-24 ? 0.0 : m3 / std::pow(m2, 1.5);
}

inline double kurtosis(const Series& x) {
  double mean = 0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double m2 = 0, m4 = 0;
  for (double v : x) {
    const double d = v - mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= static_cast<double>(x.size());
  m4 /= static_cast<double>(x.size());
  return m2 < 1e-24 ? 0.0 : m4 / (m2 * m2) - 3.0;
}

}  // namespace oracle
