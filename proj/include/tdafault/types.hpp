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

#include <Eigen/Core>

#include <optional>
#include <stdexcept>
#include <string>

namespace tdafault {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Index = Eigen::Index;

// Raised when a file or byte stream does not match the expected layout.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what, long long offset = -1)
      : std::runtime_error(offset >= 0 ? what + " (at byte offset " + std::to_string(offset) + ")"
                                       : what),
        offset_(offset) {}
  long long offset() const noexcept { return offset_; }

 private:
  long long offset_;
};

// Raised when a computation produces a non-finite value.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Uniformly sampled scalar signal.
struct TimeSeries {
  Vector<double> samples;
  double sample_rate_hz = 1.0;
  std::optional<std::string> label;

  Index size() const { return samples.size(); }

  // Checks non-empty, positive rate, finite samples.
  void validate() const {
    if (samples.size() == 0) throw std::invalid_argument("TimeSeries: empty sample vector");
    if (!(sample_rate_hz > 0.0)) throw std::invalid_argument("TimeSeries: sample rate must be positive");
    if (!samples.allFinite()) throw std::invalid_argument("TimeSeries: non-finite sample");
  }
};

}  // namespace tdafault
