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

// Confusion matrix and one-vs-rest detection metrics.
//
// For class c: TP = cm(c, c), FN = row c minus TP, FP = column c minus TP,
// TN = everything else. Rows are actual classes, columns predictions.
// A 0/0 ratio evaluates to 0 and is reported as degenerate.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "tdafault/types.hpp"

namespace tdafault {

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::vector<std::string> class_names);
  ConfusionMatrix(CountMatrix counts, std::vector<std::string> class_names);

  static ConfusionMatrix from_pairs(const std::vector<int>& actual, const std::vector<int>& predicted,
                                    std::vector<std::string> class_names);

  void add(int actual, int predicted, std::int64_t count = 1);

  Index classes() const { return counts_.rows(); }
  std::int64_t total() const { return counts_.sum(); }
  const CountMatrix& counts() const { return counts_; }
  const std::vector<std::string>& class_names() const { return names_; }

 private:
  CountMatrix counts_;
  std::vector<std::string> names_;
};

struct OneVsRest {
  std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
};

OneVsRest one_vs_rest(const ConfusionMatrix& cm, Index cls);

double accuracy(const ConfusionMatrix& cm);
double precision(const ConfusionMatrix& cm, Index cls);
double recall(const ConfusionMatrix& cm, Index cls);
double f1(const ConfusionMatrix& cm, Index cls);
double far(const ConfusionMatrix& cm, Index cls);
double mar(const ConfusionMatrix& cm, Index cls);

struct ClassMetrics {
  std::string name;
  std::int64_t support = 0;
  double precision = 0, recall = 0, f1 = 0, far = 0, mar = 0;
  std::vector<std::string> degenerate;  // metrics whose denominator was 0
};

struct EvalReport {
  ConfusionMatrix confusion;
  std::vector<ClassMetrics> per_class;
  double accuracy = 0;
  double macro_precision = 0, macro_recall = 0, macro_f1 = 0, macro_far = 0, macro_mar = 0;

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
};

EvalReport make_report(const ConfusionMatrix& cm);

// Aligned text table of the per-class metrics.
std::string render_table(const EvalReport& report);
// CSV: actual class rows, predicted class columns.
std::string confusion_csv(const ConfusionMatrix& cm);
// CSV with one row per class and one column per metric.
std::string metrics_csv(const EvalReport& report);

}  // namespace tdafault
