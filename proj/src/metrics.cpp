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

#include "tdafault/metrics.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "tdafault/io.hpp"

namespace tdafault {

namespace {

void require_nonempty(const ConfusionMatrix& cm, const char* what) {
  if (cm.classes() == 0 || cm.total() == 0)
    throw std::invalid_argument(std::string(what) + ": empty confusion matrix");
}

void require_class(const ConfusionMatrix& cm, Index cls, const char* what) {
  require_nonempty(cm, what);
  if (cls < 0 || cls >= cm.classes())
    throw std::invalid_argument(std::string(what) + ": class index " + std::to_string(cls) + " out of range");
}

double ratio(std::int64_t num, std::int64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> class_names)
    : counts_(CountMatrix::Zero(static_cast<Index>(class_names.size()), static_cast<Index>(class_names.size()))),
      names_(std::move(class_names)) {}

ConfusionMatrix::ConfusionMatrix(CountMatrix counts, std::vector<std::string> class_names)
    : counts_(std::move(counts)), names_(std::move(class_names)) {
  if (counts_.rows() != counts_.cols()) throw std::invalid_argument("ConfusionMatrix: counts must be square");
  if (names_.empty())
    for (Index i = 0; i < counts_.rows(); ++i) names_.push_back("class_" + std::to_string(i));
  if (static_cast<Index>(names_.size()) != counts_.rows())
    throw std::invalid_argument("ConfusionMatrix: class name count does not match matrix size");
  if ((counts_.array() < 0).any()) throw std::invalid_argument("ConfusionMatrix: negative count");
}

ConfusionMatrix ConfusionMatrix::from_pairs(const std::vector<int>& actual, const std::vector<int>& predicted,
                                            std::vector<std::string> class_names) {
  if (actual.size() != predicted.size())
    throw std::invalid_argument("ConfusionMatrix: actual/predicted length mismatch");
  ConfusionMatrix cm(std::move(class_names));
  for (std::size_t i = 0; i < actual.size(); ++i) cm.add(actual[i], predicted[i]);
  return cm;
}

void ConfusionMatrix::add(int actual, int predicted, std::int64_t count) {
  if (actual < 0 || actual >= classes() || predicted < 0 || predicted >= classes())
    throw std::invalid_argument("ConfusionMatrix: label out of range");
  if (count < 0) throw std::invalid_argument("ConfusionMatrix: negative count");
  counts_(actual, predicted) += count;
}

OneVsRest one_vs_rest(const ConfusionMatrix& cm, Index cls) {
  require_class(cm, cls, "one_vs_rest");
  const auto& m = cm.counts();
  OneVsRest r;
  r.tp = m(cls, cls);
  r.fn = m.row(cls).sum() - r.tp;
  r.fp = m.col(cls).sum() - r.tp;
  r.tn = m.sum() - r.tp - r.fn - r.fp;
  return r;
}

double accuracy(const ConfusionMatrix& cm) {
  require_nonempty(cm, "accuracy");
  return ratio(cm.counts().diagonal().sum(), cm.total());
}

double precision(const ConfusionMatrix& cm, Index cls) {
  const auto r = one_vs_rest(cm, cls);
  return ratio(r.tp, r.tp + r.fp);
}

double recall(const ConfusionMatrix& cm, Index cls) {
  const auto r = one_vs_rest(cm, cls);
  return ratio(r.tp, r.tp + r.fn);
}

double f1(const ConfusionMatrix& cm, Index cls) {
  const double p = precision(cm, cls);
  const double r = recall(cm, cls);
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

double far(const ConfusionMatrix& cm, Index cls) {
  const auto r = one_vs_rest(cm, cls);
  return ratio(r.fp, r.tn + r.fp);
}

double mar(const ConfusionMatrix& cm, Index cls) {
  const auto r = one_vs_rest(cm, cls);
  return ratio(r.fn, r.fn + r.tp);
}

EvalReport make_report(const ConfusionMatrix& cm) {
  require_nonempty(cm, "make_report");
  EvalReport rep;
  rep.confusion = cm;
  rep.accuracy = accuracy(cm);
  const Index c = cm.classes();
  for (Index k = 0; k < c; ++k) {
    const auto r = one_vs_rest(cm, k);
    ClassMetrics m;
    m.name = cm.class_names()[static_cast<std::size_t>(k)];
    m.support = r.tp + r.fn;
    m.precision = precision(cm, k);
    m.recall = recall(cm, k);
    m.f1 = f1(cm, k);
    m.far = far(cm, k);
    m.mar = mar(cm, k);
    if (r.tp + r.fp == 0) m.degenerate.push_back("precision");
    if (r.tp + r.fn == 0) {
      m.degenerate.push_back("recall");
      m.degenerate.push_back("mar");
    }
    if (m.precision + m.recall == 0.0) m.degenerate.push_back("f1");
    if (r.tn + r.fp == 0) m.degenerate.push_back("far");
    rep.macro_precision += m.precision;
    rep.macro_recall += m.recall;
    rep.macro_f1 += m.f1;
    rep.macro_far += m.far;
    rep.macro_mar += m.mar;
    rep.per_class.push_back(std::move(m));
  }
  const double n = static_cast<double>(c);
  rep.macro_precision /= n;
  rep.macro_recall /= n;
  rep.macro_f1 /= n;
  rep.macro_far /= n;
  rep.macro_mar /= n;
  return rep;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json counts = nlohmann::json::array();
  for (Index r = 0; r < confusion.classes(); ++r) {
    std::vector<std::int64_t> row(static_cast<std::size_t>(confusion.classes()));
    for (Index c = 0; c < confusion.classes(); ++c) row[static_cast<std::size_t>(c)] = confusion.counts()(r, c);
    counts.push_back(row);
  }
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& m : per_class) {
    classes.push_back({{"name", m.name},
                       {"support", m.support},
                       {"precision", m.precision},
                       {"recall", m.recall},
                       {"f1", m.f1},
                       {"far", m.far},
                       {"mar", m.mar},
                       {"degenerate", m.degenerate}});
  }
  return {{"accuracy", accuracy},
          {"macro", {{"precision", macro_precision},
                     {"recall", macro_recall},
                     {"f1", macro_f1},
                     {"far", macro_far},
                     {"mar", macro_mar}}},
          {"confusion", {{"class_names", confusion.class_names()}, {"counts", counts}}},
          {"per_class", classes}};
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  const auto names = j.at("confusion").at("class_names").get<std::vector<std::string>>();
  const auto rows = j.at("confusion").at("counts").get<std::vector<std::vector<std::int64_t>>>();
  const Index c = static_cast<Index>(names.size());
  if (static_cast<Index>(rows.size()) != c) throw FormatError("report: confusion matrix has the wrong row count");
  CountMatrix counts(c, c);
  for (Index r = 0; r < c; ++r) {
    if (static_cast<Index>(rows[static_cast<std::size_t>(r)].size()) != c)
      throw FormatError("report: confusion matrix row " + std::to_string(r) + " has the wrong length");
    for (Index k = 0; k < c; ++k) counts(r, k) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)];
  }
  return make_report(ConfusionMatrix(std::move(counts), names));
}

std::string render_table(const EvalReport& report) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-14s %8s %10s %8s %8s %8s %8s\n", "class", "support", "precision", "recall",
                "f1", "far", "mar");
  os << line;
  for (const auto& m : report.per_class) {
    std::snprintf(line, sizeof line, "%-14s %8lld %10.4f %8.4f %8.4f %8.4f %8.4f%s\n", m.name.c_str(),
                  static_cast<long long>(m.support), m.precision, m.recall, m.f1, m.far, m.mar,
                  m.degenerate.empty() ? "" : " *");
    os << line;
  }
  std::snprintf(line, sizeof line, "%-14s %8lld %10.4f %8.4f %8.4f %8.4f %8.4f\n", "macro",
                static_cast<long long>(report.confusion.total()), report.macro_precision, report.macro_recall,
                report.macro_f1, report.macro_far, report.macro_mar);
  os << line;
  std::snprintf(line, sizeof line, "accuracy %.4f over %lld samples\n", report.accuracy,
                static_cast<long long>(report.confusion.total()));
  os << line;
  bool any = false;
  for (const auto& m : report.per_class) any = any || !m.degenerate.empty();
  if (any) os << "* one or more ratios had a zero denominator and were reported as 0\n";
  return os.str();
}

std::string confusion_csv(const ConfusionMatrix& cm) {
  std::ostringstream os;
  os << "actual\\predicted";
  for (const auto& n : cm.class_names()) os << ',' << n;
  os << '\n';
  for (Index r = 0; r < cm.classes(); ++r) {
    os << cm.class_names()[static_cast<std::size_t>(r)];
    for (Index c = 0; c < cm.classes(); ++c) os << ',' << cm.counts()(r, c);
    os << '\n';
  }
  return os.str();
}

std::string metrics_csv(const EvalReport& report) {
  std::ostringstream os;
  os << "class,support,precision,recall,f1,far,mar\n";
  for (const auto& m : report.per_class)
    os << m.name << ',' << m.support << ',' << format_double(m.precision) << ',' << format_double(m.recall) << ','
       << format_double(m.f1) << ',' << format_double(m.far) << ',' << format_double(m.mar) << '\n';
  os << "macro," << report.confusion.total() << ',' << format_double(report.macro_precision) << ','
     << format_double(report.macro_recall) << ',' << format_double(report.macro_f1) << ','
     << format_double(report.macro_far) << ',' << format_double(report.macro_mar) << '\n';
  return os.str();
}

}  // namespace tdafault
