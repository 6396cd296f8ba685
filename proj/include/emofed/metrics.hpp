#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "emofed/errors.hpp"

namespace emofed {

// k x k counts, rows = true class, columns = predicted class.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int k) : k_(k), counts_(static_cast<std::size_t>(k) * k, 0) {
    if (k <= 0) throw DataError("confusion matrix needs k > 0");
  }

  int k() const { return k_; }
  std::int64_t at(int truth, int pred) const { return counts_[truth * k_ + pred]; }
  std::int64_t& at(int truth, int pred) { return counts_[truth * k_ + pred]; }

  std::int64_t total() const {
    std::int64_t t = 0;
    for (std::int64_t c : counts_) t += c;
    return t;
  }

  std::int64_t support(int truth) const {
    std::int64_t s = 0;
    for (int p = 0; p < k_; ++p) s += at(truth, p);
    return s;
  }

  std::int64_t trace() const {
    std::int64_t t = 0;
    for (int c = 0; c < k_; ++c) t += at(c, c);
    return t;
  }

  // Matrices from disjoint evaluation chunks merge by addition.
  ConfusionMatrix& operator+=(const ConfusionMatrix& other) {
    if (other.k_ != k_) throw DataError("confusion matrix size mismatch");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    return *this;
  }

 private:
  int k_;
  std::vector<std::int64_t> counts_;
};

inline ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> truths,
                                 int k) {
  if (preds.size() != truths.size())
    throw DataError("confusion: " + std::to_string(preds.size()) + " predictions vs " +
                    std::to_string(truths.size()) + " truths");
  if (preds.empty()) throw DataError("confusion: empty inputs");
  ConfusionMatrix cm(k);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (truths[i] < 0 || truths[i] >= k || preds[i] < 0 || preds[i] >= k)
      throw DataError("confusion: label out of range at position " + std::to_string(i));
    ++cm.at(truths[i], preds[i]);
  }
  return cm;
}

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::int64_t support = 0;
};

struct MetricsReport {
  double precision = 0.0;  // support-weighted
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::vector<ClassMetrics> per_class;
  int zero_division_count = 0;  // denominators that were defined to 0
};

// Per-class precision/recall/F1 with zero denominators scored as 0, plus
// support-weighted and macro aggregates. Weighted recall equals accuracy by
// construction.
inline MetricsReport report(const ConfusionMatrix& cm) {
  const std::int64_t total = cm.total();
  if (total == 0) throw DataError("report: empty confusion matrix");
  const int k = cm.k();

  MetricsReport rep;
  rep.per_class.resize(k);
  for (int c = 0; c < k; ++c) {
    const std::int64_t tp = cm.at(c, c);
    std::int64_t fp = 0;
    for (int t = 0; t < k; ++t)
      if (t != c) fp += cm.at(t, c);
    const std::int64_t support = cm.support(c);
    const std::int64_t fn = support - tp;

    ClassMetrics& m = rep.per_class[c];
    m.support = support;
    if (tp + fp > 0) m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    else ++rep.zero_division_count;
    if (tp + fn > 0) m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    else ++rep.zero_division_count;
    if (m.precision + m.recall > 0)
      m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    else ++rep.zero_division_count;

    const double weight = static_cast<double>(support) / static_cast<double>(total);
    rep.precision += weight * m.precision;
    rep.recall += weight * m.recall;
    rep.f1 += weight * m.f1;
    rep.macro_precision += m.precision / k;
    rep.macro_recall += m.recall / k;
    rep.macro_f1 += m.f1 / k;
  }
  rep.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(total);
  return rep;
}

}  // namespace emofed
