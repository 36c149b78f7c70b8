#pragma once

#include <string>
#include <vector>

#include "offmix/corpus.hpp"

namespace offmix {

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long support = 0;
};

/// Per-class and weighted precision/recall/F1 plus accuracy. Weighted
/// averages weight by gold support, which makes weighted recall equal to
/// accuracy identically; zero-denominator metrics are 0 with `degenerate`
/// set.
struct MetricsReport {
  ClassMetrics not_offensive;
  ClassMetrics offensive;
  double weighted_precision = 0.0;
  double weighted_recall = 0.0;
  double weighted_f1 = 0.0;
  double accuracy = 0.0;
  bool degenerate = false;
};

MetricsReport compute_metrics(const std::vector<Label>& preds,
                              const std::vector<Label>& gold);

/// Support-weighted average of one metric over the two classes.
double weighted_average(double metric_not, double metric_off, long support_not,
                        long support_off);

std::string metrics_to_json(const MetricsReport& report);
MetricsReport metrics_from_json(const std::string& json_text);

/// Aligned plain-text table (per-class rows, weighted row, accuracy).
std::string metrics_table(const MetricsReport& report);

// -------------------------------------------------------------------- audit

struct AuditResult {
  bool pass = false;
  double accuracy = 0.0;
  double count_accuracy = 0.0;  // correct / (correct + incorrect)
  double accuracy_delta = 0.0;
  double accuracy_tolerance = 5e-4;
  bool recall_identity_ok = false;
  double recall_delta = 0.0;
};

/// Consistency check of a report against externally stated counts: passes
/// iff |accuracy - correct/(correct+incorrect)| <= 5e-4 and the weighted
/// recall equals the accuracy (within 1e-9).
AuditResult audit_report(const MetricsReport& report, long correct, long incorrect);

std::string audit_to_json(const AuditResult& result);

/// Integer class supports (s_not, s_off) with s_not + s_off == total that
/// best explain `accuracy` given the two class recalls.
std::pair<long, long> derive_supports(double recall_not, double recall_off,
                                      double accuracy, long total);

// ------------------------------------------------------------- error report

struct ErrorEntry {
  std::string text;
  Label gold = Label::NOT;
  Label pred = Label::NOT;
  double probability = 0.0;  // model probability of OFF
  double confidence = 0.0;   // probability of the predicted label
};

/// Misclassified samples grouped by error type, each group ordered by
/// descending confidence of the (wrong) prediction.
struct ErrorReport {
  std::vector<ErrorEntry> false_offensive;   // pred OFF, gold NOT
  std::vector<ErrorEntry> missed_offensive;  // pred NOT, gold OFF

  size_t size() const { return false_offensive.size() + missed_offensive.size(); }
};

ErrorReport error_report(const std::vector<double>& probs,
                         const std::vector<Label>& gold,
                         const std::vector<std::string>& texts,
                         double threshold = 0.5);

/// TSV rows: group, gold, pred, probability, text.
std::string error_report_tsv(const ErrorReport& report);

}  // namespace offmix
