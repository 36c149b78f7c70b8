#include "offmix/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

namespace offmix {

namespace {

// Confusion counts with OFF as the positive class.
struct Confusion {
  long tp = 0, fp = 0, tn = 0, fn = 0;
  long total() const { return tp + fp + tn + fn; }
};

ClassMetrics class_metrics(long tp, long fp, long fn, bool* degenerate) {
  ClassMetrics m;
  m.support = tp + fn;
  if (tp + fp > 0) {
    m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  } else {
    *degenerate = true;
  }
  if (tp + fn > 0) {
    m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  } else {
    *degenerate = true;
  }
  if (m.precision + m.recall > 0.0) {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  } else {
    *degenerate = true;
  }
  return m;
}

}  // namespace

double weighted_average(double metric_not, double metric_off, long support_not,
                        long support_off) {
  long total = support_not + support_off;
  if (total == 0) return 0.0;
  return (metric_not * static_cast<double>(support_not) +
          metric_off * static_cast<double>(support_off)) /
         static_cast<double>(total);
}

MetricsReport compute_metrics(const std::vector<Label>& preds,
                              const std::vector<Label>& gold) {
  if (preds.size() != gold.size()) {
    throw Error(ErrorCode::LengthMismatch,
                std::to_string(preds.size()) + " predictions vs " +
                    std::to_string(gold.size()) + " gold labels");
  }
  if (preds.empty()) throw Error(ErrorCode::EmptyInput, "no predictions to score");

  Confusion c;
  long correct = 0;
  for (size_t i = 0; i < preds.size(); ++i) {
    bool p = preds[i] == Label::OFF;
    bool g = gold[i] == Label::OFF;
    if (p && g) ++c.tp;
    else if (p && !g) ++c.fp;
    else if (!p && g) ++c.fn;
    else ++c.tn;
    if (preds[i] == gold[i]) ++correct;
  }

  MetricsReport r;
  // For NOT the roles swap: its true positives are the tn cells.
  r.not_offensive = class_metrics(c.tn, c.fn, c.fp, &r.degenerate);
  r.offensive = class_metrics(c.tp, c.fp, c.fn, &r.degenerate);
  r.weighted_precision =
      weighted_average(r.not_offensive.precision, r.offensive.precision,
                       r.not_offensive.support, r.offensive.support);
  r.weighted_recall = weighted_average(r.not_offensive.recall, r.offensive.recall,
                                       r.not_offensive.support, r.offensive.support);
  r.weighted_f1 = weighted_average(r.not_offensive.f1, r.offensive.f1,
                                   r.not_offensive.support, r.offensive.support);
  r.accuracy = static_cast<double>(correct) / static_cast<double>(preds.size());
  return r;
}

std::string metrics_to_json(const MetricsReport& report) {
  auto class_json = [](const ClassMetrics& m) {
    return nlohmann::json{{"precision", m.precision},
                          {"recall", m.recall},
                          {"f1", m.f1},
                          {"support", m.support}};
  };
  nlohmann::json j;
  j["per_class"] = {{"not_offensive", class_json(report.not_offensive)},
                    {"offensive", class_json(report.offensive)}};
  j["overall"] = {{"precision", report.weighted_precision},
                  {"recall", report.weighted_recall},
                  {"f1", report.weighted_f1},
                  {"accuracy", report.accuracy}};
  j["degenerate"] = report.degenerate;
  return j.dump(2);
}

MetricsReport metrics_from_json(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::Config, "metrics JSON is invalid");
  auto read_class = [&](const char* key) {
    ClassMetrics m;
    const nlohmann::json& c = j.at("per_class").at(key);
    m.precision = c.value("precision", 0.0);
    m.recall = c.value("recall", 0.0);
    m.f1 = c.value("f1", 0.0);
    m.support = c.value("support", 0L);
    return m;
  };
  MetricsReport r;
  r.not_offensive = read_class("not_offensive");
  r.offensive = read_class("offensive");
  const nlohmann::json& o = j.at("overall");
  r.weighted_precision = o.value("precision", 0.0);
  r.weighted_recall = o.value("recall", 0.0);
  r.weighted_f1 = o.value("f1", 0.0);
  r.accuracy = o.value("accuracy", 0.0);
  r.degenerate = j.value("degenerate", false);
  return r;
}

std::string metrics_table(const MetricsReport& report) {
  char line[160];
  std::string out;
  out += "                 precision   recall       f1  support\n";
  auto row = [&](const char* name, const ClassMetrics& m) {
    std::snprintf(line, sizeof(line), "%-16s %9.3f %8.3f %8.3f %8ld\n", name,
                  m.precision, m.recall, m.f1, m.support);
    out += line;
  };
  row("not offensive", report.not_offensive);
  row("offensive", report.offensive);
  std::snprintf(line, sizeof(line), "%-16s %9.3f %8.3f %8.3f %8ld\n", "weighted",
                report.weighted_precision, report.weighted_recall, report.weighted_f1,
                report.not_offensive.support + report.offensive.support);
  out += line;
  std::snprintf(line, sizeof(line), "%-16s %27s %8.3f\n", "accuracy", "",
                report.accuracy);
  out += line;
  return out;
}

AuditResult audit_report(const MetricsReport& report, long correct, long incorrect) {
  AuditResult result;
  result.accuracy = report.accuracy;
  result.count_accuracy = static_cast<double>(correct) /
                          static_cast<double>(correct + incorrect);
  result.accuracy_delta = std::abs(result.accuracy - result.count_accuracy);
  result.recall_delta = std::abs(report.weighted_recall - report.accuracy);
  result.recall_identity_ok = result.recall_delta <= 1e-9;
  result.pass = result.accuracy_delta <= result.accuracy_tolerance &&
                result.recall_identity_ok;
  return result;
}

std::string audit_to_json(const AuditResult& result) {
  nlohmann::json j;
  j["pass"] = result.pass;
  j["accuracy"] = result.accuracy;
  j["count_accuracy"] = result.count_accuracy;
  j["accuracy_delta"] = result.accuracy_delta;
  j["accuracy_tolerance"] = result.accuracy_tolerance;
  j["recall_identity_ok"] = result.recall_identity_ok;
  j["recall_delta"] = result.recall_delta;
  return j.dump(2);
}

std::pair<long, long> derive_supports(double recall_not, double recall_off,
                                      double accuracy, long total) {
  // The underlying correct count is an integer; a published accuracy is
  // that integer divided by total, rounded. Recovering the count first
  // keeps the solve exact where the rounded product would drift.
  double correct = std::floor(accuracy * static_cast<double>(total) + 0.5);
  long best_not = 0;
  double best_err = std::numeric_limits<double>::infinity();
  for (long s = 0; s <= total; ++s) {
    double got = recall_not * static_cast<double>(s) +
                 recall_off * static_cast<double>(total - s);
    double err = std::abs(got - correct);
    if (err < best_err) {
      best_err = err;
      best_not = s;
    }
  }
  return {best_not, total - best_not};
}

ErrorReport error_report(const std::vector<double>& probs,
                         const std::vector<Label>& gold,
                         const std::vector<std::string>& texts,
                         double threshold) {
  if (probs.size() != gold.size() || probs.size() != texts.size()) {
    throw Error(ErrorCode::LengthMismatch, "probs/gold/texts lengths differ");
  }
  ErrorReport report;
  for (size_t i = 0; i < probs.size(); ++i) {
    // Ties at the threshold resolve to NOT.
    Label pred = probs[i] > threshold ? Label::OFF : Label::NOT;
    if (pred == gold[i]) continue;
    ErrorEntry e;
    e.text = texts[i];
    e.gold = gold[i];
    e.pred = pred;
    e.probability = probs[i];
    e.confidence = pred == Label::OFF ? probs[i] : 1.0 - probs[i];
    (pred == Label::OFF ? report.false_offensive : report.missed_offensive)
        .push_back(std::move(e));
  }
  auto by_confidence = [](const ErrorEntry& a, const ErrorEntry& b) {
    return a.confidence > b.confidence;
  };
  std::stable_sort(report.false_offensive.begin(), report.false_offensive.end(),
                   by_confidence);
  std::stable_sort(report.missed_offensive.begin(), report.missed_offensive.end(),
                   by_confidence);
  return report;
}

std::string error_report_tsv(const ErrorReport& report) {
  std::string out = "group\tgold\tpred\tprobability\ttext\n";
  char buf[32];
  auto rows = [&](const char* group, const std::vector<ErrorEntry>& entries) {
    for (const ErrorEntry& e : entries) {
      std::snprintf(buf, sizeof(buf), "%.6f", e.probability);
      std::string text = e.text;
      for (char& c : text) {
        if (c == '\t' || c == '\n' || c == '\r') c = ' ';
      }
      out += group;
      out += '\t';
      out += to_string(e.gold);
      out += '\t';
      out += to_string(e.pred);
      out += '\t';
      out += buf;
      out += '\t';
      out += text;
      out += '\n';
    }
  };
  rows("false_offensive", report.false_offensive);
  rows("missed_offensive", report.missed_offensive);
  return out;
}

}  // namespace offmix
