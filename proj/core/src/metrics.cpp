#include "knnre/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "knnre/error.hpp"

namespace knnre {

using json = nlohmann::json;

namespace {

double safe_div(double num, double den) { return den > 0.0 ? num / den : 0.0; }

double f1_of(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

}  // namespace

EvalReport evaluate(const std::map<std::string, LabelId>& gold, const std::map<std::string, LabelId>& predicted,
                    const LabelVocab& vocab, bool exclude_negative) {
  if (gold.size() != predicted.size()) {
    throw ValidationError("evaluate: " + std::to_string(gold.size()) + " gold labels but " +
                          std::to_string(predicted.size()) + " predictions");
  }
  const auto negative = vocab.negative_label();
  if (exclude_negative && !negative) {
    throw ValidationError("evaluate: negative-class exclusion requested but the vocab has no negative label");
  }

  const std::size_t C = vocab.size();
  EvalReport report;
  report.vocab = vocab;
  report.excluded_negative = exclude_negative;
  report.confusion.assign(C, std::vector<std::size_t>(C, 0));
  auto g = gold.begin();
  auto p = predicted.begin();
  for (; g != gold.end(); ++g, ++p) {
    if (g->first != p->first) {
      throw ValidationError("evaluate: record \"" + g->first + "\" has no matching prediction");
    }
    if (!vocab.contains(g->second) || !vocab.contains(p->second)) {
      throw ValidationError("evaluate: label outside vocab for record \"" + g->first + "\"");
    }
    ++report.confusion[g->second][p->second];
  }
  report.num_examples = gold.size();

  std::size_t correct = 0, pos_correct = 0, pos_pred = 0, pos_gold = 0;
  double macro_sum = 0.0;
  std::size_t macro_classes = 0;
  for (LabelId c = 0; c < C; ++c) {
    ClassScore s;
    s.label = c;
    std::size_t tp = report.confusion[c][c];
    for (LabelId o = 0; o < C; ++o) {
      s.gold_count += report.confusion[c][o];
      s.predicted_count += report.confusion[o][c];
    }
    s.precision = safe_div(static_cast<double>(tp), static_cast<double>(s.predicted_count));
    s.recall = safe_div(static_cast<double>(tp), static_cast<double>(s.gold_count));
    s.f1 = f1_of(s.precision, s.recall);
    correct += tp;
    const bool is_negative = exclude_negative && negative && *negative == c;
    if (!is_negative) {
      pos_correct += tp;
      pos_pred += s.predicted_count;
      pos_gold += s.gold_count;
      macro_sum += s.f1;
      ++macro_classes;
      if (s.gold_count == 0 && s.predicted_count == 0) ++report.absent_classes;
    }
    report.per_class.push_back(s);
  }

  if (exclude_negative) {
    report.micro_precision = safe_div(static_cast<double>(pos_correct), static_cast<double>(pos_pred));
    report.micro_recall = safe_div(static_cast<double>(pos_correct), static_cast<double>(pos_gold));
  } else {
    report.micro_precision = safe_div(static_cast<double>(correct), static_cast<double>(report.num_examples));
    report.micro_recall = report.micro_precision;
  }
  report.micro_f1 = exclude_negative ? f1_of(report.micro_precision, report.micro_recall) : report.micro_precision;
  report.macro_f1 = safe_div(macro_sum, static_cast<double>(macro_classes));
  return report;
}

void attach_train_counts(EvalReport& report, const std::map<LabelId, std::size_t>& train_counts) {
  for (auto& s : report.per_class) {
    auto it = train_counts.find(s.label);
    s.train_count = it == train_counts.end() ? 0 : it->second;
  }
}

std::map<LabelId, std::size_t> label_histogram(const LabeledSet& set) {
  std::map<LabelId, std::size_t> counts;
  for (LabelId c = 0; c < set.vocab.size(); ++c) counts[c] = 0;
  for (LabelId l : set.labels) ++counts[l];
  return counts;
}

std::vector<LongTailRow> longtail_report(const EvalReport& report, const EvalReport& baseline,
                                         const std::map<LabelId, std::size_t>& train_counts,
                                         std::size_t threshold) {
  if (report.per_class.size() != baseline.per_class.size() || !(report.vocab == baseline.vocab)) {
    throw ValidationError("longtail_report: reports cover different vocabularies");
  }
  const auto negative = report.vocab.negative_label();
  std::vector<LongTailRow> rows;
  for (const auto& s : report.per_class) {
    if (report.excluded_negative && negative && *negative == s.label) continue;
    auto it = train_counts.find(s.label);
    if (it == train_counts.end()) {
      throw ValidationError("longtail_report: no train count for label \"" + report.vocab.name(s.label) + "\"");
    }
    if (it->second > threshold) continue;
    const auto& b = baseline.per_class[s.label];
    rows.push_back(LongTailRow{s.label, report.vocab.name(s.label), it->second, s.gold_count, b.f1, s.f1,
                               s.f1 - b.f1});
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const LongTailRow& a, const LongTailRow& b) { return a.train_count > b.train_count; });
  return rows;
}

std::string to_json(const EvalReport& report) {
  json doc;
  doc["num_examples"] = report.num_examples;
  doc["excluded_negative"] = report.excluded_negative;
  doc["micro_precision"] = report.micro_precision;
  doc["micro_recall"] = report.micro_recall;
  doc["micro_f1"] = report.micro_f1;
  doc["macro_f1"] = report.macro_f1;
  doc["absent_classes"] = report.absent_classes;
  doc["labels"] = report.vocab.names();
  doc["confusion"] = report.confusion;
  json classes = json::array();
  for (const auto& s : report.per_class) {
    json c;
    c["label"] = report.vocab.name(s.label);
    c["precision"] = s.precision;
    c["recall"] = s.recall;
    c["f1"] = s.f1;
    c["gold_count"] = s.gold_count;
    c["predicted_count"] = s.predicted_count;
    if (s.train_count) c["train_count"] = *s.train_count;
    classes.push_back(std::move(c));
  }
  doc["per_class"] = std::move(classes);
  return doc.dump(2);
}

std::string to_text(const EvalReport& report) {
  std::size_t width = 5;
  for (const auto& n : report.vocab.names()) width = std::max(width, n.size());
  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  out << "examples " << report.num_examples << (report.excluded_negative ? "  (negative class excluded)" : "")
      << '\n';
  out << "micro P/R/F1  " << 100.0 * report.micro_precision << " / " << 100.0 * report.micro_recall << " / "
      << 100.0 * report.micro_f1 << '\n';
  out << "macro F1      " << 100.0 * report.macro_f1 << "  (absent classes: " << report.absent_classes << ")\n\n";
  out << std::left << std::setw(static_cast<int>(width)) << "label" << std::right << std::setw(9) << "P"
      << std::setw(9) << "R" << std::setw(9) << "F1" << std::setw(8) << "gold" << std::setw(8) << "pred"
      << std::setw(8) << "train" << '\n';
  for (const auto& s : report.per_class) {
    out << std::left << std::setw(static_cast<int>(width)) << report.vocab.name(s.label) << std::right
        << std::setw(9) << 100.0 * s.precision << std::setw(9) << 100.0 * s.recall << std::setw(9) << 100.0 * s.f1
        << std::setw(8) << s.gold_count << std::setw(8) << s.predicted_count << std::setw(8)
        << (s.train_count ? std::to_string(*s.train_count) : std::string("-")) << '\n';
  }
  return out.str();
}

std::string to_json(const std::vector<LongTailRow>& rows) {
  json doc = json::array();
  for (const auto& r : rows) {
    doc.push_back({{"label", r.name},
                   {"train_count", r.train_count},
                   {"test_count", r.test_count},
                   {"baseline_f1", r.baseline_f1},
                   {"system_f1", r.system_f1},
                   {"delta", r.delta}});
  }
  return doc.dump(2);
}

std::string to_text(const std::vector<LongTailRow>& rows) {
  std::size_t width = 13;
  for (const auto& r : rows) width = std::max(width, r.name.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(width)) << "relation type" << std::right << std::setw(8)
      << "# train" << std::setw(8) << "# test" << std::setw(10) << "baseline" << std::setw(18) << "system" << '\n';
  for (const auto& r : rows) {
    char delta[32];
    std::snprintf(delta, sizeof(delta), "%+.2f", 100.0 * r.delta);
    char system[48];
    std::snprintf(system, sizeof(system), "%.2f (%s)", 100.0 * r.system_f1, delta);
    char baseline[32];
    std::snprintf(baseline, sizeof(baseline), "%.2f", 100.0 * r.baseline_f1);
    out << std::left << std::setw(static_cast<int>(width)) << r.name << std::right << std::setw(8) << r.train_count
        << std::setw(8) << r.test_count << std::setw(10) << baseline << std::setw(18) << system << '\n';
  }
  return out.str();
}

}  // namespace knnre
