#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "knnre/data_model.hpp"

namespace knnre {

struct ClassScore {
  LabelId label = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t gold_count = 0;
  std::size_t predicted_count = 0;
  std::optional<std::size_t> train_count;
};

struct EvalReport {
  LabelVocab vocab;
  std::vector<std::vector<std::size_t>> confusion;  // [gold][predicted]
  double micro_precision = 0.0;
  double micro_recall = 0.0;
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  std::size_t absent_classes = 0;  // zero gold and zero predicted; scored as F1 = 0
  std::size_t num_examples = 0;
  bool excluded_negative = false;
  std::vector<ClassScore> per_class;
};

// Scores predictions against gold labels. With exclude_negative, micro
// precision and recall only count non-negative predictions and golds, and
// the negative class is left out of the macro average.
EvalReport evaluate(const std::map<std::string, LabelId>& gold, const std::map<std::string, LabelId>& predicted,
                    const LabelVocab& vocab, bool exclude_negative);

// Fills ClassScore::train_count from a label histogram.
void attach_train_counts(EvalReport& report, const std::map<LabelId, std::size_t>& train_counts);

// Per-label histogram of a labeled set.
std::map<LabelId, std::size_t> label_histogram(const LabeledSet& set);

struct LongTailRow {
  LabelId label = 0;
  std::string name;
  std::size_t train_count = 0;
  std::size_t test_count = 0;
  double baseline_f1 = 0.0;
  double system_f1 = 0.0;
  double delta = 0.0;
};

// Classes with train_count <= threshold, most frequent first.
std::vector<LongTailRow> longtail_report(const EvalReport& report, const EvalReport& baseline,
                                         const std::map<LabelId, std::size_t>& train_counts,
                                         std::size_t threshold);

std::string to_json(const EvalReport& report);
std::string to_text(const EvalReport& report);
std::string to_json(const std::vector<LongTailRow>& rows);
// F1 columns in percent with two decimals; delta carries an explicit sign.
std::string to_text(const std::vector<LongTailRow>& rows);

}  // namespace knnre
