#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace knnre {

using LabelId = std::uint32_t;

// Ordered relation-type vocabulary. Ids are the positions 0..C-1.
class LabelVocab {
 public:
  LabelVocab() = default;
  // Throws ValidationError on empty/duplicate names or an unknown negative label.
  explicit LabelVocab(std::vector<std::string> names,
                      std::optional<std::string> negative_label = std::nullopt);

  std::size_t size() const { return names_.size(); }
  const std::string& name(LabelId id) const;
  const std::vector<std::string>& names() const { return names_; }
  std::optional<LabelId> find(std::string_view name) const;
  LabelId id_of(std::string_view name) const;  // throws ValidationError
  std::optional<LabelId> negative_label() const { return negative_; }
  bool contains(LabelId id) const { return id < names_.size(); }

  friend bool operator==(const LabelVocab& a, const LabelVocab& b) {
    return a.names_ == b.names_ && a.negative_ == b.negative_;
  }

 private:
  std::vector<std::string> names_;
  std::optional<LabelId> negative_;
  std::unordered_map<std::string, LabelId> index_;
};

// Row-major matrix of relation representations keyed by opaque record ids.
class EmbeddingSet {
 public:
  EmbeddingSet() = default;
  explicit EmbeddingSet(std::size_t dim);
  // Validates dimensions, finiteness and id uniqueness.
  EmbeddingSet(std::size_t dim, std::vector<std::string> ids, std::vector<double> values);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }

  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  const std::string& id(std::size_t i) const { return ids_[i]; }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::vector<double>& values() const { return values_; }
  std::optional<std::size_t> find(std::string_view id) const;

  void append(std::string id, std::span<const double> vec);

  friend bool operator==(const EmbeddingSet& a, const EmbeddingSet& b) {
    return a.dim_ == b.dim_ && a.ids_ == b.ids_ && a.values_ == b.values_;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<double> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Embeddings paired with one gold label per record (train, dev, test or DS).
struct LabeledSet {
  EmbeddingSet embeddings;
  std::vector<LabelId> labels;  // aligned with embeddings rows
  LabelVocab vocab;

  std::size_t size() const { return labels.size(); }
  LabelId label_of(std::string_view record_id) const;
  // Throws ValidationError if sizes disagree or a label is outside the vocab.
  void validate() const;
};

// Probability vector over the label vocabulary.
class LabelDistribution {
 public:
  LabelDistribution() = default;
  explicit LabelDistribution(std::size_t num_labels) : probs_(num_labels, 0.0) {}
  explicit LabelDistribution(std::vector<double> probs) : probs_(std::move(probs)) {}

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  double& operator[](std::size_t i) { return probs_[i]; }
  const std::vector<double>& probs() const { return probs_; }
  std::span<const double> view() const { return probs_; }

  double sum() const;
  // Highest probability; ties go to the lowest label id.
  LabelId argmax() const;
  // Nonnegative entries summing to 1 within `tol`.
  bool is_valid(double tol = 1e-9) const;

  friend bool operator==(const LabelDistribution&, const LabelDistribution&) = default;

 private:
  std::vector<double> probs_;
};

// Base classifier distributions p_RE(y|x), one row per record.
class BaseProbSet {
 public:
  BaseProbSet() = default;
  // Rows must already be valid distributions of width |vocab|.
  BaseProbSet(LabelVocab vocab, EmbeddingSet rows);

  const LabelVocab& vocab() const { return vocab_; }
  std::size_t size() const { return rows_.size(); }
  const EmbeddingSet& table() const { return rows_; }
  bool contains(std::string_view record_id) const { return rows_.find(record_id).has_value(); }
  // Throws ComputationError when the record has no base row.
  std::span<const double> row(std::string_view record_id) const;
  LabelDistribution distribution(std::string_view record_id) const;

 private:
  LabelVocab vocab_;
  EmbeddingSet rows_;
};

struct SplitFiles {
  std::string embeddings;
  std::string labels;
  std::optional<std::string> base_probs;
  std::size_t count = 0;
};

// Manifest document describing a dataset: vocab, dim and per-split files.
// Paths are stored resolved against the manifest's directory.
struct DatasetManifest {
  std::size_t dim = 0;
  LabelVocab vocab;
  std::map<std::string, SplitFiles> splits;
  std::string base_dir;

  const SplitFiles& split(const std::string& name) const;  // throws ValidationError
  bool has_split(const std::string& name) const { return splits.count(name) != 0; }
};

}  // namespace knnre
