#include "knnre/data_model.hpp"

#include <cmath>

#include "knnre/error.hpp"

namespace knnre {

LabelVocab::LabelVocab(std::vector<std::string> names, std::optional<std::string> negative_label)
    : names_(std::move(names)) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i].empty()) {
      throw ValidationError("label vocab: empty name at id " + std::to_string(i));
    }
    if (!index_.emplace(names_[i], static_cast<LabelId>(i)).second) {
      throw ValidationError("label vocab: duplicate name \"" + names_[i] + "\"");
    }
  }
  if (negative_label) {
    auto it = index_.find(*negative_label);
    if (it == index_.end()) {
      throw ValidationError("label vocab: negative label \"" + *negative_label + "\" is not in the vocab");
    }
    negative_ = it->second;
  }
}

const std::string& LabelVocab::name(LabelId id) const {
  if (id >= names_.size()) {
    throw ValidationError("label id " + std::to_string(id) + " outside vocab of size " +
                          std::to_string(names_.size()));
  }
  return names_[id];
}

std::optional<LabelId> LabelVocab::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

LabelId LabelVocab::id_of(std::string_view name) const {
  auto id = find(name);
  if (!id) {
    throw ValidationError("unknown label \"" + std::string(name) + "\"");
  }
  return *id;
}

EmbeddingSet::EmbeddingSet(std::size_t dim) : dim_(dim) {
  if (dim == 0) {
    throw ValidationError("embedding dim must be positive");
  }
}

EmbeddingSet::EmbeddingSet(std::size_t dim, std::vector<std::string> ids, std::vector<double> values)
    : EmbeddingSet(dim) {
  if (values.size() != ids.size() * dim) {
    throw ValidationError("embedding set: " + std::to_string(values.size()) + " values for " +
                          std::to_string(ids.size()) + " rows of dim " + std::to_string(dim));
  }
  ids_.reserve(ids.size());
  index_.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      if (!std::isfinite(values[i * dim + j])) {
        throw ValidationError("embedding set: non-finite value at row " + std::to_string(i) + ", column " +
                              std::to_string(j));
      }
    }
    if (!index_.emplace(ids[i], i).second) {
      throw ValidationError("embedding set: duplicate record_id \"" + ids[i] + "\" at row " + std::to_string(i));
    }
  }
  ids_ = std::move(ids);
  values_ = std::move(values);
}

std::optional<std::size_t> EmbeddingSet::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void EmbeddingSet::append(std::string id, std::span<const double> vec) {
  if (dim_ == 0) {
    throw ValidationError("embedding set: append to a set without a dimension");
  }
  if (vec.size() != dim_) {
    throw ValidationError("embedding set: row \"" + id + "\" has " + std::to_string(vec.size()) +
                          " entries, expected " + std::to_string(dim_));
  }
  for (std::size_t j = 0; j < vec.size(); ++j) {
    if (!std::isfinite(vec[j])) {
      throw ValidationError("embedding set: non-finite value at row " + std::to_string(ids_.size()) +
                            ", column " + std::to_string(j));
    }
  }
  if (!index_.emplace(id, ids_.size()).second) {
    throw ValidationError("embedding set: duplicate record_id \"" + id + "\" at row " +
                          std::to_string(ids_.size()));
  }
  ids_.push_back(std::move(id));
  values_.insert(values_.end(), vec.begin(), vec.end());
}

LabelId LabeledSet::label_of(std::string_view record_id) const {
  auto row = embeddings.find(record_id);
  if (!row) {
    throw ValidationError("record \"" + std::string(record_id) + "\" not in labeled set");
  }
  return labels[*row];
}

void LabeledSet::validate() const {
  if (labels.size() != embeddings.size()) {
    throw ValidationError("labeled set: " + std::to_string(embeddings.size()) + " embeddings but " +
                          std::to_string(labels.size()) + " labels");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!vocab.contains(labels[i])) {
      throw ValidationError("labeled set: label id " + std::to_string(labels[i]) + " of record \"" +
                            embeddings.id(i) + "\" outside vocab");
    }
  }
}

double LabelDistribution::sum() const {
  double s = 0.0;
  for (double p : probs_) s += p;
  return s;
}

LabelId LabelDistribution::argmax() const {
  LabelId best = 0;
  for (std::size_t i = 1; i < probs_.size(); ++i) {
    if (probs_[i] > probs_[best]) best = static_cast<LabelId>(i);
  }
  return best;
}

bool LabelDistribution::is_valid(double tol) const {
  for (double p : probs_) {
    if (!(p >= 0.0) || !std::isfinite(p)) return false;
  }
  return !probs_.empty() && std::abs(sum() - 1.0) <= tol;
}

BaseProbSet::BaseProbSet(LabelVocab vocab, EmbeddingSet rows) : vocab_(std::move(vocab)), rows_(std::move(rows)) {
  if (!rows_.empty() && rows_.dim() != vocab_.size()) {
    throw ValidationError("base probs: row width " + std::to_string(rows_.dim()) + " != vocab size " +
                          std::to_string(vocab_.size()));
  }
}

std::span<const double> BaseProbSet::row(std::string_view record_id) const {
  auto i = rows_.find(record_id);
  if (!i) {
    throw ComputationError("no base probabilities for record \"" + std::string(record_id) + "\"");
  }
  return rows_.row(*i);
}

LabelDistribution BaseProbSet::distribution(std::string_view record_id) const {
  auto r = row(record_id);
  return LabelDistribution(std::vector<double>(r.begin(), r.end()));
}

const SplitFiles& DatasetManifest::split(const std::string& name) const {
  auto it = splits.find(name);
  if (it == splits.end()) {
    throw ValidationError("manifest has no split \"" + name + "\"");
  }
  return it->second;
}

}  // namespace knnre
