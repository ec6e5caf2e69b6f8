#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "knnre/data_model.hpp"

namespace knnre {

// EMB1: "EMB1", u32 rows, u32 dim, then per row u16 id length, id bytes,
// dim x f32. All integers and floats little-endian. PRB1 is the same layout
// with its own magic and dim = |vocab|.
inline constexpr char kEmbeddingMagic[4] = {'E', 'M', 'B', '1'};
inline constexpr char kProbsMagic[4] = {'P', 'R', 'B', '1'};

EmbeddingSet load_embeddings(const std::filesystem::path& path);
EmbeddingSet decode_embeddings(const std::vector<unsigned char>& bytes, const char (&magic)[4],
                               const std::string& source);
std::vector<unsigned char> encode_embeddings(const EmbeddingSet& set, const char (&magic)[4]);
void write_embeddings(const EmbeddingSet& set, const std::filesystem::path& path);

// Raw PRB1 rows, no distribution checks.
EmbeddingSet load_prob_table(const std::filesystem::path& path);
void write_base_probs(const BaseProbSet& probs, const std::filesystem::path& path);

// One `record_id<TAB>label_name` line per record.
std::vector<std::pair<std::string, std::string>> load_label_lines(const std::filesystem::path& path);
void write_labels(const LabeledSet& set, const std::filesystem::path& path);

DatasetManifest load_manifest(const std::filesystem::path& path);
// Split paths are written relative to the manifest directory when possible.
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

// Joins a split's embeddings with its labels. Counts and dim are checked
// against the manifest.
LabeledSet load_labeled_set(const DatasetManifest& manifest, const std::string& split);

// Validates and renormalizes base-classifier rows. Rows whose sum is within
// kBaseProbSumTolerance of 1 are divided by their sum; anything further off
// is rejected.
inline constexpr double kBaseProbSumTolerance = 1e-4;
BaseProbSet load_base_probs(const DatasetManifest& manifest, const std::string& split);
BaseProbSet make_base_probs(const LabelVocab& vocab, EmbeddingSet rows, const std::string& source);

// A split together with its base probabilities, with matching record ids.
struct Split {
  LabeledSet data;
  std::optional<BaseProbSet> base;
};
Split load_split(const DatasetManifest& manifest, const std::string& split, bool require_base);

// Writes EMB1 + TSV (+ PRB1) files for a split into `dir` with the given stem
// and returns the manifest entry.
SplitFiles write_split(const LabeledSet& data, const BaseProbSet* base,
                       const std::filesystem::path& dir, const std::string& stem);

}  // namespace knnre
