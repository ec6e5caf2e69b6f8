#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "knnre/data_model.hpp"
#include "knnre/memory.hpp"

namespace knnre::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

LabelVocab letters(std::size_t n, bool with_negative = false);  // "A", "B", ... (+ "N")

// Random labeled points. With `grid`, coordinates are small integers so that
// many distances tie exactly.
LabeledSet random_set(std::mt19937_64& gen, const LabelVocab& vocab, std::size_t rows, std::size_t dim,
                      const std::string& prefix, bool grid = false);

// Random strictly positive distributions, one row per record of `set`.
BaseProbSet random_base(std::mt19937_64& gen, const LabeledSet& set);

struct RawMemory {
  std::vector<std::vector<double>> keys;
  std::vector<unsigned> labels;
};
RawMemory raw(const MemoryStore& memory);

std::vector<double> row_vector(const EmbeddingSet& set, std::size_t i);
std::string slurp(const std::filesystem::path& path);

}  // namespace knnre::testing
