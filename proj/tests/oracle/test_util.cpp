#include "test_util.hpp"

#include <atomic>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "knnre/dataset_io.hpp"

namespace knnre::testing {

namespace fs = std::filesystem;

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("knnre-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

LabelVocab letters(std::size_t n, bool with_negative) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back(std::string(1, static_cast<char>('A' + i)));
  if (with_negative) {
    names.push_back("N");
    return LabelVocab(names, "N");
  }
  return LabelVocab(names);
}

LabeledSet random_set(std::mt19937_64& gen, const LabelVocab& vocab, std::size_t rows, std::size_t dim,
                      const std::string& prefix, bool grid) {
  std::uniform_real_distribution<double> real(-1.0, 1.0);
  std::uniform_int_distribution<int> small(-2, 2);
  std::uniform_int_distribution<std::size_t> label(0, vocab.size() - 1);
  LabeledSet out{EmbeddingSet(dim), {}, vocab};
  std::vector<double> v(dim);
  for (std::size_t r = 0; r < rows; ++r) {
    for (auto& x : v) x = grid ? small(gen) : real(gen);
    out.embeddings.append(prefix + std::to_string(r), v);
    out.labels.push_back(static_cast<LabelId>(label(gen)));
  }
  return out;
}

BaseProbSet random_base(std::mt19937_64& gen, const LabeledSet& set) {
  std::uniform_real_distribution<double> real(0.01, 1.0);
  const std::size_t c = set.vocab.size();
  EmbeddingSet rows(c);
  std::vector<double> p(c);
  for (std::size_t r = 0; r < set.size(); ++r) {
    double sum = 0.0;
    for (auto& x : p) sum += (x = real(gen));
    for (auto& x : p) x /= sum;
    rows.append(set.embeddings.id(r), p);
  }
  return make_base_probs(set.vocab, std::move(rows), "random");
}

RawMemory raw(const MemoryStore& memory) {
  RawMemory out;
  for (std::size_t r = 0; r < memory.size(); ++r) {
    auto k = memory.key(r);
    out.keys.emplace_back(k.begin(), k.end());
    out.labels.push_back(memory.value(r));
  }
  return out;
}

std::vector<double> row_vector(const EmbeddingSet& set, std::size_t i) {
  auto r = set.row(i);
  return {r.begin(), r.end()};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace knnre::testing
