#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "knnre/data_model.hpp"

namespace knnre {

struct SourceTag {
  enum class Kind { train, ds, other };
  Kind kind = Kind::train;
  std::string other_name;

  static SourceTag train() { return {Kind::train, {}}; }
  static SourceTag ds() { return {Kind::ds, {}}; }
  // "train" and "ds" map to their kinds; anything else becomes other(name).
  static SourceTag parse(std::string_view name);
  std::string str() const;

  friend bool operator==(const SourceTag&, const SourceTag&) = default;
};

// Frozen key-value memory: one (relation representation, label) pair per
// labeled example, in input order. Squared key norms are cached for the
// search kernel.
class MemoryStore {
 public:
  std::size_t size() const { return values_.size(); }
  std::size_t dim() const { return dim_; }
  std::span<const double> key(std::size_t row) const { return {keys_.data() + row * dim_, dim_}; }
  const std::vector<double>& keys() const { return keys_; }
  const std::vector<double>& squared_norms() const { return norms_; }
  LabelId value(std::size_t row) const { return values_[row]; }
  const std::vector<LabelId>& values() const { return values_; }
  const std::string& id(std::size_t row) const { return ids_[row]; }
  const std::vector<std::string>& ids() const { return ids_; }
  std::optional<std::size_t> find(std::string_view record_id) const;
  const SourceTag& tag() const { return tag_; }
  const LabelVocab& vocab() const { return vocab_; }

  friend bool operator==(const MemoryStore& a, const MemoryStore& b) {
    return a.dim_ == b.dim_ && a.keys_ == b.keys_ && a.values_ == b.values_ && a.ids_ == b.ids_ &&
           a.tag_ == b.tag_ && a.vocab_ == b.vocab_;
  }

 private:
  friend MemoryStore build_memory(const LabeledSet& data, SourceTag tag);
  friend MemoryStore decode_memory(const std::vector<unsigned char>& bytes, const std::string& source);

  MemoryStore(std::size_t dim, std::vector<double> keys, std::vector<LabelId> values,
              std::vector<std::string> ids, SourceTag tag, LabelVocab vocab);

  std::size_t dim_ = 0;
  std::vector<double> keys_;
  std::vector<double> norms_;
  std::vector<LabelId> values_;
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> index_;
  SourceTag tag_;
  LabelVocab vocab_;
};

// Throws ValidationError("empty memory") on an empty set.
MemoryStore build_memory(const LabeledSet& data, SourceTag tag);

// KVM1: "KVM1", u32 version, tag string, vocab block, u32 rows, u32 dim,
// keys (f32), values (u32), ids, CRC32 of everything before it.
inline constexpr std::uint32_t kMemoryFormatVersion = 1;

std::vector<unsigned char> encode_memory(const MemoryStore& memory);
MemoryStore decode_memory(const std::vector<unsigned char>& bytes, const std::string& source);
void save_memory(const MemoryStore& memory, const std::filesystem::path& path);
MemoryStore load_memory(const std::filesystem::path& path);

}  // namespace knnre
