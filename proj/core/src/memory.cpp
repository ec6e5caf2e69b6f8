#include "knnre/memory.hpp"

#include <cmath>

#include <zlib.h>

#include "binary_io.hpp"
#include "knnre/error.hpp"

namespace knnre {

namespace {

constexpr char kMemoryMagic[4] = {'K', 'V', 'M', '1'};

std::uint32_t crc32_of(const unsigned char* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  while (n > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

SourceTag SourceTag::parse(std::string_view name) {
  if (name == "train") return train();
  if (name == "ds") return ds();
  return {Kind::other, std::string(name)};
}

std::string SourceTag::str() const {
  switch (kind) {
    case Kind::train:
      return "train";
    case Kind::ds:
      return "ds";
    case Kind::other:
      return other_name;
  }
  return other_name;
}

MemoryStore::MemoryStore(std::size_t dim, std::vector<double> keys, std::vector<LabelId> values,
                         std::vector<std::string> ids, SourceTag tag, LabelVocab vocab)
    : dim_(dim),
      keys_(std::move(keys)),
      values_(std::move(values)),
      ids_(std::move(ids)),
      tag_(std::move(tag)),
      vocab_(std::move(vocab)) {
  if (values_.empty()) {
    throw ValidationError("empty memory");
  }
  if (dim_ == 0 || keys_.size() != values_.size() * dim_ || ids_.size() != values_.size()) {
    throw ValidationError("memory: inconsistent shapes");
  }
  norms_.resize(values_.size());
  index_.reserve(ids_.size());
  for (std::size_t r = 0; r < values_.size(); ++r) {
    if (!vocab_.contains(values_[r])) {
      throw ValidationError("memory: label id " + std::to_string(values_[r]) + " at row " + std::to_string(r) +
                            " outside vocab");
    }
    double n = 0.0;
    for (double v : key(r)) n += v * v;
    norms_[r] = n;
    index_.emplace(ids_[r], r);
  }
}

std::optional<std::size_t> MemoryStore::find(std::string_view record_id) const {
  auto it = index_.find(std::string(record_id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

MemoryStore build_memory(const LabeledSet& data, SourceTag tag) {
  if (data.size() == 0) {
    throw ValidationError("empty memory");
  }
  data.validate();
  return MemoryStore(data.embeddings.dim(), data.embeddings.values(), data.labels, data.embeddings.ids(),
                     std::move(tag), data.vocab);
}

std::vector<unsigned char> encode_memory(const MemoryStore& m) {
  detail::ByteWriter out;
  out.raw(kMemoryMagic, 4);
  out.u32(kMemoryFormatVersion);
  out.short_string(m.tag().str());

  const LabelVocab& vocab = m.vocab();
  out.u32(static_cast<std::uint32_t>(vocab.size()));
  for (const auto& name : vocab.names()) out.short_string(name);
  auto neg = vocab.negative_label();
  out.i32(neg ? static_cast<std::int32_t>(*neg) : -1);

  out.u32(static_cast<std::uint32_t>(m.size()));
  out.u32(static_cast<std::uint32_t>(m.dim()));
  for (double v : m.keys()) out.f32(static_cast<float>(v));
  for (LabelId v : m.values()) out.u32(v);
  for (const auto& id : m.ids()) out.short_string(id);

  auto& bytes = out.bytes();
  const std::uint32_t crc = crc32_of(bytes.data(), bytes.size());
  out.u32(crc);
  return std::move(out.bytes());
}

MemoryStore decode_memory(const std::vector<unsigned char>& bytes, const std::string& source) {
  detail::ByteReader in(bytes, source);
  in.magic(kMemoryMagic);
  const std::uint32_t version = in.u32("version");
  if (version != kMemoryFormatVersion) {
    throw ValidationError(source + ": memory format version " + std::to_string(version) + ", expected " +
                          std::to_string(kMemoryFormatVersion));
  }
  if (bytes.size() < 12) {
    throw ValidationError(source + ": truncated memory file");
  }
  const std::size_t body = bytes.size() - 4;
  detail::ByteReader tail(bytes.data() + body, 4, source);
  const std::uint32_t stored_crc = tail.u32("checksum");
  const std::uint32_t actual_crc = crc32_of(bytes.data(), body);
  if (stored_crc != actual_crc) {
    throw ValidationError(source + ": checksum failure (stored CRC32 " + std::to_string(stored_crc) +
                          ", computed " + std::to_string(actual_crc) + ")");
  }

  detail::ByteReader payload(bytes.data(), body, source);
  payload.take(8, "header");
  SourceTag tag = SourceTag::parse(payload.short_string("tag"));

  const std::uint32_t num_labels = payload.u32("vocab size");
  std::vector<std::string> names;
  names.reserve(num_labels);
  for (std::uint32_t i = 0; i < num_labels; ++i) names.push_back(payload.short_string("label name"));
  const std::int32_t neg = payload.i32("negative label");
  std::optional<std::string> negative;
  if (neg >= 0) {
    if (static_cast<std::uint32_t>(neg) >= num_labels) {
      throw ValidationError(source + ": negative label id " + std::to_string(neg) + " outside vocab");
    }
    negative = names[static_cast<std::size_t>(neg)];
  }
  LabelVocab vocab(std::move(names), negative);

  const std::uint32_t rows = payload.u32("row count");
  const std::uint32_t dim = payload.u32("dim");
  payload.need(static_cast<std::size_t>(rows) * dim * 4, "keys");
  std::vector<double> keys(static_cast<std::size_t>(rows) * dim);
  for (auto& k : keys) {
    const float v = payload.f32("key");
    if (!std::isfinite(v)) {
      throw ValidationError(source + ": non-finite key at byte offset " + std::to_string(payload.offset() - 4));
    }
    k = v;
  }
  std::vector<LabelId> values(rows);
  for (auto& v : values) v = payload.u32("value");
  std::vector<std::string> ids;
  ids.reserve(rows);
  for (std::uint32_t r = 0; r < rows; ++r) ids.push_back(payload.short_string("record id"));
  if (payload.remaining() != 0) {
    throw ValidationError(source + ": " + std::to_string(payload.remaining()) + " unexpected bytes before checksum");
  }
  return MemoryStore(dim, std::move(keys), std::move(values), std::move(ids), std::move(tag), std::move(vocab));
}

void save_memory(const MemoryStore& memory, const std::filesystem::path& path) {
  detail::write_file(path, encode_memory(memory));
}

MemoryStore load_memory(const std::filesystem::path& path) {
  return decode_memory(detail::read_file(path), path.string());
}

}  // namespace knnre
