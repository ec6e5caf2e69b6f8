#pragma once

// Little-endian byte encoding shared by the EMB1/PRB1/KVM1 codecs.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace knnre::detail {

class ByteWriter {
 public:
  void raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    buf_.insert(buf_.end(), p, p + n);
  }
  void u16(std::uint16_t v) { le(v); }
  void u32(std::uint32_t v) { le(v); }
  void i32(std::int32_t v) { le(static_cast<std::uint32_t>(v)); }
  void f32(float v) { le(std::bit_cast<std::uint32_t>(v)); }
  // u16 length prefix followed by the bytes.
  void short_string(std::string_view s);

  std::vector<unsigned char>& bytes() { return buf_; }

 private:
  template <typename T>
  void le(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      buf_.push_back(static_cast<unsigned char>(v >> (8 * i)));
    }
  }
  std::vector<unsigned char> buf_;
};

// Bounds-checked reader; every failure reports the byte offset.
class ByteReader {
 public:
  ByteReader(const std::vector<unsigned char>& bytes, std::string source)
      : data_(bytes.data()), size_(bytes.size()), source_(std::move(source)) {}
  ByteReader(const unsigned char* data, std::size_t size, std::string source)
      : data_(data), size_(size), source_(std::move(source)) {}

  std::size_t offset() const { return pos_; }
  std::size_t size() const { return size_; }
  std::size_t remaining() const { return size_ - pos_; }
  const std::string& source() const { return source_; }

  // Throws a truncation error naming expected vs available byte counts.
  void need(std::size_t n, std::string_view what) const;
  void magic(const char (&expected)[4]);
  std::uint16_t u16(std::string_view what);
  std::uint32_t u32(std::string_view what);
  std::int32_t i32(std::string_view what) { return static_cast<std::int32_t>(u32(what)); }
  float f32(std::string_view what);
  std::string short_string(std::string_view what);
  const unsigned char* take(std::size_t n, std::string_view what);

 private:
  template <typename T>
  T le(std::string_view what) {
    need(sizeof(T), what);
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<T>(static_cast<T>(data_[pos_ + i]) << (8 * i));
    }
    pos_ += sizeof(T);
    return v;
  }

  const unsigned char* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
  std::string source_;
};

std::vector<unsigned char> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<unsigned char>& bytes);

}  // namespace knnre::detail
