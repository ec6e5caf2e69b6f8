#include "binary_io.hpp"

#include <fstream>
#include <iterator>

#include "knnre/error.hpp"

namespace knnre::detail {

void ByteWriter::short_string(std::string_view s) {
  if (s.size() > 0xFFFF) {
    throw ValidationError("string of " + std::to_string(s.size()) + " bytes exceeds u16 length prefix");
  }
  u16(static_cast<std::uint16_t>(s.size()));
  raw(s.data(), s.size());
}

void ByteReader::need(std::size_t n, std::string_view what) const {
  if (n > size_ - pos_) {
    throw ValidationError(source_ + ": truncated payload reading " + std::string(what) + " at byte offset " +
                          std::to_string(pos_) + ": expected " + std::to_string(pos_ + n) +
                          " bytes, file has " + std::to_string(size_));
  }
}

void ByteReader::magic(const char (&expected)[4]) {
  need(4, "magic");
  if (std::memcmp(data_ + pos_, expected, 4) != 0) {
    throw ValidationError(source_ + ": bad magic at byte offset 0, expected \"" + std::string(expected, 4) + "\"");
  }
  pos_ += 4;
}

std::uint16_t ByteReader::u16(std::string_view what) { return le<std::uint16_t>(what); }
std::uint32_t ByteReader::u32(std::string_view what) { return le<std::uint32_t>(what); }
float ByteReader::f32(std::string_view what) { return std::bit_cast<float>(le<std::uint32_t>(what)); }

std::string ByteReader::short_string(std::string_view what) {
  const std::uint16_t n = u16(what);
  const unsigned char* p = take(n, what);
  return std::string(reinterpret_cast<const char*>(p), n);
}

const unsigned char* ByteReader::take(std::size_t n, std::string_view what) {
  need(n, what);
  const unsigned char* p = data_ + pos_;
  pos_ += n;
  return p;
}

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ValidationError("cannot open file: " + path.string());
  }
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw ValidationError("cannot open file for writing: " + path.string());
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw ValidationError("write failed: " + path.string());
  }
}

}  // namespace knnre::detail
