#ifndef CMV_BINARY_IO_HPP
#define CMV_BINARY_IO_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>

#include "cmv/error.hpp"

namespace cmv::io {

// Little-endian encoder. Values are serialized byte by byte so the output
// does not depend on host endianness.
class ByteWriter {
 public:
  void magic(std::string_view tag) {
    buf_.append(tag.data(), tag.size());
  }
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  const std::string& bytes() const noexcept { return buf_; }

 private:
  void put(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
  }
  std::string buf_;
};

class ByteReader {
 public:
  ByteReader(std::string data, std::string source)
      : data_(std::move(data)), source_(std::move(source)) {}

  void expect_magic(std::string_view tag) {
    need(tag.size());
    if (std::string_view(data_).substr(pos_, tag.size()) != tag) {
      throw FormatError("bad magic header in '" + source_ + "' (expected " + std::string(tag) + ")");
    }
    pos_ += tag.size();
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }

  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  const std::string& source() const noexcept { return source_; }

  void expect_end() const {
    if (remaining() != 0) {
      throw FormatError("trailing bytes in '" + source_ + "'");
    }
  }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw FormatError("truncated file '" + source_ + "'");
  }
  std::uint64_t get(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(width);
    return v;
  }

  std::string data_;
  std::string source_;
  std::size_t pos_ = 0;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline ByteReader open_reader(const std::filesystem::path& path) {
  return ByteReader(read_file(path), path.string());
}

}  // namespace cmv::io

#endif  // CMV_BINARY_IO_HPP
