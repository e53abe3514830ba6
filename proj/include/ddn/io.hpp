#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "ddn/errors.hpp"

namespace ddn {

// Little-endian binary buffer writer.
class BinaryWriter {
 public:
  void magic(const char m[4]) { buf_.append(m, 4); }

  void u32(std::uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    buf_.append(b, 4);
  }

  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

  void bytes(const std::string& s) { buf_ += s; }

  const std::string& str() const { return buf_; }

  void to_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot open for writing: " + path);
    out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (!out) throw UsageError("write failed: " + path);
  }

 private:
  std::string buf_;
};

// Little-endian binary buffer reader; every failure names the byte offset.
class BinaryReader {
 public:
  explicit BinaryReader(std::string data) : data_(std::move(data)) {}

  static BinaryReader from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open: " + path);
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return BinaryReader(std::move(data));
  }

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

  void expect_magic(const char m[4], const char* what) {
    const std::size_t at = pos_;
    if (remaining() < 4 || std::memcmp(data_.data() + pos_, m, 4) != 0) {
      throw FormatError(at, std::string("bad magic, expected \"") + std::string(m, 4) +
                                "\" for " + what);
    }
    pos_ += 4;
  }

  std::uint32_t u32(const char* what) {
    const std::size_t at = pos_;
    if (remaining() < 4) throw FormatError(at, std::string("truncated file reading ") + what);
    const auto* b = reinterpret_cast<const unsigned char*>(data_.data() + pos_);
    pos_ += 4;
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }

  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }

  std::string bytes(std::size_t n, const char* what) {
    const std::size_t at = pos_;
    if (remaining() < n) throw FormatError(at, std::string("truncated file reading ") + what);
    std::string out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  void expect_eof(const char* what) {
    if (remaining() != 0) {
      throw FormatError(pos_, std::string("trailing bytes after ") + what);
    }
  }

 private:
  std::string data_;
  std::size_t pos_ = 0;
};

}  // namespace ddn
