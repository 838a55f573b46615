#pragma once

#include "hsi/types.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace hsi::binio {

// Little-endian primitives with truncation diagnostics by byte offset.

class Reader {
 public:
  Reader(const std::filesystem::path& path, const char* what)
      : path_(path.string()), what_(what), in_(path, std::ios::binary) {
    if (!in_) throw DataError(std::string(what) + ": cannot open " + path_);
  }

  void bytes(void* dst, std::size_t count) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(count));
    if (static_cast<std::size_t>(in_.gcount()) != count) {
      throw DataError(std::string(what_) + ": " + path_ +
                      " truncated at byte offset " + std::to_string(offset_));
    }
    offset_ += count;
  }

  std::uint16_t u16() {
    std::uint8_t b[2];
    bytes(b, 2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  }

  std::uint32_t u32() {
    std::uint8_t b[4];
    bytes(b, 4);
    return static_cast<std::uint32_t>(b[0]) |
           (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
  }

  std::uint8_t u8() {
    std::uint8_t b;
    bytes(&b, 1);
    return b;
  }

  float f32() { return std::bit_cast<float>(u32()); }

  double f64() {
    std::uint8_t b[8];
    bytes(b, 8);
    std::uint64_t u = 0;
    for (int i = 7; i >= 0; --i) u = (u << 8) | b[i];
    return std::bit_cast<double>(u);
  }

  void expect_magic(const char* magic, std::size_t len) {
    std::vector<char> buf(len);
    bytes(buf.data(), len);
    if (std::memcmp(buf.data(), magic, len) != 0) {
      throw DataError(std::string(what_) + ": " + path_ +
                      " has wrong magic (expected \"" + magic + "\")");
    }
  }

  std::size_t offset() const { return offset_; }

 private:
  std::string path_;
  const char* what_;
  std::ifstream in_;
  std::size_t offset_ = 0;
};

class Writer {
 public:
  Writer(const std::filesystem::path& path, const char* what)
      : path_(path.string()), out_(path, std::ios::binary) {
    if (!out_) throw DataError(std::string(what) + ": cannot open " + path_);
  }

  void bytes(const void* src, std::size_t count) {
    out_.write(static_cast<const char*>(src),
               static_cast<std::streamsize>(count));
  }

  void u8(std::uint8_t v) { bytes(&v, 1); }

  void u16(std::uint16_t v) {
    const std::uint8_t b[2] = {static_cast<std::uint8_t>(v & 0xFF),
                               static_cast<std::uint8_t>(v >> 8)};
    bytes(b, 2);
  }

  void u32(std::uint32_t v) {
    std::uint8_t b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
    bytes(b, 4);
  }

  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

  void f64(double v) {
    const std::uint64_t u = std::bit_cast<std::uint64_t>(v);
    std::uint8_t b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(u >> (8 * i));
    bytes(b, 8);
  }

  ~Writer() { out_.flush(); }

 private:
  std::string path_;
  std::ofstream out_;
};

}  // namespace hsi::binio
