// SPDX-FileCopyrightText: 2026 DuaDeep contributors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <string_view>

#include "duadeep/error.hpp"

// Little-endian primitives for the on-disk formats, independent of host order.
namespace duadeep::io {

class Writer {
 public:
  explicit Writer(const std::string& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) fail(ErrorKind::kIo, "cannot open " + path + " for writing");
  }

  void bytes(std::string_view b) { out_.write(b.data(), static_cast<std::streamsize>(b.size())); }

  void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }

  void u32(std::uint32_t v) {
    std::array<char, 4> b{};
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
    out_.write(b.data(), 4);
  }

  void u64(std::uint64_t v) {
    std::array<char, 8> b{};
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
    out_.write(b.data(), 8);
  }

  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  void finish() {
    out_.flush();
    if (!out_) fail(ErrorKind::kIo, "write failed for " + path_);
  }

 private:
  std::string path_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) fail(ErrorKind::kIo, "cannot open " + path);
  }

  std::string bytes(std::size_t n) {
    std::string b(n, '\0');
    in_.read(b.data(), static_cast<std::streamsize>(n));
    check(n);
    return b;
  }

  std::uint8_t u8() {
    char c = 0;
    in_.read(&c, 1);
    check(1);
    return static_cast<std::uint8_t>(c);
  }

  std::uint32_t u32() {
    std::array<unsigned char, 4> b{};
    in_.read(reinterpret_cast<char*>(b.data()), 4);
    check(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }

  std::uint64_t u64() {
    std::array<unsigned char, 8> b{};
    in_.read(reinterpret_cast<char*>(b.data()), 8);
    check(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }

  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }

  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

  const std::string& path() const { return path_; }

 private:
  void check(std::size_t n) {
    if (!in_) fail(ErrorKind::kFormat, path_ + ": truncated file (wanted " + std::to_string(n) + " more bytes)");
  }

  std::string path_;
  std::ifstream in_;
};

}  // namespace duadeep::io
