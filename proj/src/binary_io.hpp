// Copyright 2026 The MIHash Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Little-endian helpers shared by the MIF1 / MIH1 / MIC1 file formats.

#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <type_traits>

#include "mihash/error.hpp"

namespace mihash::io {

class LittleEndianWriter {
 public:
  explicit LittleEndianWriter(const std::filesystem::path& path)
      : out_(path, std::ios::binary | std::ios::trunc), path_(path) {
    if (!out_) throw InvalidInput("cannot open for writing: " + path.string());
  }

  void magic(std::string_view tag) { out_.write(tag.data(), static_cast<std::streamsize>(tag.size())); }

  template <typename T>
  void put(T value) {
    static_assert(std::is_arithmetic_v<T>);
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
    static_assert(sizeof(U) == sizeof(T));
    U raw = std::bit_cast<U>(value);
    std::array<char, sizeof(U)> bytes{};
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      bytes[i] = static_cast<char>((raw >> (8 * i)) & 0xFFu);
    }
    out_.write(bytes.data(), bytes.size());
  }

  void finish() {
    out_.flush();
    if (!out_) throw InvalidInput("write failed: " + path_.string());
  }

 private:
  std::ofstream out_;
  std::filesystem::path path_;
};

class LittleEndianReader {
 public:
  explicit LittleEndianReader(const std::filesystem::path& path)
      : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw ParseError("cannot open: " + path.string());
  }

  void expect_magic(std::string_view tag) {
    std::string got(tag.size(), '\0');
    in_.read(got.data(), static_cast<std::streamsize>(got.size()));
    if (!in_ || got != tag) {
      throw ParseError(path_.string() + ": bad magic at offset 0, expected \"" +
                       std::string(tag) + "\"");
    }
    offset_ += tag.size();
  }

  template <typename T>
  T get() {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
    std::array<unsigned char, sizeof(U)> bytes{};
    in_.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
    if (!in_) {
      throw ParseError(path_.string() + ": truncated file at byte offset " +
                       std::to_string(offset_));
    }
    U raw = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) raw |= static_cast<U>(bytes[i]) << (8 * i);
    offset_ += sizeof(U);
    return std::bit_cast<T>(raw);
  }

  void expect_end() {
    if (in_.peek() != std::char_traits<char>::eof()) {
      throw ParseError(path_.string() + ": trailing bytes after offset " +
                       std::to_string(offset_));
    }
  }

  std::size_t offset() const { return offset_; }

 private:
  std::ifstream in_;
  std::filesystem::path path_;
  std::size_t offset_ = 0;
};

}  // namespace mihash::io
