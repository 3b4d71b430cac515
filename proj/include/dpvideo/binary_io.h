// Copyright 2026 The dpvideo Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DPVIDEO_BINARY_IO_H_
#define DPVIDEO_BINARY_IO_H_

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "dpvideo/status.h"

namespace dpvideo {

// Little-endian encoder into an in-memory buffer.
class BinaryWriter {
 public:
  void Bytes(std::string_view bytes) {
    buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
  }
  template <typename T>
    requires std::is_arithmetic_v<T>
  void Put(T value) {
    auto raw = std::bit_cast<std::array<char, sizeof(T)>>(value);
    if constexpr (std::endian::native == std::endian::big) {
      std::reverse(raw.begin(), raw.end());
    }
    buffer_.insert(buffer_.end(), raw.begin(), raw.end());
  }
  void PutDoubles(std::span<const double> values) {
    for (double v : values) Put(v);
  }

  const std::string& buffer() const { return buffer_; }

 private:
  std::string buffer_;
};

// Little-endian decoder over a byte buffer. Running past the end throws
// IoError naming the byte offset and what was being read.
class BinaryReader {
 public:
  explicit BinaryReader(std::string_view data) : data_(data) {}

  std::string_view Bytes(std::size_t n, std::string_view what) {
    Require(n, what);
    std::string_view out = data_.substr(offset_, n);
    offset_ += n;
    return out;
  }
  template <typename T>
    requires std::is_arithmetic_v<T>
  T Get(std::string_view what) {
    Require(sizeof(T), what);
    std::array<char, sizeof(T)> raw;
    std::memcpy(raw.data(), data_.data() + offset_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
      std::reverse(raw.begin(), raw.end());
    }
    offset_ += sizeof(T);
    return std::bit_cast<T>(raw);
  }
  void GetDoubles(std::span<double> out, std::string_view what) {
    Require(out.size() * sizeof(double), what);
    for (double& v : out) v = Get<double>(what);
  }

  std::size_t offset() const { return offset_; }
  bool AtEnd() const { return offset_ == data_.size(); }
  std::size_t remaining() const { return data_.size() - offset_; }

 private:
  void Require(std::size_t n, std::string_view what) const {
    if (data_.size() - offset_ < n) {
      throw IoError("truncated file: needed " + std::to_string(n) +
                    " bytes for " + std::string(what) + " at byte offset " +
                    std::to_string(offset_) + ", only " +
                    std::to_string(data_.size() - offset_) + " remain");
    }
  }

  std::string_view data_;
  std::size_t offset_ = 0;
};

// Whole-file helpers. WriteFileAtomic writes to a sibling temporary and
// renames it into place.
std::string ReadFile(const std::string& path);
void WriteFileAtomic(const std::string& path, std::string_view contents);

}  // namespace dpvideo

#endif  // DPVIDEO_BINARY_IO_H_
