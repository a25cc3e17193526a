// Copyright 2026 The scnn-transfer Authors.
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

#ifndef SCNN_IO_H_
#define SCNN_IO_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace scnn {

// Writes contents to a temporary sibling and renames it over path, so
// readers never observe a partially written file.
void WriteFileAtomic(const std::string& path, std::string_view contents);

std::string ReadFile(const std::string& path);

// FNV-1a, 64 bit.
uint64_t Fnv1a64(std::string_view bytes);

// Little-endian encoder for the binary cache and checkpoint formats.
class ByteWriter {
 public:
  void U8(uint8_t v) { buffer_.push_back(static_cast<char>(v)); }
  void U32(uint32_t v);
  void U64(uint64_t v);
  void F64(double v);
  void F64s(std::span<const double> values);
  void Bytes(std::string_view bytes) { buffer_.append(bytes); }
  void String(std::string_view s);

  const std::string& buffer() const { return buffer_; }
  std::size_t size() const { return buffer_.size(); }

 private:
  std::string buffer_;
};

// Throws DataError when reading past the end.
class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  uint8_t U8();
  uint32_t U32();
  uint64_t U64();
  double F64();
  void F64s(std::span<double> out);
  std::string_view Bytes(std::size_t n);
  std::string String();

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void Require(std::size_t n) const;

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace scnn

#endif  // SCNN_IO_H_
