// src/byte_io.h

// Copyright 2026  The reid-risk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Little-endian encode/decode helpers shared by the binary file formats.

#ifndef REID_SRC_BYTE_IO_H_
#define REID_SRC_BYTE_IO_H_

#include <bit>
#include <cstddef>
#include <cstdint>
#include <string>
#include <type_traits>

namespace reid::internal {

template <typename T>
void put_le(std::string &buf, T value) {
  using U = std::make_unsigned_t<T>;
  U u = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i)
    buf.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(const unsigned char *p) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    v |= static_cast<T>(static_cast<T>(p[i]) << (8 * i));
  return v;
}

inline void put_f64(std::string &buf, double d) {
  put_le<std::uint64_t>(buf, std::bit_cast<std::uint64_t>(d));
}

// Bounds-checked sequential reader over a byte buffer.
class ByteReader {
 public:
  ByteReader(const std::string &bytes) : bytes_(bytes) {}
  bool has(std::size_t n) const { return pos_ + n <= bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t pos() const { return pos_; }
  template <typename T>
  T read() {
    T v = get_le<T>(reinterpret_cast<const unsigned char *>(bytes_.data()) + pos_);
    pos_ += sizeof(T);
    return v;
  }
  double read_f64() { return std::bit_cast<double>(read<std::uint64_t>()); }
  std::string read_string(std::size_t n) {
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  const std::string &bytes_;
  std::size_t pos_ = 0;
};

}  // namespace reid::internal

#endif  // REID_SRC_BYTE_IO_H_
