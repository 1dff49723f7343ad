// Copyright 2026 The motlab Authors. All Rights Reserved.
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
// =============================================================================
#ifndef MOTLAB_BINARY_IO_HPP_
#define MOTLAB_BINARY_IO_HPP_

// Versioned binary container for parameter checkpoints:
//   8 bytes   magic, NUL padded (e.g. "MOTLAB1\0")
//   u64       number of dimensions n
//   n x u64   dimension tuple
//   ...       parameter values as little-endian IEEE-754 doubles
// All integers are little-endian.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace motlab::binio {

inline void put_u64(std::ostream& os, std::uint64_t v) {
  std::array<char, 8> b;
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b.data(), b.size());
}

inline std::uint64_t get_u64(std::istream& is) {
  std::array<unsigned char, 8> b;
  if (!is.read(reinterpret_cast<char*>(b.data()), b.size()))
    throw std::runtime_error("checkpoint: unexpected end of file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline void put_doubles(std::ostream& os, std::span<const double> values) {
  for (double v : values) put_u64(os, std::bit_cast<std::uint64_t>(v));
}

inline void get_doubles(std::istream& is, std::span<double> values) {
  for (double& v : values) v = std::bit_cast<double>(get_u64(is));
}

inline void write_header(std::ostream& os, std::string_view magic,
                         std::span<const std::uint64_t> dims) {
  std::array<char, 8> m{};
  std::memcpy(m.data(), magic.data(), std::min<std::size_t>(magic.size(), 7));
  os.write(m.data(), m.size());
  put_u64(os, dims.size());
  for (auto d : dims) put_u64(os, d);
}

inline std::vector<std::uint64_t> read_header(std::istream& is,
                                              std::string_view magic) {
  std::array<char, 8> m{};
  if (!is.read(m.data(), m.size()))
    throw std::runtime_error("checkpoint: missing header");
  if (std::string_view(m.data(), std::strlen(m.data())) != magic)
    throw std::runtime_error("checkpoint: bad magic, expected " +
                             std::string(magic));
  const auto n = get_u64(is);
  if (n > 16) throw std::runtime_error("checkpoint: implausible header");
  std::vector<std::uint64_t> dims(n);
  for (auto& d : dims) d = get_u64(is);
  return dims;
}

}  // namespace motlab::binio

#endif  // MOTLAB_BINARY_IO_HPP_
