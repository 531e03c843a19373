// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cloformer/error.hpp"

// Little-endian primitives shared by the CLOT and checkpoint codecs.
namespace clo::binary {

template <typename U>
void put_uint(std::ostream& out, U value) {
  char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bytes[i] = static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF);
  }
  out.write(bytes, sizeof(U));
}

template <typename U>
U get_uint(std::istream& in, const char* what) {
  unsigned char bytes[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(U))) {
    throw FormatError(std::string("truncated input while reading ") + what);
  }
  std::uint64_t value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= std::uint64_t(bytes[i]) << (8 * i);
  return static_cast<U>(value);
}

template <typename T>
void put_values(std::ostream& out, std::span<const T> values) {
  using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  std::vector<char> buffer(values.size() * sizeof(T));
  for (std::size_t i = 0; i < values.size(); ++i) {
    const Bits bits = std::bit_cast<Bits>(values[i]);
    for (std::size_t b = 0; b < sizeof(T); ++b)
      buffer[i * sizeof(T) + b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
  }
  out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
}

template <typename T>
void decode_values(std::span<const unsigned char> bytes, std::span<T> out) {
  using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  for (std::size_t i = 0; i < out.size(); ++i) {
    Bits bits = 0;
    for (std::size_t b = 0; b < sizeof(T); ++b)
      bits |= Bits(bytes[i * sizeof(T) + b]) << (8 * b);
    out[i] = std::bit_cast<T>(bits);
  }
}

template <typename T>
std::vector<T> get_values(std::istream& in, std::size_t count, const char* what) {
  std::vector<unsigned char> bytes(count * sizeof(T));
  if (!in.read(reinterpret_cast<char*>(bytes.data()),
               static_cast<std::streamsize>(bytes.size()))) {
    throw FormatError(std::string("truncated input while reading ") + what);
  }
  std::vector<T> values(count);
  decode_values<T>(bytes, values);
  return values;
}

}  // namespace clo::binary
