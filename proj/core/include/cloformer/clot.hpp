// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>

#include "cloformer/tensor.hpp"

// CLOT tensor files: "CLOT", u8 version (1), u8 dtype (1 = f32, 2 = f64),
// u8 rank, rank x u64 LE extents, then raw LE values in row-major NCHW order.
namespace clo::clot {

inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::uint8_t kDtypeF32 = 1;
inline constexpr std::uint8_t kDtypeF64 = 2;

using AnyTensor = std::variant<Tensor, Tensor64>;

void write(std::ostream& out, const Tensor& t);
void write(std::ostream& out, const Tensor64& t);
AnyTensor read(std::istream& in);

void save(const std::filesystem::path& path, const AnyTensor& t);
AnyTensor load(const std::filesystem::path& path);

/// Loads and converts to 32-bit regardless of the stored dtype.
Tensor load_f32(const std::filesystem::path& path);

}  // namespace clo::clot
