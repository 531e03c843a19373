// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cloformer/model.hpp"

// Checkpoint layout, all integers little-endian:
//
//   "CLOC"  u8 version
//   u32 spec_len, spec text (VariantSpec::to_text)
//   u32 count, then per parameter:
//     u16 name_len, name, u8 dtype (1 = f32, 2 = f64), u8 rank,
//     rank x u64 extents, u64 byte offset into the blob
//   u64 blob_len, blob (raw values, parameters back to back in manifest order)
namespace clo {

inline constexpr std::uint8_t kCheckpointVersion = 1;

struct ManifestEntry {
  std::string name;
  std::uint8_t dtype = 0;
  std::vector<std::uint64_t> dims;
  std::uint64_t offset = 0;
};

struct CheckpointInfo {
  std::uint8_t version = 0;
  std::string spec_text;
  std::vector<ManifestEntry> manifest;
  std::uint64_t blob_bytes = 0;
};

template <typename T>
std::string serialize_checkpoint(const BasicModel<T>& m);

/// Rebuilds the model from the embedded spec and fills it from the blob.
/// Any disagreement between manifest and spec-declared parameters is a
/// FormatError naming the parameter.
template <typename T>
BasicModel<T> deserialize_checkpoint(const std::string& bytes);

/// Header and manifest only.
CheckpointInfo inspect_checkpoint(const std::string& bytes);

template <typename T>
void save_checkpoint(const BasicModel<T>& m, const std::filesystem::path& path);

template <typename T = float>
BasicModel<T> load_checkpoint(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace clo
