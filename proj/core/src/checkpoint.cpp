// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "cloformer/checkpoint.hpp"

#include <fstream>
#include <limits>
#include <sstream>

#include "binary_io.hpp"
#include "cloformer/error.hpp"

namespace clo {

namespace {

constexpr char kMagic[4] = {'C', 'L', 'O', 'C'};
constexpr std::uint8_t kF32 = 1;
constexpr std::uint8_t kF64 = 2;

template <typename T>
constexpr std::uint8_t dtype_code() {
  return sizeof(T) == 4 ? kF32 : kF64;
}

std::size_t dtype_size(std::uint8_t dtype) { return dtype == kF32 ? 4 : 8; }

std::string read_string(std::istream& in, std::size_t length, const char* what) {
  std::string s(length, '\0');
  if (length > 0 && !in.read(s.data(), static_cast<std::streamsize>(length))) {
    throw FormatError(std::string("truncated input while reading ") + what);
  }
  return s;
}

CheckpointInfo read_header(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kMagic)) {
    throw FormatError("not a checkpoint (bad magic)");
  }
  CheckpointInfo info;
  info.version = binary::get_uint<std::uint8_t>(in, "version");
  if (info.version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(info.version));
  }
  info.spec_text = read_string(in, binary::get_uint<std::uint32_t>(in, "spec length"), "spec");
  const auto count = binary::get_uint<std::uint32_t>(in, "parameter count");
  std::uint64_t expected_offset = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    ManifestEntry e;
    e.name = read_string(in, binary::get_uint<std::uint16_t>(in, "name length"), "name");
    e.dtype = binary::get_uint<std::uint8_t>(in, "dtype");
    if (e.dtype != kF32 && e.dtype != kF64) {
      throw FormatError("parameter '" + e.name + "': unknown dtype " + std::to_string(e.dtype));
    }
    const auto rank = binary::get_uint<std::uint8_t>(in, "rank");
    if (rank == 0 || rank > 4) {
      throw FormatError("parameter '" + e.name + "': invalid rank " + std::to_string(rank));
    }
    std::uint64_t numel = 1;
    for (std::uint8_t r = 0; r < rank; ++r) {
      e.dims.push_back(binary::get_uint<std::uint64_t>(in, "extent"));
      if (e.dims.back() == 0 || e.dims.back() > (std::uint64_t(1) << 32)) {
        throw FormatError("parameter '" + e.name + "': invalid extent");
      }
      numel *= e.dims.back();
    }
    e.offset = binary::get_uint<std::uint64_t>(in, "offset");
    if (e.offset != expected_offset) {
      throw FormatError("parameter '" + e.name + "': offset " + std::to_string(e.offset) +
                        " overlaps or leaves a gap (expected " + std::to_string(expected_offset) +
                        ")");
    }
    expected_offset += numel * dtype_size(e.dtype);
    info.manifest.push_back(std::move(e));
  }
  info.blob_bytes = binary::get_uint<std::uint64_t>(in, "blob length");
  if (info.blob_bytes != expected_offset) {
    throw FormatError("blob length " + std::to_string(info.blob_bytes) +
                      " disagrees with manifest total " + std::to_string(expected_offset));
  }
  return info;
}

}  // namespace

template <typename T>
std::string serialize_checkpoint(const BasicModel<T>& m) {
  std::ostringstream out(std::ios::binary);
  out.write(kMagic, 4);
  binary::put_uint<std::uint8_t>(out, kCheckpointVersion);
  const std::string spec = m.spec.to_text();
  binary::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(spec.size()));
  out.write(spec.data(), static_cast<std::streamsize>(spec.size()));
  const auto params = m.named_parameters();
  binary::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  std::uint64_t offset = 0;
  for (const auto& p : params) {
    if (p.name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw FormatError("parameter name too long: " + p.name);
    }
    binary::put_uint<std::uint16_t>(out, static_cast<std::uint16_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    binary::put_uint<std::uint8_t>(out, dtype_code<T>());
    const Shape& s = p.tensor.shape();
    binary::put_uint<std::uint8_t>(out, static_cast<std::uint8_t>(s.rank()));
    for (int r = 0; r < s.rank(); ++r) binary::put_uint<std::uint64_t>(out, s.extent(r));
    binary::put_uint<std::uint64_t>(out, offset);
    offset += p.tensor.numel() * sizeof(T);
  }
  binary::put_uint<std::uint64_t>(out, offset);
  for (const auto& p : params) binary::put_values<T>(out, p.tensor.data());
  return out.str();
}

CheckpointInfo inspect_checkpoint(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  return read_header(in);
}

template <typename T>
BasicModel<T> deserialize_checkpoint(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  const CheckpointInfo info = read_header(in);
  VariantSpec spec;
  try {
    spec = parse_variant(info.spec_text);
  } catch (const ConfigurationError& e) {
    throw FormatError(std::string("embedded spec invalid: ") + e.what());
  }
  Rng rng(0);
  BasicModel<T> m = build_model<T>(spec, rng);
  const auto params = m.named_parameters();
  if (params.size() != info.manifest.size()) {
    throw FormatError("manifest lists " + std::to_string(info.manifest.size()) +
                      " parameters, spec declares " + std::to_string(params.size()));
  }
  const std::size_t header = static_cast<std::size_t>(in.tellg());
  if (bytes.size() - header < info.blob_bytes) {
    throw FormatError("truncated blob: " + std::to_string(bytes.size() - header) + " of " +
                      std::to_string(info.blob_bytes) + " bytes present");
  }
  const auto* blob = reinterpret_cast<const unsigned char*>(bytes.data() + header);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const ManifestEntry& e = info.manifest[i];
    const NamedParam<T>& p = params[i];
    if (e.name != p.name) {
      throw FormatError("parameter '" + e.name + "' where spec declares '" + p.name + "'");
    }
    const Shape& s = p.tensor.shape();
    bool same = e.dims.size() == static_cast<std::size_t>(s.rank());
    for (int r = 0; same && r < s.rank(); ++r) same = e.dims[static_cast<std::size_t>(r)] == s.extent(r);
    if (!same) throw FormatError("parameter '" + e.name + "': shape differs from spec " + s.str());
    if (e.dtype != dtype_code<T>()) {
      throw FormatError("parameter '" + e.name + "': dtype " + std::to_string(e.dtype) +
                        " does not match the requested precision");
    }
    BasicTensor<T> t = p.tensor;
    binary::decode_values<T>({blob + e.offset, t.numel() * sizeof(T)}, t.mutable_data());
  }
  if (bytes.size() - header != info.blob_bytes) {
    throw FormatError("trailing bytes after blob");
  }
  return m;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

template <typename T>
void save_checkpoint(const BasicModel<T>& m, const std::filesystem::path& path) {
  write_file(path, serialize_checkpoint(m));
}

template <typename T>
BasicModel<T> load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint<T>(read_file(path));
}

template std::string serialize_checkpoint(const BasicModel<float>&);
template std::string serialize_checkpoint(const BasicModel<double>&);
template BasicModel<float> deserialize_checkpoint<float>(const std::string&);
template BasicModel<double> deserialize_checkpoint<double>(const std::string&);
template void save_checkpoint(const BasicModel<float>&, const std::filesystem::path&);
template void save_checkpoint(const BasicModel<double>&, const std::filesystem::path&);
template BasicModel<float> load_checkpoint<float>(const std::filesystem::path&);
template BasicModel<double> load_checkpoint<double>(const std::filesystem::path&);

}  // namespace clo
