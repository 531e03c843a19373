// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "cloformer/clot.hpp"

#include <cstring>
#include <fstream>

#include "binary_io.hpp"
#include "cloformer/error.hpp"

namespace clo::clot {

namespace {

constexpr char kMagic[4] = {'C', 'L', 'O', 'T'};

template <typename T>
void write_impl(std::ostream& out, const BasicTensor<T>& t, std::uint8_t dtype) {
  out.write(kMagic, 4);
  binary::put_uint<std::uint8_t>(out, kVersion);
  binary::put_uint<std::uint8_t>(out, dtype);
  const auto& shape = t.shape();
  binary::put_uint<std::uint8_t>(out, static_cast<std::uint8_t>(shape.rank()));
  for (int i = 0; i < shape.rank(); ++i) binary::put_uint<std::uint64_t>(out, shape.extent(i));
  binary::put_values<T>(out, t.data());
  if (!out) throw IoError("failed writing CLOT stream");
}

Shape shape_from(const std::vector<std::size_t>& extents) {
  switch (extents.size()) {
    case 0:
      return Shape::scalar();
    case 1:
      return Shape{extents[0]};
    case 2:
      return Shape{extents[0], extents[1]};
    case 3:
      return Shape{extents[0], extents[1], extents[2]};
    default:
      return Shape{extents[0], extents[1], extents[2], extents[3]};
  }
}

}  // namespace

void write(std::ostream& out, const Tensor& t) { write_impl(out, t, kDtypeF32); }
void write(std::ostream& out, const Tensor64& t) { write_impl(out, t, kDtypeF64); }

AnyTensor read(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4)) throw FormatError("CLOT: truncated header");
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("CLOT: bad magic");
  const auto version = binary::get_uint<std::uint8_t>(in, "CLOT version");
  if (version != kVersion) {
    throw FormatError("CLOT: unsupported version " + std::to_string(version));
  }
  const auto dtype = binary::get_uint<std::uint8_t>(in, "CLOT dtype");
  const auto rank = binary::get_uint<std::uint8_t>(in, "CLOT rank");
  if (rank > 4) throw FormatError("CLOT: rank " + std::to_string(rank) + " exceeds 4");
  std::vector<std::size_t> extents(rank);
  std::size_t count = 1;
  for (auto& e : extents) {
    e = binary::get_uint<std::uint64_t>(in, "CLOT extent");
    if (e == 0) throw FormatError("CLOT: zero extent");
    if (count > (std::size_t(1) << 40) / e) throw FormatError("CLOT: tensor too large");
    count *= e;
  }
  const Shape shape = shape_from(extents);
  if (dtype == kDtypeF32) return Tensor(shape, binary::get_values<float>(in, count, "CLOT data"));
  if (dtype == kDtypeF64) {
    return Tensor64(shape, binary::get_values<double>(in, count, "CLOT data"));
  }
  throw FormatError("CLOT: unknown dtype code " + std::to_string(dtype));
}

void save(const std::filesystem::path& path, const AnyTensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  std::visit([&](const auto& tensor) { write(out, tensor); }, t);
}

AnyTensor load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read(in);
}

Tensor load_f32(const std::filesystem::path& path) {
  auto any = load(path);
  if (auto* f = std::get_if<Tensor>(&any)) return *f;
  return std::get<Tensor64>(any).cast<float>();
}

}  // namespace clo::clot
