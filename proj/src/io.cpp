// Copyright 2026 The sepnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "sep/io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

namespace sep::io {

namespace {

constexpr std::array<char, 4> kTensorMagic{'S', 'E', 'P', 'T'};
constexpr std::array<char, 4> kComplexMagic{'S', 'E', 'P', 'C'};
constexpr std::array<char, 4> kParamsMagic{'S', 'E', 'P', 'P'};

template <class U>
void put_le(std::ostream& out, U value) {
  static_assert(std::is_unsigned_v<U>);
  char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  }
  out.write(bytes, sizeof(U));
}

template <class U>
U get_le(std::istream& in) {
  static_assert(std::is_unsigned_v<U>);
  unsigned char bytes[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(U))) {
    throw FormatError("unexpected end of file");
  }
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
  return value;
}

void put_magic(std::ostream& out, const std::array<char, 4>& magic) { out.write(magic.data(), 4); }

void expect_magic(std::istream& in, const std::array<char, 4>& magic) {
  std::array<char, 4> got{};
  if (!in.read(got.data(), 4) || got != magic) {
    throw FormatError("bad magic, expected '" + std::string(magic.data(), 4) + "'");
  }
}

template <class T>
using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;

template <class T>
Tensor<T> read_payload(std::istream& in, const Shape& shape) {
  std::vector<T> values(static_cast<std::size_t>(shape.numel()));
  for (auto& v : values) v = std::bit_cast<T>(get_le<Bits<T>>(in));
  return Tensor<T>(shape, std::move(values));
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  return in;
}

}  // namespace

template <class T>
void write_tensor(std::ostream& out, const Tensor<T>& t) {
  put_magic(out, kTensorMagic);
  put_le<std::uint32_t>(out, kTensorFormatVersion);
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(dtype_of<T>()));
  put_le<std::uint8_t>(out, 4);
  const Shape& s = t.shape();
  for (Index d : {s.n, s.c, s.h, s.w}) put_le<std::uint64_t>(out, static_cast<std::uint64_t>(d));
  for (T v : t.values()) put_le<Bits<T>>(out, std::bit_cast<Bits<T>>(v));
}

AnyTensor read_any_tensor(std::istream& in) {
  expect_magic(in, kTensorMagic);
  const auto version = get_le<std::uint32_t>(in);
  if (version != kTensorFormatVersion) {
    throw FormatError("unsupported tensor format version " + std::to_string(version));
  }
  const auto dtype = get_le<std::uint8_t>(in);
  const auto ndim = get_le<std::uint8_t>(in);
  if (ndim != 4) throw FormatError("tensor ndim must be 4, got " + std::to_string(ndim));
  std::array<Index, 4> dims{};
  for (auto& d : dims) {
    const auto v = get_le<std::uint64_t>(in);
    if (v == 0 || v > (1ULL << 32)) throw FormatError("tensor dim out of range: " + std::to_string(v));
    d = static_cast<Index>(v);
  }
  const Shape shape{dims[0], dims[1], dims[2], dims[3]};
  switch (dtype) {
    case 0:
      return read_payload<float>(in, shape);
    case 1:
      return read_payload<double>(in, shape);
    default:
      throw FormatError("unknown dtype code " + std::to_string(dtype));
  }
}

template <class T>
Tensor<T> read_tensor(std::istream& in) {
  return as_dtype<T>(read_any_tensor(in));
}

template <class T>
void write_params(std::ostream& out, const ParamStore<T>& params) {
  put_magic(out, kParamsMagic);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, value] : params) {
    if (name.size() > 0xFFFF) throw FormatError("parameter name too long: " + name);
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_tensor(out, value);
  }
}

template <class T>
ParamStore<T> read_params(std::istream& in) {
  expect_magic(in, kParamsMagic);
  const auto count = get_le<std::uint32_t>(in);
  ParamStore<T> params;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = get_le<std::uint16_t>(in);
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw FormatError("truncated parameter name");
    params.set(name, read_tensor<T>(in));
  }
  return params;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open '" + tmp.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw FormatError("write to '" + tmp.string() + "' failed");
    }
  }
  std::filesystem::rename(tmp, path);
}

template <class T>
void save_tensor(const std::filesystem::path& path, const Tensor<T>& t) {
  std::ostringstream out(std::ios::binary);
  write_tensor(out, t);
  write_file_atomic(path, out.str());
}

AnyTensor load_any_tensor(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_any_tensor(in);
}

template <class T>
Tensor<T> load_tensor(const std::filesystem::path& path) {
  return as_dtype<T>(load_any_tensor(path));
}

template <class T>
void save_complex(const std::filesystem::path& path, const Tensor<T>& re, const Tensor<T>& im) {
  require_same_shape(re, im, "save_complex");
  std::ostringstream out(std::ios::binary);
  put_magic(out, kComplexMagic);
  write_tensor(out, re);
  write_tensor(out, im);
  write_file_atomic(path, out.str());
}

template <class T>
std::pair<Tensor<T>, Tensor<T>> load_complex(const std::filesystem::path& path) {
  auto in = open_in(path);
  expect_magic(in, kComplexMagic);
  Tensor<T> re = read_tensor<T>(in);
  Tensor<T> im = read_tensor<T>(in);
  require_same_shape(re, im, "load_complex");
  return {std::move(re), std::move(im)};
}

template <class T>
void save_params(const std::filesystem::path& path, const ParamStore<T>& params) {
  std::ostringstream out(std::ios::binary);
  write_params(out, params);
  write_file_atomic(path, out.str());
}

template <class T>
ParamStore<T> load_params(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_params<T>(in);
}

DType dtype_of_any(const AnyTensor& t) {
  return std::holds_alternative<Tensor<float>>(t) ? DType::F32 : DType::F64;
}

#define SEP_INSTANTIATE_IO(T)                                                                  \
  template void write_tensor(std::ostream&, const Tensor<T>&);                                 \
  template Tensor<T> read_tensor(std::istream&);                                               \
  template void write_params(std::ostream&, const ParamStore<T>&);                             \
  template ParamStore<T> read_params(std::istream&);                                           \
  template void save_tensor(const std::filesystem::path&, const Tensor<T>&);                   \
  template Tensor<T> load_tensor(const std::filesystem::path&);                                \
  template void save_complex(const std::filesystem::path&, const Tensor<T>&, const Tensor<T>&); \
  template std::pair<Tensor<T>, Tensor<T>> load_complex(const std::filesystem::path&);         \
  template void save_params(const std::filesystem::path&, const ParamStore<T>&);               \
  template ParamStore<T> load_params(const std::filesystem::path&);

SEP_INSTANTIATE_IO(float)
SEP_INSTANTIATE_IO(double)

#undef SEP_INSTANTIATE_IO

}  // namespace sep::io
