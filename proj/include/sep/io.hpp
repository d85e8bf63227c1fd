// Copyright 2026 The sepnet Authors
// SPDX-License-Identifier: Apache-2.0

// Binary containers, all little-endian, no padding:
//
//   SEPT  "SEPT" | version u32 = 1 | dtype u8 (0 f32, 1 f64) | ndim u8 = 4 |
//         dims 4 x u64 (N, C, H, W) | values row-major
//   SEPC  "SEPC" | SEPT (real part) | SEPT (imaginary part)
//   SEPP  "SEPP" | count u32 | count x [name length u16 | utf-8 name | SEPT]

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <variant>

#include "sep/param_store.hpp"
#include "sep/tensor.hpp"

namespace sep::io {

inline constexpr std::uint32_t kTensorFormatVersion = 1;

using AnyTensor = std::variant<Tensor<float>, Tensor<double>>;

template <class T>
void write_tensor(std::ostream& out, const Tensor<T>& t);

AnyTensor read_any_tensor(std::istream& in);

/// Reads a SEPT block and converts it to T.
template <class T>
Tensor<T> read_tensor(std::istream& in);

template <class T>
void write_params(std::ostream& out, const ParamStore<T>& params);
template <class T>
ParamStore<T> read_params(std::istream& in);

// File helpers. Writers go through a sibling temp file and rename, so a
// failed write never leaves a partial file behind.

template <class T>
void save_tensor(const std::filesystem::path& path, const Tensor<T>& t);
AnyTensor load_any_tensor(const std::filesystem::path& path);
template <class T>
Tensor<T> load_tensor(const std::filesystem::path& path);

template <class T>
void save_complex(const std::filesystem::path& path, const Tensor<T>& re, const Tensor<T>& im);
template <class T>
std::pair<Tensor<T>, Tensor<T>> load_complex(const std::filesystem::path& path);

template <class T>
void save_params(const std::filesystem::path& path, const ParamStore<T>& params);
template <class T>
ParamStore<T> load_params(const std::filesystem::path& path);

/// Writes `bytes` to `path` via temp file + rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

DType dtype_of_any(const AnyTensor& t);

template <class T>
Tensor<T> as_dtype(const AnyTensor& t) {
  return std::visit([](const auto& v) { return v.template cast<T>(); }, t);
}

}  // namespace sep::io
