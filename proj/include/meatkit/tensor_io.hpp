// Copyright 2026 The meatkit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Binary tensor files: 7-byte magic "MTNSR1\0", u8 dtype, u8 rank (<= 8), rank u32
// dims, then the row-major payload. Everything is little-endian.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "meatkit/tensor.hpp"

namespace meatkit {

enum class DType : std::uint8_t { F32 = 0, F64 = 1, I32 = 2, U8 = 3 };

inline constexpr std::size_t kMaxTensorRank = 8;

std::size_t dtype_size(DType dtype);
const char* dtype_name(DType dtype);

template <class T>
constexpr DType dtype_of();
template <> constexpr DType dtype_of<float>() { return DType::F32; }
template <> constexpr DType dtype_of<double>() { return DType::F64; }
template <> constexpr DType dtype_of<std::int32_t>() { return DType::I32; }
template <> constexpr DType dtype_of<std::uint8_t>() { return DType::U8; }

// Header plus raw little-endian payload bytes.
struct TensorBlob {
    DType dtype = DType::F32;
    Shape shape;
    std::vector<std::uint8_t> payload;
};

std::vector<std::uint8_t> encode_tensor(const TensorBlob& blob);
// Throws Format on a bad magic, dtype, rank or payload length.
TensorBlob decode_tensor(const std::vector<std::uint8_t>& bytes, const std::string& context = "tensor");

template <class T>
TensorBlob to_blob(const Tensor<T>& tensor);
template <class T>
Tensor<T> from_blob(const TensorBlob& blob, const std::string& context = "tensor");

void write_tensor_file(const std::filesystem::path& path, const TensorBlob& blob);
TensorBlob read_tensor_file(const std::filesystem::path& path);

template <class T>
void write_tensor(const std::filesystem::path& path, const Tensor<T>& tensor) {
    write_tensor_file(path, to_blob(tensor));
}

template <class T>
Tensor<T> read_tensor(const std::filesystem::path& path) {
    return from_blob<T>(read_tensor_file(path), path.string());
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace meatkit
