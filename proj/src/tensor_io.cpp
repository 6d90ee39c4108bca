// Copyright 2026 The meatkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "meatkit/tensor_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "meatkit/error.hpp"

namespace meatkit {
namespace {

constexpr char kMagic[7] = {'M', 'T', 'N', 'S', 'R', '1', '\0'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[3]} << 24);
}

// Host order <-> little-endian, element-wise.
void swap_to_little(std::uint8_t* data, std::size_t count, std::size_t width) {
    if constexpr (std::endian::native == std::endian::little) {
        (void)data, (void)count, (void)width;
    } else {
        for (std::size_t i = 0; i < count; ++i) std::reverse(data + i * width, data + (i + 1) * width);
    }
}

}  // namespace

std::size_t dtype_size(DType dtype) {
    switch (dtype) {
        case DType::F32: return 4;
        case DType::F64: return 8;
        case DType::I32: return 4;
        case DType::U8: return 1;
    }
    return 0;
}

const char* dtype_name(DType dtype) {
    switch (dtype) {
        case DType::F32: return "f32";
        case DType::F64: return "f64";
        case DType::I32: return "i32";
        case DType::U8: return "u8";
    }
    return "?";
}

std::vector<std::uint8_t> encode_tensor(const TensorBlob& blob) {
    if (blob.shape.size() > kMaxTensorRank) fail(ErrorCode::Format, "tensor rank exceeds 8");
    if (blob.payload.size() != shape_elements(blob.shape) * dtype_size(blob.dtype)) {
        fail(ErrorCode::Format, "payload size does not match shape " + shape_string(blob.shape));
    }
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    out.push_back(static_cast<std::uint8_t>(blob.dtype));
    out.push_back(static_cast<std::uint8_t>(blob.shape.size()));
    for (auto d : blob.shape) {
        if (d > 0xffffffffu) fail(ErrorCode::Format, "tensor dimension exceeds u32");
        put_u32(out, static_cast<std::uint32_t>(d));
    }
    out.insert(out.end(), blob.payload.begin(), blob.payload.end());
    return out;
}

TensorBlob decode_tensor(const std::vector<std::uint8_t>& bytes, const std::string& context) {
    if (bytes.size() < 9 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin(),
                                        [](char a, std::uint8_t b) { return static_cast<std::uint8_t>(a) == b; })) {
        fail(ErrorCode::Format, context + ": not a tensor file (bad magic)");
    }
    TensorBlob blob;
    const std::uint8_t code = bytes[7];
    if (code > 3) fail(ErrorCode::Format, context + ": unknown dtype code " + std::to_string(code));
    blob.dtype = static_cast<DType>(code);
    const std::size_t rank = bytes[8];
    if (rank > kMaxTensorRank) fail(ErrorCode::Format, context + ": rank " + std::to_string(rank) + " exceeds 8");
    const std::size_t header = 9 + 4 * rank;
    if (bytes.size() < header) fail(ErrorCode::Format, context + ": truncated header");
    for (std::size_t i = 0; i < rank; ++i) blob.shape.push_back(get_u32(bytes.data() + 9 + 4 * i));
    const std::size_t expected = shape_elements(blob.shape) * dtype_size(blob.dtype);
    if (bytes.size() - header != expected) {
        fail(ErrorCode::Format, context + ": payload of " + std::to_string(bytes.size() - header) +
                                    " bytes, expected " + std::to_string(expected) + " for " +
                                    dtype_name(blob.dtype) + shape_string(blob.shape));
    }
    blob.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header), bytes.end());
    return blob;
}

template <class T>
TensorBlob to_blob(const Tensor<T>& tensor) {
    TensorBlob blob{dtype_of<T>(), tensor.shape(), std::vector<std::uint8_t>(tensor.size() * sizeof(T))};
    if (!blob.payload.empty()) std::memcpy(blob.payload.data(), tensor.data(), blob.payload.size());
    swap_to_little(blob.payload.data(), tensor.size(), sizeof(T));
    return blob;
}

template <class T>
Tensor<T> from_blob(const TensorBlob& blob, const std::string& context) {
    if (blob.dtype != dtype_of<T>()) {
        fail(ErrorCode::Format, context + ": expected dtype " + dtype_name(dtype_of<T>()) + ", found " +
                                    dtype_name(blob.dtype));
    }
    std::vector<std::uint8_t> raw = blob.payload;
    const std::size_t n = raw.size() / sizeof(T);
    swap_to_little(raw.data(), n, sizeof(T));
    std::vector<T> values(n);
    if (n) std::memcpy(values.data(), raw.data(), raw.size());
    return Tensor<T>(blob.shape, std::move(values));
}

template TensorBlob to_blob(const Tensor<float>&);
template TensorBlob to_blob(const Tensor<double>&);
template TensorBlob to_blob(const Tensor<std::int32_t>&);
template TensorBlob to_blob(const Tensor<std::uint8_t>&);
template Tensor<float> from_blob(const TensorBlob&, const std::string&);
template Tensor<double> from_blob(const TensorBlob&, const std::string&);
template Tensor<std::int32_t> from_blob(const TensorBlob&, const std::string&);
template Tensor<std::uint8_t> from_blob(const TensorBlob&, const std::string&);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::Io, "short write to " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    write_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::string read_text(const std::filesystem::path& path) {
    const auto bytes = read_bytes(path);
    return {bytes.begin(), bytes.end()};
}

void write_tensor_file(const std::filesystem::path& path, const TensorBlob& blob) {
    write_bytes(path, encode_tensor(blob));
}

TensorBlob read_tensor_file(const std::filesystem::path& path) {
    return decode_tensor(read_bytes(path), path.string());
}

}  // namespace meatkit
