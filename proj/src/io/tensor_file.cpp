// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#include <voxsplat/io/binary.hpp>
#include <voxsplat/io/tensor_file.hpp>

#include <limits>
#include <stdexcept>

namespace voxsplat::io {
namespace {

constexpr char kMagic[4] = {'V', 'X', 'T', 'N'};

}  // namespace

std::uint64_t Tensor::element_count() const {
    std::uint64_t n = 1;
    for (const auto d : shape) {
        if (d != 0 && n > std::numeric_limits<std::uint64_t>::max() / d) {
            throw std::overflow_error("tensor shape overflows");
        }
        n *= d;
    }
    return n;
}

std::vector<std::uint8_t> encode_tensor(const Tensor& tensor, TensorDtype dtype) {
    if (tensor.shape.size() > 255) {
        throw std::invalid_argument("tensor rank must be <= 255");
    }
    if (tensor.element_count() != tensor.data.size()) {
        throw std::invalid_argument("tensor data length does not match its shape");
    }
    std::vector<std::uint8_t> out(kMagic, kMagic + 4);
    append_le(out, static_cast<std::uint8_t>(dtype));
    append_le(out, static_cast<std::uint8_t>(tensor.shape.size()));
    for (const auto d : tensor.shape) {
        append_le(out, d);
    }
    for (const double v : tensor.data) {
        if (dtype == TensorDtype::kFloat32) {
            append_le(out, static_cast<float>(v));
        } else {
            append_le(out, v);
        }
    }
    return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
    ByteReader in(bytes);
    if (in.read_string(4, "magic") != std::string(kMagic, 4)) {
        throw ParseError("not a VXTN tensor file", 0);
    }
    const std::size_t dtype_at = in.offset();
    const auto dtype = in.read<std::uint8_t>("dtype");
    if (dtype != static_cast<std::uint8_t>(TensorDtype::kFloat32) &&
        dtype != static_cast<std::uint8_t>(TensorDtype::kFloat64)) {
        throw ParseError("unknown tensor dtype " + std::to_string(dtype), dtype_at);
    }
    const auto rank = in.read<std::uint8_t>("rank");
    Tensor t;
    for (int r = 0; r < rank; ++r) {
        t.shape.push_back(in.read<std::uint64_t>("shape"));
    }
    std::uint64_t count = 0;
    try {
        count = t.element_count();
    } catch (const std::overflow_error&) {
        throw ParseError("tensor shape overflows", in.offset());
    }
    const std::size_t width = dtype == static_cast<std::uint8_t>(TensorDtype::kFloat32) ? 4 : 8;
    if (count > in.remaining() / width || count * width != in.remaining()) {
        throw ParseError("tensor payload length does not match its shape", in.offset());
    }
    t.data.resize(count);
    for (auto& v : t.data) {
        v = width == 4 ? static_cast<double>(in.read<float>("payload")) : in.read<double>("payload");
    }
    return t;
}

void write_tensor(const std::string& path, const Tensor& tensor, TensorDtype dtype) {
    write_file_bytes(path, encode_tensor(tensor, dtype));
}

Tensor read_tensor(const std::string& path) { return decode_tensor(read_file_bytes(path)); }

}  // namespace voxsplat::io
