// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace voxsplat::io {

enum class TensorDtype : std::uint8_t { kFloat32 = 1, kFloat64 = 2 };

/// Row-major tensor held as doubles regardless of its on-disk dtype.
struct Tensor {
    std::vector<std::uint64_t> shape;
    std::vector<double> data;

    std::uint64_t element_count() const;
};

// Layout: "VXTN", u8 dtype, u8 rank, u64 shape[rank], payload. All
// little-endian.
std::vector<std::uint8_t> encode_tensor(const Tensor& tensor, TensorDtype dtype = TensorDtype::kFloat64);
/// Throws ParseError on a bad magic, unknown dtype, or a payload whose length
/// differs from product(shape) * dtype size.
Tensor decode_tensor(std::span<const std::uint8_t> bytes);

void write_tensor(const std::string& path, const Tensor& tensor, TensorDtype dtype = TensorDtype::kFloat64);
Tensor read_tensor(const std::string& path);

}  // namespace voxsplat::io
