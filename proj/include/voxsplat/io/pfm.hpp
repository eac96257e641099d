// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <voxsplat/image.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace voxsplat::io {

/// Portable float map ("PF" color, "Pf" grayscale), little-endian, rows
/// stored bottom to top. Values are stored as float32.
std::vector<std::uint8_t> encode_pfm(const Image& image);
/// Accepts either byte order; throws ParseError on malformed input.
Image decode_pfm(std::span<const std::uint8_t> bytes);

void write_pfm(const std::string& path, const Image& image);
Image read_pfm(const std::string& path);

}  // namespace voxsplat::io
