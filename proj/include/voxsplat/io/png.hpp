// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <voxsplat/image.hpp>

#include <string>

namespace voxsplat::io {

/// Reads a PNG as 8-bit values scaled to [0, 1]. Grayscale files give one
/// channel, everything else is converted to RGB (alpha dropped).
Image read_png(const std::string& path);
/// Writes 1 or 3 channels as 8-bit, rounding and clamping to [0, 1].
void write_png(const std::string& path, const Image& image);

}  // namespace voxsplat::io
