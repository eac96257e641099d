// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <voxsplat/gaussian.hpp>
#include <voxsplat/io/ply.hpp>

#include <cstdint>
#include <span>
#include <vector>

namespace voxsplat {

// Conventional splat PLY vertex layout: x y z nx ny nz f_dc_0..2 opacity
// scale_0..2 rot_0..3, with color stored as degree-0 SH coefficients,
// opacity as a logit and scales as logs.

inline constexpr double kShC0 = 0.28209479177387814;

/// Float64 keeps the round trip within 1e-6 at chunk scale; Float32 matches
/// what most splat viewers expect.
enum class SplatPrecision { kFloat64, kFloat32 };

io::PlyData splats_to_ply(std::span<const Gaussian> gaussians, SplatPrecision precision = SplatPrecision::kFloat64);
std::vector<std::uint8_t> export_ply(const VoxSplatScene& scene, SplatPrecision precision = SplatPrecision::kFloat64);

/// Throws ParseError naming any missing property.
std::vector<Gaussian> splats_from_ply(const io::PlyData& data);
std::vector<Gaussian> import_ply(std::span<const std::uint8_t> bytes);

}  // namespace voxsplat
