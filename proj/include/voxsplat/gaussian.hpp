// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <voxsplat/common.hpp>
#include <voxsplat/sparse_grid.hpp>

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace voxsplat {

/// Layout of one raw Gaussian record predicted per voxel.
namespace raw_layout {
inline constexpr int kMean = 0;     // 3 entries, pre-tanh offset
inline constexpr int kOpacity = 3;  // 1 entry, pre-sigmoid
inline constexpr int kScale = 4;    // 3 entries, log-scale
inline constexpr int kRotation = 7; // 4 entries, quaternion (w, x, y, z), unnormalized
inline constexpr int kColor = 11;   // 3 entries, RGB
inline constexpr int kWidth = 14;
}  // namespace raw_layout

using RawGaussian = std::array<double, raw_layout::kWidth>;

/// Render-ready Gaussian. `rotation` is a unit quaternion (w, x, y, z) and
/// covariance = R diag(scale)^2 R^T.
struct Gaussian {
    Vec3 mean = Vec3::Zero();
    double opacity = 1.0;
    Vec3 scale = Vec3::Ones();
    Vec4 rotation = Vec4(1.0, 0.0, 0.0, 0.0);
    Vec3 color = Vec3::Zero();
    Mat3 covariance = Mat3::Identity();

    /// Recomputes `covariance` from scale and rotation.
    void update_covariance();
};

inline constexpr double kMinQuaternionNorm = 1e-8;

/// Rotation matrix of quaternion (w, x, y, z), normalized first.
/// Throws DegenerateQuaternion when |q| < kMinQuaternionNorm.
Mat3 quat2rot(const Vec4& q);

/// Activations: mean = r tanh(raw_mean) + center, opacity = sigmoid,
/// scale = exp, rotation = normalized quaternion, color passed through.
/// A raw quaternion shorter than kMinQuaternionNorm (such as the all-zero
/// record) decodes to the identity rotation.
Gaussian decode_gaussian(std::span<const double> raw, const Vec3& center, double radius);

/// M raw records per voxel, stored in the canonical (sorted) voxel order of
/// the grid they belong to.
struct RawGaussianParams {
    int per_voxel = 1;
    std::vector<double> values;  // voxels * per_voxel * 14

    std::size_t voxel_count() const {
        return values.size() / (static_cast<std::size_t>(per_voxel) * raw_layout::kWidth);
    }
    std::span<const double> record(std::size_t voxel, int m) const {
        return {values.data() + (voxel * per_voxel + m) * raw_layout::kWidth, raw_layout::kWidth};
    }
    std::span<double> record(std::size_t voxel, int m) {
        return {values.data() + (voxel * per_voxel + m) * raw_layout::kWidth, raw_layout::kWidth};
    }

    static RawGaussianParams zeros(std::size_t voxels, int per_voxel);
};

/// Sparse grid plus its per-voxel Gaussians.
struct VoxSplatScene {
    SparseVoxelGrid grid;  // canonical order
    RawGaussianParams raw;
    double radius = 0.3;   // r, meters
    std::vector<Gaussian> gaussians;            // voxel-major, M per voxel
    std::vector<std::uint32_t> gaussian_voxel;  // owning voxel index per Gaussian

    std::size_t size() const { return gaussians.size(); }
};

/// r = 3 x voxel size.
inline double default_radius(const GridMeta& meta) { return 3.0 * meta.voxel_size; }

/// Decodes every record with its voxel centroid as center. Throws
/// std::invalid_argument when `raw` does not cover exactly the grid's voxels.
VoxSplatScene decode_scene(RawGaussianParams raw, SparseVoxelGrid grid, double radius);

/// Packs the raw parameters into the grid's `gaussians` channel (width 14 M).
SparseVoxelGrid scene_to_grid(const VoxSplatScene& scene);
/// Inverse of scene_to_grid; radius defaults to 3 x voxel size.
VoxSplatScene scene_from_grid(const SparseVoxelGrid& grid, std::optional<double> radius = std::nullopt);

}  // namespace voxsplat
