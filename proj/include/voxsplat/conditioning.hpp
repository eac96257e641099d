// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <voxsplat/camera.hpp>
#include <voxsplat/image.hpp>
#include <voxsplat/sparse_grid.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace voxsplat {

/// Depth discretization with linearly increasing bin widths: bin d (0-based)
/// has width (d + 1) * delta where delta = 2 (z_far - z_near) / (D (D + 1)).
struct DepthBins {
    double z_near = 0.1;
    double z_far = 90.0;
    std::vector<double> edges;  // D + 1 entries, edges.front() = z_near, edges.back() = z_far

    int count() const { return static_cast<int>(edges.size()) - 1; }
    double midpoint(int d) const { return 0.5 * (edges[d] + edges[d + 1]); }
    double width(int d) const { return edges[d + 1] - edges[d]; }
    /// Bin whose [edge_d, edge_{d+1}) holds `depth`; empty outside [z_near, z_far).
    std::optional<int> bin_of(double depth) const;
};

/// Throws std::invalid_argument unless 0 <= z_near < z_far and count >= 1.
DepthBins lid_bin_edges(double z_near, double z_far, int count);

/// Per-pixel feature vector F (C channels) and depth distribution theta
/// (D entries summing to one) for one input image.
struct PixelFeatureMap {
    int width = 0;
    int height = 0;
    int feature_channels = 0;
    int depth_bins = 0;
    std::vector<double> features;     // H * W * C, row-major
    std::vector<double> depth_probs;  // H * W * D, row-major

    PixelFeatureMap() = default;
    PixelFeatureMap(int width, int height, int feature_channels, int depth_bins);

    std::span<double> feature(int x, int y);
    std::span<const double> feature(int x, int y) const;
    std::span<double> depth(int x, int y);
    std::span<const double> depth(int x, int y) const;

    /// Throws std::invalid_argument if any pixel's distribution is negative or
    /// does not sum to one within `tol`.
    void validate(double tol = 1e-5) const;

    /// Splits an H x W x (C + D) raster into features and depth part. With
    /// `apply_softmax` the trailing D channels are logits and get normalized.
    static PixelFeatureMap from_channels(int width, int height, int feature_channels, int depth_bins,
                                         std::span<const double> data, bool apply_softmax);
};

/// Voxel feature field accumulated from unprojected pixel features.
struct ConditionGrid {
    SparseVoxelGrid grid;            // `feature` channel, only voxels that received samples
    std::size_t samples = 0;         // (image, pixel, bin) triples visited
    std::size_t dropped_samples = 0; // triples landing outside meta.extent

    int channels() const;
    /// Feature sum at `c` (zero for voxels without samples).
    std::vector<double> feature_at(const VoxelCoord& c) const;
    /// Dense X-fastest array over meta.extent; throws std::length_error when
    /// the extent holds more than `max_voxels` voxels.
    std::vector<double> to_dense(std::int64_t max_voxels = 256LL * 256 * 256) const;
};

/// Lift-splat accumulation: for every image i, pixel j and depth bin d, the
/// point at the bin's midpoint depth (camera z) along pixel j's ray lands in
/// voxel v and theta_jd * F_j is added to C_v. Partial sums are reduced in a
/// fixed pixel-block order so results do not depend on the worker count.
ConditionGrid unproject_features(std::span<const PixelFeatureMap> images, std::span<const Camera> cameras,
                                 const DepthBins& bins, const GridMeta& meta);

inline constexpr int kIgnoreDepth = -1;

/// One-hot supervision targets as bin indices; kIgnoreDepth where the depth is
/// non-finite or outside [z_near, z_far).
std::vector<int> depth_supervision_target(std::span<const double> gt_depth, const DepthBins& bins);

/// Expands bin indices into one-hot rows (all-zero rows for ignored pixels).
std::vector<double> one_hot(std::span<const int> targets, int count);

}  // namespace voxsplat
