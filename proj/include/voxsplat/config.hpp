// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <voxsplat/conditioning.hpp>
#include <voxsplat/lidar.hpp>
#include <voxsplat/metrics.hpp>
#include <voxsplat/pipeline.hpp>
#include <voxsplat/renderer.hpp>

#include <cstdint>
#include <string>

namespace voxsplat {

struct GridConfig {
    double fine_voxel_size = 0.1;    // meters
    double coarse_voxel_size = 0.4;  // meters
    int fine_extent = 1024;          // voxels per side
    double radius_factor = 3.0;      // r = radius_factor * fine voxel size
    int gaussians_per_voxel = 1;
};

struct DepthBinConfig {
    double z_near = 0.1;
    double z_far = 90.0;
    int count = 64;
};

struct SkyConfig {
    int height = 1024;
    int width = 2048;
    double fill = 0.5;
};

struct LidarConfig {
    double elevation_min_deg = -25.0;
    double elevation_max_deg = 5.0;
    int elevation_count = 64;
    int azimuth_count = 900;
    double max_range = 90.0;
    double hit_threshold = 2.0;
};

struct PipelineConfig {
    double side = 102.4;
    double z_min = -10.0;
    double z_max = 92.4;
    double forward_fraction = 0.75;
    int samples_per_box = 600;
};

/// Whole-program configuration. Sections: grid, depth_bins, render, sky,
/// lidar, pipeline, loss, plus a top-level seed.
struct Config {
    GridConfig grid;
    DepthBinConfig depth_bins;
    RenderOptions render;
    SkyConfig sky;
    LidarConfig lidar;
    PipelineConfig pipeline;
    LossWeights loss;
    std::uint64_t seed = 0;

    /// Throws std::invalid_argument naming the first invalid field.
    void validate() const;

    DepthBins bins() const { return lid_bin_edges(depth_bins.z_near, depth_bins.z_far, depth_bins.count); }
    ScanPattern scan_pattern() const;
    LidarOptions lidar_options() const { return {lidar.hit_threshold}; }
    ChunkSpec chunk_spec(const RigidTransform& world_from_ego) const;
};

/// Parses a JSON document whose keys override the defaults. Unknown sections
/// or keys and wrongly typed values raise std::invalid_argument; malformed
/// JSON raises ParseError.
Config parse_config(const std::string& text);
Config load_config(const std::string& path);
/// Complete JSON rendering of every field.
std::string dump_config(const Config& config);

}  // namespace voxsplat
