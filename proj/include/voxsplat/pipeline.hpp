// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <voxsplat/camera.hpp>
#include <voxsplat/point_cloud.hpp>
#include <voxsplat/sparse_grid.hpp>

#include <cstdint>
#include <span>
#include <vector>

namespace voxsplat {

/// Oriented box of a dynamic object in the world frame, rotated by `yaw` about +z.
struct DynamicBox {
    Vec3 center = Vec3::Zero();
    Vec3 half_extent = Vec3::Ones();
    double yaw = 0.0;
    std::int32_t frame_id = 0;
    std::int32_t object_id = 0;
    std::int32_t label = kUnlabeled;  // semantic class of the object

    void validate() const;
    /// Closed containment test, optionally inflated by `margin` on every side.
    bool contains(const Vec3& p, double margin = 0.0) const;
};

/// One LiDAR sweep with its pose.
struct SensorFrame {
    LabeledPointCloud points;  // sensor frame
    RigidTransform world_from_sensor;
    std::int32_t frame_id = 0;
};

/// World-frame union of all frames. A point is dropped when it lies inside any
/// box carrying its own frame id. Output frame ids record the source frame.
LabeledPointCloud accumulate(std::span<const SensorFrame> frames, std::span<const DynamicBox> boxes);

/// Copies the label of the nearest labeled point (smallest index on ties) to
/// every unlabeled point. Throws std::invalid_argument when unlabeled points
/// exist but nothing is labeled.
LabeledPointCloud propagate_semantics(const LabeledPointCloud& cloud);

/// Appends `samples_per_box` stratified surface samples per box, split across
/// faces by area with largest-remainder rounding. Samples carry the box's
/// label and frame id and depend only on `seed` and the box.
LabeledPointCloud insert_dynamic(const LabeledPointCloud& cloud, std::span<const DynamicBox> boxes,
                                 int samples_per_box, std::uint64_t seed = 0);

/// Ego-centred crop. x points forward, y left, z up in the ego frame.
struct ChunkSpec {
    RigidTransform world_from_ego;
    double side = 102.4;            // meters
    double z_min = -10.0;           // meters, ego frame
    double z_max = 92.4;            // meters, ego frame
    double forward_fraction = 0.75;
    double voxel_size = 0.1;        // fine grid, meters

    void validate() const;
    double forward_bound() const { return forward_fraction * side; }
    double rear_bound() const { return -(1.0 - forward_fraction) * side; }
    /// Fine grid with its origin on the chunk's minimum corner and an extent
    /// of round(side / voxel_size) voxels horizontally.
    GridMeta fine_meta() const;
};

/// Points in the ego frame with x in [rear, forward), y in [-side/2, side/2)
/// and z in [z_min, z_max), restricted to voxels inside `fine_meta().extent`.
LabeledPointCloud crop_chunk(const LabeledPointCloud& cloud, const ChunkSpec& spec);

/// Voxelizes at the fine resolution and derives the coarse level by
/// coarsening. Throws std::invalid_argument unless the origins agree and the
/// coarse voxel size is four times the fine one.
GridHierarchy make_training_pair(const LabeledPointCloud& cloud, const GridMeta& meta_fine,
                                 const GridMeta& meta_coarse);

struct VisibilityResult {
    std::vector<std::uint8_t> visible;  // per voxel, storage order
    std::size_t visible_count = 0;
    double occluded_fraction = 0.0;     // 0 for an empty grid
};

/// A voxel is visible when its centroid projects inside some camera and the
/// first occupied voxel on the ray from that camera centre through the
/// centroid is the voxel itself.
VisibilityResult voxel_visibility(const SparseVoxelGrid& grid, std::span<const Camera> cameras);

}  // namespace voxsplat
