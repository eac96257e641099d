// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <voxsplat/common.hpp>

#include <optional>

namespace voxsplat {

/// Pinhole camera. Camera frame follows the OpenCV convention: +x right,
/// +y down, +z along the optical axis. Pixel (x, y) covers the square
/// [x, x+1) x [y, y+1) and its center sits at (x + 0.5, y + 0.5).
struct Camera {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 1;
    int height = 1;
    RigidTransform world_from_camera;

    void validate() const;

    Vec3 center() const { return world_from_camera.translation; }
    RigidTransform camera_from_world() const { return world_from_camera.inverse(); }

    /// Camera-frame direction through continuous pixel coords (u, v), scaled
    /// so that z = 1.
    Vec3 ray_camera(double u, double v) const { return {(u - cx) / fx, (v - cy) / fy, 1.0}; }
    /// World-frame unit direction through the center of pixel (x, y).
    Vec3 pixel_direction(int x, int y) const;

    /// Continuous pixel coordinates and camera depth of a world point;
    /// empty when the point is not in front of the camera (depth <= min_depth).
    std::optional<Vec3> project(const Vec3& world, double min_depth = 0.0) const;

    bool in_frame(double u, double v) const { return u >= 0.0 && v >= 0.0 && u < width && v < height; }
};

}  // namespace voxsplat
