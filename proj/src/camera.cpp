// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#include <voxsplat/camera.hpp>

#include <stdexcept>

namespace voxsplat {

void Camera::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) {
        throw std::invalid_argument("camera focal lengths must be positive");
    }
    if (width < 1 || height < 1) {
        throw std::invalid_argument("camera image size must be at least 1x1");
    }
    world_from_camera.validate();
}

Vec3 Camera::pixel_direction(int x, int y) const {
    return world_from_camera.rotate(ray_camera(x + 0.5, y + 0.5).normalized());
}

std::optional<Vec3> Camera::project(const Vec3& world, double min_depth) const {
    const Vec3 p = world_from_camera.rotation.transpose() * (world - world_from_camera.translation);
    if (!(p.z() > min_depth)) {
        return std::nullopt;
    }
    return Vec3(fx * p.x() / p.z() + cx, fy * p.y() / p.z() + cy, p.z());
}

}  // namespace voxsplat
