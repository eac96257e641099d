// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <voxsplat/camera.hpp>
#include <voxsplat/lidar.hpp>
#include <voxsplat/pipeline.hpp>

#include <json.hpp>

#include <string>
#include <vector>

namespace voxsplat::io {

using nlohmann::json;

/// Parses a JSON file; malformed text raises ParseError with the byte offset.
json read_json(const std::string& path);
json parse_json(const std::string& text);

/// {"rotation": [[r00, r01, r02], [...], [...]]} or {"quaternion": [w, x, y, z]},
/// plus "translation": [x, y, z]. Missing rotation means identity.
RigidTransform pose_from_json(const json& j);
json pose_to_json(const RigidTransform& pose);

/// Intrinsics fx, fy, cx, cy, width, height plus the world_from_camera pose
/// fields inline.
Camera camera_from_json(const json& j);
json camera_to_json(const Camera& cam);
/// A single camera object or an array of them.
std::vector<Camera> cameras_from_json(const json& j);

/// Either the spinning parameters (elevation_min_deg, elevation_max_deg,
/// elevation_count, azimuth_count, max_range) or explicit "directions" with
/// the two counts and max_range. Missing keys take the defaults.
ScanPattern pattern_from_json(const json& j);

DynamicBox box_from_json(const json& j);
json box_to_json(const DynamicBox& box);

}  // namespace voxsplat::io
