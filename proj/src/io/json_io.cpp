// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#include <voxsplat/io/binary.hpp>
#include <voxsplat/io/json_io.hpp>

#include <stdexcept>

namespace voxsplat::io {
namespace {

const json& require_key(const json& j, const char* key, const char* what) {
    if (!j.is_object() || !j.contains(key)) {
        throw std::invalid_argument(std::string(what) + " JSON is missing '" + key + "'");
    }
    return j.at(key);
}

template <typename T>
T get_as(const json& v, const char* key) {
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        throw std::invalid_argument(std::string("JSON key '") + key + "' has the wrong type");
    }
}

template <typename T>
T value_or(const json& j, const char* key, T fallback) {
    return j.contains(key) ? get_as<T>(j.at(key), key) : fallback;
}

Vec3 vec3_of(const json& v, const char* key) {
    const auto a = get_as<std::vector<double>>(v, key);
    if (a.size() != 3) {
        throw std::invalid_argument(std::string("JSON key '") + key + "' must hold 3 numbers");
    }
    return {a[0], a[1], a[2]};
}

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

json parse_json(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what(), e.byte);
    }
}

json read_json(const std::string& path) {
    const auto bytes = read_file_bytes(path);
    return parse_json(std::string(bytes.begin(), bytes.end()));
}

RigidTransform pose_from_json(const json& j) {
    if (!j.is_object()) {
        throw std::invalid_argument("pose JSON must be an object");
    }
    RigidTransform t;
    if (j.contains("rotation") && j.contains("quaternion")) {
        throw std::invalid_argument("pose JSON must not give both 'rotation' and 'quaternion'");
    }
    if (j.contains("rotation")) {
        const auto rows = get_as<std::vector<std::vector<double>>>(j.at("rotation"), "rotation");
        if (rows.size() != 3) {
            throw std::invalid_argument("pose 'rotation' must be a 3x3 matrix");
        }
        for (int r = 0; r < 3; ++r) {
            if (rows[r].size() != 3) {
                throw std::invalid_argument("pose 'rotation' must be a 3x3 matrix");
            }
            for (int c = 0; c < 3; ++c) {
                t.rotation(r, c) = rows[r][c];
            }
        }
    } else if (j.contains("quaternion")) {
        const auto q = get_as<std::vector<double>>(j.at("quaternion"), "quaternion");
        if (q.size() != 4) {
            throw std::invalid_argument("pose 'quaternion' must hold 4 numbers (w, x, y, z)");
        }
        t = RigidTransform::from_quaternion(Vec4(q[0], q[1], q[2], q[3]), Vec3::Zero());
    }
    if (j.contains("translation")) {
        t.translation = vec3_of(j.at("translation"), "translation");
    }
    t.validate(1e-6);
    return t;
}

json pose_to_json(const RigidTransform& pose) {
    json rows = json::array();
    for (int r = 0; r < 3; ++r) {
        rows.push_back(json::array({pose.rotation(r, 0), pose.rotation(r, 1), pose.rotation(r, 2)}));
    }
    return json{{"rotation", rows}, {"translation", vec3_json(pose.translation)}};
}

Camera camera_from_json(const json& j) {
    Camera cam;
    cam.fx = get_as<double>(require_key(j, "fx", "camera"), "fx");
    cam.fy = get_as<double>(require_key(j, "fy", "camera"), "fy");
    cam.cx = get_as<double>(require_key(j, "cx", "camera"), "cx");
    cam.cy = get_as<double>(require_key(j, "cy", "camera"), "cy");
    cam.width = get_as<int>(require_key(j, "width", "camera"), "width");
    cam.height = get_as<int>(require_key(j, "height", "camera"), "height");
    cam.world_from_camera = pose_from_json(j);
    cam.validate();
    return cam;
}

json camera_to_json(const Camera& cam) {
    json j = pose_to_json(cam.world_from_camera);
    j["fx"] = cam.fx;
    j["fy"] = cam.fy;
    j["cx"] = cam.cx;
    j["cy"] = cam.cy;
    j["width"] = cam.width;
    j["height"] = cam.height;
    return j;
}

std::vector<Camera> cameras_from_json(const json& j) {
    std::vector<Camera> out;
    if (j.is_array()) {
        for (const auto& c : j) {
            out.push_back(camera_from_json(c));
        }
    } else {
        out.push_back(camera_from_json(j));
    }
    return out;
}

ScanPattern pattern_from_json(const json& j) {
    if (!j.is_object()) {
        throw std::invalid_argument("pattern JSON must be an object");
    }
    if (j.contains("directions")) {
        ScanPattern p;
        for (const auto& d : j.at("directions")) {
            p.directions.push_back(vec3_of(d, "directions"));
        }
        p.azimuth_count = get_as<int>(require_key(j, "azimuth_count", "pattern"), "azimuth_count");
        p.elevation_count = get_as<int>(require_key(j, "elevation_count", "pattern"), "elevation_count");
        p.max_range = value_or(j, "max_range", 90.0);
        p.validate();
        return p;
    }
    return ScanPattern::spinning(value_or(j, "elevation_min_deg", -25.0), value_or(j, "elevation_max_deg", 5.0),
                                 value_or(j, "elevation_count", 64), value_or(j, "azimuth_count", 900),
                                 value_or(j, "max_range", 90.0));
}

DynamicBox box_from_json(const json& j) {
    DynamicBox b;
    b.center = vec3_of(require_key(j, "center", "box"), "center");
    b.half_extent = vec3_of(require_key(j, "half_extent", "box"), "half_extent");
    b.yaw = value_or(j, "yaw", 0.0);
    b.frame_id = value_or(j, "frame_id", 0);
    b.object_id = value_or(j, "object_id", 0);
    b.label = value_or(j, "label", static_cast<int>(kUnlabeled));
    b.validate();
    return b;
}

json box_to_json(const DynamicBox& box) {
    return json{{"center", vec3_json(box.center)}, {"half_extent", vec3_json(box.half_extent)}, {"yaw", box.yaw},
                {"frame_id", box.frame_id},        {"object_id", box.object_id},                {"label", box.label}};
}

}  // namespace voxsplat::io
