// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#include <voxsplat/config.hpp>
#include <voxsplat/io/binary.hpp>

#include <json.hpp>

#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>

namespace voxsplat {
namespace {

using nlohmann::json;

// A section binds JSON keys to fields of one config struct.
class Section {
public:
    template <typename T>
    Section& field(const std::string& key, T& target) {
        readers_[key] = [&target, key](const json& v) {
            try {
                target = v.get<T>();
            } catch (const json::exception&) {
                throw std::invalid_argument("config key '" + key + "' has the wrong type");
            }
        };
        writers_.emplace_back(key, [&target]() { return json(target); });
        return *this;
    }

    void read(const std::string& name, const json& obj) const {
        if (!obj.is_object()) {
            throw std::invalid_argument("config section '" + name + "' must be an object");
        }
        for (const auto& [key, value] : obj.items()) {
            const auto it = readers_.find(key);
            if (it == readers_.end()) {
                throw std::invalid_argument("unknown config key '" + name + "." + key + "'");
            }
            it->second(value);
        }
    }

    json write() const {
        json out = json::object();
        for (const auto& [key, get] : writers_) {
            out[key] = get();
        }
        return out;
    }

private:
    std::map<std::string, std::function<void(const json&)>> readers_;
    std::vector<std::pair<std::string, std::function<json()>>> writers_;
};

std::map<std::string, Section> sections(Config& c) {
    std::map<std::string, Section> s;
    s["grid"]
        .field("fine_voxel_size", c.grid.fine_voxel_size)
        .field("coarse_voxel_size", c.grid.coarse_voxel_size)
        .field("fine_extent", c.grid.fine_extent)
        .field("radius_factor", c.grid.radius_factor)
        .field("gaussians_per_voxel", c.grid.gaussians_per_voxel);
    s["depth_bins"]
        .field("z_near", c.depth_bins.z_near)
        .field("z_far", c.depth_bins.z_far)
        .field("count", c.depth_bins.count);
    s["render"]
        .field("tile_size", c.render.tile_size)
        .field("cov2d_blur", c.render.cov2d_blur)
        .field("near_clip", c.render.near_clip)
        .field("max_weight", c.render.max_weight)
        .field("min_weight", c.render.min_weight);
    s["sky"].field("height", c.sky.height).field("width", c.sky.width).field("fill", c.sky.fill);
    s["lidar"]
        .field("elevation_min_deg", c.lidar.elevation_min_deg)
        .field("elevation_max_deg", c.lidar.elevation_max_deg)
        .field("elevation_count", c.lidar.elevation_count)
        .field("azimuth_count", c.lidar.azimuth_count)
        .field("max_range", c.lidar.max_range)
        .field("hit_threshold", c.lidar.hit_threshold);
    s["pipeline"]
        .field("side", c.pipeline.side)
        .field("z_min", c.pipeline.z_min)
        .field("z_max", c.pipeline.z_max)
        .field("forward_fraction", c.pipeline.forward_fraction)
        .field("samples_per_box", c.pipeline.samples_per_box);
    s["loss"]
        .field("depth", c.loss.depth)
        .field("l1", c.loss.l1)
        .field("alpha", c.loss.alpha)
        .field("ssim", c.loss.ssim)
        .field("lpips", c.loss.lpips)
        .field("focal_gamma", c.loss.focal_gamma);
    return s;
}

void require(bool ok, const std::string& message) {
    if (!ok) {
        throw std::invalid_argument("invalid config: " + message);
    }
}

}  // namespace

void Config::validate() const {
    require(grid.fine_voxel_size > 0.0, "grid.fine_voxel_size must be positive");
    require(std::abs(grid.coarse_voxel_size - 4.0 * grid.fine_voxel_size) <= 1e-9 * grid.coarse_voxel_size,
            "grid.coarse_voxel_size must be 4x grid.fine_voxel_size");
    require(grid.fine_extent > 0, "grid.fine_extent must be positive");
    require(std::llround(pipeline.side / grid.fine_voxel_size) == grid.fine_extent,
            "pipeline.side / grid.fine_voxel_size must equal grid.fine_extent");
    require(grid.radius_factor > 0.0, "grid.radius_factor must be positive");
    require(grid.gaussians_per_voxel >= 1, "grid.gaussians_per_voxel must be >= 1");
    (void)bins();
    require(render.tile_size >= 1, "render.tile_size must be >= 1");
    require(render.cov2d_blur >= 0.0, "render.cov2d_blur must be >= 0");
    require(render.near_clip > 0.0, "render.near_clip must be positive");
    require(render.max_weight > 0.0 && render.max_weight <= 1.0, "render.max_weight must lie in (0, 1]");
    require(render.min_weight > 0.0 && render.min_weight < 1.0, "render.min_weight must lie in (0, 1)");
    require(sky.height >= 1 && sky.width >= 1, "sky size must be positive");
    require(sky.fill >= 0.0 && sky.fill <= 1.0, "sky.fill must lie in [0, 1]");
    (void)scan_pattern();
    require(lidar.hit_threshold > 0.0, "lidar.hit_threshold must be positive");
    (void)chunk_spec(RigidTransform::identity()).fine_meta();
    require(pipeline.samples_per_box >= 0, "pipeline.samples_per_box must be >= 0");
    loss.validate();
}

ScanPattern Config::scan_pattern() const {
    return ScanPattern::spinning(lidar.elevation_min_deg, lidar.elevation_max_deg, lidar.elevation_count,
                                 lidar.azimuth_count, lidar.max_range);
}

ChunkSpec Config::chunk_spec(const RigidTransform& world_from_ego) const {
    ChunkSpec spec;
    spec.world_from_ego = world_from_ego;
    spec.side = pipeline.side;
    spec.z_min = pipeline.z_min;
    spec.z_max = pipeline.z_max;
    spec.forward_fraction = pipeline.forward_fraction;
    spec.voxel_size = grid.fine_voxel_size;
    spec.validate();
    return spec;
}

Config parse_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed config JSON: ") + e.what(), e.byte);
    }
    if (!doc.is_object()) {
        throw std::invalid_argument("config must be a JSON object");
    }
    Config config;
    const auto secs = sections(config);
    for (const auto& [name, value] : doc.items()) {
        if (name == "seed") {
            if (!value.is_number_unsigned()) {
                throw std::invalid_argument("config key 'seed' must be a non-negative integer");
            }
            config.seed = value.get<std::uint64_t>();
            continue;
        }
        const auto it = secs.find(name);
        if (it == secs.end()) {
            throw std::invalid_argument("unknown config section '" + name + "'");
        }
        it->second.read(name, value);
    }
    config.validate();
    return config;
}

Config load_config(const std::string& path) {
    const auto bytes = io::read_file_bytes(path);
    return parse_config(std::string(bytes.begin(), bytes.end()));
}

std::string dump_config(const Config& config) {
    Config copy = config;
    json out = json::object();
    for (const auto& [name, section] : sections(copy)) {
        out[name] = section.write();
    }
    out["seed"] = config.seed;
    return out.dump(2);
}

}  // namespace voxsplat
