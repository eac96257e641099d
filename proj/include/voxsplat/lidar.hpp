// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <voxsplat/gaussian.hpp>
#include <voxsplat/point_cloud.hpp>
#include <voxsplat/sparse_grid.hpp>

#include <cstdint>
#include <limits>
#include <memory>
#include <vector>

namespace voxsplat {

/// Sensor-frame ray directions of a spinning LiDAR. Ray `a * elevation_count + e`
/// belongs to azimuth step a and elevation ring e.
struct ScanPattern {
    std::vector<Vec3> directions;
    int azimuth_count = 0;
    int elevation_count = 0;
    double max_range = 90.0;  // meters

    /// Elevations evenly spaced over [min_deg, max_deg] (inclusive), azimuths
    /// evenly spaced over [0, 360). The sensor's +x axis is azimuth 0 and +z is up.
    static ScanPattern spinning(double elevation_min_deg = -25.0, double elevation_max_deg = 5.0,
                                int elevation_count = 64, int azimuth_count = 900, double max_range = 90.0);

    std::size_t size() const { return directions.size(); }
    /// Throws std::invalid_argument on empty counts, a size mismatch, a
    /// non-unit direction or a non-positive range.
    void validate() const;
};

struct LidarReturn {
    bool hit = false;
    double range = std::numeric_limits<double>::infinity();  // meters, only meaningful on hit
    Vec3 point = Vec3::Zero();
    std::int64_t gaussian = -1;
};

struct LidarOptions {
    /// Mahalanobis radius of the opaque surface around each Gaussian.
    double hit_threshold = 2.0;
};

/// Ray tracer over a scene with every Gaussian treated as opaque. The surface
/// of Gaussian i is the ellipsoid (x - mu)^T Sigma^-1 (x - mu) = lambda^2.
/// Rays starting inside an ellipsoid ignore that Gaussian.
///
/// Gaussians are bucketed by the voxels their ellipsoid bounding box touches;
/// rays visit only the buckets along their path. Immutable after
/// construction and safe to share between threads.
class LidarTracer {
public:
    explicit LidarTracer(const VoxSplatScene& scene, LidarOptions options = {});
    ~LidarTracer();
    LidarTracer(LidarTracer&&) noexcept;
    LidarTracer& operator=(LidarTracer&&) noexcept;

    /// Throws std::invalid_argument unless |dir| = 1 within 1e-6.
    LidarReturn trace(const Vec3& origin, const Vec3& dir, double max_range) const;
    /// Tests every Gaussian; reference for the accelerated path.
    LidarReturn trace_brute_force(const Vec3& origin, const Vec3& dir, double max_range) const;

    const LidarOptions& options() const { return options_; }

private:
    struct Index;
    LidarOptions options_;
    std::unique_ptr<Index> index_;
};

/// Smallest t > 0 where the ray enters the lambda-ellipsoid of `g`, if any.
/// Empty when the origin is already inside or on the surface.
std::optional<double> ray_ellipsoid_entry(const Gaussian& g, double lambda, const Vec3& origin, const Vec3& dir);

/// One-shot convenience wrapper; builds a tracer per call.
LidarReturn trace_ray(const VoxSplatScene& scene, const Vec3& origin, const Vec3& dir, double max_range,
                      const LidarOptions& options = {});

/// Traced scan in the world frame. Rays are listed in pattern order with misses
/// omitted; `ray_index` and `ranges` are parallel to the cloud.
struct LidarScan {
    LabeledPointCloud points;
    std::vector<double> ranges;
    std::vector<std::uint32_t> ray_index;
};

/// Casts every pattern direction from the sensor pose. Labels come from the
/// semantic channel of the hit Gaussian's voxel (kUnlabeled when absent).
LidarScan simulate_scan(const VoxSplatScene& scene, const RigidTransform& world_from_sensor,
                        const ScanPattern& pattern, const LidarOptions& options = {});
LidarScan simulate_scan(const LidarTracer& tracer, const VoxSplatScene& scene,
                        const RigidTransform& world_from_sensor, const ScanPattern& pattern);

}  // namespace voxsplat
