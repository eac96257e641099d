// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#include <voxsplat/lidar.hpp>
#include <voxsplat/parallel.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <unordered_map>

namespace voxsplat {
namespace {

constexpr std::int64_t kMaxCellsPerGaussian = 512;
constexpr std::size_t kRaysPerTask = 1024;

void require_unit(const Vec3& dir) {
    if (std::abs(dir.norm() - 1.0) > 1e-6) {
        throw std::invalid_argument("ray direction must be unit length");
    }
}

Mat3 precision_of(const Gaussian& g) {
    const Mat3 r = quat2rot(g.rotation);
    const Vec3 inv_var = g.scale.array().square().inverse();
    return r * inv_var.asDiagonal() * r.transpose();
}

std::optional<double> entry_t(const Vec3& mean, const Mat3& q, double lambda, const Vec3& origin, const Vec3& dir) {
    const Vec3 o = origin - mean;
    const Vec3 qd = q * dir;
    const double a = dir.dot(qd);
    const double b = 2.0 * o.dot(qd);
    const double c = o.dot(q * o) - lambda * lambda;
    if (!(c > 0.0) || !(b < 0.0) || !(a > 0.0)) {
        return std::nullopt;
    }
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) {
        return std::nullopt;
    }
    // Both roots are positive here; c / q is the nearer one without cancellation.
    const double qq = -0.5 * (b - std::sqrt(disc));
    return c / qq;
}

}  // namespace

ScanPattern ScanPattern::spinning(double elevation_min_deg, double elevation_max_deg, int elevation_count,
                                  int azimuth_count, double max_range) {
    if (elevation_count < 1 || azimuth_count < 1) {
        throw std::invalid_argument("scan pattern counts must be >= 1");
    }
    if (!(elevation_min_deg <= elevation_max_deg) || elevation_min_deg < -90.0 || elevation_max_deg > 90.0) {
        throw std::invalid_argument("scan pattern elevations must satisfy -90 <= min <= max <= 90");
    }
    constexpr double kDeg = std::numbers::pi / 180.0;
    ScanPattern p;
    p.azimuth_count = azimuth_count;
    p.elevation_count = elevation_count;
    p.max_range = max_range;
    p.directions.reserve(static_cast<std::size_t>(azimuth_count) * elevation_count);
    for (int a = 0; a < azimuth_count; ++a) {
        const double az = 2.0 * std::numbers::pi * a / azimuth_count;
        for (int e = 0; e < elevation_count; ++e) {
            const double el_deg = elevation_count == 1
                                      ? elevation_min_deg
                                      : lerp(elevation_min_deg, elevation_max_deg,
                                             static_cast<double>(e) / (elevation_count - 1));
            const double el = el_deg * kDeg;
            p.directions.emplace_back(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
        }
    }
    p.validate();
    return p;
}

void ScanPattern::validate() const {
    if (azimuth_count < 1 || elevation_count < 1) {
        throw std::invalid_argument("scan pattern counts must be >= 1");
    }
    if (directions.size() != static_cast<std::size_t>(azimuth_count) * elevation_count) {
        throw std::invalid_argument("scan pattern direction count must equal azimuth_count * elevation_count");
    }
    if (!(max_range > 0.0)) {
        throw std::invalid_argument("scan pattern max_range must be positive");
    }
    for (const auto& d : directions) {
        if (!d.allFinite() || std::abs(d.norm() - 1.0) > 1e-6) {
            throw std::invalid_argument("scan pattern directions must be unit vectors");
        }
    }
}

struct LidarTracer::Index {
    GridMeta meta;
    std::vector<Vec3> means;
    std::vector<Mat3> precisions;
    std::unordered_map<VoxelCoord, std::vector<std::uint32_t>, VoxelCoordHash> buckets;
    std::vector<std::uint32_t> global;
    std::optional<VoxelBounds> bounds;
};

LidarTracer::LidarTracer(const VoxSplatScene& scene, LidarOptions options)
    : options_(options), index_(std::make_unique<Index>()) {
    if (!(options_.hit_threshold > 0.0)) {
        throw std::invalid_argument("hit_threshold must be positive");
    }
    Index& idx = *index_;
    idx.meta = scene.grid.meta();
    idx.meta.extent.reset();
    const double lambda = options_.hit_threshold;
    const std::size_t n = scene.gaussians.size();
    idx.means.resize(n);
    idx.precisions.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Gaussian& g = scene.gaussians[i];
        idx.means[i] = g.mean;
        idx.precisions[i] = precision_of(g);
        const Vec3 half = lambda * g.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
        const VoxelCoord lo = idx.meta.voxel_of(g.mean - half);
        const VoxelCoord hi = idx.meta.voxel_of(g.mean + half);
        const VoxelBounds box{lo, {hi.i + 1, hi.j + 1, hi.k + 1}};
        if (box.volume() > kMaxCellsPerGaussian) {
            idx.global.push_back(static_cast<std::uint32_t>(i));
            continue;
        }
        for (std::int32_t a = lo.i; a <= hi.i; ++a) {
            for (std::int32_t b = lo.j; b <= hi.j; ++b) {
                for (std::int32_t c = lo.k; c <= hi.k; ++c) {
                    idx.buckets[VoxelCoord{a, b, c}].push_back(static_cast<std::uint32_t>(i));
                }
            }
        }
        if (!idx.bounds) {
            idx.bounds = box;
        } else {
            auto& bb = *idx.bounds;
            bb.min = {std::min(bb.min.i, box.min.i), std::min(bb.min.j, box.min.j), std::min(bb.min.k, box.min.k)};
            bb.max = {std::max(bb.max.i, box.max.i), std::max(bb.max.j, box.max.j), std::max(bb.max.k, box.max.k)};
        }
    }
}

LidarTracer::~LidarTracer() = default;
LidarTracer::LidarTracer(LidarTracer&&) noexcept = default;
LidarTracer& LidarTracer::operator=(LidarTracer&&) noexcept = default;

LidarReturn LidarTracer::trace(const Vec3& origin, const Vec3& dir, double max_range) const {
    require_unit(dir);
    const Index& idx = *index_;
    const double lambda = options_.hit_threshold;
    double best_t = std::numeric_limits<double>::infinity();
    std::int64_t best = -1;
    auto test = [&](std::uint32_t i) {
        const auto t = entry_t(idx.means[i], idx.precisions[i], lambda, origin, dir);
        if (t && *t <= max_range && (*t < best_t || (*t == best_t && i < best))) {
            best_t = *t;
            best = i;
        }
    };
    for (const auto i : idx.global) {
        test(i);
    }
    if (idx.bounds) {
        traverse_voxels(idx.meta, *idx.bounds, origin, dir, std::min(max_range, best_t),
                        [&](const VoxelCoord& c, double, double t_exit) {
                            const auto it = idx.buckets.find(c);
                            if (it != idx.buckets.end()) {
                                for (const auto i : it->second) {
                                    test(i);
                                }
                            }
                            return best_t > t_exit;
                        });
    }
    LidarReturn out;
    if (best >= 0) {
        out.hit = true;
        out.range = best_t;
        out.point = origin + best_t * dir;
        out.gaussian = best;
    }
    return out;
}

LidarReturn LidarTracer::trace_brute_force(const Vec3& origin, const Vec3& dir, double max_range) const {
    require_unit(dir);
    const Index& idx = *index_;
    LidarReturn out;
    for (std::size_t i = 0; i < idx.means.size(); ++i) {
        const auto t = entry_t(idx.means[i], idx.precisions[i], options_.hit_threshold, origin, dir);
        if (t && *t <= max_range && *t < out.range) {
            out.hit = true;
            out.range = *t;
            out.gaussian = static_cast<std::int64_t>(i);
        }
    }
    if (out.hit) {
        out.point = origin + out.range * dir;
    }
    return out;
}

std::optional<double> ray_ellipsoid_entry(const Gaussian& g, double lambda, const Vec3& origin, const Vec3& dir) {
    return entry_t(g.mean, precision_of(g), lambda, origin, dir);
}

LidarReturn trace_ray(const VoxSplatScene& scene, const Vec3& origin, const Vec3& dir, double max_range,
                      const LidarOptions& options) {
    return LidarTracer(scene, options).trace(origin, dir, max_range);
}

LidarScan simulate_scan(const VoxSplatScene& scene, const RigidTransform& world_from_sensor,
                        const ScanPattern& pattern, const LidarOptions& options) {
    return simulate_scan(LidarTracer(scene, options), scene, world_from_sensor, pattern);
}

LidarScan simulate_scan(const LidarTracer& tracer, const VoxSplatScene& scene,
                        const RigidTransform& world_from_sensor, const ScanPattern& pattern) {
    world_from_sensor.validate();
    pattern.validate();
    const std::size_t n = pattern.size();
    std::vector<LidarReturn> returns(n);
    const Vec3 origin = world_from_sensor.translation;
    parallel_for((n + kRaysPerTask - 1) / kRaysPerTask, [&](std::size_t task) {
        const std::size_t end = std::min(n, (task + 1) * kRaysPerTask);
        for (std::size_t r = task * kRaysPerTask; r < end; ++r) {
            const Vec3 dir = world_from_sensor.rotate(pattern.directions[r]).normalized();
            returns[r] = tracer.trace(origin, dir, pattern.max_range);
        }
    });

    LidarScan scan;
    const auto semantic = scene.grid.channel_index(kSemanticChannel);
    if (semantic) {
        scan.points.num_classes = scene.grid.channels()[*semantic].width;
    }
    for (std::size_t r = 0; r < n; ++r) {
        const LidarReturn& ret = returns[r];
        if (!ret.hit) {
            continue;
        }
        scan.points.positions.push_back(ret.point);
        scan.ranges.push_back(ret.range);
        scan.ray_index.push_back(static_cast<std::uint32_t>(r));
        if (semantic) {
            const auto label = semantic_label(scene.grid, scene.gaussian_voxel[ret.gaussian]);
            scan.points.labels.push_back(label ? *label : kUnlabeled);
        }
    }
    return scan;
}

}  // namespace voxsplat
