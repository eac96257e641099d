// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#include <voxsplat/checks/oracles.hpp>
#include <voxsplat/lidar.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

namespace voxsplat {
namespace {

Gaussian sphere(const Vec3& mean, double sigma) {
    Gaussian g;
    g.mean = mean;
    g.scale = Vec3::Constant(sigma);
    g.update_covariance();
    return g;
}

// Voxels in `coords` on a grid of size `s`, each carrying one Gaussian of
// scale `sigma` at its centroid.
VoxSplatScene scene_at(const std::vector<VoxelCoord>& coords, double s, double sigma, int label = -1) {
    GridMeta meta;
    meta.voxel_size = s;
    std::vector<ChannelSpec> channels;
    if (label >= 0) {
        channels.push_back({"semantic_logits", label + 1});
    }
    SparseVoxelGrid grid(meta, channels);
    for (const auto& c : coords) {
        const auto idx = grid.insert(c).first;
        if (label >= 0) {
            grid.attributes(idx, 0)[label] = 1.0;
        }
    }
    grid.canonicalize();
    RawGaussianParams raw = RawGaussianParams::zeros(grid.size(), 1);
    for (std::size_t v = 0; v < grid.size(); ++v) {
        auto r = raw.record(v, 0);
        r[raw_layout::kRotation] = 1.0;
        for (int a = 0; a < 3; ++a) {
            r[raw_layout::kScale + a] = std::log(sigma);
        }
    }
    return decode_scene(raw, grid, default_radius(meta));
}

VoxSplatScene random_scene(std::mt19937_64& rng, int voxels) {
    GridMeta meta;
    meta.voxel_size = 0.5;
    SparseVoxelGrid grid(meta);
    std::uniform_int_distribution<int> coord(-16, 16);
    while (static_cast<int>(grid.size()) < voxels) {
        grid.insert({coord(rng), coord(rng), coord(rng)});
    }
    grid.canonicalize();
    RawGaussianParams raw = RawGaussianParams::zeros(grid.size(), 2);
    for (std::size_t v = 0; v < grid.size(); ++v) {
        for (int m = 0; m < 2; ++m) {
            auto r = raw.record(v, m);
            for (int a = 0; a < 3; ++a) {
                r[raw_layout::kMean + a] = checks::uniform(rng, -1.5, 1.5);
                r[raw_layout::kScale + a] = checks::uniform(rng, -3.5, -1.0);
            }
            for (int q = 0; q < 4; ++q) {
                r[raw_layout::kRotation + q] = checks::uniform(rng, -1, 1);
            }
        }
    }
    return decode_scene(raw, grid, default_radius(meta));
}

Vec3 random_unit(std::mt19937_64& rng) {
    for (;;) {
        const Vec3 d(checks::uniform(rng, -1, 1), checks::uniform(rng, -1, 1), checks::uniform(rng, -1, 1));
        if (d.norm() > 1e-3 && d.norm() <= 1.0) {
            return d.normalized();
        }
    }
}

TEST(RayEllipsoid, TwoSigmaEntryOnAxis) {
    const auto t = ray_ellipsoid_entry(sphere({0, 0, 5}, 0.05), 2.0, Vec3::Zero(), {0, 0, 1});
    ASSERT_TRUE(t.has_value());
    EXPECT_NEAR(*t, 4.9, 1e-3);
}

TEST(RayEllipsoid, AnisotropicMatchesWhitenedSphere) {
    Gaussian g;
    g.mean = Vec3(1, 2, 6);
    g.scale = Vec3(0.3, 0.1, 0.6);
    g.rotation = Vec4(0.9, 0.1, -0.3, 0.2).normalized();
    g.update_covariance();
    std::mt19937_64 rng(40);
    int hits = 0;
    for (int n = 0; n < 200; ++n) {
        const Vec3 o(checks::uniform(rng, -1, 1), checks::uniform(rng, -1, 1), 0.0);
        const Vec3 d = (g.mean + Vec3(checks::uniform(rng, -1, 1), checks::uniform(rng, -1, 1), 0) - o).normalized();
        const auto got = ray_ellipsoid_entry(g, 2.0, o, d);
        const auto want = checks::brute_force_lidar(std::span(&g, 1), o, d, 1e9);
        ASSERT_EQ(got.has_value(), want.has_value());
        if (got) {
            ++hits;
            EXPECT_NEAR(*got, want->range, 1e-9);
            const Vec3 p = o + *got * d - g.mean;
            EXPECT_NEAR(p.dot(g.covariance.inverse() * p), 4.0, 1e-6);
        }
    }
    EXPECT_GT(hits, 20);
}

TEST(RayEllipsoid, BehindAndInsideAreMisses) {
    const Gaussian g = sphere({0, 0, 5}, 0.5);
    EXPECT_FALSE(ray_ellipsoid_entry(g, 2.0, Vec3::Zero(), {0, 0, -1}).has_value());
    EXPECT_FALSE(ray_ellipsoid_entry(g, 2.0, Vec3(0, 0, 5.2), {0, 0, 1}).has_value());
    EXPECT_FALSE(ray_ellipsoid_entry(g, 2.0, Vec3::Zero(), Vec3(1, 0, 1).normalized()).has_value());
}

TEST(TraceRay, SceneHitReportsGaussianAndPoint) {
    const auto scene = scene_at({{0, 0, 50}}, 0.1, 0.05);
    const Vec3 o(0.05, 0.05, 0.0);
    const auto r = trace_ray(scene, o, {0, 0, 1}, 90.0);
    ASSERT_TRUE(r.hit);
    EXPECT_EQ(r.gaussian, 0);
    EXPECT_NEAR(r.range, 5.05 - 0.1, 1e-9);
    EXPECT_NEAR((r.point - Vec3(0.05, 0.05, 4.95)).norm(), 0.0, 1e-9);
}

TEST(TraceRay, MissingAllVoxels) {
    const auto scene = scene_at({{0, 0, 50}}, 0.1, 0.05);
    EXPECT_FALSE(trace_ray(scene, {0.05, 0.05, 0.0}, {1, 0, 0}, 90.0).hit);
    EXPECT_FALSE(trace_ray(scene, {0.05, 0.05, 0.0}, {0, 0, 1}, 4.0).hit);
}

TEST(TraceRay, RejectsNonUnitDirection) {
    const auto scene = scene_at({{0, 0, 50}}, 0.1, 0.05);
    const LidarTracer tracer(scene);
    EXPECT_THROW(tracer.trace(Vec3::Zero(), {0, 0, 3}, 90.0), std::invalid_argument);
}

TEST(Tracer, MatchesBruteForceOnRandomRays) {
    std::mt19937_64 rng(41);
    const auto scene = random_scene(rng, 400);
    const LidarTracer tracer(scene);
    int hits = 0;
    for (int n = 0; n < 100; ++n) {
        const Vec3 o(checks::uniform(rng, -10, 10), checks::uniform(rng, -10, 10), checks::uniform(rng, -10, 10));
        const Vec3 d = random_unit(rng);
        const auto fast = tracer.trace(o, d, 60.0);
        const auto slow = tracer.trace_brute_force(o, d, 60.0);
        const auto oracle = checks::brute_force_lidar(scene.gaussians, o, d, 60.0);
        ASSERT_EQ(fast.hit, slow.hit) << "ray " << n;
        ASSERT_EQ(fast.hit, oracle.has_value()) << "ray " << n;
        if (fast.hit) {
            ++hits;
            EXPECT_EQ(fast.gaussian, oracle->gaussian);
            EXPECT_NEAR(fast.range, oracle->range, 1e-9);
            EXPECT_EQ(fast.range, slow.range);
        }
    }
    EXPECT_GT(hits, 20);
}

TEST(Pattern, SpinningLayout) {
    const auto p = ScanPattern::spinning();
    EXPECT_EQ(p.size(), 64u * 900u);
    EXPECT_EQ(p.elevation_count, 64);
    EXPECT_EQ(p.azimuth_count, 900);
    EXPECT_NO_THROW(p.validate());
    const double deg = std::numbers::pi / 180.0;
    const Vec3& first = p.directions[0];
    EXPECT_NEAR(std::asin(first.z()), -25.0 * deg, 1e-12);
    EXPECT_NEAR(std::atan2(first.y(), first.x()), 0.0, 1e-12);
    const Vec3& top = p.directions[63];
    EXPECT_NEAR(std::asin(top.z()), 5.0 * deg, 1e-12);
    const Vec3& next_az = p.directions[64];
    EXPECT_NEAR(std::atan2(next_az.y(), next_az.x()), 0.4 * deg, 1e-12);
}

TEST(Pattern, ValidateRejectsBadInput) {
    ScanPattern p = ScanPattern::spinning(-10, 10, 2, 4, 50.0);
    p.directions[1] *= 2.0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = ScanPattern::spinning(-10, 10, 2, 4, 50.0);
    p.max_range = 0.0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = ScanPattern::spinning(-10, 10, 2, 4, 50.0);
    p.directions.pop_back();
    EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(SimulateScan, EmptySceneGivesEmptyCloud) {
    const auto scene = decode_scene(RawGaussianParams::zeros(0, 1), SparseVoxelGrid{}, 0.3);
    const auto scan = simulate_scan(scene, RigidTransform::identity(), ScanPattern::spinning(-10, 10, 4, 16));
    EXPECT_TRUE(scan.points.empty());
    EXPECT_TRUE(scan.ranges.empty());
}

TEST(SimulateScan, NadirRangesMatchSensorHeight) {
    std::vector<VoxelCoord> ground;
    for (int i = -20; i < 20; ++i) {
        for (int j = -20; j < 20; ++j) {
            ground.push_back({i, j, 0});
        }
    }
    const double sigma = 0.2;
    const auto scene = scene_at(ground, 0.5, sigma, 3);
    ScanPattern pattern;
    pattern.directions.assign(1, Vec3(0, 0, -1));
    pattern.azimuth_count = 1;
    pattern.elevation_count = 1;
    pattern.max_range = 50.0;
    const LidarTracer tracer(scene);
    std::mt19937_64 rng(42);
    for (int n = 0; n < 25; ++n) {
        RigidTransform pose;
        pose.translation = Vec3(checks::uniform(rng, -8, 8), checks::uniform(rng, -8, 8), 10.0);
        const auto scan = simulate_scan(tracer, scene, pose, pattern);
        ASSERT_EQ(scan.ranges.size(), 1u);
        EXPECT_NEAR(scan.ranges[0], 10.0 - 0.25, 2.0 * sigma + 1e-9);
        EXPECT_EQ(scan.ray_index[0], 0u);
        EXPECT_EQ(scan.points.labels.at(0), 3);
        EXPECT_NEAR(scan.points.positions[0].z(), 10.0 - scan.ranges[0], 1e-9);
    }
}

TEST(SimulateScan, PointsAreInWorldFrame) {
    const auto scene = scene_at({{0, 0, 0}}, 1.0, 0.2);
    ScanPattern pattern;
    pattern.directions.assign(1, Vec3(1, 0, 0));
    pattern.azimuth_count = 1;
    pattern.elevation_count = 1;
    RigidTransform pose;
    pose.rotation = yaw_rotation(std::numbers::pi / 2.0);
    pose.translation = Vec3(0.5, -5.0, 0.5);
    const auto scan = simulate_scan(scene, pose, pattern);
    ASSERT_EQ(scan.points.size(), 1u);
    EXPECT_NEAR((scan.points.positions[0] - Vec3(0.5, 0.1, 0.5)).norm(), 0.0, 1e-9);
    EXPECT_NEAR(scan.ranges[0], 5.1, 1e-9);
}

TEST(SimulateScan, StaticWallIsConsistentAcrossPoses) {
    std::vector<VoxelCoord> wall;
    for (int j = -30; j < 30; ++j) {
        for (int k = -10; k < 20; ++k) {
            wall.push_back({100, j, k});
        }
    }
    const auto scene = scene_at(wall, 0.1, 0.03);
    const auto pattern = ScanPattern::spinning(-10.0, 10.0, 16, 360, 30.0);
    const LidarTracer tracer(scene);
    RigidTransform a;
    a.translation = Vec3(0.0, 0.0, 0.5);
    RigidTransform b = a;
    b.translation.x() += 1.0;
    const auto sa = simulate_scan(tracer, scene, a, pattern);
    const auto sb = simulate_scan(tracer, scene, b, pattern);
    ASSERT_GT(sa.points.size(), 10u);
    ASSERT_GT(sb.points.size(), 10u);
    for (const auto* scan : {&sa, &sb}) {
        for (const auto& p : scan->points.positions) {
            EXPECT_NEAR(p.x(), 10.05, 2 * 0.1);
        }
    }
}

TEST(SimulateScan, DeterministicAcrossCalls) {
    std::mt19937_64 rng(43);
    const auto scene = random_scene(rng, 300);
    const auto pattern = ScanPattern::spinning(-30, 30, 8, 120, 40.0);
    const auto x = simulate_scan(scene, RigidTransform::identity(), pattern);
    const auto y = simulate_scan(scene, RigidTransform::identity(), pattern);
    EXPECT_EQ(x.ranges, y.ranges);
    EXPECT_EQ(x.ray_index, y.ray_index);
    EXPECT_TRUE(std::is_sorted(x.ray_index.begin(), x.ray_index.end()));
}

}  // namespace
}  // namespace voxsplat
