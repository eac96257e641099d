// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#include <voxsplat/checks/oracles.hpp>
#include <voxsplat/pipeline.hpp>

#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <random>

namespace voxsplat {
namespace {

LabeledPointCloud points(std::vector<Vec3> pts, std::vector<std::int32_t> labels = {}, int classes = 0) {
    LabeledPointCloud c;
    c.positions = std::move(pts);
    c.labels = std::move(labels);
    c.num_classes = classes;
    return c;
}

RigidTransform random_pose(std::mt19937_64& rng) {
    RigidTransform t;
    t.rotation = yaw_rotation(checks::uniform(rng, -3, 3));
    t.translation = Vec3(checks::uniform(rng, -20, 20), checks::uniform(rng, -20, 20), checks::uniform(rng, -1, 1));
    return t;
}

TEST(Box, ContainsIsClosedAndYawed) {
    DynamicBox box;
    box.center = Vec3(1, 1, 0);
    box.half_extent = Vec3(2, 0.5, 1);
    box.yaw = std::numbers::pi / 2.0;
    EXPECT_TRUE(box.contains({1, 3, 0}));
    EXPECT_FALSE(box.contains({3, 1, 0}));
    EXPECT_TRUE(box.contains({1.5, 1, 1}));
    EXPECT_FALSE(box.contains({1.5, 1, 1.01}));
    EXPECT_TRUE(box.contains({1.5, 1, 1.01}, 0.02));
}

TEST(Box, ValidateRejectsNonPositiveExtent) {
    DynamicBox box;
    box.half_extent = Vec3(1, 0, 1);
    EXPECT_THROW(box.validate(), std::invalid_argument);
}

TEST(Accumulate, PointAtBoxCenterIsRemoved) {
    SensorFrame f{points({{0, 0, 0}, {10, 0, 0}}), RigidTransform::identity(), 4};
    DynamicBox box;
    box.frame_id = 4;
    const auto out = accumulate(std::span(&f, 1), std::span(&box, 1));
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out.positions[0], Vec3(10, 0, 0));
    EXPECT_EQ(out.frame_ids.at(0), 4);
}

TEST(Accumulate, BoxesOnlyAffectTheirFrame) {
    SensorFrame f{points({{0, 0, 0}}), RigidTransform::identity(), 1};
    DynamicBox box;
    box.frame_id = 2;
    EXPECT_EQ(accumulate(std::span(&f, 1), std::span(&box, 1)).size(), 1u);
}

TEST(Accumulate, RigidTransformPreservesDistances) {
    std::mt19937_64 rng(50);
    std::vector<Vec3> pts;
    for (int n = 0; n < 20; ++n) {
        pts.emplace_back(checks::uniform(rng, -5, 5), checks::uniform(rng, -5, 5), checks::uniform(rng, -5, 5));
    }
    SensorFrame f{points(pts), random_pose(rng), 0};
    const auto out = accumulate(std::span(&f, 1), std::span<const DynamicBox>());
    ASSERT_EQ(out.size(), pts.size());
    for (std::size_t a = 0; a < pts.size(); ++a) {
        EXPECT_NEAR((out.positions[a] - f.world_from_sensor.apply(pts[a])).norm(), 0.0, 1e-12);
        for (std::size_t b = a + 1; b < pts.size(); ++b) {
            EXPECT_NEAR((out.positions[a] - out.positions[b]).norm(), (pts[a] - pts[b]).norm(), 1e-9);
        }
    }
}

TEST(Accumulate, MatchesBruteForceBoxFilter) {
    std::mt19937_64 rng(51);
    std::vector<SensorFrame> frames;
    std::vector<DynamicBox> boxes;
    for (int fid = 0; fid < 5; ++fid) {
        std::vector<Vec3> pts;
        for (int n = 0; n < 400; ++n) {
            pts.emplace_back(checks::uniform(rng, -15, 15), checks::uniform(rng, -15, 15), checks::uniform(rng, -2, 2));
        }
        frames.push_back({points(pts), random_pose(rng), fid});
        for (int b = 0; b < 4; ++b) {
            DynamicBox box;
            box.frame_id = fid;
            box.object_id = b;
            box.center = frames.back().world_from_sensor.apply(
                Vec3(checks::uniform(rng, -10, 10), checks::uniform(rng, -10, 10), 0.0));
            box.half_extent = Vec3(checks::uniform(rng, 1, 4), checks::uniform(rng, 0.5, 2), checks::uniform(rng, 0.5, 2));
            box.yaw = checks::uniform(rng, -3, 3);
            boxes.push_back(box);
        }
    }
    const auto out = accumulate(frames, boxes);
    std::vector<Vec3> want;
    std::vector<std::int32_t> want_ids;
    for (const auto& f : frames) {
        for (const auto& p : f.points.positions) {
            const Vec3 w = f.world_from_sensor.apply(p);
            bool inside = false;
            for (const auto& b : boxes) {
                inside = inside || (b.frame_id == f.frame_id && checks::point_in_box(w, b.center, b.half_extent, b.yaw));
            }
            if (!inside) {
                want.push_back(w);
                want_ids.push_back(f.frame_id);
            }
        }
    }
    ASSERT_EQ(out.size(), want.size());
    EXPECT_LT(want.size(), 2000u);
    for (std::size_t n = 0; n < want.size(); ++n) {
        EXPECT_NEAR((out.positions[n] - want[n]).norm(), 0.0, 1e-12);
        EXPECT_EQ(out.frame_ids[n], want_ids[n]);
    }
}

TEST(Propagate, UnlabeledCopiesOnlyLabel) {
    const auto out = propagate_semantics(points({{0, 0, 0}, {3, 0, 0}}, {4, kUnlabeled}, 6));
    EXPECT_EQ(out.labels, (std::vector<std::int32_t>{4, 4}));
}

TEST(Propagate, TiePicksSmallerIndex) {
    const auto out = propagate_semantics(points({{-1, 0, 0}, {1, 0, 0}, {0, 0, 0}}, {2, 5, kUnlabeled}, 6));
    EXPECT_EQ(out.labels[2], 2);
    // The tie is resolved by point index, not by label value.
    const auto swapped = propagate_semantics(points({{-1, 0, 0}, {1, 0, 0}, {0, 0, 0}}, {5, 2, kUnlabeled}, 6));
    EXPECT_EQ(swapped.labels[2], 5);
}

TEST(Propagate, MatchesExhaustiveNearestNeighbor) {
    std::mt19937_64 rng(52);
    for (int trial = 0; trial < 4; ++trial) {
        std::vector<Vec3> pts;
        std::vector<std::int32_t> labels;
        for (int n = 0; n < 500; ++n) {
            pts.emplace_back(checks::uniform(rng, -20, 20), checks::uniform(rng, -20, 20), checks::uniform(rng, -3, 3));
            labels.push_back(rng() % 10 == 0 ? static_cast<std::int32_t>(rng() % 7) : kUnlabeled);
        }
        labels[0] = 1;
        const auto cloud = points(pts, labels, 7);
        EXPECT_EQ(propagate_semantics(cloud).labels, checks::brute_force_propagate(cloud));
    }
}

TEST(Propagate, NoLabeledPointsIsAnError) {
    EXPECT_THROW(propagate_semantics(points({{0, 0, 0}}, {kUnlabeled}, 3)), std::invalid_argument);
}

DynamicBox unit_box() {
    DynamicBox box;
    box.center = Vec3(3, -2, 1);
    box.half_extent = Vec3::Constant(0.5);
    box.yaw = 0.7;
    box.label = 5;
    box.frame_id = 9;
    box.object_id = 2;
    return box;
}

TEST(InsertDynamic, ZeroSamplesLeavesCloudUnchanged) {
    const auto cloud = points({{1, 2, 3}}, {0}, 6);
    const DynamicBox box = unit_box();
    const auto out = insert_dynamic(cloud, std::span(&box, 1), 0);
    EXPECT_EQ(out.positions, cloud.positions);
    EXPECT_EQ(out.labels, cloud.labels);
}

TEST(InsertDynamic, SamplesCoverEveryFaceEvenly) {
    const DynamicBox box = unit_box();
    const auto out = insert_dynamic(points({}, {}, 6), std::span(&box, 1), 600, 7);
    ASSERT_EQ(out.size(), 600u);
    const Mat3 world_from_box = yaw_rotation(box.yaw);
    std::array<int, 6> per_face{};
    for (std::size_t n = 0; n < out.size(); ++n) {
        const Vec3 local = world_from_box.transpose() * (out.positions[n] - box.center);
        int faces = 0;
        for (int a = 0; a < 3; ++a) {
            if (std::abs(std::abs(local[a]) - 0.5) < 1e-9) {
                ++per_face[2 * a + (local[a] > 0 ? 1 : 0)];
                ++faces;
            }
        }
        EXPECT_GE(faces, 1) << "sample " << n << " is not on the surface";
        EXPECT_TRUE(box.contains(out.positions[n], 1e-6));
        EXPECT_EQ(out.labels[n], 5);
        EXPECT_EQ(out.frame_ids.at(n), 9);
    }
    for (const int count : per_face) {
        EXPECT_NEAR(count, 100, 2);
    }
}

TEST(InsertDynamic, FacesSplitByArea) {
    DynamicBox box = unit_box();
    box.half_extent = Vec3(2.0, 1.0, 0.5);
    const auto out = insert_dynamic(points({}, {}, 6), std::span(&box, 1), 700, 3);
    ASSERT_EQ(out.size(), 700u);
    const Mat3 world_from_box = yaw_rotation(box.yaw);
    std::array<int, 3> per_axis{};
    for (const auto& p : out.positions) {
        const Vec3 local = world_from_box.transpose() * (p - box.center);
        for (int a = 0; a < 3; ++a) {
            if (std::abs(std::abs(local[a]) - box.half_extent[a]) < 1e-9) {
                ++per_axis[a];
                break;
            }
        }
    }
    // Face areas 2x1, 4x1, 4x2 (per side), total 2 * 14 = 28.
    EXPECT_NEAR(per_axis[0], 700.0 * 4.0 / 28.0, 2.0);
    EXPECT_NEAR(per_axis[1], 700.0 * 8.0 / 28.0, 2.0);
    EXPECT_NEAR(per_axis[2], 700.0 * 16.0 / 28.0, 2.0);
}

TEST(InsertDynamic, DeterministicForSeed) {
    const DynamicBox box = unit_box();
    const auto a = insert_dynamic(points({}, {}, 6), std::span(&box, 1), 120, 11);
    const auto b = insert_dynamic(points({}, {}, 6), std::span(&box, 1), 120, 11);
    const auto c = insert_dynamic(points({}, {}, 6), std::span(&box, 1), 120, 12);
    EXPECT_EQ(a.positions, b.positions);
    EXPECT_NE(a.positions, c.positions);
}

TEST(Chunk, SymmetricChunkKeepsEgoOrigin) {
    ChunkSpec spec;
    spec.forward_fraction = 0.5;
    spec.world_from_ego.translation = Vec3(100, 50, 2);
    const auto out = crop_chunk(points({{100, 50, 2}}), spec);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_NEAR(out.positions[0].norm(), 0.0, 1e-12);
    const GridMeta meta = spec.fine_meta();
    const VoxelCoord c = meta.voxel_of(out.positions[0]);
    EXPECT_EQ(c.i, 512);
    EXPECT_EQ(c.j, 512);
}

TEST(Chunk, ForwardAndRearBounds) {
    ChunkSpec spec;
    EXPECT_NEAR(spec.forward_bound(), 76.8, 1e-9);
    EXPECT_NEAR(spec.rear_bound(), -25.6, 1e-9);
    const auto out = crop_chunk(points({{80, 0, 0}, {76.7, 0, 0}, {-25.6, 0, 0}, {-25.7, 0, 0}, {0, 51.2, 0},
                                        {0, -51.2, 0}, {0, 0, -10.5}}),
                                spec);
    ASSERT_EQ(out.size(), 3u);
    EXPECT_NEAR(out.positions[0].x(), 76.7, 1e-9);
    EXPECT_NEAR(out.positions[1].x(), -25.6, 1e-9);
    EXPECT_NEAR(out.positions[2].y(), -51.2, 1e-9);
}

TEST(Chunk, CropsInEgoFrame) {
    ChunkSpec spec;
    spec.world_from_ego.rotation = yaw_rotation(std::numbers::pi / 2.0);
    spec.world_from_ego.translation = Vec3(10, 0, 0);
    const auto out = crop_chunk(points({{10, 60, 0}, {10, -60, 0}}), spec);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_NEAR((out.positions[0] - Vec3(60, 0, 0)).norm(), 0.0, 1e-9);
}

TEST(Chunk, FineGridSpansAtMost1024Voxels) {
    const ChunkSpec spec;
    const GridMeta meta = spec.fine_meta();
    ASSERT_TRUE(meta.extent.has_value());
    EXPECT_EQ(meta.extent->max.i - meta.extent->min.i, 1024);
    EXPECT_EQ(meta.extent->max.j - meta.extent->min.j, 1024);
    EXPECT_LE(meta.extent->max.k - meta.extent->min.k, 1024);
    EXPECT_DOUBLE_EQ(meta.voxel_size, 0.1);
}

TEST(TrainingPair, SinglePoint) {
    const ChunkSpec spec;
    GridMeta coarse = spec.fine_meta();
    coarse.voxel_size = 0.4;
    const auto pair = make_training_pair(points({{1, 1, 1}}), spec.fine_meta(), coarse);
    EXPECT_EQ(pair.fine.size(), 1u);
    EXPECT_EQ(pair.coarse.size(), 1u);
    EXPECT_EQ(pair.factor, 4);
    EXPECT_TRUE(checks::containment_holds(pair.fine, pair.coarse, 4));
}

TEST(TrainingPair, RandomChunkIsContained) {
    std::mt19937_64 rng(53);
    ChunkSpec spec;
    spec.world_from_ego = random_pose(rng);
    std::vector<Vec3> pts;
    std::vector<std::int32_t> labels;
    for (int n = 0; n < 10000; ++n) {
        pts.push_back(spec.world_from_ego.apply(
            Vec3(checks::uniform(rng, -30, 80), checks::uniform(rng, -55, 55), checks::uniform(rng, -12, 20))));
        labels.push_back(static_cast<std::int32_t>(rng() % 4));
    }
    const auto local = crop_chunk(points(pts, labels, 4), spec);
    GridMeta coarse = spec.fine_meta();
    coarse.voxel_size = 0.4;
    const auto pair = make_training_pair(local, spec.fine_meta(), coarse);
    EXPECT_GT(pair.fine.size(), 1000u);
    EXPECT_TRUE(checks::containment_holds(pair.fine, pair.coarse, 4));
    EXPECT_DOUBLE_EQ(pair.coarse.meta().voxel_size, 0.4);
    for (const auto& c : pair.fine.coords()) {
        ASSERT_TRUE(spec.fine_meta().extent->contains(c));
    }
}

TEST(TrainingPair, RejectsWrongCoarseSize) {
    const ChunkSpec spec;
    GridMeta coarse = spec.fine_meta();
    coarse.voxel_size = 0.3;
    EXPECT_THROW(make_training_pair(points({{1, 1, 1}}), spec.fine_meta(), coarse), std::invalid_argument);
}

Camera forward_camera() {
    Camera cam;
    cam.fx = cam.fy = 20.0;
    cam.cx = cam.cy = 16.0;
    cam.width = cam.height = 32;
    return cam;
}

GridMeta unit_grid() {
    GridMeta meta;
    meta.voxel_size = 1.0;
    return meta;
}

TEST(Visibility, SingleVoxelInFront) {
    SparseVoxelGrid grid(unit_grid());
    grid.insert({-1, -1, 5});
    const Camera cam = forward_camera();
    const auto r = voxel_visibility(grid, std::span(&cam, 1));
    EXPECT_EQ(r.visible_count, 1u);
    EXPECT_EQ(r.occluded_fraction, 0.0);
}

TEST(Visibility, VoxelBehindOccluderIsHidden) {
    SparseVoxelGrid grid(unit_grid());
    grid.insert({-1, -1, 5});
    grid.insert({-1, -1, 9});
    const Camera cam = forward_camera();
    const auto r = voxel_visibility(grid, std::span(&cam, 1));
    EXPECT_EQ(r.visible[*grid.find({-1, -1, 5})], 1);
    EXPECT_EQ(r.visible[*grid.find({-1, -1, 9})], 0);
    EXPECT_DOUBLE_EQ(r.occluded_fraction, 0.5);
}

TEST(Visibility, EverythingBehindCamera) {
    SparseVoxelGrid grid(unit_grid());
    grid.insert({0, 0, -4});
    grid.insert({2, 1, -9});
    const Camera cam = forward_camera();
    const auto r = voxel_visibility(grid, std::span(&cam, 1));
    EXPECT_EQ(r.visible_count, 0u);
    EXPECT_EQ(r.occluded_fraction, 1.0);
}

TEST(Visibility, EmptyGrid) {
    const Camera cam = forward_camera();
    const auto r = voxel_visibility(SparseVoxelGrid(unit_grid()), std::span(&cam, 1));
    EXPECT_EQ(r.occluded_fraction, 0.0);
}

}  // namespace
}  // namespace voxsplat
