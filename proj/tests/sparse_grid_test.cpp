// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#include <voxsplat/checks/oracles.hpp>
#include <voxsplat/sparse_grid.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>

namespace voxsplat {
namespace {

LabeledPointCloud cloud_of(std::vector<Vec3> pts, std::vector<std::int32_t> labels = {}, int classes = 0) {
    LabeledPointCloud c;
    c.positions = std::move(pts);
    c.labels = std::move(labels);
    c.num_classes = classes;
    return c;
}

GridMeta meta_with(double s, Vec3 origin = Vec3::Zero()) {
    GridMeta m;
    m.voxel_size = s;
    m.origin = origin;
    return m;
}

SparseVoxelGrid random_grid(std::mt19937_64& rng, std::size_t count, bool with_extent) {
    GridMeta meta = meta_with(0.25, Vec3(-1.5, 0.25, 3.0));
    if (with_extent) {
        meta.extent = VoxelBounds{{-40, -40, -40}, {40, 40, 40}};
    }
    SparseVoxelGrid g(meta, {{"feature", 3}, {"semantic_logits", 4}});
    std::uniform_int_distribution<int> coord(-40, 39);
    for (std::size_t n = 0; n < count; ++n) {
        const auto [idx, inserted] = g.insert({coord(rng), coord(rng), coord(rng)});
        if (!inserted) {
            continue;
        }
        for (double& x : g.attributes(idx, 0)) {
            x = checks::uniform(rng, -5.0, 5.0);
        }
        g.attributes(idx, 1)[rng() % 4] = 1.0;
    }
    return g;
}

TEST(VoxelOf, FloorDivisionInsideFirstVoxel) {
    EXPECT_EQ(meta_with(0.1).voxel_of({0.05, 0.05, 0.05}), (VoxelCoord{0, 0, 0}));
}

TEST(VoxelOf, HalfOpenConventionForNegativeCoordinates) {
    EXPECT_EQ(meta_with(0.1).voxel_of({-0.01, 0.0, 0.0}), (VoxelCoord{-1, 0, 0}));
    EXPECT_EQ(meta_with(0.5).voxel_of({0.5, 1.0, -0.5}), (VoxelCoord{1, 2, -1}));
}

TEST(VoxelOf, CenterRoundTrip) {
    const GridMeta m = meta_with(0.4, Vec3(1.0, -2.0, 0.3));
    const VoxelCoord c{-7, 12, 3};
    EXPECT_EQ(m.voxel_of(m.voxel_center(c)), c);
    EXPECT_NEAR((m.voxel_center(c) - m.voxel_min(c)).norm(), 0.2 * std::sqrt(3.0), 1e-12);
}

TEST(GridMeta, RejectsNonPositiveVoxelSize) {
    EXPECT_THROW(meta_with(0.0).validate(), std::invalid_argument);
    EXPECT_THROW(meta_with(-1.0).validate(), std::invalid_argument);
}

TEST(Voxelize, EmptyCloudGivesEmptyGrid) {
    const auto g = voxelize(LabeledPointCloud{}, meta_with(0.1));
    EXPECT_TRUE(g.empty());
}

TEST(Voxelize, SinglePointIsQueryable) {
    const auto g = voxelize(cloud_of({{0.05, 0.05, 0.05}}), meta_with(0.1));
    ASSERT_EQ(g.size(), 1u);
    EXPECT_TRUE(g.query({0, 0, 0}).has_value());
    EXPECT_FALSE(g.query({5, 5, 5}).has_value());
}

TEST(Voxelize, MatchesBruteForceBucketing) {
    std::mt19937_64 rng(7);
    std::vector<Vec3> pts;
    std::vector<std::int32_t> labels;
    for (int n = 0; n < 1000; ++n) {
        pts.emplace_back(checks::uniform(rng, 0, 1), checks::uniform(rng, 0, 1), checks::uniform(rng, 0, 1));
        labels.push_back(static_cast<std::int32_t>(rng() % 3));
    }
    const auto cloud = cloud_of(pts, labels, 3);
    const GridMeta meta = meta_with(0.5);
    const auto g = voxelize(cloud, meta);
    const auto oracle = checks::brute_force_voxelize(cloud, meta);
    ASSERT_EQ(g.size(), oracle.size());
    for (const auto& [coord, label] : oracle) {
        const auto idx = g.find(coord);
        ASSERT_TRUE(idx.has_value());
        const auto got = semantic_label(g, *idx);
        EXPECT_EQ(got.value_or(-1), label);
    }
    EXPECT_TRUE(g.is_canonical());
}

TEST(Voxelize, UnlabeledPointsDoNotVote) {
    const auto cloud = cloud_of({{0.01, 0.01, 0.01}, {0.02, 0.02, 0.02}, {0.03, 0.03, 0.03}},
                                {kUnlabeled, kUnlabeled, 2}, 3);
    const auto g = voxelize(cloud, meta_with(0.1));
    ASSERT_EQ(g.size(), 1u);
    EXPECT_EQ(semantic_label(g, 0), 2);
}

TEST(Voxelize, AllUnlabeledVoxelHasNoLabel) {
    const auto g = voxelize(cloud_of({{0.01, 0.01, 0.01}}, {kUnlabeled}, 2), meta_with(0.1));
    EXPECT_FALSE(semantic_label(g, 0).has_value());
}

TEST(ParentCoord, FloorDivision) {
    EXPECT_EQ(parent_coord({7, 2, 9}, 4), (VoxelCoord{1, 0, 2}));
    EXPECT_EQ(parent_coord({-1, -4, -5}, 4), (VoxelCoord{-1, -1, -2}));
}

TEST(Coarsen, FactorZeroIsInvalid) {
    EXPECT_THROW(coarsen(SparseVoxelGrid{}, 0), std::invalid_argument);
}

TEST(Coarsen, FactorOneIsIdentity) {
    std::mt19937_64 rng(3);
    const auto g = random_grid(rng, 200, false);
    EXPECT_TRUE(coarsen(g, 1) == g);
}

TEST(Coarsen, ContainmentHoldsForRandomGrid) {
    std::mt19937_64 rng(11);
    const auto fine = random_grid(rng, 500, true);
    const auto coarse = coarsen(fine, 4);
    EXPECT_DOUBLE_EQ(coarse.meta().voxel_size, 1.0);
    EXPECT_TRUE(checks::containment_holds(fine, coarse, 4));
    EXPECT_FALSE(find_containment_violation(fine, coarse, 4).has_value());
    for (const auto& c : coarse.coords()) {
        EXPECT_TRUE(coarse.meta().extent->contains(c));
    }
}

TEST(Coarsen, AveragesFeaturesAndVotesLabels) {
    SparseVoxelGrid fine(meta_with(0.1), {{"feature", 1}, {"semantic_logits", 2}});
    const VoxelCoord kids[] = {{0, 0, 0}, {1, 0, 0}, {3, 3, 3}};
    const double values[] = {1.0, 2.0, 6.0};
    const int labels[] = {1, 1, 0};
    for (int n = 0; n < 3; ++n) {
        const auto idx = fine.insert(kids[n]).first;
        fine.attributes(idx, 0)[0] = values[n];
        fine.attributes(idx, 1)[labels[n]] = 1.0;
    }
    const auto coarse = coarsen(fine, 4);
    ASSERT_EQ(coarse.size(), 1u);
    EXPECT_DOUBLE_EQ(coarse.attributes(0, 0)[0], 3.0);
    EXPECT_EQ(semantic_label(coarse, 0), 1);
}

TEST(Containment, DetectsMissingParent) {
    SparseVoxelGrid fine(meta_with(0.1));
    fine.insert({5, 5, 5});
    SparseVoxelGrid coarse(meta_with(0.4));
    coarse.insert({0, 0, 0});
    const auto bad = find_containment_violation(fine, coarse, 4);
    ASSERT_TRUE(bad.has_value());
    EXPECT_EQ(*bad, (VoxelCoord{5, 5, 5}));
}

TEST(Query, FuzzAgainstShadowMap) {
    std::mt19937_64 rng(21);
    SparseVoxelGrid g(meta_with(0.1), {{"feature", 2}});
    std::map<VoxelCoord, std::pair<double, double>> shadow;
    std::uniform_int_distribution<int> coord(-1000, 1000);
    for (int n = 0; n < 5000; ++n) {
        const VoxelCoord c{coord(rng), coord(rng), coord(rng)};
        const auto idx = g.insert(c).first;
        const double a = checks::uniform(rng, -1, 1);
        const double b = checks::uniform(rng, -1, 1);
        g.attributes(idx, 0)[0] = a;
        g.attributes(idx, 0)[1] = b;
        shadow[c] = {a, b};
    }
    EXPECT_EQ(g.size(), shadow.size());
    for (const auto& [c, ab] : shadow) {
        const auto view = g.query(c);
        ASSERT_TRUE(view.has_value());
        EXPECT_EQ(view->coord(), c);
        EXPECT_EQ(view->channel("feature")[0], ab.first);
        EXPECT_EQ(view->channel("feature")[1], ab.second);
    }
    EXPECT_THROW(g.query(shadow.begin()->first)->channel("missing"), std::out_of_range);
}

TEST(Grid, EqualityIgnoresStorageOrder) {
    SparseVoxelGrid a(meta_with(0.1), {{"feature", 1}});
    SparseVoxelGrid b(meta_with(0.1), {{"feature", 1}});
    a.attributes(a.insert({1, 2, 3}).first, 0)[0] = 4.0;
    a.attributes(a.insert({-1, 0, 0}).first, 0)[0] = 5.0;
    b.attributes(b.insert({-1, 0, 0}).first, 0)[0] = 5.0;
    b.attributes(b.insert({1, 2, 3}).first, 0)[0] = 4.0;
    EXPECT_TRUE(a == b);
    b.attributes(0, 0)[0] = 5.5;
    EXPECT_FALSE(a == b);
}

TEST(Grid, RejectsDuplicateChannel) {
    EXPECT_THROW(SparseVoxelGrid(meta_with(0.1), {{"a", 1}, {"a", 2}}), std::invalid_argument);
}

TEST(Raymarch, SingleVoxelAlongZ) {
    SparseVoxelGrid g(meta_with(0.1));
    g.insert({0, 0, 50});
    const auto hit = raymarch_first_hit(g, {0.05, 0.05, 0.0}, {0, 0, 1});
    ASSERT_TRUE(hit.has_value());
    EXPECT_EQ(hit->coord, (VoxelCoord{0, 0, 50}));
    EXPECT_NEAR(hit->t_enter, 5.0, 1e-9);
}

TEST(Raymarch, RayPointingAwayMisses) {
    SparseVoxelGrid g(meta_with(0.1));
    g.insert({0, 0, 50});
    EXPECT_FALSE(raymarch_first_hit(g, {0.05, 0.05, 0.0}, {0, 0, -1}).has_value());
    EXPECT_FALSE(raymarch_first_hit(SparseVoxelGrid{}, Vec3::Zero(), {1, 0, 0}).has_value());
}

TEST(Raymarch, RespectsMaxRange) {
    SparseVoxelGrid g(meta_with(0.1));
    g.insert({0, 0, 50});
    EXPECT_FALSE(raymarch_first_hit(g, {0.05, 0.05, 0.0}, {0, 0, 1}, 4.0).has_value());
}

TEST(Raymarch, RejectsNonUnitDirection) {
    SparseVoxelGrid g(meta_with(0.1));
    g.insert({0, 0, 0});
    EXPECT_THROW(raymarch_first_hit(g, Vec3::Zero(), {0, 0, 2}), std::invalid_argument);
}

TEST(Raymarch, MatchesBruteForceOnRandomRays) {
    std::mt19937_64 rng(5);
    const auto g = random_grid(rng, 2000, false);
    int hits = 0;
    for (int n = 0; n < 100; ++n) {
        const Vec3 o(checks::uniform(rng, -12, 9), checks::uniform(rng, -9, 12), checks::uniform(rng, -7, 13));
        Vec3 d(checks::uniform(rng, -1, 1), checks::uniform(rng, -1, 1), checks::uniform(rng, -1, 1));
        d.normalize();
        const auto got = raymarch_first_hit(g, o, d);
        const auto want = checks::brute_force_first_hit(g, o, d);
        ASSERT_EQ(got.has_value(), want.has_value()) << "ray " << n;
        if (got) {
            ++hits;
            EXPECT_EQ(got->coord, want->coord) << "ray " << n;
            EXPECT_NEAR(got->t_enter, want->t_enter, 1e-9);
        }
    }
    EXPECT_GT(hits, 10);
}

TEST(Serialize, EmptyGridRoundTrip) {
    const SparseVoxelGrid g(meta_with(0.1));
    const auto back = deserialize(serialize(g));
    EXPECT_TRUE(back.empty());
    EXPECT_TRUE(back == g);
}

TEST(Serialize, FuzzedGridRoundTrip) {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        const auto g = random_grid(rng, 300, trial % 2 == 0);
        EXPECT_TRUE(deserialize(serialize(g)) == g);
    }
}

TEST(Serialize, CorruptMagicReportsOffsetZero) {
    auto bytes = serialize(SparseVoxelGrid(meta_with(0.1)));
    bytes[0] ^= 0xFF;
    try {
        deserialize(bytes);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.offset(), 0u);
    }
}

TEST(Serialize, TruncatedPayloadIsParseError) {
    std::mt19937_64 rng(2);
    auto bytes = serialize(random_grid(rng, 50, false));
    bytes.resize(bytes.size() - 5);
    EXPECT_THROW(deserialize(bytes), ParseError);
    bytes.resize(10);
    EXPECT_THROW(deserialize(bytes), ParseError);
}

TEST(Serialize, UnknownChannelDtypeNamesOffset) {
    SparseVoxelGrid g(meta_with(0.1), {{"zqx", 1}});
    g.insert({0, 0, 0});
    auto bytes = serialize(g);
    const std::string name = "zqx";
    const auto it = std::search(bytes.begin(), bytes.end(), name.begin(), name.end());
    ASSERT_NE(it, bytes.end());
    const auto dtype_at = static_cast<std::size_t>(it - bytes.begin()) + name.size();
    bytes[dtype_at] = 0x7F;
    try {
        deserialize(bytes);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.offset(), dtype_at);
    }
}

TEST(Serialize, TrailingBytesRejected) {
    auto bytes = serialize(SparseVoxelGrid(meta_with(0.1)));
    bytes.push_back(0);
    EXPECT_THROW(deserialize(bytes), ParseError);
}

}  // namespace
}  // namespace voxsplat
