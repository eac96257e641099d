// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#include <voxsplat/checks/oracles.hpp>
#include <voxsplat/metrics.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

namespace voxsplat {
namespace {

TEST(LossWeights, DefaultsFollowTrainingSetup) {
    const LossWeights w;
    EXPECT_EQ(w.l1, 0.9);
    EXPECT_EQ(w.alpha, 1.0);
    EXPECT_EQ(w.ssim, 0.1);
    EXPECT_EQ(w.lpips, 0.6);
    EXPECT_EQ(w.depth, 1.0);
    EXPECT_NO_THROW(w.validate());
    LossWeights bad;
    bad.ssim = -0.1;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Focal, GammaZeroIsCrossEntropy) {
    std::mt19937_64 rng(60);
    const int classes = 5;
    std::vector<double> probs;
    std::vector<int> targets;
    for (int row = 0; row < 50; ++row) {
        double sum = 0.0;
        std::vector<double> p(classes);
        for (double& x : p) {
            x = checks::uniform(rng, 0.01, 1.0);
            sum += x;
        }
        for (double& x : p) {
            probs.push_back(x / sum);
        }
        targets.push_back(static_cast<int>(rng() % classes));
    }
    EXPECT_NEAR(focal_loss(probs, targets, classes, 0.0), checks::cross_entropy(probs, targets, classes), 1e-12);
}

TEST(Focal, CertainTargetHasZeroLoss) {
    const std::vector<double> probs = {0.0, 1.0, 0.0};
    const std::vector<int> targets = {1};
    EXPECT_EQ(focal_loss(probs, targets, 3, 2.0), 0.0);
}

TEST(Focal, HalfProbabilityGammaTwo) {
    const std::vector<double> probs = {0.5, 0.5};
    const std::vector<int> targets = {0};
    EXPECT_NEAR(focal_loss(probs, targets, 2, 2.0), 0.25 * std::log(2.0), 1e-12);
    EXPECT_NEAR(focal_loss(probs, targets, 2, 2.0), 0.17329, 1e-5);
}

TEST(Focal, ZeroProbabilityIsClamped) {
    const std::vector<double> probs = {1.0, 0.0};
    const std::vector<int> targets = {1};
    const double loss = focal_loss(probs, targets, 2, 2.0);
    EXPECT_TRUE(std::isfinite(loss));
    EXPECT_NEAR(loss, -std::log(kFocalClamp), 1e-6);
}

TEST(Focal, IgnoredTargetsAndClassWeights) {
    const std::vector<double> probs = {0.5, 0.5, 0.9, 0.1, 0.2, 0.8};
    const std::vector<int> targets = {0, -1, 1};
    const double l0 = 0.25 * std::log(2.0);
    const double l2 = -0.04 * std::log(0.8);
    EXPECT_NEAR(focal_loss(probs, targets, 2, 2.0), 0.5 * (l0 + l2), 1e-12);
    const std::vector<double> weights = {1.0, 3.0};
    EXPECT_NEAR(focal_loss(probs, targets, 2, 2.0, weights), (l0 + 3.0 * l2) / 4.0, 1e-12);
}

TEST(Focal, RejectsInvalidDistributions) {
    const std::vector<int> targets = {0};
    const std::vector<double> unnormalized = {0.5, 0.6};
    EXPECT_THROW(focal_loss(unnormalized, targets, 2, 2.0), std::invalid_argument);
    const std::vector<double> short_probs = {1.0};
    EXPECT_THROW(focal_loss(short_probs, targets, 2, 2.0), std::invalid_argument);
}

RenderTarget target_from(const Image& color, const Image& alpha) {
    return RenderTarget{color, alpha, color};
}

TEST(Appearance, PerfectPredictionIsZero) {
    std::mt19937_64 rng(61);
    const Image gt = checks::random_image(rng, 16, 16, 3);
    const Image mask = checks::random_image(rng, 16, 16, 1);
    const auto loss = appearance_loss(target_from(gt, mask), gt, mask);
    EXPECT_NEAR(loss.total, 0.0, 1e-12);
    EXPECT_EQ(loss.l1, 0.0);
    EXPECT_EQ(loss.alpha, 0.0);
    EXPECT_NEAR(loss.ssim, 1.0, 1e-12);
}

TEST(Appearance, ConstantColorOffset) {
    std::mt19937_64 rng(62);
    const Image gt = checks::random_image(rng, 16, 16, 3, 0.2, 0.8);
    Image pred = gt;
    for (double& v : pred.data()) {
        v += 0.1;
    }
    const Image mask(16, 16, 1, 1.0);
    const auto loss = appearance_loss(target_from(pred, mask), gt, mask);
    EXPECT_NEAR(loss.l1, 0.1, 1e-12);
    EXPECT_NEAR(LossWeights{}.l1 * loss.l1, 0.09, 1e-12);
    EXPECT_EQ(loss.alpha, 0.0);
    EXPECT_NEAR(loss.total, 0.09 + 0.1 * (1.0 - loss.ssim), 1e-12);
    LossWeights l1_only;
    l1_only.ssim = 0.0;
    l1_only.lpips = 0.0;
    EXPECT_NEAR(appearance_loss(target_from(pred, mask), gt, mask, l1_only).total, 0.09, 1e-12);
}

TEST(Appearance, ZeroWeightsGiveZero) {
    std::mt19937_64 rng(63);
    const Image gt = checks::random_image(rng, 12, 12, 3);
    const Image pred = checks::random_image(rng, 12, 12, 3);
    const Image mask = checks::random_image(rng, 12, 12, 1);
    const Image alpha = checks::random_image(rng, 12, 12, 1);
    LossWeights zero;
    zero.l1 = zero.alpha = zero.ssim = zero.lpips = 0.0;
    EXPECT_EQ(appearance_loss(target_from(pred, alpha), gt, mask, zero).total, 0.0);
}

TEST(Appearance, LpipsHookIsWeighted) {
    std::mt19937_64 rng(64);
    const Image gt = checks::random_image(rng, 12, 12, 3);
    const Image mask(12, 12, 1, 1.0);
    const auto loss = appearance_loss(target_from(gt, mask), gt, mask, LossWeights{},
                                      [](const Image&, const Image&) { return 0.5; });
    EXPECT_EQ(loss.lpips, 0.5);
    EXPECT_NEAR(loss.total, 0.3, 1e-12);
}

TEST(Appearance, ShapeMismatchThrows) {
    const Image gt(12, 12, 3);
    const Image mask(12, 12, 1);
    EXPECT_THROW(appearance_loss(target_from(Image(11, 12, 3), mask), gt, mask), std::invalid_argument);
}

TEST(Psnr, IdenticalImagesAreInfinite) {
    const Image a(4, 4, 3, 0.3);
    EXPECT_EQ(psnr(a, a), std::numeric_limits<double>::infinity());
}

TEST(Psnr, KnownMeanSquaredErrors) {
    const Image a(4, 4, 3, 0.0);
    EXPECT_NEAR(psnr(a, Image(4, 4, 3, 0.1)), 20.0, 1e-9);
    EXPECT_NEAR(psnr(a, Image(4, 4, 3, 1.0)), 0.0, 1e-12);
}

TEST(Ssim, IdenticalImagesScoreOne) {
    std::mt19937_64 rng(65);
    const Image a = checks::random_image(rng, 20, 17, 3);
    EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
}

TEST(Ssim, NegativeImageScoresBelowOne) {
    std::mt19937_64 rng(66);
    const Image a = checks::random_image(rng, 16, 16, 1);
    Image b = a;
    for (double& v : b.data()) {
        v = 1.0 - v;
    }
    EXPECT_LT(ssim(a, b), 1.0);
}

TEST(Ssim, MatchesWindowedReference) {
    Image a(16, 16, 1);
    Image b(16, 16, 1);
    for (int y = 0; y < 16; ++y) {
        for (int x = 0; x < 16; ++x) {
            a.at(x, y) = 0.5 + 0.4 * std::sin(0.7 * x) * std::cos(0.3 * y);
            b.at(x, y) = 0.5 + 0.35 * std::sin(0.7 * x + 0.2) * std::cos(0.31 * y) + 0.01 * ((x * 7 + y * 3) % 5);
        }
    }
    EXPECT_NEAR(ssim(a, b), checks::reference_ssim(a, b), 1e-6);
    std::mt19937_64 rng(67);
    const Image c = checks::random_image(rng, 16, 16, 3);
    const Image d = checks::random_image(rng, 16, 16, 3);
    EXPECT_NEAR(ssim(c, d), checks::reference_ssim(c, d), 1e-6);
}

TEST(Ssim, TooSmallImageThrows) {
    EXPECT_THROW(ssim(Image(8, 8, 1), Image(8, 8, 1)), std::invalid_argument);
}

SparseVoxelGrid grid_of(const std::vector<VoxelCoord>& coords, double s = 0.1) {
    GridMeta meta;
    meta.voxel_size = s;
    SparseVoxelGrid g(meta);
    for (const auto& c : coords) {
        g.insert(c);
    }
    return g;
}

TEST(Chamfer, IdenticalGridsAreZero) {
    const auto g = grid_of({{0, 0, 0}, {5, 1, -2}, {9, 9, 9}});
    EXPECT_EQ(voxel_chamfer(g, g), 0.0);
}

TEST(Chamfer, ThreeFourFive) {
    EXPECT_DOUBLE_EQ(voxel_chamfer(grid_of({{0, 0, 0}}), grid_of({{3, 4, 0}})), 5.0);
}

TEST(Chamfer, MatchesBruteForce) {
    std::mt19937_64 rng(68);
    std::uniform_int_distribution<int> coord(-30, 30);
    for (int trial = 0; trial < 6; ++trial) {
        std::vector<VoxelCoord> a;
        std::vector<VoxelCoord> b;
        const int na = 1 + static_cast<int>(rng() % 500);
        const int nb = 1 + static_cast<int>(rng() % 500);
        for (int n = 0; n < na; ++n) a.push_back({coord(rng), coord(rng), coord(rng) / 4});
        for (int n = 0; n < nb; ++n) b.push_back({coord(rng), coord(rng), coord(rng) / 4});
        const auto ga = grid_of(a);
        const auto gb = grid_of(b);
        EXPECT_NEAR(voxel_chamfer(ga, gb), checks::brute_force_chamfer(ga, gb), 1e-9);
    }
}

TEST(Chamfer, EmptyGridThrows) {
    EXPECT_THROW(voxel_chamfer(grid_of({}), grid_of({{0, 0, 0}})), std::invalid_argument);
    EXPECT_THROW(voxel_chamfer(grid_of({{0, 0, 0}}, 0.1), grid_of({{0, 0, 0}}, 0.2)), std::invalid_argument);
}

TEST(Diffusion, VTargetEndpoints) {
    DiffusionSignal sig{{1.0, -2.0, 3.5}, {0.25, 0.5, -1.0}, 1.0, 0};
    EXPECT_EQ(v_target(sig), sig.eps);
    sig.alpha_bar = 0.0;
    const auto v = v_target(sig);
    for (std::size_t i = 0; i < v.size(); ++i) {
        EXPECT_EQ(v[i], -sig.x[i]);
    }
}

TEST(Diffusion, NormIsPreservedForOrthogonalSignals) {
    std::mt19937_64 rng(69);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> x(8);
        std::vector<double> e(8);
        for (int i = 0; i < 4; ++i) {
            x[i] = checks::uniform(rng, -2, 2);
            e[i + 4] = checks::uniform(rng, -2, 2);
        }
        const DiffusionSignal sig{x, e, checks::uniform(rng, 0, 1), trial};
        const auto v = v_target(sig);
        const auto xt = noised(sig);
        double lhs = 0.0;
        double rhs = 0.0;
        for (int i = 0; i < 8; ++i) {
            lhs += xt[i] * xt[i] + v[i] * v[i];
            rhs += x[i] * x[i] + e[i] * e[i];
        }
        EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, rhs));
    }
}

TEST(Diffusion, RejectsInvalidSignals) {
    EXPECT_THROW(v_target(DiffusionSignal{{1.0}, {1.0, 2.0}, 0.5, 0}), std::invalid_argument);
    EXPECT_THROW(v_target(DiffusionSignal{{1.0}, {1.0}, 1.5, 0}), std::invalid_argument);
}

}  // namespace
}  // namespace voxsplat
