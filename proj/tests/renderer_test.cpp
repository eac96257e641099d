// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#include <voxsplat/checks/oracles.hpp>
#include <voxsplat/renderer.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace voxsplat {
namespace {

Camera axis_camera(int w, int h, double f, double cx, double cy) {
    Camera cam;
    cam.fx = cam.fy = f;
    cam.cx = cx;
    cam.cy = cy;
    cam.width = w;
    cam.height = h;
    return cam;
}

Gaussian isotropic(const Vec3& mean, double sigma, double opacity, const Vec3& color) {
    Gaussian g;
    g.mean = mean;
    g.scale = Vec3::Constant(sigma);
    g.opacity = opacity;
    g.color = color;
    g.update_covariance();
    return g;
}

TEST(Project, OnAxisMean) {
    const Camera cam = axis_camera(100, 100, 100.0, 50.0, 50.0);
    const auto p = project_gaussian(isotropic({0, 0, 10}, 0.1, 1.0, Vec3::Zero()), cam);
    ASSERT_TRUE(p.has_value());
    EXPECT_NEAR(p->mean.x(), 50.0, 1e-12);
    EXPECT_NEAR(p->mean.y(), 50.0, 1e-12);
    EXPECT_NEAR(p->depth, 10.0, 1e-12);
}

TEST(Project, IsotropicCovarianceOnAxis) {
    const Camera cam = axis_camera(100, 100, 100.0, 50.0, 50.0);
    for (const double z : {2.0, 10.0, 40.0}) {
        const double sigma = 0.5;
        const auto p = project_gaussian(isotropic({0, 0, z}, sigma, 1.0, Vec3::Zero()), cam);
        ASSERT_TRUE(p.has_value());
        const double expected = std::pow(100.0 * sigma / z, 2) + 0.3;
        EXPECT_NEAR(p->cov(0, 0), expected, 1e-9 * expected);
        EXPECT_NEAR(p->cov(1, 1), expected, 1e-9 * expected);
        EXPECT_NEAR(p->cov(0, 1), 0.0, 1e-12);
    }
}

TEST(Project, BehindCameraIsAbsent) {
    const Camera cam = axis_camera(100, 100, 100.0, 50.0, 50.0);
    EXPECT_FALSE(project_gaussian(isotropic({0, 0, -1}, 0.1, 1.0, Vec3::Zero()), cam).has_value());
    EXPECT_FALSE(project_gaussian(isotropic({0, 0, 0.005}, 0.1, 1.0, Vec3::Zero()), cam).has_value());
}

TEST(Project, UsesWorldToCameraTransform) {
    Camera cam = axis_camera(100, 100, 100.0, 50.0, 50.0);
    cam.world_from_camera.translation = Vec3(3, -2, 1);
    const auto p = project_gaussian(isotropic({3.5, -2, 11}, 0.1, 1.0, Vec3::Zero()), cam);
    ASSERT_TRUE(p.has_value());
    EXPECT_NEAR(p->mean.x(), 55.0, 1e-9);
    EXPECT_NEAR(p->mean.y(), 50.0, 1e-9);
    EXPECT_NEAR(p->depth, 10.0, 1e-12);
}

TEST(Rasterize, EmptySceneShowsBackground) {
    std::mt19937_64 rng(1);
    const Camera cam = axis_camera(12, 9, 10.0, 6.0, 4.5);
    const Image bg = checks::random_image(rng, 12, 9, 3);
    const auto out = rasterize(std::span<const Gaussian>(), cam, bg);
    EXPECT_EQ(out.color, bg);
    for (const double a : out.alpha.data()) {
        EXPECT_EQ(a, 0.0);
    }
}

TEST(Rasterize, OpaqueGaussianCenteredOnPixel) {
    const Camera cam = axis_camera(16, 16, 20.0, 7.5, 7.5);
    const Vec3 rgb(0.9, 0.2, 0.4);
    const std::vector<Gaussian> gs{isotropic({0, 0, 5}, 0.2, 1.0, rgb)};
    const auto out = rasterize(gs, cam, Image(16, 16, 3, 0.25));
    for (int c = 0; c < 3; ++c) {
        EXPECT_NEAR(out.color.at(7, 7, c), rgb[c], 1e-12);
    }
    EXPECT_NEAR(out.alpha.at(7, 7), 1.0, 1e-12);
    EXPECT_LT(out.alpha.at(0, 0), 1.0);
}

TEST(Rasterize, MatchesBruteForceOracle) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 40; ++trial) {
        const Camera cam = checks::random_camera(rng, 8, 8);
        const int count = 1 + static_cast<int>(rng() % 8);
        const auto gs = checks::random_gaussians_in_view(rng, cam, count);
        const Image bg = checks::random_image(rng, 8, 8, 3);
        RenderOptions opt;
        opt.tile_size = 1 + static_cast<int>(rng() % 8);
        const auto got = rasterize(gs, cam, bg, opt);
        const auto want = checks::brute_force_render(gs, cam, bg, opt);
        for (std::size_t n = 0; n < got.color.data().size(); ++n) {
            ASSERT_NEAR(got.color.data()[n], want.color.data()[n], 1e-6) << "trial " << trial;
        }
        for (std::size_t n = 0; n < got.alpha.data().size(); ++n) {
            ASSERT_NEAR(got.alpha.data()[n], want.alpha.data()[n], 1e-6) << "trial " << trial;
        }
    }
}

TEST(Rasterize, TileSizeDoesNotChangeOutput) {
    std::mt19937_64 rng(3);
    const Camera cam = checks::random_camera(rng, 33, 21);
    const auto gs = checks::random_gaussians_in_view(rng, cam, 60);
    const Image bg = checks::random_image(rng, 33, 21, 3);
    RenderOptions a;
    a.tile_size = 16;
    RenderOptions b;
    b.tile_size = 5;
    const auto x = rasterize(gs, cam, bg, a);
    const auto y = rasterize(gs, cam, bg, b);
    for (std::size_t n = 0; n < x.color.data().size(); ++n) {
        EXPECT_NEAR(x.color.data()[n], y.color.data()[n], 1e-12);
    }
}

TEST(Rasterize, CompositesBackgroundWithTransmittance) {
    std::mt19937_64 rng(4);
    const Camera cam = checks::random_camera(rng, 10, 10);
    const auto gs = checks::random_gaussians_in_view(rng, cam, 5);
    const Image bg = checks::random_image(rng, 10, 10, 3);
    const auto out = rasterize(gs, cam, bg);
    for (int y = 0; y < 10; ++y) {
        for (int x = 0; x < 10; ++x) {
            for (int c = 0; c < 3; ++c) {
                const double want = out.foreground.at(x, y, c) + (1.0 - out.alpha.at(x, y)) * bg.at(x, y, c);
                EXPECT_NEAR(out.color.at(x, y, c), want, 1e-12);
            }
        }
    }
}

TEST(Rasterize, RejectsMismatchedBackground) {
    const Camera cam = axis_camera(4, 4, 4.0, 2.0, 2.0);
    EXPECT_THROW(rasterize(std::span<const Gaussian>(), cam, Image(3, 4, 3)), std::invalid_argument);
}

VoxSplatScene one_voxel_scene(std::mt19937_64& rng) {
    GridMeta meta;
    meta.voxel_size = 0.5;
    SparseVoxelGrid grid(meta);
    grid.insert({0, 0, 16});
    RawGaussianParams raw = RawGaussianParams::zeros(1, 1);
    auto r = raw.record(0, 0);
    for (int a = 0; a < 3; ++a) {
        r[raw_layout::kMean + a] = checks::uniform(rng, -0.5, 0.5);
        r[raw_layout::kScale + a] = checks::uniform(rng, -1.2, -0.4);
        r[raw_layout::kColor + a] = checks::uniform(rng, 0.1, 0.9);
    }
    r[raw_layout::kOpacity] = checks::uniform(rng, -1, 1);
    for (int q = 0; q < 4; ++q) {
        r[raw_layout::kRotation + q] = checks::uniform(rng, -1, 1);
    }
    return decode_scene(raw, grid, default_radius(meta));
}

double mse(const VoxSplatScene& scene, const Camera& cam, const Image& bg, const Image& target) {
    const auto out = rasterize(scene, cam, bg);
    double sum = 0.0;
    for (std::size_t n = 0; n < target.data().size(); ++n) {
        const double d = out.color.data()[n] - target.data()[n];
        sum += d * d;
    }
    return sum / static_cast<double>(target.data().size());
}

TEST(Backward, MeanSquaredErrorMatchesCentralDifferences) {
    std::mt19937_64 rng(5);
    const Camera cam = axis_camera(16, 16, 40.0, 8.0, 8.0);
    int failures = 0;
    for (int trial = 0; trial < 5; ++trial) {
        const auto scene = one_voxel_scene(rng);
        const Image bg = checks::random_image(rng, 16, 16, 3);
        const Image target = checks::random_image(rng, 16, 16, 3);
        const auto out = rasterize(scene, cam, bg);
        Image grad(16, 16, 3);
        const double n = static_cast<double>(grad.data().size());
        for (std::size_t k = 0; k < grad.data().size(); ++k) {
            grad.data()[k] = 2.0 * (out.color.data()[k] - target.data()[k]) / n;
        }
        const auto analytic = rasterize_backward(scene, cam, bg, grad);
        ASSERT_EQ(analytic.raw.size(), 1u);
        for (int p = 0; p < raw_layout::kWidth; ++p) {
            const double h = 1e-4;
            VoxSplatScene plus = scene;
            VoxSplatScene minus = scene;
            plus.raw.values[p] += h;
            minus.raw.values[p] -= h;
            plus = decode_scene(plus.raw, plus.grid, plus.radius);
            minus = decode_scene(minus.raw, minus.grid, minus.radius);
            const double numeric = (mse(plus, cam, bg, target) - mse(minus, cam, bg, target)) / (2.0 * h);
            if (!checks::gradients_agree(analytic.raw[0][p], numeric, 1e-3, 1e-7)) {
                ++failures;
                ADD_FAILURE() << "trial " << trial << " param " << p << ": analytic " << analytic.raw[0][p]
                              << " numeric " << numeric;
            }
        }
    }
    EXPECT_EQ(failures, 0);
}

TEST(Backward, ZeroLossGradientGivesZero) {
    std::mt19937_64 rng(6);
    const auto scene = one_voxel_scene(rng);
    const Camera cam = axis_camera(16, 16, 40.0, 8.0, 8.0);
    const auto g = rasterize_backward(scene, cam, Image(16, 16, 3, 0.5), Image(16, 16, 3, 0.0));
    for (const auto& r : g.raw) {
        for (const double x : r) {
            EXPECT_EQ(x, 0.0);
        }
    }
}

TEST(Backward, OutsideFrustumGivesZero) {
    const Camera cam = axis_camera(16, 16, 40.0, 8.0, 8.0);
    const std::vector<Gaussian> gs{isotropic({0, 0, -5}, 0.3, 0.9, Vec3(1, 0, 0)),
                                   isotropic({100, 0, 5}, 0.3, 0.9, Vec3(0, 1, 0))};
    const auto g = rasterize_backward(gs, cam, Image(16, 16, 3, 0.5), Image(16, 16, 3, 1.0));
    ASSERT_EQ(g.decoded.size(), 2u);
    for (const auto& d : g.decoded) {
        EXPECT_EQ(d.mean, Vec3::Zero());
        EXPECT_EQ(d.opacity, 0.0);
        EXPECT_EQ(d.color, Vec3::Zero());
        EXPECT_EQ(d.covariance, Mat3::Zero());
    }
}

TEST(Backward, LinearLossMatchesRichardsonDerivative) {
    std::mt19937_64 rng(7);
    const Camera cam = checks::random_camera(rng, 10, 10);
    const auto gs = checks::random_gaussians_in_view(rng, cam, 4);
    const Image bg = checks::random_image(rng, 10, 10, 3);
    const Image lg = checks::random_image(rng, 10, 10, 3, -1, 1);
    const Image ag = checks::random_image(rng, 10, 10, 1, -1, 1);
    const auto analytic = rasterize_backward(gs, cam, bg, lg, &ag);
    for (std::size_t k = 0; k < gs.size(); ++k) {
        for (int c = 0; c < 3; ++c) {
            auto f = [&](double x) {
                auto copy = gs;
                copy[k].color[c] = x;
                return checks::linear_loss(copy, cam, bg, lg, ag);
            };
            const double numeric = checks::richardson_derivative(f, gs[k].color[c], 1e-3);
            EXPECT_TRUE(checks::gradients_agree(analytic.decoded[k].color[c], numeric))
                << analytic.decoded[k].color[c] << " vs " << numeric;
        }
        auto fo = [&](double x) {
            auto copy = gs;
            copy[k].opacity = x;
            return checks::linear_loss(copy, cam, bg, lg, ag);
        };
        const double numeric = checks::richardson_derivative(fo, gs[k].opacity, 1e-4);
        EXPECT_TRUE(checks::gradients_agree(analytic.decoded[k].opacity, numeric))
            << analytic.decoded[k].opacity << " vs " << numeric;
    }
}

TEST(Depth, OpaqueGaussianOnAxis) {
    const Camera cam = axis_camera(16, 16, 20.0, 7.5, 7.5);
    const std::vector<Gaussian> gs{isotropic({0, 0, 5}, 0.2, 1.0, Vec3::Ones())};
    const auto d = render_depth(gs, cam);
    ASSERT_TRUE(d.valid[7 * 16 + 7]);
    EXPECT_NEAR(d.depth.at(7, 7), 5.0, 1e-3);
}

TEST(Depth, EmptySceneAllInvalid) {
    const Camera cam = axis_camera(8, 8, 8.0, 4.0, 4.0);
    const auto d = render_depth(std::span<const Gaussian>(), cam);
    for (std::size_t p = 0; p < d.valid.size(); ++p) {
        EXPECT_FALSE(d.valid[p]);
        EXPECT_TRUE(std::isnan(d.depth.data()[p]));
    }
}

TEST(Depth, NearGaussianOccludes) {
    const Camera cam = axis_camera(16, 16, 20.0, 7.5, 7.5);
    const std::vector<Gaussian> gs{isotropic({0, 0, 10}, 0.5, 1.0, Vec3::Ones()),
                                   isotropic({0, 0, 5}, 0.25, 1.0, Vec3::Ones())};
    const auto d = render_depth(gs, cam);
    EXPECT_NEAR(d.depth.at(7, 7), 5.0, 1e-2);
}

}  // namespace
}  // namespace voxsplat
