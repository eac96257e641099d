// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#include <voxsplat/checks/oracles.hpp>
#include <voxsplat/checks/suite.hpp>
#include <voxsplat/conditioning.hpp>
#include <voxsplat/lidar.hpp>
#include <voxsplat/metrics.hpp>
#include <voxsplat/pipeline.hpp>
#include <voxsplat/renderer.hpp>
#include <voxsplat/sky.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

namespace voxsplat::checks {
namespace {

// Pinned tolerances and budgets.
constexpr double kRenderTol = 1e-6;
constexpr double kRenderBudget = 10.0;
constexpr double kGradRel = 1e-3;
constexpr double kGradAbs = 1e-6;
constexpr double kGradBudget = 60.0;
constexpr double kConservationRel = 1e-5;
constexpr double kOpaqueTol = 1e-6;
constexpr double kRoundTripTol = 1e-6;
constexpr double kLidarAnalyticTol = 1e-3;
constexpr double kLidarMatchTol = 1e-9;
constexpr double kPsnrTol = 1e-9;
constexpr double kFocalTol = 1e-9;

std::string fmt(double v) {
    std::ostringstream s;
    s << std::setprecision(3) << v;
    return s.str();
}

std::mt19937_64 stream(std::uint64_t seed, int criterion) {
    return std::mt19937_64(seed * 1000003ULL + static_cast<std::uint64_t>(criterion));
}

Vec4 random_quaternion(std::mt19937_64& rng) {
    Vec4 q;
    do {
        q = Vec4(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
    } while (q.norm() < 0.3);
    return q;
}

struct Check {
    bool pass = true;
    std::vector<std::string> notes;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            notes.push_back(what);
        }
    }
};

CriterionResult finish(int id, const char* name, const Check& check, std::string detail) {
    for (const auto& note : check.notes) {
        detail += "; " + note;
    }
    return {id, name, check.pass, std::move(detail), 0.0};
}

CriterionResult rasterizer_equivalence(std::uint64_t seed) {
    auto rng = stream(seed, 1);
    Check check;
    double worst = 0.0;
    const auto start = std::chrono::steady_clock::now();
    for (int scene = 0; scene < 200; ++scene) {
        const int w = 1 + static_cast<int>(rng() % 16);
        const int h = 1 + static_cast<int>(rng() % 16);
        const Camera cam = random_camera(rng, w, h);
        const auto gaussians = random_gaussians_in_view(rng, cam, static_cast<int>(rng() % 9));
        const Image bg = random_image(rng, w, h, 3);
        RenderOptions opt;
        opt.tile_size = 1 << (rng() % 5);
        const RenderTarget fast = rasterize(gaussians, cam, bg, opt);
        const RenderTarget ref = brute_force_render(gaussians, cam, bg, opt);
        for (std::size_t i = 0; i < fast.color.data().size(); ++i) {
            worst = std::max(worst, std::abs(fast.color.data()[i] - ref.color.data()[i]));
        }
        for (std::size_t i = 0; i < fast.alpha.data().size(); ++i) {
            worst = std::max(worst, std::abs(fast.alpha.data()[i] - ref.alpha.data()[i]));
        }
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    check.require(worst <= kRenderTol, "max deviation " + fmt(worst));
    check.require(seconds < kRenderBudget, "runtime " + fmt(seconds) + " s");
    return finish(1, "rasterizer oracle equivalence", check, "200 scenes, max |diff| " + fmt(worst));
}

VoxSplatScene random_gradient_scene(std::mt19937_64& rng, int voxels) {
    GridMeta meta;
    meta.voxel_size = 0.5;
    SparseVoxelGrid grid(meta);
    while (static_cast<int>(grid.size()) < voxels) {
        grid.insert({static_cast<std::int32_t>(rng() % 7) - 3, static_cast<std::int32_t>(rng() % 7) - 3,
                     static_cast<std::int32_t>(rng() % 6) + 6});
    }
    grid.canonicalize();
    RawGaussianParams raw = RawGaussianParams::zeros(grid.size(), 1);
    for (std::size_t v = 0; v < grid.size(); ++v) {
        auto r = raw.record(v, 0);
        for (int a = 0; a < 3; ++a) {
            r[raw_layout::kMean + a] = uniform(rng, -1.0, 1.0);
            r[raw_layout::kScale + a] = std::log(uniform(rng, 0.15, 0.6));
            r[raw_layout::kColor + a] = uniform(rng, 0.0, 1.0);
        }
        r[raw_layout::kOpacity] = uniform(rng, -2.0, 2.0);
        const Vec4 q = random_quaternion(rng);
        for (int a = 0; a < 4; ++a) {
            r[raw_layout::kRotation + a] = q[a];
        }
    }
    return decode_scene(std::move(raw), std::move(grid), default_radius(meta));
}

CriterionResult gradient_correctness(std::uint64_t seed) {
    auto rng = stream(seed, 2);
    Check check;
    std::size_t compared = 0;
    std::size_t failures = 0;
    const auto start = std::chrono::steady_clock::now();
    for (int n = 0; n < 50; ++n) {
        const VoxSplatScene scene = random_gradient_scene(rng, n < 25 ? 1 : 2 + static_cast<int>(rng() % 3));
        Camera cam;
        cam.width = 16;
        cam.height = 16;
        cam.fx = uniform(rng, 14.0, 20.0);
        cam.fy = cam.fx;
        cam.cx = uniform(rng, 7.0, 9.0);
        cam.cy = uniform(rng, 7.0, 9.0);
        cam.world_from_camera.translation = Vec3(uniform(rng, -0.3, 0.3), uniform(rng, -0.3, 0.3), 0.0);
        const Image bg = random_image(rng, 16, 16, 3);
        const Image dl = random_image(rng, 16, 16, 3, -1.0, 1.0);
        const Image da = random_image(rng, 16, 16, 1, -1.0, 1.0);

        const RenderGradients analytic = rasterize_backward(scene, cam, bg, dl, &da);
        const auto numeric = finite_difference_raw(scene, cam, bg, dl, da);
        for (std::size_t g = 0; g < scene.size(); ++g) {
            for (int k = 0; k < raw_layout::kWidth; ++k) {
                ++compared;
                if (!gradients_agree(analytic.raw[g][k], numeric[g][k], kGradRel, kGradAbs)) {
                    ++failures;
                }
            }
        }

        // Decoded-space partials of mean, opacity, scale and color.
        std::vector<Gaussian> work = scene.gaussians;
        for (std::size_t g = 0; g < scene.size(); ++g) {
            const GaussianGradient& a = analytic.decoded[g];
            auto probe = [&](auto&& set, double x0, double expected) {
                auto f = [&](double x) {
                    Gaussian copy = scene.gaussians[g];
                    set(copy, x);
                    copy.update_covariance();
                    work[g] = copy;
                    return linear_loss(work, cam, bg, dl, da);
                };
                const double fd = richardson_derivative(f, x0, 1e-4);
                work[g] = scene.gaussians[g];
                ++compared;
                if (!gradients_agree(expected, fd, kGradRel, kGradAbs)) {
                    ++failures;
                }
            };
            const Gaussian& base = scene.gaussians[g];
            for (int axis = 0; axis < 3; ++axis) {
                probe([axis](Gaussian& c, double x) { c.mean[axis] = x; }, base.mean[axis], a.mean[axis]);
                probe([axis](Gaussian& c, double x) { c.scale[axis] = x; }, base.scale[axis], a.scale[axis]);
                probe([axis](Gaussian& c, double x) { c.color[axis] = x; }, base.color[axis], a.color[axis]);
            }
            probe([](Gaussian& c, double x) { c.opacity = x; }, base.opacity, a.opacity);
        }
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    check.require(failures == 0, std::to_string(failures) + " mismatches");
    check.require(seconds < kGradBudget, "runtime " + fmt(seconds) + " s");
    return finish(2, "gradient correctness", check, std::to_string(compared) + " partials, " + std::to_string(failures) + " outside tolerance");
}

CriterionResult decoding(std::uint64_t seed) {
    auto rng = stream(seed, 3);
    Check check;
    const Vec3 center(1.25, -3.5, 0.75);
    const RawGaussian zeros{};
    const Gaussian g = decode_gaussian(zeros, center, 0.3);
    check.require(g.mean == center, "zeros do not decode to the centroid");
    check.require(g.opacity == 0.5, "zeros do not decode to opacity 0.5");
    check.require(g.scale == Vec3::Ones(), "zeros do not decode to unit scale");
    check.require(g.rotation == Vec4(1, 0, 0, 0) && quat2rot(g.rotation) == Mat3::Identity(),
                  "zeros do not decode to the identity rotation");

    GridMeta meta;
    meta.voxel_size = 0.1;
    const double r = default_radius(meta);
    std::size_t violations = 0;
    for (int n = 0; n < 100000; ++n) {
        RawGaussian raw{};
        for (double& v : raw) {
            v = uniform(rng, -10.0, 10.0);
        }
        raw[raw_layout::kRotation] = 1.0;
        const Vec3 c(uniform(rng, -50, 50), uniform(rng, -50, 50), uniform(rng, -5, 5));
        const Gaussian d = decode_gaussian(raw, c, r);
        if (!((d.mean - c).cwiseAbs().maxCoeff() < r)) {
            ++violations;
        }
    }
    check.require(violations == 0, std::to_string(violations) + " confinement violations");
    return finish(3, "decoding fixed point and center confinement", check, "1e5 raws, " + std::to_string(violations) + " violations");
}

CriterionResult conservation(std::uint64_t seed) {
    auto rng = stream(seed, 4);
    Check check;
    double worst = 0.0;
    std::size_t dropped = 0;
    for (int n = 0; n < 100; ++n) {
        GridMeta meta;
        meta.voxel_size = uniform(rng, 0.2, 0.5);
        meta.origin = Vec3(-10.0, -10.0, -10.0) - Vec3::Constant(uniform(rng, 0.0, 1.0));
        const auto side = static_cast<std::int32_t>(std::ceil(22.0 / meta.voxel_size));
        meta.extent = VoxelBounds{{0, 0, 0}, {side, side, side}};
        const int views = 1 + static_cast<int>(rng() % 2);
        const int depth_bins = 2 + static_cast<int>(rng() % 8);
        const DepthBins bins = lid_bin_edges(uniform(rng, 0.1, 1.0), uniform(rng, 3.0, 8.0), depth_bins);
        std::vector<PixelFeatureMap> maps;
        std::vector<Camera> cams;
        std::vector<double> expected(3, 0.0);
        for (int v = 0; v < views; ++v) {
            Camera cam = random_camera(rng, 4 + static_cast<int>(rng() % 5), 4 + static_cast<int>(rng() % 5));
            cam.world_from_camera.translation = Vec3(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
            PixelFeatureMap map(cam.width, cam.height, 3, depth_bins);
            for (double& f : map.features) {
                f = uniform(rng, -1.0, 1.0);
            }
            for (int y = 0; y < cam.height; ++y) {
                for (int x = 0; x < cam.width; ++x) {
                    auto p = map.depth(x, y);
                    double total = 0.0;
                    for (double& v2 : p) {
                        v2 = std::exp(uniform(rng, -2.0, 2.0));
                        total += v2;
                    }
                    for (double& v2 : p) {
                        v2 /= total;
                    }
                    const auto f = map.feature(x, y);
                    for (int c = 0; c < 3; ++c) {
                        expected[c] += f[c];
                    }
                }
            }
            maps.push_back(std::move(map));
            cams.push_back(cam);
        }
        const ConditionGrid cond = unproject_features(maps, cams, bins, meta);
        dropped += cond.dropped_samples;
        std::vector<double> total(3, 0.0);
        const auto ch = *cond.grid.channel_index(kFeatureChannel);
        for (std::size_t v = 0; v < cond.grid.size(); ++v) {
            const auto f = cond.grid.attributes(v, ch);
            for (int c = 0; c < 3; ++c) {
                total[c] += f[c];
            }
        }
        for (int c = 0; c < 3; ++c) {
            const double scale = std::max(1.0, std::abs(expected[c]));
            worst = std::max(worst, std::abs(total[c] - expected[c]) / scale);
        }
    }
    check.require(dropped == 0, "samples left the grid");
    check.require(worst <= kConservationRel, "relative error " + fmt(worst));

    const DepthBins bins = lid_bin_edges(0.1, 90.0, 64);
    check.require(bins.count() == 64 && bins.edges.front() == 0.1 && bins.edges.back() == 90.0,
                  "bin endpoints");
    for (int d = 1; d < bins.count(); ++d) {
        check.require(bins.width(d) > bins.width(d - 1), "bin widths not strictly increasing at " + std::to_string(d));
    }
    return finish(4, "lift-splat conservation and depth bins", check, "100 cases, worst relative error " + fmt(worst));
}

CriterionResult compositing_endpoints(std::uint64_t seed) {
    auto rng = stream(seed, 5);
    Check check;
    Camera cam;
    cam.width = 16;
    cam.height = 16;
    cam.fx = cam.fy = 16.0;
    cam.cx = cam.cy = 7.5;
    const Image bg = random_image(rng, 16, 16, 3);
    const RenderTarget empty = rasterize(std::span<const Gaussian>{}, cam, bg);
    check.require(empty.color == bg, "empty scene differs from the background");
    check.require(std::all_of(empty.alpha.data().begin(), empty.alpha.data().end(), [](double a) { return a == 0.0; }),
                  "empty scene has non-zero opacity");

    Gaussian g;
    g.mean = Vec3(0.0, 0.0, 5.0);
    g.opacity = 1.0;
    g.scale = Vec3::Constant(0.2);
    g.color = Vec3(uniform(rng, 0, 1), uniform(rng, 0, 1), uniform(rng, 0, 1));
    g.update_covariance();
    const std::vector<Gaussian> one{g};
    const RenderTarget r = rasterize(one, cam, bg);
    double err = 0.0;
    for (int c = 0; c < 3; ++c) {
        err = std::max(err, std::abs(r.color.at(7, 7, c) - g.color[c]));
    }
    check.require(err <= kOpaqueTol, "opaque pixel error " + fmt(err));
    return finish(5, "compositing endpoints", check, "opaque pixel error " + fmt(err));
}

CriterionResult sky_invariance(std::uint64_t seed) {
    auto rng = stream(seed, 6);
    Check check;
    constexpr int kH = 32;
    constexpr int kW = 64;
    std::vector<Image> images;
    std::vector<Image> masks;
    std::vector<Camera> cams;
    for (int v = 0; v < 4; ++v) {
        Camera cam = random_camera(rng, 12, 10);
        images.push_back(random_image(rng, 12, 10, 3));
        Image mask(12, 10, 1);
        for (double& m : mask.data()) {
            m = (rng() % 4 == 0) ? 0.0 : 1.0;
        }
        masks.push_back(std::move(mask));
        cams.push_back(cam);
    }
    auto build = [&](const std::vector<Camera>& cs) {
        std::vector<SkyView> views;
        for (std::size_t v = 0; v < cs.size(); ++v) {
            views.push_back({&images[v], &masks[v], cs[v]});
        }
        return build_panorama(views, kH, kW);
    };
    const SkyPanorama base = build(cams);
    const Image base_bg = sample_background(base, cams[0]);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<Camera> moved = cams;
        for (auto& c : moved) {
            c.world_from_camera.translation = Vec3(uniform(rng, -1e3, 1e3), uniform(rng, -1e3, 1e3), uniform(rng, -1e3, 1e3));
        }
        const SkyPanorama p = build(moved);
        check.require(p.data == base.data && p.covered == base.covered, "panorama changed under translation");
        check.require(sample_background(p, moved[0]) == base_bg, "background changed under translation");
    }
    double worst = 0.0;
    for (int n = 0; n < 1000; ++n) {
        Vec3 d;
        do {
            d = Vec3(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
        } while (d.norm() < 0.1 || d.norm() > 1.0);
        d.normalize();
        worst = std::max(worst, (pixel_to_dir(dir_to_pixel(d, 2048, 1024), 2048, 1024) - d).norm());
    }
    check.require(worst <= kRoundTripTol, "round trip error " + fmt(worst));
    return finish(6, "sky translation invariance and round trip", check, "round-trip error " + fmt(worst));
}

VoxSplatScene scene_from_centers(const GridMeta& meta, const std::vector<VoxelCoord>& coords, double sigma,
                                 std::mt19937_64* jitter) {
    SparseVoxelGrid grid(meta);
    for (const auto& c : coords) {
        grid.insert(c);
    }
    grid.canonicalize();
    RawGaussianParams raw = RawGaussianParams::zeros(grid.size(), 1);
    for (std::size_t v = 0; v < grid.size(); ++v) {
        auto r = raw.record(v, 0);
        r[raw_layout::kRotation] = 1.0;
        for (int a = 0; a < 3; ++a) {
            r[raw_layout::kScale + a] = std::log(sigma);
        }
        if (jitter) {
            for (int a = 0; a < 3; ++a) {
                r[raw_layout::kMean + a] = uniform(*jitter, -1.0, 1.0);
                r[raw_layout::kScale + a] = std::log(sigma * uniform(*jitter, 0.3, 3.0));
            }
            const Vec4 q = random_quaternion(*jitter);
            for (int a = 0; a < 4; ++a) {
                r[raw_layout::kRotation + a] = q[a];
            }
        }
    }
    return decode_scene(std::move(raw), std::move(grid), default_radius(meta));
}

CriterionResult lidar(std::uint64_t seed) {
    auto rng = stream(seed, 7);
    Check check;

    GridMeta single;
    single.voxel_size = 0.1;
    single.origin = Vec3(-0.05, -0.05, 4.95);
    const VoxSplatScene one = scene_from_centers(single, {{0, 0, 0}}, 0.05, nullptr);
    const LidarReturn hit = trace_ray(one, Vec3::Zero(), Vec3(0, 0, 1), 90.0);
    const double analytic_err = hit.hit ? std::abs(hit.range - 4.9) : std::numeric_limits<double>::infinity();
    check.require(analytic_err <= kLidarAnalyticTol, "analytic range error " + fmt(analytic_err));

    GridMeta meta;
    meta.voxel_size = 0.5;
    std::vector<VoxelCoord> coords;
    for (int n = 0; n < 300; ++n) {
        coords.push_back({static_cast<std::int32_t>(rng() % 20) - 10, static_cast<std::int32_t>(rng() % 20) - 10,
                          static_cast<std::int32_t>(rng() % 8) - 4});
    }
    const VoxSplatScene cloud = scene_from_centers(meta, coords, 0.4, &rng);
    const LidarTracer tracer(cloud);
    int mismatches = 0;
    int hits = 0;
    for (int n = 0; n < 100; ++n) {
        const Vec3 origin(uniform(rng, -8, 8), uniform(rng, -8, 8), uniform(rng, -3, 3));
        Vec3 dir(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -0.5, 0.5));
        dir.normalize();
        const LidarReturn fast = tracer.trace(origin, dir, 30.0);
        const auto ref = brute_force_lidar(cloud.gaussians, origin, dir, 30.0);
        if (fast.hit != ref.has_value()) {
            ++mismatches;
            continue;
        }
        if (ref) {
            ++hits;
            if (fast.gaussian != ref->gaussian || std::abs(fast.range - ref->range) > kLidarMatchTol * ref->range) {
                ++mismatches;
            }
        }
    }
    check.require(mismatches == 0, std::to_string(mismatches) + " scaffold/brute-force mismatches");

    GridMeta wall_meta;
    wall_meta.voxel_size = 0.1;
    std::vector<VoxelCoord> wall;
    for (int j = -30; j < 30; ++j) {
        for (int k = 0; k < 20; ++k) {
            wall.push_back({100, j, k});
        }
    }
    const VoxSplatScene wall_scene = scene_from_centers(wall_meta, wall, 0.05, nullptr);
    const LidarTracer wall_tracer(wall_scene);
    ScanPattern pattern = ScanPattern::spinning(-5.0, 5.0, 8, 360, 40.0);
    RigidTransform a;
    a.translation = Vec3(0.0, 0.0, 1.0);
    RigidTransform b = a;
    b.translation.x() += 1.0;
    const LidarScan sa = simulate_scan(wall_tracer, wall_scene, a, pattern);
    const LidarScan sb = simulate_scan(wall_tracer, wall_scene, b, pattern);
    double worst = 0.0;
    if (sa.points.empty() || sb.points.empty()) {
        check.require(false, "wall not observed");
    } else {
        std::vector<double> xs;
        for (const auto& p : sa.points.positions) {
            xs.push_back(p.x());
        }
        std::nth_element(xs.begin(), xs.begin() + xs.size() / 2, xs.end());
        const double surface = xs[xs.size() / 2];
        for (const auto* scan : {&sa, &sb}) {
            for (const auto& p : scan->points.positions) {
                worst = std::max(worst, std::abs(p.x() - surface));
            }
        }
        check.require(worst <= 2.0 * wall_meta.voxel_size, "two-pose spread " + fmt(worst) + " m");
    }
    return finish(7, "lidar analytic, scaffold and two-pose checks", check, "range error " + fmt(analytic_err) + ", " + std::to_string(hits) + " matched hits, spread " + fmt(worst) + " m");
}

CriterionResult pipeline(std::uint64_t seed) {
    auto rng = stream(seed, 8);
    Check check;

    LabeledPointCloud cloud;
    cloud.num_classes = 5;
    for (int n = 0; n < 10000; ++n) {
        cloud.positions.emplace_back(uniform(rng, -3, 3), uniform(rng, -3, 3), uniform(rng, -1, 1));
        cloud.labels.push_back(rng() % 6 == 0 ? kUnlabeled : static_cast<std::int32_t>(rng() % 5));
    }
    GridMeta meta;
    meta.voxel_size = 0.25;
    meta.origin = Vec3(0.013, -0.021, 0.007);
    const SparseVoxelGrid grid = voxelize(cloud, meta);
    const auto ref = brute_force_voxelize(cloud, meta);
    bool same = grid.size() == ref.size();
    for (std::size_t v = 0; same && v < grid.size(); ++v) {
        const auto it = ref.find(grid.coords()[v]);
        const auto label = semantic_label(grid, v);
        same = it != ref.end() && it->second == (label ? *label : -1);
    }
    check.require(same, "voxelization differs from bucketing");

    ChunkSpec spec;
    const GridMeta fine = spec.fine_meta();
    const auto& e = *fine.extent;
    check.require(e.min == VoxelCoord{0, 0, 0} && e.max == VoxelCoord{1024, 1024, 1024}, "chunk extent is not 1024^3");
    check.require(std::abs(spec.forward_bound() - 76.8) < 1e-9 && std::abs(spec.rear_bound() + 25.6) < 1e-9,
                  "forward split");
    LabeledPointCloud world;
    for (int n = 0; n < 10000; ++n) {
        world.positions.emplace_back(uniform(rng, -60, 110), uniform(rng, -70, 70), uniform(rng, -20, 100));
    }
    const LabeledPointCloud chunk = crop_chunk(world, spec);
    bool inside = true;
    for (const auto& p : chunk.positions) {
        inside = inside && e.contains(fine.voxel_of(p));
    }
    check.require(inside && !chunk.empty(), "cropped points leave the 1024^3 grid");

    GridMeta coarse = fine;
    coarse.voxel_size = 0.4;
    coarse.extent = VoxelBounds{{0, 0, 0}, {256, 256, 256}};
    const GridHierarchy pair = make_training_pair(chunk, fine, coarse);
    check.require(containment_holds(pair.fine, pair.coarse, pair.factor) &&
                      !find_containment_violation(pair.fine, pair.coarse, pair.factor),
                  "hierarchy containment violated");

    LabeledPointCloud sparse;
    sparse.num_classes = 8;
    for (int n = 0; n < 1000; ++n) {
        sparse.positions.emplace_back(uniform(rng, -20, 20), uniform(rng, -20, 20), uniform(rng, -2, 2));
        sparse.labels.push_back(rng() % 10 == 0 ? static_cast<std::int32_t>(rng() % 8) : kUnlabeled);
    }
    check.require(propagate_semantics(sparse).labels == brute_force_propagate(sparse),
                  "semantic propagation differs from exhaustive search");
    return finish(8, "pipeline voxelization, containment, crop, propagation", check, std::to_string(grid.size()) + " voxels, " + std::to_string(chunk.size()) + " chunk points");
}

CriterionResult metrics(std::uint64_t seed) {
    auto rng = stream(seed, 9);
    Check check;
    GridMeta meta;
    SparseVoxelGrid a(meta);
    SparseVoxelGrid b(meta);
    a.insert({0, 0, 0});
    b.insert({3, 4, 0});
    const double chamfer = voxel_chamfer(a, b);
    check.require(chamfer == 5.0, "chamfer " + fmt(chamfer));

    double focal_err = 0.0;
    for (int n = 0; n < 200; ++n) {
        const int classes = 2 + static_cast<int>(rng() % 8);
        const int rows = 1 + static_cast<int>(rng() % 16);
        std::vector<double> probs(static_cast<std::size_t>(classes) * rows);
        std::vector<int> targets(rows);
        for (int r = 0; r < rows; ++r) {
            double total = 0.0;
            for (int c = 0; c < classes; ++c) {
                probs[r * classes + c] = std::exp(uniform(rng, -3, 3));
                total += probs[r * classes + c];
            }
            for (int c = 0; c < classes; ++c) {
                probs[r * classes + c] /= total;
            }
            targets[r] = rng() % 5 == 0 ? -1 : static_cast<int>(rng() % classes);
        }
        focal_err = std::max(focal_err, std::abs(focal_loss(probs, targets, classes, 0.0) -
                                                 cross_entropy(probs, targets, classes)));
    }
    check.require(focal_err <= kFocalTol, "focal vs cross-entropy " + fmt(focal_err));

    const Image zero(16, 16, 3, 0.0);
    const Image tenth(16, 16, 3, 0.1);
    const double p = psnr(zero, tenth);
    check.require(std::abs(p - 20.0) <= kPsnrTol, "psnr " + fmt(p));

    const Image img = random_image(rng, 24, 20, 3);
    const double s = ssim(img, img);
    check.require(s == 1.0, "ssim of identical images " + fmt(s));

    DiffusionSignal sig;
    for (int n = 0; n < 64; ++n) {
        sig.x.push_back(uniform(rng, -2, 2));
        sig.eps.push_back(uniform(rng, -2, 2));
    }
    sig.alpha_bar = 1.0;
    check.require(v_target(sig) == sig.eps, "v_target at alpha_bar 1");
    sig.alpha_bar = 0.0;
    std::vector<double> neg(sig.x.size());
    std::transform(sig.x.begin(), sig.x.end(), neg.begin(), [](double v) { return -v; });
    check.require(v_target(sig) == neg, "v_target at alpha_bar 0");
    return finish(9, "metrics analytic values", check, "chamfer " + fmt(chamfer) + ", psnr " + fmt(p) + ", focal err " + fmt(focal_err));
}

template <typename Fn>
CriterionResult timed(int id, const char* name, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
        r = fn();
    } catch (const std::exception& e) {
        r = {id, name, false, std::string("exception: ") + e.what(), 0.0};
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

}  // namespace

std::vector<CriterionResult> run_acceptance_suite(std::uint64_t seed) {
    std::vector<CriterionResult> out;
    out.push_back(timed(1, "rasterizer oracle equivalence", [&] { return rasterizer_equivalence(seed); }));
    out.push_back(timed(2, "gradient correctness", [&] { return gradient_correctness(seed); }));
    out.push_back(timed(3, "decoding fixed point and center confinement", [&] { return decoding(seed); }));
    out.push_back(timed(4, "lift-splat conservation and depth bins", [&] { return conservation(seed); }));
    out.push_back(timed(5, "compositing endpoints", [&] { return compositing_endpoints(seed); }));
    out.push_back(timed(6, "sky translation invariance and round trip", [&] { return sky_invariance(seed); }));
    out.push_back(timed(7, "lidar analytic, scaffold and two-pose checks", [&] { return lidar(seed); }));
    out.push_back(timed(8, "pipeline voxelization, containment, crop, propagation", [&] { return pipeline(seed); }));
    out.push_back(timed(9, "metrics analytic values", [&] { return metrics(seed); }));
    return out;
}

void print_results(std::ostream& out, const std::vector<CriterionResult>& results) {
    for (const auto& r : results) {
        out << (r.pass ? "PASS" : "FAIL") << " [" << r.id << "] " << r.name << " (" << r.detail << ", "
            << std::fixed << std::setprecision(2) << r.seconds << " s)" << std::defaultfloat << '\n';
    }
}

}  // namespace voxsplat::checks
