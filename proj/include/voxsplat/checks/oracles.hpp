// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Slow reference implementations used to cross-check the production code.
// Each one is written from the defining formula and shares no code paths
// with the module it checks beyond the data types.

#include <voxsplat/camera.hpp>
#include <voxsplat/gaussian.hpp>
#include <voxsplat/image.hpp>
#include <voxsplat/point_cloud.hpp>
#include <voxsplat/renderer.hpp>
#include <voxsplat/sparse_grid.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace voxsplat::checks {

/// Per-pixel loop over every Gaussian: project, sort by depth then index,
/// composite front to back, add the transmitted background.
RenderTarget brute_force_render(std::span<const Gaussian> gaussians, const Camera& cam, const Image& background,
                                const RenderOptions& options = {});

/// Central differences with one Richardson step (h and h/2) of a scalar
/// function of one coordinate.
double richardson_derivative(const std::function<double(double)>& f, double x, double h);

/// L = sum(loss_grad * color) + sum(alpha_grad * alpha) evaluated with the
/// reference renderer.
double linear_loss(std::span<const Gaussian> gaussians, const Camera& cam, const Image& background,
                   const Image& loss_grad, const Image& alpha_grad, const RenderOptions& options = {});

/// Finite-difference gradient of `linear_loss` with respect to every raw
/// parameter of every record of `scene`.
std::vector<RawGaussian> finite_difference_raw(const VoxSplatScene& scene, const Camera& cam,
                                               const Image& background, const Image& loss_grad,
                                               const Image& alpha_grad, double h = 1e-4,
                                               const RenderOptions& options = {});

/// Relative-or-absolute agreement: |a - b| <= rel * max(|a|, |b|), or both
/// magnitudes under `abs_floor` and |a - b| <= abs_floor.
bool gradients_agree(double analytic, double numeric, double rel = 1e-3, double abs_floor = 1e-6);

/// Voxel index per point via floor((p - origin) / size) and majority labels by
/// explicit counting (smallest id wins ties). Keys are sorted coordinates.
std::map<VoxelCoord, int> brute_force_voxelize(const LabeledPointCloud& cloud, const GridMeta& meta);

/// Slab test against every occupied voxel; smallest entry distance wins,
/// lexicographically smallest coordinate on ties.
std::optional<RayHit> brute_force_first_hit(const SparseVoxelGrid& grid, const Vec3& origin, const Vec3& dir,
                                            double t_max = std::numeric_limits<double>::infinity());

/// O(n^2) nearest labeled neighbour, smallest index on ties.
std::vector<std::int32_t> brute_force_propagate(const LabeledPointCloud& cloud);

/// O(n m) symmetric Chamfer in voxel units.
double brute_force_chamfer(const SparseVoxelGrid& a, const SparseVoxelGrid& b);

/// Direct per-window SSIM with a 2D Gaussian window.
double reference_ssim(const Image& a, const Image& b, int window = 11, double sigma = 1.5,
                      double c1 = 1e-4, double c2 = 9e-4);

/// Nearest ray entry into any lambda-ellipsoid, solved in each Gaussian's
/// whitened frame. Gaussians containing the origin are skipped.
struct LidarHit {
    double range = 0.0;
    std::int64_t gaussian = -1;
};
std::optional<LidarHit> brute_force_lidar(std::span<const Gaussian> gaussians, const Vec3& origin,
                                          const Vec3& dir, double max_range, double lambda = 2.0);

/// Exhaustive fine-to-coarse parent check.
bool containment_holds(const SparseVoxelGrid& fine, const SparseVoxelGrid& coarse, int factor);

/// Point-in-oriented-box filter evaluated in the box frame.
bool point_in_box(const Vec3& p, const Vec3& center, const Vec3& half_extent, double yaw);

/// Cross-entropy -log(p_target) averaged over supervised rows.
double cross_entropy(std::span<const double> probs, std::span<const int> targets, int classes);

// Shared random scene builders. Every value comes from `rng` so runs are
// reproducible for a given seed.
Camera random_camera(std::mt19937_64& rng, int width, int height);
std::vector<Gaussian> random_gaussians_in_view(std::mt19937_64& rng, const Camera& cam, int count);
Image random_image(std::mt19937_64& rng, int width, int height, int channels, double lo = 0.0, double hi = 1.0);
double uniform(std::mt19937_64& rng, double lo, double hi);

}  // namespace voxsplat::checks
