// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <voxsplat/image.hpp>
#include <voxsplat/renderer.hpp>
#include <voxsplat/sparse_grid.hpp>

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace voxsplat {

struct LossWeights {
    double depth = 1.0;
    double l1 = 0.9;
    double alpha = 1.0;
    double ssim = 0.1;
    double lpips = 0.6;
    double focal_gamma = 2.0;

    /// Throws std::invalid_argument on negative or non-finite weights.
    void validate() const;
};

inline constexpr double kFocalClamp = 1e-12;

/// Mean of -(1 - p_t)^gamma log(p_t) over supervised rows. `probs` holds one
/// length-D distribution per row; `targets` holds a bin index per row or a
/// negative value to skip it. Optional `class_weights` scale each row by the
/// weight of its target. p_t is clamped to 1e-12 before the log. Returns 0
/// when no row is supervised.
double focal_loss(std::span<const double> probs, std::span<const int> targets, int classes, double gamma,
                  std::span<const double> class_weights = {});

/// Perceptual distance supplied by the caller (pred, gt) -> scalar.
using LpipsHook = std::function<double(const Image&, const Image&)>;

struct AppearanceLoss {
    double total = 0.0;
    double l1 = 0.0;      // mean |color - gt|
    double alpha = 0.0;   // mean |alpha - mask|
    double ssim = 0.0;    // SSIM(color, gt)
    double lpips = 0.0;   // hook value, 0 without a hook
};

/// l1 * L1(color, gt) + alpha * L1(accumulated opacity, mask)
/// + ssim * (1 - SSIM) + lpips * hook. `mask` is 1 on non-sky pixels.
AppearanceLoss appearance_loss(const RenderTarget& pred, const Image& gt, const Image& mask,
                               const LossWeights& weights = {}, const LpipsHook& lpips = nullptr);

/// -10 log10(MSE) over all samples; +infinity when the images are identical.
double psnr(const Image& a, const Image& b);

struct SsimOptions {
    int window = 11;
    double sigma = 1.5;
    double c1 = 0.01 * 0.01;
    double c2 = 0.03 * 0.03;
};

/// Gaussian-windowed SSIM averaged over every full window position and channel.
/// Throws std::invalid_argument when shapes differ or the image is smaller
/// than the window.
double ssim(const Image& a, const Image& b, const SsimOptions& options = {});

/// Symmetric mean nearest-neighbour distance between occupied voxel centres,
/// in voxel units: (mean_a min_b |a - b| + mean_b min_a |a - b|) / 2.
/// Throws std::invalid_argument for an empty grid or different voxel sizes.
double voxel_chamfer(const SparseVoxelGrid& pred, const SparseVoxelGrid& gt);

struct DiffusionSignal {
    std::vector<double> x;
    std::vector<double> eps;
    double alpha_bar = 1.0;
    int t = 0;

    void validate() const;
};

/// sqrt(alpha_bar) eps - sqrt(1 - alpha_bar) x
std::vector<double> v_target(const DiffusionSignal& sig);
/// sqrt(alpha_bar) x + sqrt(1 - alpha_bar) eps
std::vector<double> noised(const DiffusionSignal& sig);

}  // namespace voxsplat
