// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <voxsplat/camera.hpp>
#include <voxsplat/gaussian.hpp>
#include <voxsplat/image.hpp>

#include <optional>
#include <span>
#include <vector>

namespace voxsplat {

struct RenderOptions {
    int tile_size = 16;
    /// Added to the diagonal of every projected covariance, px^2.
    double cov2d_blur = 0.3;
    /// Gaussians whose camera depth is <= near_clip are not drawn, meters.
    double near_clip = 0.01;
    /// Upper clamp on a single compositing weight. 1 disables the clamp.
    double max_weight = 1.0;
    /// Footprint support: a Gaussian is evaluated only where its weight is at
    /// least this value, which also bounds the tile-culling radius.
    double min_weight = 1e-14;
};

struct ProjectedGaussian {
    Vec2 mean;   // pixels
    Mat2 cov;    // px^2, regularized
    double depth = 0.0;  // camera z, meters
};

/// Perspective projection with the local affine (Jacobian) approximation:
/// cov2d = J W Sigma W^T J^T + blur * I. Empty when depth <= near_clip.
std::optional<ProjectedGaussian> project_gaussian(const Gaussian& g, const Camera& cam,
                                                  const RenderOptions& options = {});

/// Output of the forward pass. `alpha` is the accumulated opacity
/// 1 - prod(1 - w_n), and color = foreground + (1 - alpha) * background.
struct RenderTarget {
    Image color;       // W x H x 3
    Image alpha;       // W x H x 1
    Image foreground;  // W x H x 3, Gaussians only
};

/// Depth-sorted (ties by index) front-to-back compositing over screen tiles.
/// `background` must be W x H x 3.
RenderTarget rasterize(std::span<const Gaussian> gaussians, const Camera& cam, const Image& background,
                       const RenderOptions& options = {});
RenderTarget rasterize(const VoxSplatScene& scene, const Camera& cam, const Image& background,
                       const RenderOptions& options = {});

/// Partials of a scalar loss with respect to one decoded Gaussian. `rotation`
/// is taken with respect to the stored unit quaternion, projected onto the
/// tangent space of the normalization.
struct GaussianGradient {
    Vec3 mean = Vec3::Zero();
    double opacity = 0.0;
    Vec3 scale = Vec3::Zero();
    Vec4 rotation = Vec4::Zero();
    Vec3 color = Vec3::Zero();
    Mat3 covariance = Mat3::Zero();
};

struct RenderGradients {
    std::vector<GaussianGradient> decoded;
    /// Partials with respect to the raw 14-vectors; filled only by the scene
    /// overload.
    std::vector<RawGaussian> raw;
};

/// Backward pass of `rasterize`. `loss_grad` holds dL/dcolor (W x H x 3);
/// `alpha_grad`, when given, holds dL/dalpha (W x H x 1).
RenderGradients rasterize_backward(std::span<const Gaussian> gaussians, const Camera& cam, const Image& background,
                                   const Image& loss_grad, const Image* alpha_grad = nullptr,
                                   const RenderOptions& options = {});
RenderGradients rasterize_backward(const VoxSplatScene& scene, const Camera& cam, const Image& background,
                                   const Image& loss_grad, const Image* alpha_grad = nullptr,
                                   const RenderOptions& options = {});

/// Chain rule through the decoding activations for one record.
RawGaussian backprop_activation(std::span<const double> raw, double radius, const GaussianGradient& grad);

struct DepthImage {
    Image depth;  // W x H x 1, NaN where invalid
    std::vector<bool> valid;
    static constexpr double kMinAlpha = 1e-3;
};

/// Opacity-weighted expected camera depth sum(w T z) / sum(w T); pixels with
/// accumulated opacity below 1e-3 are invalid.
DepthImage render_depth(std::span<const Gaussian> gaussians, const Camera& cam, const RenderOptions& options = {});

}  // namespace voxsplat
