// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#include <voxsplat/gaussian.hpp>
#include <voxsplat/parallel.hpp>

#include <cmath>
#include <stdexcept>
#include <string>

namespace voxsplat {

void Gaussian::update_covariance() {
    const Mat3 r = quat2rot(rotation);
    covariance = r * scale.array().square().matrix().asDiagonal() * r.transpose();
}

Mat3 quat2rot(const Vec4& q) {
    const double n = q.norm();
    if (!(n >= kMinQuaternionNorm)) {
        throw DegenerateQuaternion("quaternion norm below 1e-8");
    }
    const double w = q[0] / n;
    const double x = q[1] / n;
    const double y = q[2] / n;
    const double z = q[3] / n;
    Mat3 r;
    r << 1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y),
        2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x),
        2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y);
    return r;
}

Gaussian decode_gaussian(std::span<const double> raw, const Vec3& center, double radius) {
    using namespace raw_layout;
    if (raw.size() != static_cast<std::size_t>(kWidth)) {
        throw std::invalid_argument("raw Gaussian record must have 14 entries");
    }
    if (!(radius > 0.0)) {
        throw std::invalid_argument("Gaussian radius r must be positive");
    }
    Gaussian g;
    for (int a = 0; a < 3; ++a) {
        g.mean[a] = radius * std::tanh(raw[kMean + a]) + center[a];
        g.scale[a] = std::exp(raw[kScale + a]);
        g.color[a] = raw[kColor + a];
    }
    g.opacity = sigmoid(raw[kOpacity]);
    const Vec4 q(raw[kRotation], raw[kRotation + 1], raw[kRotation + 2], raw[kRotation + 3]);
    if (q.norm() < kMinQuaternionNorm) {
        g.rotation = Vec4(1.0, 0.0, 0.0, 0.0);
    } else {
        g.rotation = q / q.norm();
    }
    const Mat3 r = quat2rot(g.rotation);
    g.covariance = r * g.scale.array().square().matrix().asDiagonal() * r.transpose();
    return g;
}

RawGaussianParams RawGaussianParams::zeros(std::size_t voxels, int per_voxel) {
    if (per_voxel < 1) {
        throw std::invalid_argument("need at least one Gaussian per voxel");
    }
    RawGaussianParams raw;
    raw.per_voxel = per_voxel;
    raw.values.assign(voxels * per_voxel * raw_layout::kWidth, 0.0);
    return raw;
}

VoxSplatScene decode_scene(RawGaussianParams raw, SparseVoxelGrid grid, double radius) {
    if (raw.per_voxel < 1) {
        throw std::invalid_argument("need at least one Gaussian per voxel");
    }
    const std::size_t expected = grid.size() * raw.per_voxel * raw_layout::kWidth;
    if (raw.values.size() != expected) {
        throw std::invalid_argument("raw parameters cover " + std::to_string(raw.voxel_count()) +
                                    " voxels but the grid has " + std::to_string(grid.size()));
    }
    grid.canonicalize();
    VoxSplatScene scene{std::move(grid), std::move(raw), radius, {}, {}};
    const std::size_t m = scene.raw.per_voxel;
    scene.gaussians.resize(scene.grid.size() * m);
    scene.gaussian_voxel.resize(scene.gaussians.size());
    parallel_for(scene.grid.size(), [&](std::size_t v) {
        const Vec3 center = scene.grid.meta().voxel_center(scene.grid.coords()[v]);
        for (std::size_t k = 0; k < m; ++k) {
            scene.gaussians[v * m + k] = decode_gaussian(scene.raw.record(v, static_cast<int>(k)), center, radius);
            scene.gaussian_voxel[v * m + k] = static_cast<std::uint32_t>(v);
        }
    });
    return scene;
}

SparseVoxelGrid scene_to_grid(const VoxSplatScene& scene) {
    SparseVoxelGrid grid = scene.grid;
    if (const auto existing = grid.channel_index(kGaussianChannel)) {
        if (grid.channels()[*existing].width != scene.raw.per_voxel * raw_layout::kWidth) {
            throw std::invalid_argument("grid already holds Gaussians with a different M");
        }
    } else {
        grid.add_channel({std::string(kGaussianChannel), scene.raw.per_voxel * raw_layout::kWidth});
    }
    const std::size_t ch = *grid.channel_index(kGaussianChannel);
    const std::size_t width = static_cast<std::size_t>(scene.raw.per_voxel) * raw_layout::kWidth;
    for (std::size_t v = 0; v < grid.size(); ++v) {
        auto dst = grid.attributes(v, ch);
        std::copy_n(scene.raw.values.begin() + v * width, width, dst.begin());
    }
    return grid;
}

VoxSplatScene scene_from_grid(const SparseVoxelGrid& grid, std::optional<double> radius) {
    const auto ch = grid.channel_index(kGaussianChannel);
    if (!ch) {
        throw std::invalid_argument("grid has no 'gaussians' channel");
    }
    const int width = grid.channels()[*ch].width;
    if (width % raw_layout::kWidth != 0) {
        throw std::invalid_argument("'gaussians' channel width is not a multiple of 14");
    }
    SparseVoxelGrid sorted = grid;
    sorted.canonicalize();
    RawGaussianParams raw = RawGaussianParams::zeros(sorted.size(), width / raw_layout::kWidth);
    for (std::size_t v = 0; v < sorted.size(); ++v) {
        const auto src = sorted.attributes(v, *ch);
        std::copy(src.begin(), src.end(), raw.values.begin() + v * width);
    }
    const double r = radius.value_or(default_radius(sorted.meta()));
    return decode_scene(std::move(raw), std::move(sorted), r);
}

}  // namespace voxsplat
