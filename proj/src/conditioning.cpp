// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#include <voxsplat/conditioning.hpp>
#include <voxsplat/parallel.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace voxsplat {
namespace {

// Pixels per reduction block. Fixed so the summation order is independent of
// the worker count.
constexpr std::size_t kBlockPixels = 4096;

struct BlockResult {
    std::vector<VoxelCoord> order;  // first-touch order inside the block
    std::unordered_map<VoxelCoord, std::vector<double>, VoxelCoordHash> sums;
    std::size_t samples = 0;
    std::size_t dropped = 0;
};

}  // namespace

std::optional<int> DepthBins::bin_of(double depth) const {
    if (!std::isfinite(depth) || depth < edges.front() || depth >= edges.back()) {
        return std::nullopt;
    }
    const auto it = std::upper_bound(edges.begin(), edges.end(), depth);
    return static_cast<int>(it - edges.begin()) - 1;
}

DepthBins lid_bin_edges(double z_near, double z_far, int count) {
    if (!(z_near >= 0.0) || !(z_far > z_near) || !std::isfinite(z_far)) {
        throw std::invalid_argument("depth bins need 0 <= z_near < z_far");
    }
    if (count < 1) {
        throw std::invalid_argument("depth bins need at least one bin");
    }
    DepthBins bins;
    bins.z_near = z_near;
    bins.z_far = z_far;
    const double span = z_far - z_near;
    const double denom = static_cast<double>(count) * (count + 1);
    bins.edges.resize(count + 1);
    for (int k = 0; k <= count; ++k) {
        // Cumulative width k (k + 1) / 2 * delta, written to keep the last edge exact.
        bins.edges[k] = z_near + span * (static_cast<double>(k) * (k + 1) / denom);
    }
    bins.edges.back() = z_far;
    return bins;
}

PixelFeatureMap::PixelFeatureMap(int width, int height, int feature_channels, int depth_bins)
    : width(width), height(height), feature_channels(feature_channels), depth_bins(depth_bins) {
    if (width < 0 || height < 0 || feature_channels < 0 || depth_bins < 1) {
        throw std::invalid_argument("invalid feature map dimensions");
    }
    features.assign(static_cast<std::size_t>(width) * height * feature_channels, 0.0);
    depth_probs.assign(static_cast<std::size_t>(width) * height * depth_bins, 0.0);
}

std::span<double> PixelFeatureMap::feature(int x, int y) {
    return {features.data() + (static_cast<std::size_t>(y) * width + x) * feature_channels,
            static_cast<std::size_t>(feature_channels)};
}
std::span<const double> PixelFeatureMap::feature(int x, int y) const {
    return {features.data() + (static_cast<std::size_t>(y) * width + x) * feature_channels,
            static_cast<std::size_t>(feature_channels)};
}
std::span<double> PixelFeatureMap::depth(int x, int y) {
    return {depth_probs.data() + (static_cast<std::size_t>(y) * width + x) * depth_bins,
            static_cast<std::size_t>(depth_bins)};
}
std::span<const double> PixelFeatureMap::depth(int x, int y) const {
    return {depth_probs.data() + (static_cast<std::size_t>(y) * width + x) * depth_bins,
            static_cast<std::size_t>(depth_bins)};
}

void PixelFeatureMap::validate(double tol) const {
    const std::size_t pixels = static_cast<std::size_t>(width) * height;
    if (features.size() != pixels * feature_channels || depth_probs.size() != pixels * depth_bins) {
        throw std::invalid_argument("feature map buffers do not match its dimensions");
    }
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double sum = 0.0;
            for (const double p : depth(x, y)) {
                if (!(p >= 0.0)) {
                    throw std::invalid_argument("negative depth probability at pixel (" + std::to_string(x) + ", " +
                                                std::to_string(y) + ")");
                }
                sum += p;
            }
            if (std::abs(sum - 1.0) > tol) {
                throw std::invalid_argument("depth distribution at pixel (" + std::to_string(x) + ", " +
                                            std::to_string(y) + ") sums to " + std::to_string(sum));
            }
        }
    }
}

PixelFeatureMap PixelFeatureMap::from_channels(int width, int height, int feature_channels, int depth_bins,
                                               std::span<const double> data, bool apply_softmax) {
    PixelFeatureMap map(width, height, feature_channels, depth_bins);
    const std::size_t stride = static_cast<std::size_t>(feature_channels) + depth_bins;
    if (data.size() != static_cast<std::size_t>(width) * height * stride) {
        throw std::invalid_argument("raster does not hold C + D channels per pixel");
    }
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double* px = data.data() + (static_cast<std::size_t>(y) * width + x) * stride;
            std::copy_n(px, feature_channels, map.feature(x, y).begin());
            auto theta = map.depth(x, y);
            std::copy_n(px + feature_channels, depth_bins, theta.begin());
            if (apply_softmax) {
                const double peak = *std::max_element(theta.begin(), theta.end());
                double sum = 0.0;
                for (double& t : theta) {
                    t = std::exp(t - peak);
                    sum += t;
                }
                for (double& t : theta) {
                    t /= sum;
                }
            }
        }
    }
    return map;
}

int ConditionGrid::channels() const {
    const auto ch = grid.channel_index(kFeatureChannel);
    return ch ? grid.channels()[*ch].width : 0;
}

std::vector<double> ConditionGrid::feature_at(const VoxelCoord& c) const {
    if (const auto v = grid.query(c)) {
        const auto f = v->channel(kFeatureChannel);
        return {f.begin(), f.end()};
    }
    return std::vector<double>(channels(), 0.0);
}

std::vector<double> ConditionGrid::to_dense(std::int64_t max_voxels) const {
    const auto& extent = grid.meta().extent;
    if (!extent) {
        throw std::invalid_argument("dense conditioning needs a grid extent");
    }
    if (extent->volume() > max_voxels) {
        throw std::length_error("grid extent exceeds the dense voxel cap");
    }
    const int c = channels();
    const std::int64_t nx = extent->max.i - extent->min.i;
    const std::int64_t ny = extent->max.j - extent->min.j;
    std::vector<double> dense(static_cast<std::size_t>(extent->volume()) * c, 0.0);
    const auto ch = grid.channel_index(kFeatureChannel);
    for (std::size_t v = 0; v < grid.size(); ++v) {
        const auto& vc = grid.coords()[v];
        const std::int64_t lin =
            (static_cast<std::int64_t>(vc.k - extent->min.k) * ny + (vc.j - extent->min.j)) * nx + (vc.i - extent->min.i);
        const auto f = grid.attributes(v, *ch);
        std::copy(f.begin(), f.end(), dense.begin() + lin * c);
    }
    return dense;
}

ConditionGrid unproject_features(std::span<const PixelFeatureMap> images, std::span<const Camera> cameras,
                                 const DepthBins& bins, const GridMeta& meta) {
    if (images.size() != cameras.size()) {
        throw std::invalid_argument("one camera is required per feature map");
    }
    meta.validate();
    int channels = -1;
    for (std::size_t i = 0; i < images.size(); ++i) {
        images[i].validate();
        cameras[i].validate();
        if (images[i].depth_bins != bins.count()) {
            throw std::invalid_argument("feature map depth channels do not match the bin count");
        }
        if (images[i].width != cameras[i].width || images[i].height != cameras[i].height) {
            throw std::invalid_argument("feature map size does not match its camera");
        }
        if (channels >= 0 && images[i].feature_channels != channels) {
            throw std::invalid_argument("feature maps disagree on the channel count");
        }
        channels = images[i].feature_channels;
    }

    ConditionGrid out{SparseVoxelGrid(meta, {{std::string(kFeatureChannel), std::max(channels, 1)}})};
    if (images.empty()) {
        return out;
    }

    struct Block {
        std::size_t image;
        std::size_t first;
        std::size_t last;
    };
    std::vector<Block> blocks;
    for (std::size_t i = 0; i < images.size(); ++i) {
        const std::size_t n = static_cast<std::size_t>(images[i].width) * images[i].height;
        for (std::size_t p = 0; p < n; p += kBlockPixels) {
            blocks.push_back({i, p, std::min(n, p + kBlockPixels)});
        }
    }

    const int depth_count = bins.count();
    std::vector<double> mids(depth_count);
    for (int d = 0; d < depth_count; ++d) {
        mids[d] = bins.midpoint(d);
    }

    std::vector<BlockResult> results(blocks.size());
    parallel_for(blocks.size(), [&](std::size_t b) {
        const Block& block = blocks[b];
        const PixelFeatureMap& map = images[block.image];
        const Camera& cam = cameras[block.image];
        BlockResult& res = results[b];
        for (std::size_t p = block.first; p < block.last; ++p) {
            const int x = static_cast<int>(p % map.width);
            const int y = static_cast<int>(p / map.width);
            const auto feature = map.feature(x, y);
            const auto theta = map.depth(x, y);
            const Vec3 ray = cam.ray_camera(x + 0.5, y + 0.5);
            for (int d = 0; d < depth_count; ++d) {
                ++res.samples;
                const VoxelCoord v = meta.voxel_of(cam.world_from_camera.apply(ray * mids[d]));
                if (meta.extent && !meta.extent->contains(v)) {
                    ++res.dropped;
                    continue;
                }
                auto [it, fresh] = res.sums.try_emplace(v);
                if (fresh) {
                    it->second.assign(feature.size(), 0.0);
                    res.order.push_back(v);
                }
                for (std::size_t c = 0; c < feature.size(); ++c) {
                    it->second[c] += theta[d] * feature[c];
                }
            }
        }
    });

    const std::size_t feature_ch = 0;
    for (const BlockResult& res : results) {
        out.samples += res.samples;
        out.dropped_samples += res.dropped;
        for (const VoxelCoord& v : res.order) {
            const auto idx = out.grid.insert(v).first;
            auto dst = out.grid.attributes(idx, feature_ch);
            const auto& src = res.sums.at(v);
            for (std::size_t c = 0; c < src.size(); ++c) {
                dst[c] += src[c];
            }
        }
    }
    out.grid.canonicalize();
    return out;
}

std::vector<int> depth_supervision_target(std::span<const double> gt_depth, const DepthBins& bins) {
    std::vector<int> out(gt_depth.size(), kIgnoreDepth);
    for (std::size_t p = 0; p < gt_depth.size(); ++p) {
        if (const auto d = bins.bin_of(gt_depth[p])) {
            out[p] = *d;
        }
    }
    return out;
}

std::vector<double> one_hot(std::span<const int> targets, int count) {
    std::vector<double> out(targets.size() * count, 0.0);
    for (std::size_t p = 0; p < targets.size(); ++p) {
        if (targets[p] >= 0 && targets[p] < count) {
            out[p * count + targets[p]] = 1.0;
        }
    }
    return out;
}

}  // namespace voxsplat
