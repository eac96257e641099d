// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#include <voxsplat/parallel.hpp>
#include <voxsplat/pipeline.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <unordered_map>

namespace voxsplat {
namespace {

constexpr double kBucketSize = 1.0;  // meters
constexpr std::size_t kVoxelsPerTask = 256;

double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::vector<int> largest_remainder(int total, const std::array<double, 6>& weights) {
    const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::vector<int> counts(6, 0);
    std::array<double, 6> remainder{};
    int assigned = 0;
    for (int f = 0; f < 6; ++f) {
        const double quota = total * weights[f] / sum;
        counts[f] = static_cast<int>(std::floor(quota));
        remainder[f] = quota - counts[f];
        assigned += counts[f];
    }
    std::array<int, 6> order{};
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return remainder[a] > remainder[b]; });
    for (int n = 0; assigned < total; ++n, ++assigned) {
        ++counts[order[n % 6]];
    }
    return counts;
}

}  // namespace

void DynamicBox::validate() const {
    if (!(half_extent.array() > 0.0).all() || !half_extent.allFinite() || !center.allFinite() ||
        !std::isfinite(yaw)) {
        throw std::invalid_argument("dynamic box needs finite values and positive half extents");
    }
}

bool DynamicBox::contains(const Vec3& p, double margin) const {
    const Vec3 local = yaw_rotation(yaw).transpose() * (p - center);
    return (local.cwiseAbs().array() <= (half_extent.array() + margin)).all();
}

LabeledPointCloud accumulate(std::span<const SensorFrame> frames, std::span<const DynamicBox> boxes) {
    for (const auto& b : boxes) {
        b.validate();
    }
    LabeledPointCloud out;
    for (const auto& frame : frames) {
        frame.world_from_sensor.validate();
        frame.points.validate();
        std::vector<const DynamicBox*> own;
        for (const auto& b : boxes) {
            if (b.frame_id == frame.frame_id) {
                own.push_back(&b);
            }
        }
        LabeledPointCloud world = frame.points;
        std::vector<bool> keep(world.size(), true);
        for (std::size_t p = 0; p < world.size(); ++p) {
            world.positions[p] = frame.world_from_sensor.apply(world.positions[p]);
            keep[p] = std::none_of(own.begin(), own.end(),
                                   [&](const DynamicBox* b) { return b->contains(world.positions[p]); });
        }
        world.frame_ids.assign(world.size(), frame.frame_id);
        LabeledPointCloud kept = world.select(keep);
        out.num_classes = std::max(out.num_classes, kept.num_classes);
        out.append(kept);
    }
    return out;
}

LabeledPointCloud propagate_semantics(const LabeledPointCloud& cloud) {
    cloud.validate();
    LabeledPointCloud out = cloud;
    if (!cloud.has_labels()) {
        if (cloud.empty()) {
            return out;
        }
        throw std::invalid_argument("cannot propagate semantics: no labeled points");
    }
    std::vector<std::size_t> labeled;
    std::vector<std::size_t> unlabeled;
    for (std::size_t p = 0; p < cloud.size(); ++p) {
        (cloud.labels[p] == kUnlabeled ? unlabeled : labeled).push_back(p);
    }
    if (unlabeled.empty()) {
        return out;
    }
    if (labeled.empty()) {
        throw std::invalid_argument("cannot propagate semantics: no labeled points");
    }

    GridMeta buckets_meta;
    buckets_meta.voxel_size = kBucketSize;
    std::unordered_map<VoxelCoord, std::vector<std::size_t>, VoxelCoordHash> buckets;
    VoxelCoord lo = buckets_meta.voxel_of(cloud.positions[labeled.front()]);
    VoxelCoord hi = lo;
    for (const auto p : labeled) {
        const VoxelCoord c = buckets_meta.voxel_of(cloud.positions[p]);
        buckets[c].push_back(p);
        lo = {std::min(lo.i, c.i), std::min(lo.j, c.j), std::min(lo.k, c.k)};
        hi = {std::max(hi.i, c.i), std::max(hi.j, c.j), std::max(hi.k, c.k)};
    }

    auto nearest = [&](std::size_t q) {
        const Vec3& x = cloud.positions[q];
        double best_d2 = std::numeric_limits<double>::infinity();
        std::size_t best = 0;
        auto consider = [&](std::size_t p) {
            const double d2 = (cloud.positions[p] - x).squaredNorm();
            if (d2 < best_d2 || (d2 == best_d2 && p < best)) {
                best_d2 = d2;
                best = p;
            }
        };
        const VoxelCoord c = buckets_meta.voxel_of(x);
        std::int64_t max_ring = 0;
        for (int a = 0; a < 3; ++a) {
            max_ring = std::max<std::int64_t>(max_ring, std::max<std::int64_t>(std::abs(c[a] - lo[a]),
                                                                                std::abs(hi[a] - c[a])));
        }
        for (std::int64_t r = 0; r <= max_ring; ++r) {
            const std::int64_t side = 2 * r + 1;
            if (side * side * side > static_cast<std::int64_t>(8 * labeled.size() + 64)) {
                for (const auto p : labeled) {
                    consider(p);
                }
                return best;
            }
            for (std::int64_t di = -r; di <= r; ++di) {
                for (std::int64_t dj = -r; dj <= r; ++dj) {
                    const bool edge = std::abs(di) == r || std::abs(dj) == r;
                    for (std::int64_t dk = -r; dk <= r; dk += (edge ? 1 : 2 * std::max<std::int64_t>(r, 1))) {
                        const VoxelCoord cell{static_cast<std::int32_t>(c.i + di), static_cast<std::int32_t>(c.j + dj),
                                              static_cast<std::int32_t>(c.k + dk)};
                        const auto it = buckets.find(cell);
                        if (it != buckets.end()) {
                            for (const auto p : it->second) {
                                consider(p);
                            }
                        }
                    }
                }
            }
            const double covered = static_cast<double>(r) * kBucketSize;
            if (best_d2 < covered * covered) {
                return best;
            }
        }
        return best;
    };

    std::vector<std::int32_t> assigned(unlabeled.size());
    parallel_for(unlabeled.size(), [&](std::size_t n) { assigned[n] = cloud.labels[nearest(unlabeled[n])]; });
    for (std::size_t n = 0; n < unlabeled.size(); ++n) {
        out.labels[unlabeled[n]] = assigned[n];
    }
    return out;
}

LabeledPointCloud insert_dynamic(const LabeledPointCloud& cloud, std::span<const DynamicBox> boxes,
                                 int samples_per_box, std::uint64_t seed) {
    if (samples_per_box < 0) {
        throw std::invalid_argument("samples_per_box must be >= 0");
    }
    LabeledPointCloud out = cloud;
    if (samples_per_box == 0) {
        return out;
    }
    for (const auto& box : boxes) {
        box.validate();
        const Vec3& h = box.half_extent;
        // Faces -x, +x, -y, +y, -z, +z; each spans the two remaining axes.
        const std::array<double, 6> areas{h.y() * h.z(), h.y() * h.z(), h.x() * h.z(),
                                          h.x() * h.z(), h.x() * h.y(), h.x() * h.y()};
        const auto counts = largest_remainder(samples_per_box, areas);
        std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(box.object_id) + 1)) ^
                            (static_cast<std::uint64_t>(static_cast<std::uint32_t>(box.frame_id)) << 32));
        const Mat3 rot = yaw_rotation(box.yaw);

        LabeledPointCloud samples;
        samples.num_classes = std::max(cloud.num_classes, box.label + 1);
        for (int f = 0; f < 6; ++f) {
            const int n = counts[f];
            if (n == 0) {
                continue;
            }
            const int axis = f / 2;
            const int ua = (axis + 1) % 3;
            const int va = (axis + 2) % 3;
            const double extent_u = 2.0 * h[ua];
            const double extent_v = 2.0 * h[va];
            const int nu = std::max(1, static_cast<int>(std::ceil(std::sqrt(n * extent_u / extent_v))));
            const int nv = (n + nu - 1) / nu;
            std::vector<int> cells(static_cast<std::size_t>(nu) * nv);
            std::iota(cells.begin(), cells.end(), 0);
            std::shuffle(cells.begin(), cells.end(), rng);
            cells.resize(n);
            std::sort(cells.begin(), cells.end());
            for (const int cell : cells) {
                const double u = (cell % nu + unit_uniform(rng)) / nu;
                const double v = (cell / nu + unit_uniform(rng)) / nv;
                Vec3 local;
                local[axis] = (f % 2 == 0 ? -1.0 : 1.0) * h[axis];
                local[ua] = -h[ua] + u * extent_u;
                local[va] = -h[va] + v * extent_v;
                samples.positions.push_back(box.center + rot * local);
            }
        }
        samples.labels.assign(samples.size(), box.label);
        samples.frame_ids.assign(samples.size(), box.frame_id);
        out.num_classes = std::max(out.num_classes, samples.num_classes);
        out.append(samples);
    }
    return out;
}

void ChunkSpec::validate() const {
    world_from_ego.validate();
    if (!(side > 0.0) || !(voxel_size > 0.0)) {
        throw std::invalid_argument("chunk side and voxel size must be positive");
    }
    if (!(forward_fraction > 0.0 && forward_fraction < 1.0)) {
        throw std::invalid_argument("forward_fraction must lie in (0, 1)");
    }
    if (!(z_min < z_max)) {
        throw std::invalid_argument("chunk z_min must be below z_max");
    }
}

GridMeta ChunkSpec::fine_meta() const {
    validate();
    GridMeta meta;
    meta.origin = Vec3(rear_bound(), -0.5 * side, z_min);
    meta.voxel_size = voxel_size;
    const auto n_xy = static_cast<std::int32_t>(std::llround(side / voxel_size));
    const auto n_z = static_cast<std::int32_t>(std::llround((z_max - z_min) / voxel_size));
    meta.extent = VoxelBounds{{0, 0, 0}, {n_xy, n_xy, n_z}};
    return meta;
}

LabeledPointCloud crop_chunk(const LabeledPointCloud& cloud, const ChunkSpec& spec) {
    const GridMeta meta = spec.fine_meta();
    const RigidTransform ego_from_world = spec.world_from_ego.inverse();
    const double fwd = spec.forward_bound();
    const double rear = spec.rear_bound();
    const double half = 0.5 * spec.side;
    LabeledPointCloud local = cloud;
    std::vector<bool> keep(cloud.size());
    for (std::size_t p = 0; p < cloud.size(); ++p) {
        const Vec3 q = ego_from_world.apply(cloud.positions[p]);
        local.positions[p] = q;
        keep[p] = q.x() >= rear && q.x() < fwd && q.y() >= -half && q.y() < half && q.z() >= spec.z_min &&
                  q.z() < spec.z_max && meta.extent->contains(meta.voxel_of(q));
    }
    return local.select(keep);
}

GridHierarchy make_training_pair(const LabeledPointCloud& cloud, const GridMeta& meta_fine,
                                 const GridMeta& meta_coarse) {
    meta_fine.validate();
    meta_coarse.validate();
    constexpr int kFactor = 4;
    if (std::abs(meta_coarse.voxel_size - kFactor * meta_fine.voxel_size) > 1e-9 * meta_coarse.voxel_size) {
        throw std::invalid_argument("coarse voxel size must be 4x the fine voxel size");
    }
    if (meta_coarse.origin != meta_fine.origin) {
        throw std::invalid_argument("fine and coarse grids must share an origin");
    }
    SparseVoxelGrid fine = voxelize(cloud, meta_fine);
    const SparseVoxelGrid derived = coarsen(fine, kFactor);
    SparseVoxelGrid coarse(meta_coarse, derived.channels());
    for (std::size_t v = 0; v < derived.size(); ++v) {
        const auto [idx, inserted] = coarse.insert(derived.coords()[v]);
        for (std::size_t ch = 0; ch < derived.channels().size(); ++ch) {
            const auto src = derived.attributes(v, ch);
            std::copy(src.begin(), src.end(), coarse.attributes(idx, ch).begin());
        }
    }
    return GridHierarchy{std::move(coarse), std::move(fine), kFactor};
}

VisibilityResult voxel_visibility(const SparseVoxelGrid& grid, std::span<const Camera> cameras) {
    for (const auto& cam : cameras) {
        cam.validate();
    }
    VisibilityResult result;
    const std::size_t n = grid.size();
    result.visible.assign(n, 0);
    parallel_for((n + kVoxelsPerTask - 1) / kVoxelsPerTask, [&](std::size_t task) {
        const std::size_t end = std::min(n, (task + 1) * kVoxelsPerTask);
        for (std::size_t v = task * kVoxelsPerTask; v < end; ++v) {
            const VoxelCoord c = grid.coords()[v];
            const Vec3 centroid = grid.meta().voxel_center(c);
            for (const auto& cam : cameras) {
                const auto uvz = cam.project(centroid);
                if (!uvz || !cam.in_frame(uvz->x(), uvz->y())) {
                    continue;
                }
                const Vec3 offset = centroid - cam.center();
                const double dist = offset.norm();
                if (!(dist > 0.0)) {
                    continue;
                }
                const auto hit = raymarch_first_hit(grid, cam.center(), offset / dist);
                if (hit && hit->coord == c) {
                    result.visible[v] = 1;
                    break;
                }
            }
        }
    });
    result.visible_count = static_cast<std::size_t>(std::count(result.visible.begin(), result.visible.end(), 1));
    result.occluded_fraction = n == 0 ? 0.0 : static_cast<double>(n - result.visible_count) / static_cast<double>(n);
    return result;
}

}  // namespace voxsplat
