// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <voxsplat/common.hpp>
#include <voxsplat/point_cloud.hpp>

#include <algorithm>
#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace voxsplat {

/// Integer voxel index. Negative indices are valid.
struct VoxelCoord {
    std::int32_t i = 0;
    std::int32_t j = 0;
    std::int32_t k = 0;

    auto operator<=>(const VoxelCoord&) const = default;

    std::int32_t operator[](int axis) const { return axis == 0 ? i : (axis == 1 ? j : k); }
};

struct VoxelCoordHash {
    std::size_t operator()(const VoxelCoord& c) const noexcept {
        // Large primes from the classic spatial-hash construction.
        const auto h = static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.i)) * 73856093ULL ^
                       static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.j)) * 19349663ULL ^
                       static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.k)) * 83492791ULL;
        return static_cast<std::size_t>(h ^ (h >> 29));
    }
};

/// Half-open box of voxel indices [min, max).
struct VoxelBounds {
    VoxelCoord min;
    VoxelCoord max;

    bool contains(const VoxelCoord& c) const {
        return c.i >= min.i && c.j >= min.j && c.k >= min.k && c.i < max.i && c.j < max.j && c.k < max.k;
    }
    std::int64_t volume() const {
        return static_cast<std::int64_t>(max.i - min.i) * (max.j - min.j) * (max.k - min.k);
    }
    bool operator==(const VoxelBounds&) const = default;
};

struct GridMeta {
    Vec3 origin = Vec3::Zero();  // minimum corner of voxel (0,0,0), meters
    double voxel_size = 0.1;     // meters
    std::optional<VoxelBounds> extent;

    void validate() const;

    /// Voxel containing `p` under the half-open convention [min, min + s).
    VoxelCoord voxel_of(const Vec3& p) const;
    Vec3 voxel_min(const VoxelCoord& c) const;
    /// origin + (ijk + 0.5) * voxel_size
    Vec3 voxel_center(const VoxelCoord& c) const;

    bool operator==(const GridMeta& other) const {
        return origin == other.origin && voxel_size == other.voxel_size && extent == other.extent;
    }
};

struct ChannelSpec {
    std::string name;
    int width = 0;

    bool operator==(const ChannelSpec&) const = default;
};

inline constexpr std::string_view kSemanticChannel = "semantic_logits";
inline constexpr std::string_view kFeatureChannel = "feature";
inline constexpr std::string_view kGaussianChannel = "gaussians";

class SparseVoxelGrid;

/// Read-only view of one occupied voxel.
class VoxelView {
public:
    VoxelView(const SparseVoxelGrid& grid, std::size_t index) : grid_(&grid), index_(index) {}

    std::size_t index() const { return index_; }
    VoxelCoord coord() const;
    /// Attribute values of the named channel; throws std::out_of_range when
    /// the grid has no such channel.
    std::span<const double> channel(std::string_view name) const;

private:
    const SparseVoxelGrid* grid_;
    std::size_t index_;
};

/// Set of occupied voxels with fixed-width per-voxel attribute channels.
///
/// Construction goes through `insert`; afterwards the grid is treated as
/// immutable and can be shared between readers. Storage order is insertion
/// order until `canonicalize` sorts it by coordinate.
class SparseVoxelGrid {
public:
    explicit SparseVoxelGrid(GridMeta meta = {}, std::vector<ChannelSpec> channels = {});

    const GridMeta& meta() const { return meta_; }
    const std::vector<ChannelSpec>& channels() const { return channels_; }
    std::optional<std::size_t> channel_index(std::string_view name) const;
    bool has_channel(std::string_view name) const { return channel_index(name).has_value(); }

    std::size_t size() const { return coords_.size(); }
    bool empty() const { return coords_.empty(); }
    const std::vector<VoxelCoord>& coords() const { return coords_; }

    /// Inserts `c` (attributes zero-filled) unless already present. Returns the
    /// storage index and whether an insertion happened.
    std::pair<std::size_t, bool> insert(const VoxelCoord& c);
    /// Appends a channel, zero-filled for every existing voxel.
    std::size_t add_channel(ChannelSpec spec);

    std::optional<std::size_t> find(const VoxelCoord& c) const;
    bool contains(const VoxelCoord& c) const { return index_.contains(c); }
    std::optional<VoxelView> query(const VoxelCoord& c) const;

    std::span<double> attributes(std::size_t voxel, std::size_t channel);
    std::span<const double> attributes(std::size_t voxel, std::size_t channel) const;
    const std::vector<double>& channel_data(std::size_t channel) const { return data_[channel]; }

    /// Bounding box of occupied voxels; empty grid yields nullopt.
    std::optional<VoxelBounds> occupied_bounds() const;

    /// Reorders storage by ascending (i, j, k).
    void canonicalize();
    bool is_canonical() const;

    /// Same meta, same schema, same voxels with bit-identical attributes,
    /// independent of storage order.
    bool operator==(const SparseVoxelGrid& other) const;

private:
    GridMeta meta_;
    std::vector<ChannelSpec> channels_;
    std::vector<VoxelCoord> coords_;
    std::vector<std::vector<double>> data_;  // one flat block per channel
    std::unordered_map<VoxelCoord, std::size_t, VoxelCoordHash> index_;
    VoxelCoord bbox_min_{};
    VoxelCoord bbox_max_{};  // inclusive
};

/// Fine/coarse pair where every fine voxel lies inside an occupied coarse voxel.
struct GridHierarchy {
    SparseVoxelGrid coarse;
    SparseVoxelGrid fine;
    int factor = 4;
};

/// Coordinates of the coarse parent of fine voxel `c`: floor(c / factor).
VoxelCoord parent_coord(const VoxelCoord& c, int factor);

/// First fine voxel whose parent is missing from `coarse`, if any.
std::optional<VoxelCoord> find_containment_violation(const SparseVoxelGrid& fine, const SparseVoxelGrid& coarse,
                                                      int factor);

/// Occupancy from points; with labels, adds a one-hot `semantic_logits`
/// channel of width num_classes holding the majority label (smallest id on
/// ties). Output is canonical.
SparseVoxelGrid voxelize(const LabeledPointCloud& points, const GridMeta& meta);

/// Coarse grid with voxel size `factor` times larger and the same origin.
/// Semantics vote by majority over children, other channels average.
SparseVoxelGrid coarsen(const SparseVoxelGrid& fine, int factor);

/// Hard label stored in the semantic channel: argmax of the logits, or empty
/// when the grid has no semantic channel or every logit is <= 0.
std::optional<int> semantic_label(const SparseVoxelGrid& grid, std::size_t voxel);

struct RayHit {
    VoxelCoord coord;
    double t_enter = 0.0;  // meters along the ray, >= 0
};

/// Visits the voxels of `bounds` pierced by the ray in order of increasing
/// distance (Amanatides-Woo stepping). `visit(coord, t_enter, t_exit)` returns
/// false to stop early. Only the segment [0, t_max] is traversed.
template <typename Visitor>
void traverse_voxels(const GridMeta& meta, const VoxelBounds& bounds, const Vec3& origin, const Vec3& dir,
                     double t_max, Visitor&& visit);

/// First occupied voxel along the ray via integer grid traversal.
/// Throws std::invalid_argument unless |dir| = 1 within 1e-6.
std::optional<RayHit> raymarch_first_hit(const SparseVoxelGrid& grid, const Vec3& origin, const Vec3& dir,
                                         double t_max = std::numeric_limits<double>::infinity());

template <typename Visitor>
void traverse_voxels(const GridMeta& meta, const VoxelBounds& bounds, const Vec3& origin, const Vec3& dir,
                     double t_max, Visitor&& visit) {
    const double s = meta.voxel_size;
    const Vec3 lo = meta.voxel_min(bounds.min);
    const Vec3 hi = meta.voxel_min(bounds.max);

    double t0 = 0.0;
    double t1 = t_max;
    for (int a = 0; a < 3; ++a) {
        if (dir[a] == 0.0) {
            if (origin[a] < lo[a] || origin[a] >= hi[a]) {
                return;
            }
            continue;
        }
        double ta = (lo[a] - origin[a]) / dir[a];
        double tb = (hi[a] - origin[a]) / dir[a];
        if (ta > tb) {
            std::swap(ta, tb);
        }
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
    }
    if (!(t0 <= t1)) {
        return;
    }

    std::int32_t idx[3];
    std::int32_t step[3];
    const VoxelCoord start = meta.voxel_of(origin + t0 * dir);
    for (int a = 0; a < 3; ++a) {
        idx[a] = std::clamp(start[a], bounds.min[a], bounds.max[a] - 1);
        step[a] = dir[a] > 0.0 ? 1 : (dir[a] < 0.0 ? -1 : 0);
    }
    auto boundary_t = [&](int a) {
        if (step[a] == 0) {
            return std::numeric_limits<double>::infinity();
        }
        const double plane = meta.origin[a] + s * (idx[a] + (step[a] > 0 ? 1 : 0));
        return (plane - origin[a]) / dir[a];
    };

    double t_enter = t0;
    for (;;) {
        int axis = 0;
        double t_next = boundary_t(0);
        for (int a = 1; a < 3; ++a) {
            const double t = boundary_t(a);
            if (t < t_next) {
                t_next = t;
                axis = a;
            }
        }
        const double t_exit = std::max(t_enter, std::min(t_next, t1));
        if (!visit(VoxelCoord{idx[0], idx[1], idx[2]}, t_enter, t_exit)) {
            return;
        }
        if (!(t_next <= t1)) {
            return;
        }
        t_enter = std::max(t_enter, t_next);
        idx[axis] += step[axis];
        if (idx[axis] < bounds.min[axis] || idx[axis] >= bounds.max[axis]) {
            return;
        }
    }
}

/// Canonical little-endian `.svg2` encoding.
std::vector<std::uint8_t> serialize(const SparseVoxelGrid& grid);
/// Throws ParseError with the failing byte offset.
SparseVoxelGrid deserialize(std::span<const std::uint8_t> bytes);

void save_grid(const SparseVoxelGrid& grid, const std::string& path);
SparseVoxelGrid load_grid(const std::string& path);

}  // namespace voxsplat
