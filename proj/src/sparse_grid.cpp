// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#include <voxsplat/io/binary.hpp>
#include <voxsplat/sparse_grid.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

namespace voxsplat {
namespace {

constexpr char kMagic[4] = {'S', 'V', 'G', '2'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint8_t kDtypeF64 = 1;

std::int32_t floor_to_index(double v) {
    const double f = std::floor(v);
    if (!(f >= static_cast<double>(std::numeric_limits<std::int32_t>::min()) &&
          f <= static_cast<double>(std::numeric_limits<std::int32_t>::max()))) {
        throw std::out_of_range("voxel index outside the int32 range");
    }
    return static_cast<std::int32_t>(f);
}

std::int32_t floor_div(std::int32_t a, std::int32_t b) {
    std::int32_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) {
        --q;
    }
    return q;
}

std::int32_t ceil_div(std::int32_t a, std::int32_t b) { return -floor_div(-a, b); }

// Majority vote over label counts, smallest id wins ties.
int majority(const std::map<int, std::size_t>& counts) {
    int best = -1;
    std::size_t best_count = 0;
    for (const auto& [label, count] : counts) {
        if (count > best_count) {
            best = label;
            best_count = count;
        }
    }
    return best;
}

std::vector<std::size_t> sorted_order(const std::vector<VoxelCoord>& coords) {
    std::vector<std::size_t> order(coords.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return coords[a] < coords[b]; });
    return order;
}

}  // namespace

void GridMeta::validate() const {
    if (!(voxel_size > 0.0) || !std::isfinite(voxel_size)) {
        throw std::invalid_argument("voxel_size must be positive and finite");
    }
    if (!origin.allFinite()) {
        throw std::invalid_argument("grid origin must be finite");
    }
    if (extent && (extent->max.i <= extent->min.i || extent->max.j <= extent->min.j ||
                   extent->max.k <= extent->min.k)) {
        throw std::invalid_argument("grid extent must be non-empty on every axis");
    }
}

VoxelCoord GridMeta::voxel_of(const Vec3& p) const {
    return {floor_to_index((p.x() - origin.x()) / voxel_size), floor_to_index((p.y() - origin.y()) / voxel_size),
            floor_to_index((p.z() - origin.z()) / voxel_size)};
}

Vec3 GridMeta::voxel_min(const VoxelCoord& c) const {
    return origin + voxel_size * Vec3(c.i, c.j, c.k);
}

Vec3 GridMeta::voxel_center(const VoxelCoord& c) const {
    return origin + voxel_size * Vec3(c.i + 0.5, c.j + 0.5, c.k + 0.5);
}

VoxelCoord VoxelView::coord() const { return grid_->coords()[index_]; }

std::span<const double> VoxelView::channel(std::string_view name) const {
    const auto ch = grid_->channel_index(name);
    if (!ch) {
        throw std::out_of_range("grid has no channel '" + std::string(name) + "'");
    }
    return grid_->attributes(index_, *ch);
}

SparseVoxelGrid::SparseVoxelGrid(GridMeta meta, std::vector<ChannelSpec> channels)
    : meta_(std::move(meta)), channels_(std::move(channels)) {
    meta_.validate();
    std::set<std::string> names;
    for (const auto& ch : channels_) {
        if (ch.name.empty() || ch.width < 1) {
            throw std::invalid_argument("channels need a name and a positive width");
        }
        if (!names.insert(ch.name).second) {
            throw std::invalid_argument("duplicate channel '" + ch.name + "'");
        }
    }
    data_.resize(channels_.size());
}

std::optional<std::size_t> SparseVoxelGrid::channel_index(std::string_view name) const {
    for (std::size_t c = 0; c < channels_.size(); ++c) {
        if (channels_[c].name == name) {
            return c;
        }
    }
    return std::nullopt;
}

std::pair<std::size_t, bool> SparseVoxelGrid::insert(const VoxelCoord& c) {
    const auto [it, inserted] = index_.try_emplace(c, coords_.size());
    if (!inserted) {
        return {it->second, false};
    }
    if (coords_.empty()) {
        bbox_min_ = bbox_max_ = c;
    } else {
        bbox_min_ = {std::min(bbox_min_.i, c.i), std::min(bbox_min_.j, c.j), std::min(bbox_min_.k, c.k)};
        bbox_max_ = {std::max(bbox_max_.i, c.i), std::max(bbox_max_.j, c.j), std::max(bbox_max_.k, c.k)};
    }
    coords_.push_back(c);
    for (std::size_t ch = 0; ch < channels_.size(); ++ch) {
        data_[ch].resize(data_[ch].size() + channels_[ch].width, 0.0);
    }
    return {it->second, true};
}

std::size_t SparseVoxelGrid::add_channel(ChannelSpec spec) {
    if (spec.name.empty() || spec.width < 1) {
        throw std::invalid_argument("channels need a name and a positive width");
    }
    if (has_channel(spec.name)) {
        throw std::invalid_argument("duplicate channel '" + spec.name + "'");
    }
    data_.emplace_back(coords_.size() * spec.width, 0.0);
    channels_.push_back(std::move(spec));
    return channels_.size() - 1;
}

std::optional<std::size_t> SparseVoxelGrid::find(const VoxelCoord& c) const {
    const auto it = index_.find(c);
    if (it == index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::optional<VoxelView> SparseVoxelGrid::query(const VoxelCoord& c) const {
    const auto idx = find(c);
    if (!idx) {
        return std::nullopt;
    }
    return VoxelView(*this, *idx);
}

std::span<double> SparseVoxelGrid::attributes(std::size_t voxel, std::size_t channel) {
    const std::size_t w = channels_.at(channel).width;
    return {data_[channel].data() + voxel * w, w};
}

std::span<const double> SparseVoxelGrid::attributes(std::size_t voxel, std::size_t channel) const {
    const std::size_t w = channels_.at(channel).width;
    return {data_[channel].data() + voxel * w, w};
}

std::optional<VoxelBounds> SparseVoxelGrid::occupied_bounds() const {
    if (coords_.empty()) {
        return std::nullopt;
    }
    return VoxelBounds{bbox_min_, {bbox_max_.i + 1, bbox_max_.j + 1, bbox_max_.k + 1}};
}

void SparseVoxelGrid::canonicalize() {
    if (is_canonical()) {
        return;
    }
    const auto order = sorted_order(coords_);
    std::vector<VoxelCoord> coords(coords_.size());
    std::vector<std::vector<double>> data(channels_.size());
    for (std::size_t ch = 0; ch < channels_.size(); ++ch) {
        data[ch].resize(data_[ch].size());
    }
    for (std::size_t n = 0; n < order.size(); ++n) {
        coords[n] = coords_[order[n]];
        index_[coords[n]] = n;
        for (std::size_t ch = 0; ch < channels_.size(); ++ch) {
            const std::size_t w = channels_[ch].width;
            std::copy_n(data_[ch].begin() + order[n] * w, w, data[ch].begin() + n * w);
        }
    }
    coords_ = std::move(coords);
    data_ = std::move(data);
}

bool SparseVoxelGrid::is_canonical() const { return std::is_sorted(coords_.begin(), coords_.end()); }

bool SparseVoxelGrid::operator==(const SparseVoxelGrid& other) const {
    if (!(meta_ == other.meta_) || channels_ != other.channels_ || size() != other.size()) {
        return false;
    }
    for (std::size_t n = 0; n < coords_.size(); ++n) {
        const auto o = other.find(coords_[n]);
        if (!o) {
            return false;
        }
        for (std::size_t ch = 0; ch < channels_.size(); ++ch) {
            const auto a = attributes(n, ch);
            const auto b = other.attributes(*o, ch);
            if (std::memcmp(a.data(), b.data(), a.size_bytes()) != 0) {
                return false;
            }
        }
    }
    return true;
}

VoxelCoord parent_coord(const VoxelCoord& c, int factor) {
    return {floor_div(c.i, factor), floor_div(c.j, factor), floor_div(c.k, factor)};
}

std::optional<VoxelCoord> find_containment_violation(const SparseVoxelGrid& fine, const SparseVoxelGrid& coarse,
                                                      int factor) {
    for (const auto& c : fine.coords()) {
        if (!coarse.contains(parent_coord(c, factor))) {
            return c;
        }
    }
    return std::nullopt;
}

SparseVoxelGrid voxelize(const LabeledPointCloud& points, const GridMeta& meta) {
    meta.validate();
    points.validate();
    std::vector<ChannelSpec> channels;
    const bool semantic = points.has_labels() && points.num_classes > 0;
    if (semantic) {
        channels.push_back({std::string(kSemanticChannel), points.num_classes});
    }
    SparseVoxelGrid grid(meta, channels);
    std::vector<std::map<int, std::size_t>> votes;
    for (std::size_t p = 0; p < points.size(); ++p) {
        const auto [idx, inserted] = grid.insert(meta.voxel_of(points.positions[p]));
        if (!semantic) {
            continue;
        }
        if (inserted) {
            votes.emplace_back();
        }
        if (points.labels[p] != kUnlabeled) {
            ++votes[idx][points.labels[p]];
        }
    }
    if (semantic) {
        for (std::size_t v = 0; v < grid.size(); ++v) {
            const int label = majority(votes[v]);
            if (label >= 0) {
                grid.attributes(v, 0)[label] = 1.0;
            }
        }
    }
    grid.canonicalize();
    return grid;
}

std::optional<int> semantic_label(const SparseVoxelGrid& grid, std::size_t voxel) {
    const auto ch = grid.channel_index(kSemanticChannel);
    if (!ch) {
        return std::nullopt;
    }
    const auto logits = grid.attributes(voxel, *ch);
    const auto best = std::max_element(logits.begin(), logits.end());
    if (best == logits.end() || !(*best > 0.0)) {
        return std::nullopt;
    }
    return static_cast<int>(best - logits.begin());
}

SparseVoxelGrid coarsen(const SparseVoxelGrid& fine, int factor) {
    if (factor < 1) {
        throw std::invalid_argument("coarsen factor must be >= 1");
    }
    if (factor == 1) {
        return fine;
    }
    GridMeta meta = fine.meta();
    meta.voxel_size *= factor;
    if (meta.extent) {
        const auto& e = *meta.extent;
        meta.extent = VoxelBounds{
            {floor_div(e.min.i, factor), floor_div(e.min.j, factor), floor_div(e.min.k, factor)},
            {ceil_div(e.max.i, factor), ceil_div(e.max.j, factor), ceil_div(e.max.k, factor)}};
    }
    SparseVoxelGrid coarse(meta, fine.channels());
    const auto semantic_ch = fine.channel_index(kSemanticChannel);

    std::vector<std::size_t> child_count;
    std::vector<std::map<int, std::size_t>> votes;
    // Visit children in sorted order so averaged channels sum reproducibly.
    for (const std::size_t f : sorted_order(fine.coords())) {
        const auto [idx, inserted] = coarse.insert(parent_coord(fine.coords()[f], factor));
        if (inserted) {
            child_count.push_back(0);
            votes.emplace_back();
        }
        ++child_count[idx];
        for (std::size_t ch = 0; ch < fine.channels().size(); ++ch) {
            if (semantic_ch && ch == *semantic_ch) {
                if (const auto label = semantic_label(fine, f)) {
                    ++votes[idx][*label];
                }
                continue;
            }
            const auto src = fine.attributes(f, ch);
            auto dst = coarse.attributes(idx, ch);
            for (std::size_t n = 0; n < src.size(); ++n) {
                dst[n] += src[n];
            }
        }
    }
    for (std::size_t v = 0; v < coarse.size(); ++v) {
        for (std::size_t ch = 0; ch < coarse.channels().size(); ++ch) {
            auto dst = coarse.attributes(v, ch);
            if (semantic_ch && ch == *semantic_ch) {
                const int label = majority(votes[v]);
                if (label >= 0) {
                    dst[label] = 1.0;
                }
                continue;
            }
            for (double& x : dst) {
                x /= static_cast<double>(child_count[v]);
            }
        }
    }
    coarse.canonicalize();
    return coarse;
}

std::optional<RayHit> raymarch_first_hit(const SparseVoxelGrid& grid, const Vec3& origin, const Vec3& dir,
                                         double t_max) {
    if (std::abs(dir.norm() - 1.0) > 1e-6) {
        throw std::invalid_argument("ray direction must be unit length");
    }
    const auto bounds = grid.occupied_bounds();
    if (!bounds) {
        return std::nullopt;
    }
    std::optional<RayHit> hit;
    traverse_voxels(grid.meta(), *bounds, origin, dir, t_max, [&](const VoxelCoord& c, double t_enter, double) {
        if (grid.contains(c)) {
            hit = RayHit{c, t_enter};
            return false;
        }
        return true;
    });
    return hit;
}

std::vector<std::uint8_t> serialize(const SparseVoxelGrid& grid) {
    using io::append_le;
    std::vector<std::uint8_t> out(kMagic, kMagic + 4);
    append_le(out, kVersion);
    const GridMeta& meta = grid.meta();
    append_le(out, meta.voxel_size);
    for (int a = 0; a < 3; ++a) {
        append_le(out, meta.origin[a]);
    }
    append_le(out, static_cast<std::uint8_t>(meta.extent ? 1 : 0));
    if (meta.extent) {
        for (int a = 0; a < 3; ++a) append_le(out, meta.extent->min[a]);
        for (int a = 0; a < 3; ++a) append_le(out, meta.extent->max[a]);
    }
    append_le(out, static_cast<std::uint32_t>(grid.channels().size()));
    for (const auto& ch : grid.channels()) {
        append_le(out, static_cast<std::uint16_t>(ch.name.size()));
        out.insert(out.end(), ch.name.begin(), ch.name.end());
        append_le(out, kDtypeF64);
        append_le(out, static_cast<std::uint32_t>(ch.width));
    }
    append_le(out, static_cast<std::uint64_t>(grid.size()));
    const auto order = sorted_order(grid.coords());
    for (const std::size_t v : order) {
        const auto& c = grid.coords()[v];
        append_le(out, c.i);
        append_le(out, c.j);
        append_le(out, c.k);
    }
    for (std::size_t ch = 0; ch < grid.channels().size(); ++ch) {
        for (const std::size_t v : order) {
            for (const double x : grid.attributes(v, ch)) {
                append_le(out, x);
            }
        }
    }
    return out;
}

SparseVoxelGrid deserialize(std::span<const std::uint8_t> bytes) {
    io::ByteReader in(bytes);
    const std::string magic = in.read_string(4, "magic");
    if (magic != std::string(kMagic, 4)) {
        throw ParseError("bad magic bytes, not an .svg2 grid", 0);
    }
    const std::size_t version_at = in.offset();
    if (in.read<std::uint32_t>("version") != kVersion) {
        throw ParseError("unsupported .svg2 version", version_at);
    }
    GridMeta meta;
    const std::size_t size_at = in.offset();
    meta.voxel_size = in.read<double>("voxel size");
    if (!(meta.voxel_size > 0.0) || !std::isfinite(meta.voxel_size)) {
        throw ParseError("voxel size must be positive and finite", size_at);
    }
    for (int a = 0; a < 3; ++a) {
        meta.origin[a] = in.read<double>("origin");
    }
    if (!meta.origin.allFinite()) {
        throw ParseError("origin must be finite", size_at + 8);
    }
    const std::size_t extent_at = in.offset();
    const auto has_extent = in.read<std::uint8_t>("extent flag");
    if (has_extent > 1) {
        throw ParseError("malformed extent flag", extent_at);
    }
    if (has_extent) {
        VoxelBounds e;
        e.min.i = in.read<std::int32_t>("extent");
        e.min.j = in.read<std::int32_t>("extent");
        e.min.k = in.read<std::int32_t>("extent");
        e.max.i = in.read<std::int32_t>("extent");
        e.max.j = in.read<std::int32_t>("extent");
        e.max.k = in.read<std::int32_t>("extent");
        if (e.max.i <= e.min.i || e.max.j <= e.min.j || e.max.k <= e.min.k) {
            throw ParseError("empty extent", extent_at);
        }
        meta.extent = e;
    }
    const auto n_channels = in.read<std::uint32_t>("channel count");
    std::vector<ChannelSpec> channels;
    std::set<std::string> names;
    for (std::uint32_t c = 0; c < n_channels; ++c) {
        const std::size_t channel_at = in.offset();
        const auto len = in.read<std::uint16_t>("channel name length");
        ChannelSpec spec;
        spec.name = in.read_string(len, "channel name");
        const std::size_t dtype_at = in.offset();
        const auto dtype = in.read<std::uint8_t>("channel dtype");
        if (dtype != kDtypeF64) {
            throw ParseError("unknown channel dtype " + std::to_string(dtype) + " for '" + spec.name + "'", dtype_at);
        }
        spec.width = static_cast<int>(in.read<std::uint32_t>("channel width"));
        if (spec.name.empty() || spec.width < 1) {
            throw ParseError("unknown channel entry (empty name or zero width)", channel_at);
        }
        if (!names.insert(spec.name).second) {
            throw ParseError("duplicate channel '" + spec.name + "'", channel_at);
        }
        channels.push_back(std::move(spec));
    }
    const auto count = in.read<std::uint64_t>("voxel count");
    std::uint64_t per_voxel = 12;
    for (const auto& ch : channels) {
        per_voxel += 8ULL * static_cast<std::uint64_t>(ch.width);
    }
    if (count > in.remaining() / per_voxel) {
        throw ParseError("truncated payload: header declares " + std::to_string(count) + " voxels", in.offset());
    }
    SparseVoxelGrid grid(meta, channels);
    for (std::uint64_t v = 0; v < count; ++v) {
        const std::size_t at = in.offset();
        VoxelCoord c;
        c.i = in.read<std::int32_t>("coordinate");
        c.j = in.read<std::int32_t>("coordinate");
        c.k = in.read<std::int32_t>("coordinate");
        if (!grid.insert(c).second) {
            throw ParseError("duplicate voxel coordinate", at);
        }
    }
    for (std::size_t ch = 0; ch < channels.size(); ++ch) {
        for (std::uint64_t v = 0; v < count; ++v) {
            for (double& x : grid.attributes(v, ch)) {
                x = in.read<double>("attribute");
            }
        }
    }
    if (in.remaining() != 0) {
        throw ParseError("trailing bytes after payload", in.offset());
    }
    grid.canonicalize();
    return grid;
}

void save_grid(const SparseVoxelGrid& grid, const std::string& path) {
    io::write_file_bytes(path, serialize(grid));
}

SparseVoxelGrid load_grid(const std::string& path) { return deserialize(io::read_file_bytes(path)); }

}  // namespace voxsplat
