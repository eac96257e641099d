// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <voxsplat/common.hpp>

#include <cstdint>
#include <vector>

namespace voxsplat {

inline constexpr std::int32_t kUnlabeled = -1;

/// Points with optional per-point semantics, timestamps and frame ids. The
/// optional arrays are either empty or parallel to `positions`.
struct LabeledPointCloud {
    std::vector<Vec3> positions;
    std::vector<std::int32_t> labels;  // kUnlabeled marks a point without annotation
    std::vector<double> timestamps;
    std::vector<std::int32_t> frame_ids;
    int num_classes = 0;

    std::size_t size() const { return positions.size(); }
    bool empty() const { return positions.empty(); }
    bool has_labels() const { return !labels.empty(); }

    /// Throws std::invalid_argument on ragged arrays or labels outside
    /// [0, num_classes) other than kUnlabeled.
    void validate() const;

    /// Appends `other`, padding optional arrays so they stay parallel.
    void append(const LabeledPointCloud& other);
    /// Copy of the points selected by `keep` (same length as the cloud).
    LabeledPointCloud select(const std::vector<bool>& keep) const;
};

}  // namespace voxsplat
