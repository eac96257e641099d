// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#include <voxsplat/point_cloud.hpp>

#include <algorithm>
#include <stdexcept>
#include <string>

namespace voxsplat {

void LabeledPointCloud::validate() const {
    const std::size_t n = positions.size();
    if ((!labels.empty() && labels.size() != n) || (!timestamps.empty() && timestamps.size() != n) ||
        (!frame_ids.empty() && frame_ids.size() != n)) {
        throw std::invalid_argument("point cloud arrays have mismatched lengths");
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto l = labels[i];
        if (l != kUnlabeled && (l < 0 || l >= num_classes)) {
            throw std::invalid_argument("point " + std::to_string(i) + " has label " + std::to_string(l) +
                                        " outside [0, " + std::to_string(num_classes) + ")");
        }
    }
}

void LabeledPointCloud::append(const LabeledPointCloud& other) {
    const std::size_t before = positions.size();
    const std::size_t after = before + other.size();
    positions.insert(positions.end(), other.positions.begin(), other.positions.end());

    auto merge = [&](auto& mine, const auto& theirs, auto pad) {
        if (mine.empty() && theirs.empty()) {
            return;
        }
        mine.resize(before, pad);
        if (theirs.empty()) {
            mine.resize(after, pad);
        } else {
            mine.insert(mine.end(), theirs.begin(), theirs.end());
        }
    };
    merge(labels, other.labels, kUnlabeled);
    merge(timestamps, other.timestamps, 0.0);
    merge(frame_ids, other.frame_ids, std::int32_t{-1});
    num_classes = std::max(num_classes, other.num_classes);
}

LabeledPointCloud LabeledPointCloud::select(const std::vector<bool>& keep) const {
    if (keep.size() != positions.size()) {
        throw std::invalid_argument("selection mask length does not match the cloud");
    }
    LabeledPointCloud out;
    out.num_classes = num_classes;
    for (std::size_t i = 0; i < keep.size(); ++i) {
        if (!keep[i]) {
            continue;
        }
        out.positions.push_back(positions[i]);
        if (!labels.empty()) out.labels.push_back(labels[i]);
        if (!timestamps.empty()) out.timestamps.push_back(timestamps[i]);
        if (!frame_ids.empty()) out.frame_ids.push_back(frame_ids[i]);
    }
    return out;
}

}  // namespace voxsplat
