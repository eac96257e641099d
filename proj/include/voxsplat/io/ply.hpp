// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <voxsplat/point_cloud.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace voxsplat::io {

enum class PlyType : std::uint8_t { kInt8, kUInt8, kInt16, kUInt16, kInt32, kUInt32, kFloat32, kFloat64 };

/// One element block with scalar properties stored column-wise as doubles.
/// List properties are parsed and dropped.
struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<std::string> names;
    std::vector<PlyType> types;
    std::vector<std::vector<double>> columns;

    std::optional<std::size_t> find(std::string_view property) const;
    /// Column of the named property; throws ParseError naming it when absent.
    const std::vector<double>& column(std::string_view property) const;
    void add(std::string property, PlyType type, std::vector<double> values);
};

struct PlyData {
    std::vector<PlyElement> elements;

    const PlyElement* find(std::string_view element) const;
};

/// Parses ascii and binary (either endianness) PLY.
PlyData parse_ply(std::span<const std::uint8_t> bytes);
/// Binary little-endian encoding.
std::vector<std::uint8_t> encode_ply(const PlyData& data);

PlyData read_ply(const std::string& path);
void write_ply(const std::string& path, const PlyData& data);

/// Point cloud layout: x, y, z (double) plus optional `label` (int32),
/// `timestamp` (double), `frame` (int32) and any extra float columns.
PlyData point_cloud_to_ply(const LabeledPointCloud& cloud);
/// Reads x, y, z and, when present, label/semantic/class, timestamp, frame.
LabeledPointCloud point_cloud_from_ply(const PlyData& data, int num_classes = 0);

}  // namespace voxsplat::io
