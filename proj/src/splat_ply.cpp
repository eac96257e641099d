// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#include <voxsplat/splat_ply.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace voxsplat {
namespace {

// Keeps the logit finite when the stored opacity saturated to 0 or 1.
constexpr double kOpacityEps = 1e-15;

}  // namespace

io::PlyData splats_to_ply(std::span<const Gaussian> gaussians, SplatPrecision precision) {
    const auto type = precision == SplatPrecision::kFloat64 ? io::PlyType::kFloat64 : io::PlyType::kFloat32;
    const std::size_t n = gaussians.size();
    io::PlyElement e;
    e.name = "vertex";
    e.count = n;
    auto column = [&](auto&& fn) {
        std::vector<double> col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = fn(gaussians[i]);
        return col;
    };
    for (int a = 0; a < 3; ++a) {
        e.add(std::string(1, "xyz"[a]), type, column([a](const Gaussian& g) { return g.mean[a]; }));
    }
    for (const char* name : {"nx", "ny", "nz"}) {
        e.add(name, type, std::vector<double>(n, 0.0));
    }
    for (int c = 0; c < 3; ++c) {
        e.add("f_dc_" + std::to_string(c), type,
              column([c](const Gaussian& g) { return (g.color[c] - 0.5) / kShC0; }));
    }
    e.add("opacity", type, column([](const Gaussian& g) {
              const double a = std::clamp(g.opacity, kOpacityEps, 1.0 - kOpacityEps);
              return std::log(a / (1.0 - a));
          }));
    for (int a = 0; a < 3; ++a) {
        e.add("scale_" + std::to_string(a), type, column([a](const Gaussian& g) { return std::log(g.scale[a]); }));
    }
    for (int q = 0; q < 4; ++q) {
        e.add("rot_" + std::to_string(q), type, column([q](const Gaussian& g) { return g.rotation[q]; }));
    }
    io::PlyData data;
    data.elements.push_back(std::move(e));
    return data;
}

std::vector<std::uint8_t> export_ply(const VoxSplatScene& scene, SplatPrecision precision) {
    return io::encode_ply(splats_to_ply(scene.gaussians, precision));
}

std::vector<Gaussian> splats_from_ply(const io::PlyData& data) {
    const io::PlyElement* v = data.find("vertex");
    if (!v) {
        throw ParseError("PLY has no vertex element", 0);
    }
    const auto& x = v->column("x");
    const auto& y = v->column("y");
    const auto& z = v->column("z");
    const std::vector<double>* dc[3];
    const std::vector<double>* scale[3];
    const std::vector<double>* rot[4];
    for (int c = 0; c < 3; ++c) {
        dc[c] = &v->column("f_dc_" + std::to_string(c));
        scale[c] = &v->column("scale_" + std::to_string(c));
    }
    const auto& opacity = v->column("opacity");
    for (int q = 0; q < 4; ++q) {
        rot[q] = &v->column("rot_" + std::to_string(q));
    }
    std::vector<Gaussian> out(v->count);
    for (std::size_t i = 0; i < v->count; ++i) {
        Gaussian& g = out[i];
        g.mean = Vec3(x[i], y[i], z[i]);
        for (int c = 0; c < 3; ++c) {
            g.color[c] = (*dc[c])[i] * kShC0 + 0.5;
            g.scale[c] = std::exp((*scale[c])[i]);
        }
        g.opacity = sigmoid(opacity[i]);
        const Vec4 q((*rot[0])[i], (*rot[1])[i], (*rot[2])[i], (*rot[3])[i]);
        const double n = q.norm();
        if (!(n >= 1e-8)) {
            throw DegenerateQuaternion("splat " + std::to_string(i) + " has a zero rotation quaternion");
        }
        g.rotation = q / n;
        g.update_covariance();
    }
    return out;
}

std::vector<Gaussian> import_ply(std::span<const std::uint8_t> bytes) {
    return splats_from_ply(io::parse_ply(bytes));
}

}  // namespace voxsplat
