// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <voxsplat/camera.hpp>
#include <voxsplat/image.hpp>

#include <cstdint>
#include <span>
#include <vector>

namespace voxsplat {

/// Equirectangular raster over view directions with +z as world up.
/// Azimuth atan2(y, x) in (-pi, pi] maps to u in [0, W); elevation
/// asin(z) in [-pi/2, pi/2] maps to v with the zenith on row 0.
struct SkyPanorama {
    Image data;                     // W_p x H_p x C_p
    std::vector<std::uint8_t> covered;  // 1 where at least one view contributed
    double fill = 0.5;              // value sampled for uncovered texels

    int width() const { return data.width(); }
    int height() const { return data.height(); }
    int channels() const { return data.channels(); }
    bool is_covered(int x, int y) const { return covered[static_cast<std::size_t>(y) * width() + x] != 0; }
    std::size_t uncovered_count() const;
};

/// Continuous panorama coordinates of a direction. Throws
/// std::invalid_argument for the zero vector. Non-unit inputs are normalized.
Vec2 dir_to_pixel(const Vec3& d, int width, int height);
Vec3 pixel_to_dir(const Vec2& uv, int width, int height);

/// One input view for the panorama: image, binary sky mask (1 = sky) and
/// camera. Only the camera rotation is used.
struct SkyView {
    const Image* image = nullptr;
    const Image* mask = nullptr;
    Camera camera;
};

/// Projects every texel direction into each view with translation zeroed,
/// taking the nearest pixel where the mask marks sky; overlaps are averaged.
/// Throws std::invalid_argument when `views` is empty.
SkyPanorama build_panorama(std::span<const SkyView> views, int height, int width, double fill = 0.5);

/// Bilinear lookup for every pixel ray of `cam` (rotation only) with
/// wrap-around across the azimuth seam and clamping at the poles.
Image sample_background(const SkyPanorama& pano, const Camera& cam);

/// Bilinear lookup for a single direction.
std::vector<double> sample_direction(const SkyPanorama& pano, const Vec3& d);

}  // namespace voxsplat
