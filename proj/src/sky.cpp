// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#include <voxsplat/parallel.hpp>
#include <voxsplat/sky.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace voxsplat {
namespace {

constexpr double kPi = std::numbers::pi;

// Texel value, with uncovered texels replaced by the fill value.
double texel(const SkyPanorama& pano, int x, int y, int c) {
    return pano.is_covered(x, y) ? pano.data.at(x, y, c) : pano.fill;
}

void sample_into(const SkyPanorama& pano, const Vec3& d, std::span<double> out) {
    const int w = pano.width();
    const int h = pano.height();
    const Vec2 uv = dir_to_pixel(d, w, h);
    // Texel centers sit at half-integer coordinates.
    const double fx = uv.x() - 0.5;
    const double fy = std::clamp(uv.y() - 0.5, 0.0, static_cast<double>(h - 1));
    const double x0f = std::floor(fx);
    const double y0f = std::floor(fy);
    const double tx = fx - x0f;
    const double ty = fy - y0f;
    auto wrap = [w](long x) { return static_cast<int>(((x % w) + w) % w); };
    const int x0 = wrap(static_cast<long>(x0f));
    const int x1 = wrap(static_cast<long>(x0f) + 1);
    const int y0 = static_cast<int>(y0f);
    const int y1 = std::min(y0 + 1, h - 1);
    for (int c = 0; c < pano.channels(); ++c) {
        const double top = lerp(texel(pano, x0, y0, c), texel(pano, x1, y0, c), tx);
        const double bottom = lerp(texel(pano, x0, y1, c), texel(pano, x1, y1, c), tx);
        out[c] = lerp(top, bottom, ty);
    }
}

}  // namespace

std::size_t SkyPanorama::uncovered_count() const {
    return static_cast<std::size_t>(std::count(covered.begin(), covered.end(), std::uint8_t{0}));
}

Vec2 dir_to_pixel(const Vec3& d, int width, int height) {
    const double n = d.norm();
    if (!(n > 0.0)) {
        throw std::invalid_argument("direction must be non-zero");
    }
    const Vec3 u = d / n;
    const double azimuth = std::atan2(u.y(), u.x());
    const double elevation = std::asin(std::clamp(u.z(), -1.0, 1.0));
    return {(azimuth + kPi) / (2.0 * kPi) * width, (kPi / 2.0 - elevation) / kPi * height};
}

Vec3 pixel_to_dir(const Vec2& uv, int width, int height) {
    const double azimuth = uv.x() / width * 2.0 * kPi - kPi;
    const double elevation = kPi / 2.0 - uv.y() / height * kPi;
    const double c = std::cos(elevation);
    return {c * std::cos(azimuth), c * std::sin(azimuth), std::sin(elevation)};
}

SkyPanorama build_panorama(std::span<const SkyView> views, int height, int width, double fill) {
    if (views.empty()) {
        throw std::invalid_argument("panorama needs at least one view");
    }
    if (height < 1 || width < 1) {
        throw std::invalid_argument("panorama size must be at least 1x1");
    }
    const int channels = views.front().image ? views.front().image->channels() : 0;
    for (const SkyView& v : views) {
        v.camera.validate();
        if (!v.image || !v.mask) {
            throw std::invalid_argument("every sky view needs an image and a mask");
        }
        if (v.image->width() != v.camera.width || v.image->height() != v.camera.height ||
            v.mask->width() != v.camera.width || v.mask->height() != v.camera.height) {
            throw std::invalid_argument("sky view image/mask size does not match its camera");
        }
        if (v.image->channels() != channels) {
            throw std::invalid_argument("sky views disagree on the channel count");
        }
    }
    SkyPanorama pano{Image(width, height, channels), std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height),
                     fill};
    std::vector<Mat3> camera_from_world;
    for (const SkyView& v : views) {
        camera_from_world.push_back(v.camera.world_from_camera.rotation.transpose());
    }
    parallel_for(static_cast<std::size_t>(height), [&](std::size_t row) {
        const int y = static_cast<int>(row);
        std::vector<double> sum(channels);
        for (int x = 0; x < width; ++x) {
            const Vec3 d = pixel_to_dir({x + 0.5, y + 0.5}, width, height);
            std::fill(sum.begin(), sum.end(), 0.0);
            int count = 0;
            for (std::size_t i = 0; i < views.size(); ++i) {
                const Camera& cam = views[i].camera;
                const Vec3 p = camera_from_world[i] * d;
                if (!(p.z() > 0.0)) {
                    continue;
                }
                const double u = cam.fx * p.x() / p.z() + cam.cx;
                const double v = cam.fy * p.y() / p.z() + cam.cy;
                if (!cam.in_frame(u, v)) {
                    continue;
                }
                const int px = static_cast<int>(u);
                const int py = static_cast<int>(v);
                if (!(views[i].mask->at(px, py) > 0.5)) {
                    continue;
                }
                for (int c = 0; c < channels; ++c) {
                    sum[c] += views[i].image->at(px, py, c);
                }
                ++count;
            }
            if (count > 0) {
                for (int c = 0; c < channels; ++c) {
                    pano.data.at(x, y, c) = count == 1 ? sum[c] : sum[c] / count;
                }
                pano.covered[static_cast<std::size_t>(y) * width + x] = 1;
            }
        }
    });
    return pano;
}

Image sample_background(const SkyPanorama& pano, const Camera& cam) {
    cam.validate();
    Image out(cam.width, cam.height, pano.channels());
    const Mat3& rot = cam.world_from_camera.rotation;
    parallel_for(static_cast<std::size_t>(cam.height), [&](std::size_t row) {
        const int y = static_cast<int>(row);
        for (int x = 0; x < cam.width; ++x) {
            const Vec3 d = rot * cam.ray_camera(x + 0.5, y + 0.5).normalized();
            sample_into(pano, d, out.pixel(x, y));
        }
    });
    return out;
}

std::vector<double> sample_direction(const SkyPanorama& pano, const Vec3& d) {
    std::vector<double> out(pano.channels());
    sample_into(pano, d, out);
    return out;
}

}  // namespace voxsplat
