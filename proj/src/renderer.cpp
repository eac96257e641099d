// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#include <voxsplat/parallel.hpp>
#include <voxsplat/renderer.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace voxsplat {
namespace {

struct Splat {
    std::uint32_t index;  // into the input span
    Vec2 mean;
    Mat2 conic;  // inverse projected covariance
    double depth;
    double opacity;
    Vec3 color;
    double cutoff;  // Mahalanobis^2 beyond which the weight drops below min_weight
};

struct Binning {
    std::vector<Splat> splats;                     // depth-sorted
    std::vector<std::vector<std::uint32_t>> tiles;  // per tile, indices into splats (sorted)
    int tiles_x = 0;
    int tiles_y = 0;
};

Mat3 camera_rotation(const Camera& cam) { return cam.world_from_camera.rotation.transpose(); }

Binning bin_gaussians(std::span<const Gaussian> gaussians, const Camera& cam, const RenderOptions& opt) {
    cam.validate();
    if (opt.tile_size < 1) {
        throw std::invalid_argument("tile size must be positive");
    }
    Binning b;
    b.tiles_x = (cam.width + opt.tile_size - 1) / opt.tile_size;
    b.tiles_y = (cam.height + opt.tile_size - 1) / opt.tile_size;
    b.tiles.resize(static_cast<std::size_t>(b.tiles_x) * b.tiles_y);

    std::vector<std::optional<Splat>> projected(gaussians.size());
    parallel_for((gaussians.size() + 1023) / 1024, [&](std::size_t block) {
        const std::size_t end = std::min(gaussians.size(), (block + 1) * 1024);
        for (std::size_t i = block * 1024; i < end; ++i) {
            const Gaussian& g = gaussians[i];
            if (!(g.opacity > opt.min_weight)) {
                continue;
            }
            const auto p = project_gaussian(g, cam, opt);
            if (!p) {
                continue;
            }
            const double cutoff = 2.0 * std::log(g.opacity / opt.min_weight);
            projected[i] = Splat{static_cast<std::uint32_t>(i), p->mean, p->cov.inverse(), p->depth, g.opacity,
                                 g.color, cutoff};
        }
    });
    for (auto& p : projected) {
        if (p) {
            b.splats.push_back(*p);
        }
    }
    std::stable_sort(b.splats.begin(), b.splats.end(), [](const Splat& a, const Splat& c) {
        return a.depth < c.depth || (a.depth == c.depth && a.index < c.index);
    });

    for (std::size_t s = 0; s < b.splats.size(); ++s) {
        const Splat& sp = b.splats[s];
        const Mat2 cov = sp.conic.inverse();
        // Exact axis-aligned extent of the ellipse {d : d^T conic d <= cutoff}.
        const double rx = std::sqrt(sp.cutoff * cov(0, 0));
        const double ry = std::sqrt(sp.cutoff * cov(1, 1));
        const double x0 = std::ceil(sp.mean.x() - rx - 0.5);
        const double x1 = std::floor(sp.mean.x() + rx - 0.5);
        const double y0 = std::ceil(sp.mean.y() - ry - 0.5);
        const double y1 = std::floor(sp.mean.y() + ry - 0.5);
        if (!(x1 >= 0.0 && y1 >= 0.0 && x0 <= cam.width - 1 && y0 <= cam.height - 1)) {
            continue;
        }
        const int px0 = static_cast<int>(std::max(0.0, x0));
        const int px1 = static_cast<int>(std::min<double>(cam.width - 1, x1));
        const int py0 = static_cast<int>(std::max(0.0, y0));
        const int py1 = static_cast<int>(std::min<double>(cam.height - 1, y1));
        for (int ty = py0 / opt.tile_size; ty <= py1 / opt.tile_size; ++ty) {
            for (int tx = px0 / opt.tile_size; tx <= px1 / opt.tile_size; ++tx) {
                b.tiles[static_cast<std::size_t>(ty) * b.tiles_x + tx].push_back(static_cast<std::uint32_t>(s));
            }
        }
    }
    return b;
}

struct Weight {
    double w = 0.0;
    double mahal = 0.0;
    Vec2 d = Vec2::Zero();
    bool clamped = false;
};

// Compositing weight of `sp` at pixel center `p`; w = 0 outside the support.
Weight evaluate(const Splat& sp, const Vec2& p, const RenderOptions& opt) {
    Weight out;
    out.d = p - sp.mean;
    out.mahal = out.d.dot(sp.conic * out.d);
    if (!(out.mahal <= sp.cutoff)) {
        return out;
    }
    out.w = sp.opacity * std::exp(-0.5 * out.mahal);
    if (out.w > opt.max_weight) {
        out.w = opt.max_weight;
        out.clamped = true;
    }
    return out;
}

void check_background(const Image& background, const Camera& cam) {
    if (background.width() != cam.width || background.height() != cam.height || background.channels() != 3) {
        throw std::invalid_argument("background must be a W x H x 3 image matching the camera");
    }
}

template <typename Fn>
void for_each_tile(const Binning& b, const Camera& cam, const RenderOptions& opt, Fn&& fn) {
    parallel_for(b.tiles.size(), [&](std::size_t t) {
        const int tx = static_cast<int>(t % b.tiles_x);
        const int ty = static_cast<int>(t / b.tiles_x);
        const int x0 = tx * opt.tile_size;
        const int y0 = ty * opt.tile_size;
        const int x1 = std::min(cam.width, x0 + opt.tile_size);
        const int y1 = std::min(cam.height, y0 + opt.tile_size);
        fn(t, x0, y0, x1, y1);
    });
}

// dR/dq for R = quat2rot evaluated at a unit quaternion, contracted with G.
Vec4 rotation_vjp(const Vec4& q, const Mat3& g) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    Mat3 dw, dx, dy, dz;
    dw << 0, -z, y, z, 0, -x, -y, x, 0;
    dx << 0, y, z, y, -2 * x, -w, z, w, -2 * x;
    dy << -2 * y, x, w, x, 0, z, -w, z, -2 * y;
    dz << -2 * z, -w, x, w, -2 * z, y, x, y, 0;
    return 2.0 * Vec4((g.array() * dw.array()).sum(), (g.array() * dx.array()).sum(),
                      (g.array() * dy.array()).sum(), (g.array() * dz.array()).sum());
}

struct ScreenGradient {
    Vec2 mean = Vec2::Zero();
    Mat2 conic = Mat2::Zero();
    double opacity = 0.0;
    Vec3 color = Vec3::Zero();

    ScreenGradient& operator+=(const ScreenGradient& o) {
        mean += o.mean;
        conic += o.conic;
        opacity += o.opacity;
        color += o.color;
        return *this;
    }
};

// Pulls screen-space partials back to the Gaussian's 3D parameters.
GaussianGradient backprop_projection(const Gaussian& g, const Camera& cam, const ScreenGradient& sg,
                                     const RenderOptions& opt) {
    GaussianGradient out;
    out.opacity = sg.opacity;
    out.color = sg.color;

    const Mat3 w = camera_rotation(cam);
    const Vec3 p = w * (g.mean - cam.world_from_camera.translation);
    const double x = p.x(), y = p.y(), z = p.z();
    const double fx = cam.fx, fy = cam.fy;
    Eigen::Matrix<double, 2, 3> jac;
    jac << fx / z, 0.0, -fx * x / (z * z), 0.0, fy / z, -fy * y / (z * z);
    const Mat3 m = w * g.covariance * w.transpose();
    const Mat2 cov = jac * m * jac.transpose() + opt.cov2d_blur * Mat2::Identity();
    const Mat2 conic = cov.inverse();

    const Mat2 g_cov = -conic * sg.conic * conic;
    const Mat3 g_m = jac.transpose() * g_cov * jac;
    const Eigen::Matrix<double, 2, 3> g_jac = g_cov * jac * m.transpose() + g_cov.transpose() * jac * m;
    out.covariance = w.transpose() * g_m * w;

    Vec3 g_p;
    g_p.x() = sg.mean.x() * fx / z + g_jac(0, 2) * (-fx / (z * z));
    g_p.y() = sg.mean.y() * fy / z + g_jac(1, 2) * (-fy / (z * z));
    g_p.z() = sg.mean.x() * (-fx * x / (z * z)) + sg.mean.y() * (-fy * y / (z * z)) +
              g_jac(0, 0) * (-fx / (z * z)) + g_jac(0, 2) * (2.0 * fx * x / (z * z * z)) +
              g_jac(1, 1) * (-fy / (z * z)) + g_jac(1, 2) * (2.0 * fy * y / (z * z * z));
    out.mean = w.transpose() * g_p;

    const Mat3 r = quat2rot(g.rotation);
    const Mat3& gs = out.covariance;
    for (int i = 0; i < 3; ++i) {
        out.scale[i] = 2.0 * g.scale[i] * r.col(i).dot(gs * r.col(i));
    }
    const Vec3 s2 = g.scale.array().square();
    const Mat3 g_r = (gs + gs.transpose()) * r * s2.asDiagonal();
    const Vec4 q = g.rotation / g.rotation.norm();
    const Vec4 g_q = rotation_vjp(q, g_r);
    out.rotation = g_q - q * q.dot(g_q);
    (void)opt;
    return out;
}

}  // namespace

std::optional<ProjectedGaussian> project_gaussian(const Gaussian& g, const Camera& cam, const RenderOptions& opt) {
    const Mat3 w = camera_rotation(cam);
    const Vec3 p = w * (g.mean - cam.world_from_camera.translation);
    if (!(p.z() > opt.near_clip)) {
        return std::nullopt;
    }
    const double z = p.z();
    Eigen::Matrix<double, 2, 3> jac;
    jac << cam.fx / z, 0.0, -cam.fx * p.x() / (z * z), 0.0, cam.fy / z, -cam.fy * p.y() / (z * z);
    ProjectedGaussian out;
    out.mean = Vec2(cam.fx * p.x() / z + cam.cx, cam.fy * p.y() / z + cam.cy);
    out.cov = jac * (w * g.covariance * w.transpose()) * jac.transpose() + opt.cov2d_blur * Mat2::Identity();
    out.depth = z;
    return out;
}

RenderTarget rasterize(std::span<const Gaussian> gaussians, const Camera& cam, const Image& background,
                       const RenderOptions& opt) {
    check_background(background, cam);
    const Binning b = bin_gaussians(gaussians, cam, opt);
    RenderTarget out{Image(cam.width, cam.height, 3), Image(cam.width, cam.height, 1),
                     Image(cam.width, cam.height, 3)};
    for_each_tile(b, cam, opt, [&](std::size_t t, int x0, int y0, int x1, int y1) {
        const auto& list = b.tiles[t];
        for (int py = y0; py < y1; ++py) {
            for (int px = x0; px < x1; ++px) {
                const Vec2 p(px + 0.5, py + 0.5);
                double transmittance = 1.0;
                Vec3 fg = Vec3::Zero();
                for (const std::uint32_t s : list) {
                    const Weight wt = evaluate(b.splats[s], p, opt);
                    if (wt.w == 0.0) {
                        continue;
                    }
                    fg += (wt.w * transmittance) * b.splats[s].color;
                    transmittance *= 1.0 - wt.w;
                }
                for (int c = 0; c < 3; ++c) {
                    out.foreground.at(px, py, c) = fg[c];
                    out.color.at(px, py, c) = fg[c] + transmittance * background.at(px, py, c);
                }
                out.alpha.at(px, py) = 1.0 - transmittance;
            }
        }
    });
    return out;
}

RenderTarget rasterize(const VoxSplatScene& scene, const Camera& cam, const Image& background,
                       const RenderOptions& opt) {
    return rasterize(scene.gaussians, cam, background, opt);
}

RenderGradients rasterize_backward(std::span<const Gaussian> gaussians, const Camera& cam, const Image& background,
                                   const Image& loss_grad, const Image* alpha_grad, const RenderOptions& opt) {
    check_background(background, cam);
    if (loss_grad.width() != cam.width || loss_grad.height() != cam.height || loss_grad.channels() != 3) {
        throw std::invalid_argument("loss gradient must be a W x H x 3 image matching the camera");
    }
    if (alpha_grad && (alpha_grad->width() != cam.width || alpha_grad->height() != cam.height ||
                       alpha_grad->channels() != 1)) {
        throw std::invalid_argument("alpha gradient must be a W x H x 1 image matching the camera");
    }
    const Binning b = bin_gaussians(gaussians, cam, opt);

    // Per-tile partials, indexed like the tile's splat list.
    std::vector<std::vector<ScreenGradient>> tile_grads(b.tiles.size());
    for_each_tile(b, cam, opt, [&](std::size_t t, int x0, int y0, int x1, int y1) {
        const auto& list = b.tiles[t];
        auto& grads = tile_grads[t];
        grads.assign(list.size(), ScreenGradient{});
        struct Hit {
            std::uint32_t slot;
            Weight wt;
            double transmittance;
        };
        std::vector<Hit> hits;
        for (int py = y0; py < y1; ++py) {
            for (int px = x0; px < x1; ++px) {
                const Vec2 p(px + 0.5, py + 0.5);
                hits.clear();
                double transmittance = 1.0;
                for (std::uint32_t slot = 0; slot < list.size(); ++slot) {
                    const Weight wt = evaluate(b.splats[list[slot]], p, opt);
                    if (wt.w == 0.0) {
                        continue;
                    }
                    hits.push_back({slot, wt, transmittance});
                    transmittance *= 1.0 - wt.w;
                }
                if (hits.empty()) {
                    continue;
                }
                const Vec3 g_color(loss_grad.at(px, py, 0), loss_grad.at(px, py, 1), loss_grad.at(px, py, 2));
                const double g_alpha = alpha_grad ? alpha_grad->at(px, py) : 0.0;
                // Back to front: `behind` is the normalized color seen through
                // everything after the current splat, `clear` the product of
                // (1 - w) over those splats.
                Vec3 behind(background.at(px, py, 0), background.at(px, py, 1), background.at(px, py, 2));
                double clear = 1.0;
                for (auto it = hits.rbegin(); it != hits.rend(); ++it) {
                    const Splat& sp = b.splats[list[it->slot]];
                    const double w = it->wt.w;
                    ScreenGradient& sg = grads[it->slot];
                    sg.color += (w * it->transmittance) * g_color;
                    const double g_w = it->transmittance * (g_color.dot(sp.color - behind) + g_alpha * clear);
                    if (!it->wt.clamped) {
                        sg.opacity += g_w * w / sp.opacity;
                        sg.mean += (g_w * w) * (sp.conic * it->wt.d);
                        sg.conic += (-0.5 * g_w * w) * (it->wt.d * it->wt.d.transpose());
                    }
                    behind = w * sp.color + (1.0 - w) * behind;
                    clear *= 1.0 - w;
                }
            }
        }
    });

    // Reduce in tile order so the sums are reproducible.
    std::vector<ScreenGradient> screen(b.splats.size());
    for (std::size_t t = 0; t < b.tiles.size(); ++t) {
        for (std::size_t slot = 0; slot < b.tiles[t].size(); ++slot) {
            screen[b.tiles[t][slot]] += tile_grads[t][slot];
        }
    }

    RenderGradients out;
    out.decoded.assign(gaussians.size(), GaussianGradient{});
    parallel_for(b.splats.size(), [&](std::size_t s) {
        const Splat& sp = b.splats[s];
        out.decoded[sp.index] = backprop_projection(gaussians[sp.index], cam, screen[s], opt);
    });
    return out;
}

RenderGradients rasterize_backward(const VoxSplatScene& scene, const Camera& cam, const Image& background,
                                   const Image& loss_grad, const Image* alpha_grad, const RenderOptions& opt) {
    RenderGradients out = rasterize_backward(scene.gaussians, cam, background, loss_grad, alpha_grad, opt);
    out.raw.resize(scene.gaussians.size());
    const int m = scene.raw.per_voxel;
    for (std::size_t n = 0; n < scene.gaussians.size(); ++n) {
        out.raw[n] = backprop_activation(scene.raw.record(n / m, static_cast<int>(n % m)), scene.radius,
                                         out.decoded[n]);
    }
    return out;
}

RawGaussian backprop_activation(std::span<const double> raw, double radius, const GaussianGradient& grad) {
    using namespace raw_layout;
    RawGaussian out{};
    for (int a = 0; a < 3; ++a) {
        const double t = std::tanh(raw[kMean + a]);
        out[kMean + a] = grad.mean[a] * radius * (1.0 - t * t);
        out[kScale + a] = grad.scale[a] * std::exp(raw[kScale + a]);
        out[kColor + a] = grad.color[a];
    }
    const double alpha = sigmoid(raw[kOpacity]);
    out[kOpacity] = grad.opacity * alpha * (1.0 - alpha);
    const Vec4 q(raw[kRotation], raw[kRotation + 1], raw[kRotation + 2], raw[kRotation + 3]);
    const double n = q.norm();
    if (n < kMinQuaternionNorm) {
        return out;
    }
    // grad.rotation is already tangent to the unit sphere at q / |q|.
    for (int k = 0; k < 4; ++k) {
        out[kRotation + k] = grad.rotation[k] / n;
    }
    return out;
}

DepthImage render_depth(std::span<const Gaussian> gaussians, const Camera& cam, const RenderOptions& opt) {
    const Binning b = bin_gaussians(gaussians, cam, opt);
    DepthImage out{Image(cam.width, cam.height, 1), std::vector<bool>(static_cast<std::size_t>(cam.width) * cam.height)};
    std::vector<char> valid(out.valid.size(), 0);
    for_each_tile(b, cam, opt, [&](std::size_t t, int x0, int y0, int x1, int y1) {
        const auto& list = b.tiles[t];
        for (int py = y0; py < y1; ++py) {
            for (int px = x0; px < x1; ++px) {
                const Vec2 p(px + 0.5, py + 0.5);
                double transmittance = 1.0;
                double weighted = 0.0;
                double mass = 0.0;
                for (const std::uint32_t s : list) {
                    const Weight wt = evaluate(b.splats[s], p, opt);
                    if (wt.w == 0.0) {
                        continue;
                    }
                    weighted += wt.w * transmittance * b.splats[s].depth;
                    mass += wt.w * transmittance;
                    transmittance *= 1.0 - wt.w;
                }
                const double alpha = 1.0 - transmittance;
                const std::size_t idx = static_cast<std::size_t>(py) * cam.width + px;
                if (alpha >= DepthImage::kMinAlpha) {
                    out.depth.at(px, py) = weighted / mass;
                    valid[idx] = 1;
                } else {
                    out.depth.at(px, py) = std::numeric_limits<double>::quiet_NaN();
                }
            }
        }
    });
    std::copy(valid.begin(), valid.end(), out.valid.begin());
    return out;
}

}  // namespace voxsplat
