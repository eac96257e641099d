// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#include <voxsplat/checks/oracles.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

namespace voxsplat::checks {
namespace {

struct Footprint {
    double depth;
    std::size_t index;
    Vec2 mean;
    Mat2 inv_cov;
};

std::optional<Footprint> footprint(const Gaussian& g, std::size_t index, const Camera& cam,
                                   const RenderOptions& options) {
    const Mat3 world_to_cam = cam.world_from_camera.rotation.transpose();
    const Vec3 p = world_to_cam * (g.mean - cam.world_from_camera.translation);
    if (!(p.z() > options.near_clip)) {
        return std::nullopt;
    }
    const double x = p.x();
    const double y = p.y();
    const double z = p.z();
    Eigen::Matrix<double, 2, 3> j;
    j(0, 0) = cam.fx / z;
    j(0, 1) = 0.0;
    j(0, 2) = -cam.fx * x / (z * z);
    j(1, 0) = 0.0;
    j(1, 1) = cam.fy / z;
    j(1, 2) = -cam.fy * y / (z * z);
    const Mat3 cov_cam = world_to_cam * g.covariance * world_to_cam.transpose();
    Mat2 cov = j * cov_cam * j.transpose();
    cov(0, 0) += options.cov2d_blur;
    cov(1, 1) += options.cov2d_blur;
    const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(1, 0);
    Mat2 inv;
    inv << cov(1, 1) / det, -cov(0, 1) / det, -cov(1, 0) / det, cov(0, 0) / det;
    return Footprint{z, index, Vec2(cam.fx * x / z + cam.cx, cam.fy * y / z + cam.cy), inv};
}

}  // namespace

RenderTarget brute_force_render(std::span<const Gaussian> gaussians, const Camera& cam, const Image& background,
                                const RenderOptions& options) {
    std::vector<Footprint> order;
    for (std::size_t i = 0; i < gaussians.size(); ++i) {
        if (auto f = footprint(gaussians[i], i, cam, options)) {
            order.push_back(*f);
        }
    }
    std::sort(order.begin(), order.end(),
              [](const Footprint& a, const Footprint& b) { return std::tie(a.depth, a.index) < std::tie(b.depth, b.index); });

    RenderTarget out{Image(cam.width, cam.height, 3), Image(cam.width, cam.height, 1), Image(cam.width, cam.height, 3)};
    for (int py = 0; py < cam.height; ++py) {
        for (int px = 0; px < cam.width; ++px) {
            const Vec2 center(px + 0.5, py + 0.5);
            double transmittance = 1.0;
            Vec3 accum = Vec3::Zero();
            for (const auto& f : order) {
                const Vec2 d = center - f.mean;
                const double w = std::min(
                    options.max_weight, gaussians[f.index].opacity * std::exp(-0.5 * d.dot(f.inv_cov * d)));
                accum += transmittance * w * gaussians[f.index].color;
                transmittance *= 1.0 - w;
            }
            for (int c = 0; c < 3; ++c) {
                out.foreground.at(px, py, c) = accum[c];
                out.color.at(px, py, c) = accum[c] + transmittance * background.at(px, py, c);
            }
            out.alpha.at(px, py) = 1.0 - transmittance;
        }
    }
    return out;
}

double richardson_derivative(const std::function<double(double)>& f, double x, double h) {
    const double d1 = (f(x + h) - f(x - h)) / (2.0 * h);
    const double d2 = (f(x + 0.5 * h) - f(x - 0.5 * h)) / h;
    return (4.0 * d2 - d1) / 3.0;
}

double linear_loss(std::span<const Gaussian> gaussians, const Camera& cam, const Image& background,
                   const Image& loss_grad, const Image& alpha_grad, const RenderOptions& options) {
    const RenderTarget r = brute_force_render(gaussians, cam, background, options);
    double loss = 0.0;
    for (std::size_t i = 0; i < r.color.data().size(); ++i) {
        loss += loss_grad.data()[i] * r.color.data()[i];
    }
    for (std::size_t i = 0; i < r.alpha.data().size(); ++i) {
        loss += alpha_grad.data()[i] * r.alpha.data()[i];
    }
    return loss;
}

std::vector<RawGaussian> finite_difference_raw(const VoxSplatScene& scene, const Camera& cam,
                                               const Image& background, const Image& loss_grad,
                                               const Image& alpha_grad, double h, const RenderOptions& options) {
    std::vector<RawGaussian> out(scene.gaussians.size());
    std::vector<Gaussian> work = scene.gaussians;
    const int m = scene.raw.per_voxel;
    for (std::size_t n = 0; n < work.size(); ++n) {
        const std::size_t voxel = n / m;
        const auto record = scene.raw.record(voxel, static_cast<int>(n % m));
        const Vec3 center = scene.grid.meta().voxel_center(scene.grid.coords()[voxel]);
        RawGaussian raw;
        std::copy(record.begin(), record.end(), raw.begin());
        for (int k = 0; k < raw_layout::kWidth; ++k) {
            auto f = [&](double x) {
                RawGaussian probe = raw;
                probe[k] = x;
                work[n] = decode_gaussian(probe, center, scene.radius);
                return linear_loss(work, cam, background, loss_grad, alpha_grad, options);
            };
            out[n][k] = richardson_derivative(f, raw[k], h);
        }
        work[n] = scene.gaussians[n];
    }
    return out;
}

bool gradients_agree(double analytic, double numeric, double rel, double abs_floor) {
    const double diff = std::abs(analytic - numeric);
    const double mag = std::max(std::abs(analytic), std::abs(numeric));
    if (mag < abs_floor) {
        return diff <= abs_floor;
    }
    return diff <= rel * mag;
}

std::map<VoxelCoord, int> brute_force_voxelize(const LabeledPointCloud& cloud, const GridMeta& meta) {
    std::map<VoxelCoord, std::map<int, int>> counts;
    for (std::size_t p = 0; p < cloud.size(); ++p) {
        const Vec3 rel = (cloud.positions[p] - meta.origin) / meta.voxel_size;
        const VoxelCoord c{static_cast<std::int32_t>(std::floor(rel.x())), static_cast<std::int32_t>(std::floor(rel.y())),
                           static_cast<std::int32_t>(std::floor(rel.z()))};
        auto& votes = counts[c];
        if (cloud.has_labels() && cloud.labels[p] != kUnlabeled) {
            ++votes[cloud.labels[p]];
        }
    }
    std::map<VoxelCoord, int> out;
    for (const auto& [c, votes] : counts) {
        int best = -1;
        int best_count = 0;
        for (const auto& [label, n] : votes) {
            if (n > best_count) {
                best = label;
                best_count = n;
            }
        }
        out[c] = best;
    }
    return out;
}

std::optional<RayHit> brute_force_first_hit(const SparseVoxelGrid& grid, const Vec3& origin, const Vec3& dir,
                                            double t_max) {
    std::optional<RayHit> best;
    const double s = grid.meta().voxel_size;
    for (const auto& c : grid.coords()) {
        const Vec3 lo = grid.meta().origin + s * Vec3(c.i, c.j, c.k);
        const Vec3 hi = lo + Vec3::Constant(s);
        double t0 = 0.0;
        double t1 = t_max;
        bool miss = false;
        for (int a = 0; a < 3 && !miss; ++a) {
            if (dir[a] == 0.0) {
                miss = origin[a] < lo[a] || origin[a] >= hi[a];
                continue;
            }
            const double ta = (lo[a] - origin[a]) / dir[a];
            const double tb = (hi[a] - origin[a]) / dir[a];
            t0 = std::max(t0, std::min(ta, tb));
            t1 = std::min(t1, std::max(ta, tb));
        }
        if (miss || t0 > t1) {
            continue;
        }
        if (!best || t0 < best->t_enter || (t0 == best->t_enter && c < best->coord)) {
            best = RayHit{c, t0};
        }
    }
    return best;
}

std::vector<std::int32_t> brute_force_propagate(const LabeledPointCloud& cloud) {
    std::vector<std::int32_t> labels = cloud.labels;
    for (std::size_t q = 0; q < cloud.size(); ++q) {
        if (cloud.labels[q] != kUnlabeled) {
            continue;
        }
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t p = 0; p < cloud.size(); ++p) {
            if (cloud.labels[p] == kUnlabeled) {
                continue;
            }
            const double d2 = (cloud.positions[p] - cloud.positions[q]).squaredNorm();
            if (d2 < best) {
                best = d2;
                labels[q] = cloud.labels[p];
            }
        }
    }
    return labels;
}

double brute_force_chamfer(const SparseVoxelGrid& a, const SparseVoxelGrid& b) {
    auto directed = [](const SparseVoxelGrid& from, const SparseVoxelGrid& to) {
        double sum = 0.0;
        for (const auto& c : from.coords()) {
            const Vec3 p = from.meta().voxel_center(c);
            double best = std::numeric_limits<double>::infinity();
            for (const auto& d : to.coords()) {
                best = std::min(best, (p - to.meta().voxel_center(d)).norm());
            }
            sum += best / from.meta().voxel_size;
        }
        return sum / static_cast<double>(from.size());
    };
    return 0.5 * (directed(a, b) + directed(b, a));
}

double reference_ssim(const Image& a, const Image& b, int window, double sigma, double c1, double c2) {
    std::vector<double> w(static_cast<std::size_t>(window) * window);
    const double c = 0.5 * (window - 1);
    double total = 0.0;
    for (int i = 0; i < window; ++i) {
        for (int j = 0; j < window; ++j) {
            const double v = std::exp(-((i - c) * (i - c) + (j - c) * (j - c)) / (2.0 * sigma * sigma));
            w[static_cast<std::size_t>(i) * window + j] = v;
            total += v;
        }
    }
    for (double& v : w) {
        v /= total;
    }
    double sum = 0.0;
    std::size_t count = 0;
    for (int ch = 0; ch < a.channels(); ++ch) {
        for (int y0 = 0; y0 + window <= a.height(); ++y0) {
            for (int x0 = 0; x0 + window <= a.width(); ++x0) {
                double ma = 0.0, mb = 0.0;
                for (int i = 0; i < window; ++i) {
                    for (int j = 0; j < window; ++j) {
                        const double wt = w[static_cast<std::size_t>(i) * window + j];
                        ma += wt * a.at(x0 + j, y0 + i, ch);
                        mb += wt * b.at(x0 + j, y0 + i, ch);
                    }
                }
                double va = 0.0, vb = 0.0, cov = 0.0;
                for (int i = 0; i < window; ++i) {
                    for (int j = 0; j < window; ++j) {
                        const double wt = w[static_cast<std::size_t>(i) * window + j];
                        const double da = a.at(x0 + j, y0 + i, ch) - ma;
                        const double db = b.at(x0 + j, y0 + i, ch) - mb;
                        va += wt * da * da;
                        vb += wt * db * db;
                        cov += wt * da * db;
                    }
                }
                sum += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                ++count;
            }
        }
    }
    return sum / static_cast<double>(count);
}

std::optional<LidarHit> brute_force_lidar(std::span<const Gaussian> gaussians, const Vec3& origin,
                                          const Vec3& dir, double max_range, double lambda) {
    std::optional<LidarHit> best;
    for (std::size_t i = 0; i < gaussians.size(); ++i) {
        const Gaussian& g = gaussians[i];
        const Mat3 r = quat2rot(g.rotation);
        const Vec3 o = (r.transpose() * (origin - g.mean)).cwiseQuotient(g.scale);
        const Vec3 d = (r.transpose() * dir).cwiseQuotient(g.scale);
        const double a = d.squaredNorm();
        const double b = 2.0 * o.dot(d);
        const double c = o.squaredNorm() - lambda * lambda;
        const double disc = b * b - 4.0 * a * c;
        if (c <= 0.0 || disc < 0.0) {
            continue;
        }
        const double t = (-b - std::sqrt(disc)) / (2.0 * a);
        if (t <= 0.0 || t > max_range) {
            continue;
        }
        if (!best || t < best->range) {
            best = LidarHit{t, static_cast<std::int64_t>(i)};
        }
    }
    return best;
}

bool containment_holds(const SparseVoxelGrid& fine, const SparseVoxelGrid& coarse, int factor) {
    for (const auto& c : fine.coords()) {
        const VoxelCoord parent{static_cast<std::int32_t>(std::floor(static_cast<double>(c.i) / factor)),
                                static_cast<std::int32_t>(std::floor(static_cast<double>(c.j) / factor)),
                                static_cast<std::int32_t>(std::floor(static_cast<double>(c.k) / factor))};
        if (!coarse.contains(parent)) {
            return false;
        }
    }
    return true;
}

bool point_in_box(const Vec3& p, const Vec3& center, const Vec3& half_extent, double yaw) {
    const Vec3 d = p - center;
    const double cs = std::cos(yaw);
    const double sn = std::sin(yaw);
    const double x = cs * d.x() + sn * d.y();
    const double y = -sn * d.x() + cs * d.y();
    return std::abs(x) <= half_extent.x() && std::abs(y) <= half_extent.y() && std::abs(d.z()) <= half_extent.z();
}

double cross_entropy(std::span<const double> probs, std::span<const int> targets, int classes) {
    double sum = 0.0;
    int n = 0;
    for (std::size_t row = 0; row < targets.size(); ++row) {
        if (targets[row] < 0) {
            continue;
        }
        sum += -std::log(probs[row * classes + targets[row]]);
        ++n;
    }
    return n > 0 ? sum / n : 0.0;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

Camera random_camera(std::mt19937_64& rng, int width, int height) {
    Camera cam;
    cam.width = width;
    cam.height = height;
    cam.fx = uniform(rng, 0.9, 1.5) * width;
    cam.fy = cam.fx * uniform(rng, 0.9, 1.1);
    cam.cx = 0.5 * width + uniform(rng, -1.0, 1.0);
    cam.cy = 0.5 * height + uniform(rng, -1.0, 1.0);
    Vec4 q;
    do {
        q = Vec4(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
    } while (q.norm() < 0.1);
    cam.world_from_camera = RigidTransform::from_quaternion(q, Vec3(uniform(rng, -5, 5), uniform(rng, -5, 5),
                                                                    uniform(rng, -5, 5)));
    return cam;
}

std::vector<Gaussian> random_gaussians_in_view(std::mt19937_64& rng, const Camera& cam, int count) {
    std::vector<Gaussian> out;
    for (int n = 0; n < count; ++n) {
        Gaussian g;
        const double u = uniform(rng, -2.0, cam.width + 2.0);
        const double v = uniform(rng, -2.0, cam.height + 2.0);
        const double depth = uniform(rng, 2.0, 6.0);
        g.mean = cam.world_from_camera.apply(cam.ray_camera(u, v) * depth);
        g.opacity = uniform(rng, 0.05, 0.95);
        g.scale = Vec3(uniform(rng, 0.05, 0.5), uniform(rng, 0.05, 0.5), uniform(rng, 0.05, 0.5));
        Vec4 q;
        do {
            q = Vec4(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
        } while (q.norm() < 0.1);
        g.rotation = q.normalized();
        g.color = Vec3(uniform(rng, 0, 1), uniform(rng, 0, 1), uniform(rng, 0, 1));
        g.update_covariance();
        out.push_back(g);
    }
    return out;
}

Image random_image(std::mt19937_64& rng, int width, int height, int channels, double lo, double hi) {
    Image img(width, height, channels);
    for (double& v : img.data()) {
        v = uniform(rng, lo, hi);
    }
    return img;
}

}  // namespace voxsplat::checks
