// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#include <voxsplat/metrics.hpp>
#include <voxsplat/parallel.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace voxsplat {
namespace {

void require_same_shape(const Image& a, const Image& b, const char* what) {
    if (!a.same_shape(b) || a.empty()) {
        throw std::invalid_argument(std::string(what) + ": image shapes differ or are empty");
    }
}

double mean_abs_diff(const Image& a, const Image& b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        sum += std::abs(a.data()[i] - b.data()[i]);
    }
    return sum / static_cast<double>(a.data().size());
}

std::vector<double> gaussian_kernel(int size, double sigma) {
    std::vector<double> k(size);
    const double c = 0.5 * (size - 1);
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        k[i] = std::exp(-0.5 * (i - c) * (i - c) / (sigma * sigma));
        sum += k[i];
    }
    for (double& v : k) {
        v /= sum;
    }
    return k;
}

// Valid-mode separable filtering of a W x H plane, returning (W-n+1) x (H-n+1).
std::vector<double> filter_valid(const std::vector<double>& plane, int w, int h, const std::vector<double>& k) {
    const int n = static_cast<int>(k.size());
    const int ow = w - n + 1;
    const int oh = h - n + 1;
    std::vector<double> rows(static_cast<std::size_t>(ow) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) {
                s += k[i] * plane[static_cast<std::size_t>(y) * w + x + i];
            }
            rows[static_cast<std::size_t>(y) * ow + x] = s;
        }
    }
    std::vector<double> out(static_cast<std::size_t>(ow) * oh);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) {
                s += k[i] * rows[static_cast<std::size_t>(y + i) * ow + x];
            }
            out[static_cast<std::size_t>(y) * ow + x] = s;
        }
    }
    return out;
}

// Nearest-neighbour distances (voxel units) from every voxel of `from` to `to`.
std::vector<double> nearest_distances(const SparseVoxelGrid& from, const SparseVoxelGrid& to) {
    const double s = from.meta().voxel_size;
    const Vec3 delta = (from.meta().origin - to.meta().origin) / s;
    const double slack = delta.cwiseAbs().maxCoeff();
    const std::unordered_set<VoxelCoord, VoxelCoordHash> targets(to.coords().begin(), to.coords().end());
    const VoxelBounds tb = *to.occupied_bounds();
    const auto brute_limit = static_cast<std::int64_t>(8 * to.size() + 64);

    std::vector<double> out(from.size());
    parallel_for(from.size(), [&](std::size_t n) {
        const VoxelCoord c = from.coords()[n];
        const Vec3 p(c.i + delta.x(), c.j + delta.y(), c.k + delta.z());
        double best = std::numeric_limits<double>::infinity();
        auto consider = [&](const VoxelCoord& q) {
            best = std::min(best, (p - Vec3(q.i, q.j, q.k)).norm());
        };
        std::int64_t max_ring = 0;
        for (int a = 0; a < 3; ++a) {
            max_ring = std::max<std::int64_t>(
                max_ring, std::max<std::int64_t>(std::abs(std::int64_t{c[a]} - tb.min[a]),
                                                  std::abs(std::int64_t{tb.max[a]} - 1 - c[a])));
        }
        for (std::int64_t r = 0; r <= max_ring; ++r) {
            const std::int64_t side = 2 * r + 1;
            if (side * side * side > brute_limit) {
                for (const auto& q : to.coords()) {
                    consider(q);
                }
                break;
            }
            for (std::int64_t di = -r; di <= r; ++di) {
                for (std::int64_t dj = -r; dj <= r; ++dj) {
                    const bool edge = std::abs(di) == r || std::abs(dj) == r;
                    for (std::int64_t dk = -r; dk <= r; dk += (edge ? 1 : 2 * std::max<std::int64_t>(r, 1))) {
                        const VoxelCoord q{static_cast<std::int32_t>(c.i + di), static_cast<std::int32_t>(c.j + dj),
                                           static_cast<std::int32_t>(c.k + dk)};
                        if (targets.contains(q)) {
                            consider(q);
                        }
                    }
                }
            }
            if (best <= static_cast<double>(r) + 1.0 - slack) {
                break;
            }
        }
        out[n] = best;
    });
    return out;
}

double ordered_mean(const std::vector<double>& values) {
    double sum = 0.0;
    for (const double v : values) {
        sum += v;
    }
    return sum / static_cast<double>(values.size());
}

}  // namespace

void LossWeights::validate() const {
    for (const double w : {depth, l1, alpha, ssim, lpips, focal_gamma}) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw std::invalid_argument("loss weights must be finite and non-negative");
        }
    }
}

double focal_loss(std::span<const double> probs, std::span<const int> targets, int classes, double gamma,
                  std::span<const double> class_weights) {
    if (classes < 1 || probs.size() != targets.size() * static_cast<std::size_t>(classes)) {
        throw std::invalid_argument("focal_loss: probs must hold one distribution per target");
    }
    if (!(gamma >= 0.0)) {
        throw std::invalid_argument("focal_loss: gamma must be >= 0");
    }
    if (!class_weights.empty() && class_weights.size() != static_cast<std::size_t>(classes)) {
        throw std::invalid_argument("focal_loss: class_weights must have one entry per class");
    }
    double sum = 0.0;
    double norm = 0.0;
    for (std::size_t row = 0; row < targets.size(); ++row) {
        const auto dist = probs.subspan(row * classes, classes);
        double total = 0.0;
        for (const double p : dist) {
            if (!(p >= 0.0)) {
                throw std::invalid_argument("focal_loss: probabilities must be non-negative");
            }
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-5) {
            throw std::invalid_argument("focal_loss: each distribution must sum to 1");
        }
        const int t = targets[row];
        if (t < 0) {
            continue;
        }
        if (t >= classes) {
            throw std::invalid_argument("focal_loss: target out of range");
        }
        const double p = std::max(dist[t], kFocalClamp);
        const double w = class_weights.empty() ? 1.0 : class_weights[t];
        sum += w * -std::pow(1.0 - p, gamma) * std::log(p);
        norm += w;
    }
    return norm > 0.0 ? sum / norm : 0.0;
}

AppearanceLoss appearance_loss(const RenderTarget& pred, const Image& gt, const Image& mask,
                               const LossWeights& weights, const LpipsHook& lpips) {
    weights.validate();
    require_same_shape(pred.color, gt, "appearance_loss color");
    require_same_shape(pred.alpha, mask, "appearance_loss alpha");
    if (pred.alpha.width() != gt.width() || pred.alpha.height() != gt.height()) {
        throw std::invalid_argument("appearance_loss: alpha and color sizes differ");
    }
    AppearanceLoss out;
    out.l1 = mean_abs_diff(pred.color, gt);
    out.alpha = mean_abs_diff(pred.alpha, mask);
    out.ssim = ssim(pred.color, gt);
    out.lpips = lpips ? lpips(pred.color, gt) : 0.0;
    out.total = weights.l1 * out.l1 + weights.alpha * out.alpha + weights.ssim * (1.0 - out.ssim) +
                weights.lpips * out.lpips;
    return out;
}

double psnr(const Image& a, const Image& b) {
    require_same_shape(a, b, "psnr");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        sum += d * d;
    }
    const double mse = sum / static_cast<double>(a.data().size());
    if (mse == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return -10.0 * std::log10(mse);
}

double ssim(const Image& a, const Image& b, const SsimOptions& options) {
    require_same_shape(a, b, "ssim");
    const int n = options.window;
    if (n < 1 || a.width() < n || a.height() < n) {
        throw std::invalid_argument("ssim: image smaller than the window");
    }
    const auto kernel = gaussian_kernel(n, options.sigma);
    const int w = a.width();
    const int h = a.height();
    const std::size_t px = a.pixel_count();
    double total = 0.0;
    std::size_t count = 0;
    for (int c = 0; c < a.channels(); ++c) {
        std::vector<double> pa(px), pb(px), paa(px), pbb(px), pab(px);
        for (std::size_t i = 0; i < px; ++i) {
            pa[i] = a.data()[i * a.channels() + c];
            pb[i] = b.data()[i * b.channels() + c];
            paa[i] = pa[i] * pa[i];
            pbb[i] = pb[i] * pb[i];
            pab[i] = pa[i] * pb[i];
        }
        const auto mu_a = filter_valid(pa, w, h, kernel);
        const auto mu_b = filter_valid(pb, w, h, kernel);
        const auto e_aa = filter_valid(paa, w, h, kernel);
        const auto e_bb = filter_valid(pbb, w, h, kernel);
        const auto e_ab = filter_valid(pab, w, h, kernel);
        for (std::size_t i = 0; i < mu_a.size(); ++i) {
            const double va = e_aa[i] - mu_a[i] * mu_a[i];
            const double vb = e_bb[i] - mu_b[i] * mu_b[i];
            const double cov = e_ab[i] - mu_a[i] * mu_b[i];
            const double num = (2.0 * mu_a[i] * mu_b[i] + options.c1) * (2.0 * cov + options.c2);
            const double den = (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + options.c1) * (va + vb + options.c2);
            total += num / den;
        }
        count += mu_a.size();
    }
    return total / static_cast<double>(count);
}

double voxel_chamfer(const SparseVoxelGrid& pred, const SparseVoxelGrid& gt) {
    if (pred.empty() || gt.empty()) {
        throw std::invalid_argument("voxel_chamfer: grids must be non-empty");
    }
    if (pred.meta().voxel_size != gt.meta().voxel_size) {
        throw std::invalid_argument("voxel_chamfer: voxel sizes differ");
    }
    SparseVoxelGrid a = pred;
    SparseVoxelGrid b = gt;
    a.canonicalize();
    b.canonicalize();
    return 0.5 * (ordered_mean(nearest_distances(a, b)) + ordered_mean(nearest_distances(b, a)));
}

void DiffusionSignal::validate() const {
    if (x.size() != eps.size()) {
        throw std::invalid_argument("diffusion signal and noise sizes differ");
    }
    if (!(alpha_bar >= 0.0 && alpha_bar <= 1.0)) {
        throw std::invalid_argument("alpha_bar must lie in [0, 1]");
    }
}

std::vector<double> v_target(const DiffusionSignal& sig) {
    sig.validate();
    const double sa = std::sqrt(sig.alpha_bar);
    const double sb = std::sqrt(1.0 - sig.alpha_bar);
    std::vector<double> v(sig.x.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = sa * sig.eps[i] - sb * sig.x[i];
    }
    return v;
}

std::vector<double> noised(const DiffusionSignal& sig) {
    sig.validate();
    const double sa = std::sqrt(sig.alpha_bar);
    const double sb = std::sqrt(1.0 - sig.alpha_bar);
    std::vector<double> out(sig.x.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = sa * sig.x[i] + sb * sig.eps[i];
    }
    return out;
}

}  // namespace voxsplat
