// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#include <voxsplat/checks/suite.hpp>
#include <voxsplat/cli.hpp>
#include <voxsplat/conditioning.hpp>
#include <voxsplat/config.hpp>
#include <voxsplat/io/binary.hpp>
#include <voxsplat/io/json_io.hpp>
#include <voxsplat/io/pfm.hpp>
#include <voxsplat/io/ply.hpp>
#include <voxsplat/io/png.hpp>
#include <voxsplat/io/tensor_file.hpp>
#include <voxsplat/lidar.hpp>
#include <voxsplat/metrics.hpp>
#include <voxsplat/parallel.hpp>
#include <voxsplat/pipeline.hpp>
#include <voxsplat/renderer.hpp>
#include <voxsplat/sky.hpp>
#include <voxsplat/splat_ply.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>

namespace voxsplat::cli {
namespace {

namespace fs = std::filesystem;
using io::json;

/// Raised for bad flag values that CLI11 cannot catch on its own.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::size_t threads = 0;
};

Config load(const Globals& g) {
    Config c = g.config_path.empty() ? Config{} : load_config(g.config_path);
    if (g.seed) {
        c.seed = *g.seed;
    }
    return c;
}

std::vector<double> parse_numbers(const std::string& text, std::size_t count, const std::string& flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) {
                throw std::invalid_argument(item);
            }
        } catch (const std::logic_error&) {
            throw UsageError(flag + " expects " + std::to_string(count) + " comma-separated numbers");
        }
    }
    if (out.size() != count) {
        throw UsageError(flag + " expects " + std::to_string(count) + " comma-separated numbers");
    }
    return out;
}

Vec3 parse_vec3(const std::string& text, const std::string& flag) {
    const auto v = parse_numbers(text, 3, flag);
    return {v[0], v[1], v[2]};
}

GridMeta grid_meta_from_flags(double voxel_size, const std::string& origin, const std::string& extent) {
    GridMeta meta;
    meta.voxel_size = voxel_size;
    if (!origin.empty()) {
        meta.origin = parse_vec3(origin, "--origin");
    }
    if (!extent.empty()) {
        const auto e = parse_numbers(extent, 6, "--extent");
        auto i = [&](int n) { return static_cast<std::int32_t>(std::llround(e[n])); };
        meta.extent = VoxelBounds{{i(0), i(1), i(2)}, {i(3), i(4), i(5)}};
    }
    meta.validate();
    return meta;
}

std::string sibling(const std::string& path, const std::string& suffix) { return path + suffix; }

void save_panorama(const std::string& path, const SkyPanorama& pano) {
    io::write_pfm(path, pano.data);
    Image coverage(pano.width(), pano.height(), 1);
    for (std::size_t i = 0; i < pano.covered.size(); ++i) {
        coverage.data()[i] = pano.covered[i];
    }
    io::write_pfm(sibling(path, ".coverage.pfm"), coverage);
    const std::string meta = json{{"fill", pano.fill}, {"coverage", fs::path(path).filename().string() + ".coverage.pfm"}}.dump(2);
    io::write_file_bytes(sibling(path, ".json"), std::span(reinterpret_cast<const std::uint8_t*>(meta.data()), meta.size()));
}

SkyPanorama load_panorama(const std::string& path) {
    SkyPanorama pano;
    pano.data = io::read_pfm(path);
    pano.covered.assign(pano.data.pixel_count(), 1);
    const std::string side = sibling(path, ".json");
    if (fs::exists(side)) {
        const json j = io::read_json(side);
        pano.fill = j.value("fill", 0.5);
        if (j.contains("coverage")) {
            const Image cov = io::read_pfm((fs::path(path).parent_path() / j.at("coverage").get<std::string>()).string());
            if (cov.width() != pano.width() || cov.height() != pano.height()) {
                throw std::invalid_argument("panorama coverage map size differs from the panorama");
            }
            for (std::size_t i = 0; i < pano.covered.size(); ++i) {
                pano.covered[i] = cov.data()[i] > 0.5 ? 1 : 0;
            }
        }
    }
    return pano;
}

void write_text(const std::string& path, const std::string& text) {
    io::write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string json_number(double v) {
    if (std::isinf(v)) {
        return v > 0 ? "\"inf\"" : "\"-inf\"";
    }
    return json(v).dump();
}

LabeledPointCloud read_points(const std::string& path, int classes) {
    return io::point_cloud_from_ply(io::read_ply(path), classes);
}

// ---------------------------------------------------------------- voxelize

struct VoxelizeArgs {
    std::string points, out, coarse_out, origin, extent;
    std::optional<double> voxel_size;
    int classes = 0;
};

void cmd_voxelize(const Config& cfg, const VoxelizeArgs& a, std::ostream& out) {
    const LabeledPointCloud cloud = read_points(a.points, a.classes);
    const GridMeta meta = grid_meta_from_flags(a.voxel_size.value_or(cfg.grid.fine_voxel_size), a.origin, a.extent);
    const SparseVoxelGrid grid = voxelize(cloud, meta);
    save_grid(grid, a.out);
    out << "voxelized " << cloud.size() << " points into " << grid.size() << " voxels\n";
    if (!a.coarse_out.empty()) {
        const int factor = static_cast<int>(std::llround(cfg.grid.coarse_voxel_size / cfg.grid.fine_voxel_size));
        const SparseVoxelGrid coarse = coarsen(grid, factor);
        save_grid(coarse, a.coarse_out);
        out << "coarse level: " << coarse.size() << " voxels\n";
    }
}

// ---------------------------------------------------------------- condition

struct ConditionArgs {
    std::vector<std::string> features;
    std::string cameras, out, dense_out, origin, extent;
    std::optional<double> voxel_size;
    int feature_channels = 0;
    bool softmax = false;
};

void cmd_condition(const Config& cfg, const ConditionArgs& a, std::ostream& out) {
    const auto cams = io::cameras_from_json(io::read_json(a.cameras));
    if (cams.size() != a.features.size()) {
        throw UsageError("--features must be given once per camera in --cameras");
    }
    const DepthBins bins = cfg.bins();
    std::vector<PixelFeatureMap> maps;
    for (std::size_t i = 0; i < a.features.size(); ++i) {
        const io::Tensor t = io::read_tensor(a.features[i]);
        if (t.shape.size() != 3 || t.shape[2] != static_cast<std::uint64_t>(a.feature_channels + bins.count())) {
            throw std::invalid_argument("feature tensor '" + a.features[i] + "' must have shape (H, W, C + D) with D = " +
                                        std::to_string(bins.count()));
        }
        const int h = static_cast<int>(t.shape[0]);
        const int w = static_cast<int>(t.shape[1]);
        if (w != cams[i].width || h != cams[i].height) {
            throw std::invalid_argument("feature tensor '" + a.features[i] + "' does not match its camera size");
        }
        maps.push_back(PixelFeatureMap::from_channels(w, h, a.feature_channels, bins.count(), t.data, a.softmax));
    }
    const GridMeta meta = grid_meta_from_flags(a.voxel_size.value_or(cfg.grid.coarse_voxel_size), a.origin, a.extent);
    const ConditionGrid cond = unproject_features(maps, cams, bins, meta);
    save_grid(cond.grid, a.out);
    if (!a.dense_out.empty()) {
        const auto& e = *meta.extent;
        io::Tensor dense;
        dense.shape = {static_cast<std::uint64_t>(e.max.k - e.min.k), static_cast<std::uint64_t>(e.max.j - e.min.j),
                       static_cast<std::uint64_t>(e.max.i - e.min.i), static_cast<std::uint64_t>(cond.channels())};
        dense.data = cond.to_dense();
        io::write_tensor(a.dense_out, dense);
    }
    out << "conditioned " << cond.grid.size() << " voxels from " << cond.samples << " samples (" << cond.dropped_samples
        << " outside the grid)\n";
}

// ---------------------------------------------------------------- decode

struct DecodeArgs {
    std::string grid, raw, out, ply;
    std::optional<int> per_voxel;
    std::optional<double> radius;
    bool random = false;
    bool float32 = false;
};

RawGaussianParams random_raw(std::size_t voxels, int m, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto u = [&](double lo, double hi) { return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53); };
    RawGaussianParams raw = RawGaussianParams::zeros(voxels, m);
    for (std::size_t v = 0; v < voxels; ++v) {
        for (int k = 0; k < m; ++k) {
            auto r = raw.record(v, k);
            for (int a = 0; a < 3; ++a) {
                r[raw_layout::kMean + a] = u(-1.0, 1.0);
                r[raw_layout::kScale + a] = u(-3.5, -2.0);
                r[raw_layout::kColor + a] = u(0.0, 1.0);
            }
            r[raw_layout::kOpacity] = u(-1.0, 3.0);
            for (int a = 0; a < 4; ++a) {
                r[raw_layout::kRotation + a] = u(-1.0, 1.0);
            }
            r[raw_layout::kRotation] += 2.0;
        }
    }
    return raw;
}

void cmd_decode(const Config& cfg, const DecodeArgs& a, std::ostream& out) {
    SparseVoxelGrid grid = load_grid(a.grid);
    grid.canonicalize();
    const int m = a.per_voxel.value_or(cfg.grid.gaussians_per_voxel);
    if (m < 1) {
        throw UsageError("--per-voxel must be >= 1");
    }
    RawGaussianParams raw;
    if (!a.raw.empty()) {
        const io::Tensor t = io::read_tensor(a.raw);
        if (t.shape.size() != 3 || t.shape[0] != grid.size() || t.shape[2] != raw_layout::kWidth) {
            throw std::invalid_argument("raw tensor must have shape (voxels, M, 14) in canonical voxel order");
        }
        raw.per_voxel = static_cast<int>(t.shape[1]);
        raw.values = t.data;
    } else if (a.random) {
        raw = random_raw(grid.size(), m, cfg.seed);
    } else {
        raw = RawGaussianParams::zeros(grid.size(), m);
    }
    const double radius = a.radius.value_or(cfg.grid.radius_factor * grid.meta().voxel_size);
    const VoxSplatScene scene = decode_scene(std::move(raw), std::move(grid), radius);
    save_grid(scene_to_grid(scene), a.out);
    if (!a.ply.empty()) {
        io::write_file_bytes(a.ply, export_ply(scene, a.float32 ? SplatPrecision::kFloat32 : SplatPrecision::kFloat64));
    }
    out << "decoded " << scene.size() << " Gaussians\n";
}

// ---------------------------------------------------------------- render

struct RenderArgs {
    std::string scene, camera, out, alpha_out, pfm_out, depth_out, sky, background = "0,0,0";
};

void cmd_render(const Config& cfg, const RenderArgs& a, std::ostream& out) {
    const SparseVoxelGrid grid = load_grid(a.scene);
    const VoxSplatScene scene = scene_from_grid(grid, cfg.grid.radius_factor * grid.meta().voxel_size);
    const Camera cam = io::camera_from_json(io::read_json(a.camera));
    Image bg;
    if (!a.sky.empty()) {
        bg = sample_background(load_panorama(a.sky), cam);
        if (bg.channels() != 3) {
            throw std::invalid_argument("sky panorama must have 3 channels");
        }
    } else {
        const Vec3 c = parse_vec3(a.background, "--background");
        bg = Image(cam.width, cam.height, 3);
        for (int y = 0; y < cam.height; ++y) {
            for (int x = 0; x < cam.width; ++x) {
                for (int k = 0; k < 3; ++k) {
                    bg.at(x, y, k) = c[k];
                }
            }
        }
    }
    const RenderTarget r = rasterize(scene, cam, bg, cfg.render);
    io::write_png(a.out, r.color);
    if (!a.alpha_out.empty()) {
        io::write_png(a.alpha_out, r.alpha);
    }
    if (!a.pfm_out.empty()) {
        io::write_pfm(a.pfm_out, r.color);
    }
    if (!a.depth_out.empty()) {
        io::write_pfm(a.depth_out, render_depth(scene.gaussians, cam, cfg.render).depth);
    }
    out << "rendered " << scene.size() << " Gaussians at " << cam.width << "x" << cam.height << "\n";
}

// ---------------------------------------------------------------- sky

struct SkyBuildArgs {
    std::vector<std::string> images, masks;
    std::string cameras, out;
    std::optional<int> height, width;
};

void cmd_sky_build(const Config& cfg, const SkyBuildArgs& a, std::ostream& out) {
    const auto cams = io::cameras_from_json(io::read_json(a.cameras));
    if (a.images.size() != cams.size() || a.masks.size() != cams.size()) {
        throw UsageError("--image and --mask must be given once per camera in --cameras");
    }
    std::vector<Image> images;
    std::vector<Image> masks;
    for (std::size_t i = 0; i < cams.size(); ++i) {
        images.push_back(io::read_png(a.images[i]));
        masks.push_back(io::read_png(a.masks[i]).channel(0));
    }
    std::vector<SkyView> views;
    for (std::size_t i = 0; i < cams.size(); ++i) {
        views.push_back({&images[i], &masks[i], cams[i]});
    }
    const SkyPanorama pano = build_panorama(views, a.height.value_or(cfg.sky.height), a.width.value_or(cfg.sky.width),
                                            cfg.sky.fill);
    save_panorama(a.out, pano);
    out << "panorama " << pano.width() << "x" << pano.height() << ", " << pano.uncovered_count()
        << " uncovered texels\n";
}

struct SkySampleArgs {
    std::string pano, camera, out, pfm_out;
};

void cmd_sky_sample(const SkySampleArgs& a, std::ostream& out) {
    const Camera cam = io::camera_from_json(io::read_json(a.camera));
    const Image bg = sample_background(load_panorama(a.pano), cam);
    io::write_png(a.out, bg);
    if (!a.pfm_out.empty()) {
        io::write_pfm(a.pfm_out, bg);
    }
    out << "sampled background " << bg.width() << "x" << bg.height() << "\n";
}

// ---------------------------------------------------------------- lidar

struct LidarArgs {
    std::string scene, pose, pattern, out;
};

void cmd_lidar(const Config& cfg, const LidarArgs& a, std::ostream& out) {
    const SparseVoxelGrid grid = load_grid(a.scene);
    const VoxSplatScene scene = scene_from_grid(grid, cfg.grid.radius_factor * grid.meta().voxel_size);
    const RigidTransform pose = io::pose_from_json(io::read_json(a.pose));
    const ScanPattern pattern = a.pattern.empty() ? cfg.scan_pattern() : io::pattern_from_json(io::read_json(a.pattern));
    const LidarScan scan = simulate_scan(scene, pose, pattern, cfg.lidar_options());
    io::PlyData ply = io::point_cloud_to_ply(scan.points);
    ply.elements[0].add("range", io::PlyType::kFloat64, scan.ranges);
    io::write_ply(a.out, ply);
    out << scan.points.size() << " returns from " << pattern.size() << " rays\n";
}

// ---------------------------------------------------------------- pipeline

struct PipelineArgs {
    std::string manifest, out_dir;
    int classes = 0;
};

std::vector<DynamicBox> boxes_of(const json& j, std::optional<std::int32_t> frame) {
    std::vector<DynamicBox> boxes;
    if (j.contains("boxes")) {
        for (const auto& b : j.at("boxes")) {
            DynamicBox box = io::box_from_json(b);
            if (frame && !b.contains("frame_id")) {
                box.frame_id = *frame;
            }
            boxes.push_back(box);
        }
    }
    return boxes;
}

void cmd_pipeline(const Config& cfg, const PipelineArgs& a, std::ostream& out) {
    const auto bytes = io::read_file_bytes(a.manifest);
    const fs::path base = fs::path(a.manifest).parent_path();
    std::vector<SensorFrame> frames;
    std::vector<DynamicBox> frame_boxes;
    struct ChunkJob {
        std::string name;
        ChunkSpec spec;
        std::vector<DynamicBox> boxes;
    };
    std::vector<ChunkJob> chunks;
    std::istringstream lines(std::string(bytes.begin(), bytes.end()));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError("manifest line " + std::to_string(line_no) + ": " + e.what(), line_no);
        }
        const std::string type = j.value("type", "");
        if (type == "frame") {
            SensorFrame f;
            f.frame_id = j.value("frame_id", static_cast<int>(frames.size()));
            f.points = read_points((base / j.at("points").get<std::string>()).string(), a.classes);
            f.world_from_sensor = io::pose_from_json(j.value("pose", json::object()));
            const auto b = boxes_of(j, f.frame_id);
            frame_boxes.insert(frame_boxes.end(), b.begin(), b.end());
            frames.push_back(std::move(f));
        } else if (type == "chunk") {
            ChunkJob job;
            job.name = j.value("name", "chunk_" + std::to_string(chunks.size()));
            job.spec = cfg.chunk_spec(io::pose_from_json(j.value("ego_pose", json::object())));
            job.boxes = boxes_of(j, std::nullopt);
            chunks.push_back(std::move(job));
        } else {
            throw ParseError("manifest line " + std::to_string(line_no) + ": type must be 'frame' or 'chunk'", line_no);
        }
    }
    int classes = a.classes;
    for (const auto& f : frames) {
        classes = std::max(classes, f.points.num_classes);
    }
    for (const auto& c : chunks) {
        for (const auto& b : c.boxes) {
            classes = std::max(classes, b.label + 1);
        }
    }
    LabeledPointCloud world = accumulate(frames, frame_boxes);
    world.num_classes = std::max(world.num_classes, classes);
    if (world.has_labels()) {
        world = propagate_semantics(world);
    }
    fs::create_directories(a.out_dir);
    std::vector<std::string> reports(chunks.size());
    parallel_for(chunks.size(), [&](std::size_t c) {
        const ChunkJob& job = chunks[c];
        LabeledPointCloud with_dynamic =
            insert_dynamic(world, job.boxes, cfg.pipeline.samples_per_box, cfg.seed);
        with_dynamic.num_classes = std::max(with_dynamic.num_classes, classes);
        const LabeledPointCloud local = crop_chunk(with_dynamic, job.spec);
        const GridMeta fine = job.spec.fine_meta();
        GridMeta coarse = fine;
        coarse.voxel_size = cfg.grid.coarse_voxel_size;
        const auto& e = *fine.extent;
        coarse.extent = VoxelBounds{{0, 0, 0}, {(e.max.i + 3) / 4, (e.max.j + 3) / 4, (e.max.k + 3) / 4}};
        const GridHierarchy pair = make_training_pair(local, fine, coarse);
        const fs::path stem = fs::path(a.out_dir) / job.name;
        save_grid(pair.fine, stem.string() + "_fine.svg2");
        save_grid(pair.coarse, stem.string() + "_coarse.svg2");
        io::write_ply(stem.string() + ".ply", io::point_cloud_to_ply(local));
        reports[c] = job.name + ": " + std::to_string(local.size()) + " points, " + std::to_string(pair.fine.size()) +
                     " fine / " + std::to_string(pair.coarse.size()) + " coarse voxels\n";
    });
    out << "accumulated " << world.size() << " points from " << frames.size() << " frames\n";
    for (const auto& r : reports) {
        out << r;
    }
}

// ---------------------------------------------------------------- metrics

struct MetricsArgs {
    std::string pred, gt, mask, pred_alpha, out;
};

void cmd_metrics(const Config& cfg, const MetricsArgs& a, std::ostream& out) {
    const Image pred = io::read_png(a.pred);
    const Image gt = io::read_png(a.gt);
    if (!pred.same_shape(gt)) {
        throw std::invalid_argument("--pred and --gt images differ in size or channels");
    }
    std::ostringstream report;
    report << "{\n  \"psnr\": " << json_number(psnr(pred, gt)) << ",\n  \"ssim\": " << json_number(ssim(pred, gt));
    if (pred.channels() == 3) {
        RenderTarget target{pred, Image(pred.width(), pred.height(), 1, 1.0), Image()};
        Image mask(pred.width(), pred.height(), 1, 1.0);
        if (!a.mask.empty()) {
            mask = io::read_png(a.mask).channel(0);
        }
        target.alpha = a.pred_alpha.empty() ? mask : io::read_png(a.pred_alpha).channel(0);
        const AppearanceLoss loss = appearance_loss(target, gt, mask, cfg.loss);
        report << ",\n  \"l1\": " << json_number(loss.l1) << ",\n  \"alpha_l1\": " << json_number(loss.alpha)
               << ",\n  \"lpips\": null,\n  \"appearance_loss\": " << json_number(loss.total);
    }
    report << "\n}\n";
    if (a.out.empty()) {
        out << report.str();
    } else {
        write_text(a.out, report.str());
    }
}

// ---------------------------------------------------------------- selftest

int cmd_selftest(const Config& cfg, std::ostream& out) {
    const auto results = checks::run_acceptance_suite(cfg.seed);
    checks::print_results(out, results);
    const bool ok = std::all_of(results.begin(), results.end(), [](const auto& r) { return r.pass; });
    out << (ok ? "selftest: all checks passed\n" : "selftest: FAILED\n");
    return ok ? kExitOk : kExitInternalError;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"VoxSplat: sparse-voxel Gaussian splat scenes, rendering, LiDAR and ground-truth tooling", "voxsplat"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "JSON configuration file")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "Seed for every randomized step");
    app.add_option("--threads", g.threads, "Worker thread cap (also VOXSPLAT_THREADS)");

    VoxelizeArgs vox;
    auto* voxelize_cmd = app.add_subcommand("voxelize", "Voxelize a labeled point cloud into a sparse grid");
    voxelize_cmd->add_option("--points", vox.points, "Input PLY point cloud")->required();
    voxelize_cmd->add_option("--out", vox.out, "Output .svg2 grid")->required();
    voxelize_cmd->add_option("--coarse-out", vox.coarse_out, "Also write the coarse level");
    voxelize_cmd->add_option("--voxel-size", vox.voxel_size, "Voxel size in meters");
    voxelize_cmd->add_option("--origin", vox.origin, "Grid origin x,y,z");
    voxelize_cmd->add_option("--extent", vox.extent, "Voxel extent i0,j0,k0,i1,j1,k1");
    voxelize_cmd->add_option("--classes", vox.classes, "Number of semantic classes");

    ConditionArgs cond;
    auto* condition_cmd = app.add_subcommand("condition", "Lift per-pixel features into a voxel feature grid");
    condition_cmd->add_option("--features", cond.features, "VXTN tensor (H, W, C + D) per camera")->required();
    condition_cmd->add_option("--cameras", cond.cameras, "Camera JSON (array)")->required();
    condition_cmd->add_option("--feature-channels", cond.feature_channels, "Feature channels C")->required();
    condition_cmd->add_option("--out", cond.out, "Output .svg2 grid")->required();
    condition_cmd->add_option("--dense-out", cond.dense_out, "Dense VXTN tensor over the extent");
    condition_cmd->add_flag("--softmax", cond.softmax, "Depth channels hold logits");
    condition_cmd->add_option("--voxel-size", cond.voxel_size, "Voxel size in meters");
    condition_cmd->add_option("--origin", cond.origin, "Grid origin x,y,z");
    condition_cmd->add_option("--extent", cond.extent, "Voxel extent i0,j0,k0,i1,j1,k1")->required();

    DecodeArgs dec;
    auto* decode_cmd = app.add_subcommand("decode", "Decode per-voxel raw parameters into Gaussians");
    decode_cmd->add_option("--grid", dec.grid, "Input .svg2 grid")->required();
    decode_cmd->add_option("--out", dec.out, "Output .svg2 scene")->required();
    auto* raw_opt = decode_cmd->add_option("--raw", dec.raw, "VXTN tensor (voxels, M, 14)");
    decode_cmd->add_flag("--random", dec.random, "Seeded random raw parameters")->excludes(raw_opt);
    decode_cmd->add_option("--per-voxel", dec.per_voxel, "Gaussians per voxel M");
    decode_cmd->add_option("--radius", dec.radius, "Center confinement radius in meters");
    decode_cmd->add_option("--ply", dec.ply, "Also export a splat PLY");
    decode_cmd->add_flag("--float32", dec.float32, "Write the splat PLY as float32");

    RenderArgs ren;
    auto* render_cmd = app.add_subcommand("render", "Rasterize a scene");
    render_cmd->add_option("--scene", ren.scene, "Scene .svg2 with a gaussians channel")->required();
    render_cmd->add_option("--camera", ren.camera, "Camera JSON")->required();
    render_cmd->add_option("--out", ren.out, "Output PNG")->required();
    render_cmd->add_option("--alpha-out", ren.alpha_out, "Accumulated opacity PNG");
    render_cmd->add_option("--pfm-out", ren.pfm_out, "Float color PFM");
    render_cmd->add_option("--depth-out", ren.depth_out, "Expected depth PFM");
    auto* sky_opt = render_cmd->add_option("--sky", ren.sky, "Panorama PFM for the background");
    render_cmd->add_option("--background", ren.background, "Constant background r,g,b")->excludes(sky_opt);

    auto* sky_cmd = app.add_subcommand("sky", "Sky panorama tools");
    sky_cmd->require_subcommand(1);
    SkyBuildArgs skb;
    auto* sky_build = sky_cmd->add_subcommand("build", "Build a panorama from sky-masked views");
    sky_build->add_option("--image", skb.images, "Input PNG (repeat per camera)")->required();
    sky_build->add_option("--mask", skb.masks, "Sky mask PNG, 1 = sky (repeat per camera)")->required();
    sky_build->add_option("--cameras", skb.cameras, "Camera JSON (array)")->required();
    sky_build->add_option("--out", skb.out, "Output panorama PFM")->required();
    sky_build->add_option("--height", skb.height, "Panorama height");
    sky_build->add_option("--width", skb.width, "Panorama width");
    SkySampleArgs sks;
    auto* sky_sample = sky_cmd->add_subcommand("sample", "Sample the background seen by a camera");
    sky_sample->add_option("--pano", sks.pano, "Panorama PFM")->required();
    sky_sample->add_option("--camera", sks.camera, "Camera JSON")->required();
    sky_sample->add_option("--out", sks.out, "Output PNG")->required();
    sky_sample->add_option("--pfm-out", sks.pfm_out, "Float output PFM");

    LidarArgs lid;
    auto* lidar_cmd = app.add_subcommand("lidar", "Simulate a LiDAR scan of a scene");
    lidar_cmd->add_option("--scene", lid.scene, "Scene .svg2 with a gaussians channel")->required();
    lidar_cmd->add_option("--pose", lid.pose, "Sensor pose JSON")->required();
    lidar_cmd->add_option("--pattern", lid.pattern, "Scan pattern JSON");
    lidar_cmd->add_option("--out", lid.out, "Output PLY")->required();

    PipelineArgs pip;
    auto* pipeline_cmd = app.add_subcommand("pipeline", "Build ground-truth chunks from a manifest");
    pipeline_cmd->add_option("--manifest", pip.manifest, "JSON-lines manifest")->required()->check(CLI::ExistingFile);
    pipeline_cmd->add_option("--out-dir", pip.out_dir, "Output directory")->required();
    pipeline_cmd->add_option("--classes", pip.classes, "Number of semantic classes");

    MetricsArgs met;
    auto* metrics_cmd = app.add_subcommand("metrics", "Image quality metrics and appearance loss");
    metrics_cmd->add_option("--pred", met.pred, "Predicted PNG")->required();
    metrics_cmd->add_option("--gt", met.gt, "Ground-truth PNG")->required();
    metrics_cmd->add_option("--mask", met.mask, "Non-sky mask PNG, 1 = scene");
    metrics_cmd->add_option("--pred-alpha", met.pred_alpha, "Predicted accumulated opacity PNG");
    metrics_cmd->add_option("--out", met.out, "Write the JSON report here instead of stdout");

    auto* selftest_cmd = app.add_subcommand("selftest", "Run the oracle cross-check suite");

    std::vector<std::string> rev(args.begin() + (args.empty() ? 0 : 1), args.end());
    std::reverse(rev.begin(), rev.end());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUserError;
    }

    try {
        if (g.threads > 0) {
            set_thread_count(g.threads);
        }
        const Config cfg = load(g);
        if (*voxelize_cmd) {
            cmd_voxelize(cfg, vox, out);
        } else if (*condition_cmd) {
            cmd_condition(cfg, cond, out);
        } else if (*decode_cmd) {
            cmd_decode(cfg, dec, out);
        } else if (*render_cmd) {
            cmd_render(cfg, ren, out);
        } else if (*sky_build) {
            cmd_sky_build(cfg, skb, out);
        } else if (*sky_sample) {
            cmd_sky_sample(sks, out);
        } else if (*lidar_cmd) {
            cmd_lidar(cfg, lid, out);
        } else if (*pipeline_cmd) {
            cmd_pipeline(cfg, pip, out);
        } else if (*metrics_cmd) {
            cmd_metrics(cfg, met, out);
        } else if (*selftest_cmd) {
            return cmd_selftest(cfg, out);
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUserError;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUserError;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUserError;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kExitUserError;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternalError;
    }
    return kExitOk;
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace voxsplat::cli
