// Copyright 2026 The meatkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "meatkit/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "meatkit/adaptation.hpp"
#include "meatkit/bench.hpp"
#include "meatkit/conv.hpp"
#include "meatkit/dataprep.hpp"
#include "meatkit/error.hpp"
#include "meatkit/fusion.hpp"
#include "meatkit/mesh.hpp"
#include "meatkit/parallel.hpp"
#include "meatkit/rig_io.hpp"
#include "meatkit/synthetic.hpp"
#include "meatkit/tensor_io.hpp"

namespace fs = std::filesystem;

namespace meatkit {
namespace {

std::size_t sz(int v) { return static_cast<std::size_t>(v); }

std::string view_dir(int v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "view_%02d", v);
    return buf;
}

std::vector<double> parse_numbers(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            throw CLI::ValidationError("expected comma-separated numbers, got '" + text + "'");
        }
        if (used != item.size()) throw CLI::ValidationError("expected comma-separated numbers, got '" + text + "'");
        out.push_back(v);
    }
    return out;
}

Vector3d parse_vec3(const std::string& text) {
    const auto v = parse_numbers(text);
    if (v.size() != 3) throw CLI::ValidationError("expected x,y,z, got '" + text + "'");
    return {v[0], v[1], v[2]};
}

const CLI::Validator kVec3Check(
    [](std::string& s) {
        try {
            (void)parse_vec3(s);
        } catch (const CLI::ValidationError& e) {
            return std::string(e.what());
        }
        return std::string();
    },
    "X,Y,Z");

FeatureStack read_features(const fs::path& path) {
    Tensor<float> data = read_tensor<float>(path);
    if (data.rank() != 4) fail(ErrorCode::ShapeMismatch, path.string() + ": features must be [views, channels, height, width]");
    std::vector<int> ids(data.dim(0));
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
    return FeatureStack(std::move(data), std::move(ids));
}

ViewEmbeddings rig_embeddings(const Rig& rig) {
    std::vector<ViewEmbedding> e;
    for (const auto& c : rig.cameras) e.push_back(view_embedding(c, rig.origin));
    return ViewEmbeddings::from(e);
}

std::vector<int> subdir_views(const fs::path& dir) {
    std::vector<int> views;
    for (int v = 0; fs::is_directory(dir / view_dir(v)); ++v) views.push_back(v);
    return views;
}

// Loads the reference features given as a list of [C, H, W] files, or falls back to
// the reference view's own slice of the feature stack as a single scale.
MultiScaleFeatures load_ref_features(const std::vector<std::string>& files, const FeatureStack& features, int ref_view) {
    MultiScaleFeatures ref;
    if (files.empty()) {
        const std::size_t c = sz(features.channels()), h = sz(features.height()), w = sz(features.width());
        const float* base = features.data.data() + sz(ref_view) * c * h * w;
        ref.scales.emplace_back(Shape{c, h, w}, std::vector<float>(base, base + c * h * w));
    } else {
        for (const auto& f : files) ref.scales.push_back(read_tensor<float>(f));
    }
    ref.validate();
    return ref;
}

FeatureStack run_scheme(Scheme scheme, const FeatureStack& features, const Rig& rig, const CorrespondenceTable* table,
                        const MultiScaleFeatures* ref, int ref_view, const Mesh* mesh, int samples,
                        std::uint64_t seed) {
    const ViewEmbeddings emb = rig_embeddings(rig);
    if (static_cast<int>(rig.cameras.size()) != features.n_views()) {
        fail(ErrorCode::ShapeMismatch, "rig has " + std::to_string(rig.cameras.size()) + " cameras but features have " +
                                           std::to_string(features.n_views()) + " views");
    }
    const int c = features.channels();
    const int c_ref = ref && !ref->scales.empty() ? static_cast<int>(ref->scales.front().dim(0)) : c;
    const MeatBlockParams block = make_block_params(c, emb.length, c_ref, seed);
    switch (scheme) {
        case Scheme::Mesh:
            return meat_block(features, *table, *ref, emb, ref_view, block);
        case Scheme::Self:
            return per_view_self_attention(features, block.self);
        case Scheme::Dense:
            return dense_mv_fuse(features, emb, block.feat);
        case Scheme::Epipolar: {
            std::vector<EpipolarCandidates> cands;
            for (int v = 0; v < features.n_views(); ++v) {
                const auto range = default_epipolar_range(*mesh, rig.cameras[sz(v)]);
                cands.push_back(build_epipolar_candidates(rig.cameras, v, range, samples, features.width()));
            }
            return epipolar_fuse(features, to_key_samples(cands), emb, block.feat);
        }
        case Scheme::RowWise: break;
    }
    fail(ErrorCode::InvalidArgument, "row-wise attention is analytic only");
}

std::vector<ComplexityParams> bench_sizes(const std::vector<int>& sizes, int n, int c, int k) {
    std::vector<ComplexityParams> out;
    for (int s : sizes) out.push_back({n, s, c, k, kGridSamples});
    return out;
}

int run_demo(const fs::path& dir, std::uint64_t seed, std::ostream& out) {
    constexpr int kViews = 4, kFeature = 16, kChannels = 16, kImage = 128;
    fs::create_directories(dir);
    const Mesh mesh = synthetic::blob_mesh(seed);
    write_obj(dir / "mesh.obj", mesh);
    Rig rig;
    rig.cameras = sample_orbit_cameras(rig.origin, 2.5, 0.15, 50.0 * M_PI / 180.0, kViews, kImage, kImage);
    write_rig(dir / "rig.json", rig);

    std::vector<AggregatedRaster> aggs;
    for (int v = 0; v < kViews; ++v) {
        const RasterMap raster = rasterize_mesh(mesh, rig.cameras[sz(v)], kImage, kImage);
        write_raster(dir / "raster" / view_dir(v), raster);
        aggs.push_back(aggregate_raster(raster, mesh, kFeature, kFeature));
        write_aggregate(dir / "aggregate" / view_dir(v), aggs.back());
    }
    const CorrespondenceTable table = build_correspondence_table(aggs, rig.cameras);
    write_correspondence(dir / "correspondence", table);

    const FeatureStack features = synthetic::random_features(seed + 1, kViews, kChannels, kFeature, kFeature);
    write_tensor(dir / "features.mtn", features.data);
    const ReferenceEncoder encoder(kChannels, 3, seed + 2);
    const MultiScaleFeatures ref = encoder.encode(synthetic::random_image(seed + 3, 3, kFeature, kFeature));
    for (std::size_t s = 0; s < ref.scales.size(); ++s) {
        write_tensor(dir / ("ref_scale_" + std::to_string(s) + ".mtn"), ref.scales[s]);
    }
    for (Scheme s : {Scheme::Mesh, Scheme::Dense, Scheme::Epipolar, Scheme::Self}) {
        const FeatureStack fused = run_scheme(s, features, rig, &table, &ref, 0, &mesh, 8, seed);
        write_tensor(dir / (std::string("fused_") + scheme_name(s) + ".mtn"), fused.data);
    }

    const synthetic::Skeleton skel = synthetic::stick_figure(rig.origin + Vector3d(0.0, -0.1, 0.0), 1.0);
    Keypoints kp{skel.joints, skel.pelvis_index, skel.names, skel.bones};
    write_json(dir / "keypoints.json", keypoints_to_json(kp));
    const int frontal = select_frontal_view(rig.cameras, kp.pelvis(), Vector3d(0.2, 0.0, 1.0));
    write_json(dir / "frontal.json", Json{{"frontal_view", frontal}});

    constexpr int kCrop = 64;
    Json crops = Json::array();
    Rig cropped{{}, rig.origin};
    const KeypointEncoder kp_encoder(kChannels, seed + 4);
    for (int v = 0; v < kViews; ++v) {
        const CropSpec crop = compute_crop(rig.cameras[sz(v)], kp.joints, kp.pelvis(), kCrop, v);
        crops.push_back(crop_to_json(crop));
        cropped.cameras.push_back(apply_crop_to_intrinsics(rig.cameras[sz(v)], crop));
    }
    write_json(dir / "crops.json", crops);
    write_rig(dir / "cropped_rig.json", cropped);
    const auto projected = project_keypoints(cropped.cameras, kp.joints);
    for (int v = 0; v < kViews; ++v) {
        const Tensor<float> img = render_keypoint_image(projected[sz(v)], kp.bones, kCrop, kCrop);
        write_tensor(dir / "keypoints" / ("image_" + view_dir(v) + ".mtn"), img);
        write_tensor(dir / "keypoints" / ("encoded_" + view_dir(v) + ".mtn"), keypoint_encode(img, kp_encoder));
    }

    // Frontal camera recovered from the keypoints seen by a known look-at camera.
    const Camera reference = look_at_camera(kp.pelvis() + Vector3d(0.4, 0.2, 2.2), kp.pelvis(), 0.8, 256, 256);
    std::vector<Vector2d> kp2d;
    for (const auto& j : kp.joints) kp2d.push_back(project_point(reference, j));
    FrontalFitConfig fit_cfg;
    fit_cfg.width = 256;
    fit_cfg.height = 256;
    const Camera fitted = fit_frontal_camera(kp.joints, kp2d, 0.8, kp.pelvis(), fit_cfg);
    write_json(dir / "frontal_camera.json", camera_to_json(fitted, 0));

    const synthetic::AdaptationFixture fx = synthetic::adaptation_fixture(seed + 5, 200, 0.0);
    write_obj(dir / "adapt" / "mono_mesh.obj", fx.mesh);
    write_raster(dir / "adapt" / "ortho_raster", fx.raster);
    write_rig(dir / "adapt" / "rig.json", Rig{fx.cameras, Vector3d::Zero()});
    write_json(dir / "adapt" / "matches.json", matches_to_json(fx.matches));
    write_json(dir / "adapt" / "truth.json", transform_to_json(fx.truth));
    const AdaptationResult fit = fit_transform(fx.matches, fx.mono(), fx.cameras);
    write_json(dir / "adapt" / "result.json", adaptation_result_to_json(fit));

    write_text(dir / "complexity.txt", complexity_table(complexity_counts({kViews, kFeature, kChannels, 8, kGridSamples})));
    const std::vector<Scheme> schemes = {Scheme::Mesh, Scheme::Epipolar, Scheme::Dense, Scheme::Self};
    const auto sizes = bench_sizes({4, 8}, kViews, kChannels, 8);
    const auto records = run_benchmark(schemes, sizes, seed);
    write_text(dir / "bench.json", bench_report_json(records, false));
    write_text(dir / "bench.txt", bench_report_table(records, false));
    out << "demo artifacts written to " << dir.string() << "\n";
    return 0;
}

}  // namespace

void write_raster(const fs::path& dir, const RasterMap& r) {
    const Shape hw{sz(r.height), sz(r.width)};
    write_tensor(dir / "mask.mtn", Tensor<std::uint8_t>(hw, r.mask));
    write_tensor(dir / "face_index.mtn", Tensor<std::int32_t>(hw, r.face_index));
    std::vector<double> bary;
    bary.reserve(r.bary.size() * 3);
    for (const auto& b : r.bary) bary.insert(bary.end(), {b.x(), b.y(), b.z()});
    write_tensor(dir / "bary.mtn", Tensor<double>({sz(r.height), sz(r.width), 3}, std::move(bary)));
    write_tensor(dir / "depth.mtn", Tensor<double>(hw, r.depth));
}

RasterMap read_raster(const fs::path& dir) {
    const auto mask = read_tensor<std::uint8_t>(dir / "mask.mtn");
    if (mask.rank() != 2) fail(ErrorCode::ShapeMismatch, (dir / "mask.mtn").string() + ": expected [height, width]");
    RasterMap r(static_cast<int>(mask.dim(1)), static_cast<int>(mask.dim(0)));
    const auto face = read_tensor<std::int32_t>(dir / "face_index.mtn");
    const auto bary = read_tensor<double>(dir / "bary.mtn");
    const auto depth = read_tensor<double>(dir / "depth.mtn");
    if (face.shape() != mask.shape() || depth.shape() != mask.shape() ||
        bary.shape() != Shape{mask.dim(0), mask.dim(1), 3}) {
        fail(ErrorCode::ShapeMismatch, dir.string() + ": raster tensors disagree in shape");
    }
    r.mask = mask.values();
    r.face_index = face.values();
    r.depth = depth.values();
    for (std::size_t i = 0; i < r.bary.size(); ++i) r.bary[i] = {bary[3 * i], bary[3 * i + 1], bary[3 * i + 2]};
    return r;
}

void write_aggregate(const fs::path& dir, const AggregatedRaster& a) {
    const Shape hw{sz(a.height), sz(a.width)};
    std::vector<double> pts;
    pts.reserve(a.point.size() * 3);
    for (const auto& p : a.point) pts.insert(pts.end(), {p.x(), p.y(), p.z()});
    write_tensor(dir / "points.mtn", Tensor<double>({sz(a.height), sz(a.width), 3}, std::move(pts)));
    write_tensor(dir / "mask.mtn", Tensor<std::uint8_t>(hw, a.mask));
    write_tensor(dir / "sample_count.mtn", Tensor<std::int32_t>(hw, a.sample_count));
    write_tensor(dir / "source_factor.mtn", Tensor<std::int32_t>({1}, std::vector<std::int32_t>{a.source_factor}));
}

AggregatedRaster read_aggregate(const fs::path& dir) {
    const auto mask = read_tensor<std::uint8_t>(dir / "mask.mtn");
    const auto pts = read_tensor<double>(dir / "points.mtn");
    const auto count = read_tensor<std::int32_t>(dir / "sample_count.mtn");
    const auto factor = read_tensor<std::int32_t>(dir / "source_factor.mtn");
    if (mask.rank() != 2 || count.shape() != mask.shape() || pts.shape() != Shape{mask.dim(0), mask.dim(1), 3} ||
        factor.size() != 1) {
        fail(ErrorCode::ShapeMismatch, dir.string() + ": aggregate tensors disagree in shape");
    }
    AggregatedRaster a;
    a.height = static_cast<int>(mask.dim(0));
    a.width = static_cast<int>(mask.dim(1));
    a.source_factor = factor[0];
    a.mask = mask.values();
    a.sample_count = count.values();
    for (std::size_t i = 0; i < a.mask.size(); ++i) a.point.emplace_back(pts[3 * i], pts[3 * i + 1], pts[3 * i + 2]);
    return a;
}

void write_correspondence(const fs::path& dir, const CorrespondenceTable& t) {
    const std::size_t n = sz(t.n_views()), h = sz(t.height()), w = sz(t.width());
    const std::size_t g = kGridSamples;
    write_tensor(dir / "index.mtn", Tensor<std::int32_t>({n, h, w, n, g, 2}, t.index_data()));
    write_tensor(dir / "valid.mtn", Tensor<std::uint8_t>({n, h, w, n, g}, t.valid_data()));
    write_tensor(dir / "mask.mtn", Tensor<std::uint8_t>({n, h, w}, t.mask_data()));
}

CorrespondenceTable read_correspondence(const fs::path& dir) {
    auto index = read_tensor<std::int32_t>(dir / "index.mtn");
    auto valid = read_tensor<std::uint8_t>(dir / "valid.mtn");
    if (index.rank() != 6 || index.dim(4) != kGridSamples || index.dim(5) != 2 || index.dim(0) != index.dim(3)) {
        fail(ErrorCode::ShapeMismatch, (dir / "index.mtn").string() + ": expected [N, H, W, N, 4, 2]");
    }
    std::vector<std::uint8_t> mask;
    if (fs::exists(dir / "mask.mtn")) mask = read_tensor<std::uint8_t>(dir / "mask.mtn").values();
    return CorrespondenceTable::from_data(static_cast<int>(index.dim(0)), static_cast<int>(index.dim(2)),
                                          static_cast<int>(index.dim(1)), std::move(index.values()),
                                          std::move(valid.values()), std::move(mask));
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"meatkit: mesh-guided multiview attention toolkit"};
    app.name("meatkit");
    app.require_subcommand(1);
    app.fallthrough();
    std::uint64_t seed = 0;
    unsigned threads = 0;
    app.add_option("--seed", seed, "Seed for every random quantity")->envname("MEATKIT_SEED");
    app.add_option("--threads", threads, "Worker threads (0 = hardware)")->envname("MEATKIT_THREADS");

    std::function<int()> action;

    // rasterize
    auto* ras = app.add_subcommand("rasterize", "Rasterize a mesh into per-pixel hit tensors");
    std::string mesh_path, rig_path, out_path;
    int width = 0, height = 0, view = -1;
    bool ortho = false;
    double extent = 2.0;
    ras->add_option("--mesh", mesh_path, "OBJ mesh")->required();
    ras->add_option("--rig", rig_path, "Rig JSON (perspective mode)");
    ras->add_option("--width", width, "Raster width")->required()->check(CLI::PositiveNumber);
    ras->add_option("--height", height, "Raster height")->required()->check(CLI::PositiveNumber);
    ras->add_option("--view", view, "Single camera id (default: all)");
    ras->add_flag("--orthographic", ortho, "Parallel-ray frontal raster of the mesh frame");
    ras->add_option("--extent", extent, "Orthographic frame extent")->check(CLI::PositiveNumber);
    ras->add_option("--out", out_path, "Output directory")->required();
    ras->callback([&] {
        action = [&] {
            const Mesh mesh = read_obj(mesh_path).mesh;
            if (ortho) {
                OrthographicFrame frame;
                frame.extent = extent;
                write_raster(out_path, rasterize_orthographic(mesh, frame, width, height));
                return 0;
            }
            if (rig_path.empty()) throw CLI::RequiredError("--rig");
            const Rig rig = read_rig(rig_path);
            for (int v = 0; v < static_cast<int>(rig.cameras.size()); ++v) {
                if (view >= 0 && v != view) continue;
                write_raster(fs::path(out_path) / view_dir(v), rasterize_mesh(mesh, rig.cameras[sz(v)], width, height));
            }
            if (view >= static_cast<int>(rig.cameras.size())) fail(ErrorCode::InvalidArgument, "--view not in the rig");
            return 0;
        };
    });

    // aggregate
    auto* agg = app.add_subcommand("aggregate", "Pool raster hits down to the feature grid");
    std::string raster_path;
    int feature_size = 0;
    agg->add_option("--mesh", mesh_path, "OBJ mesh")->required();
    agg->add_option("--raster", raster_path, "Raster directory (or one with view_XX subdirectories)")->required();
    agg->add_option("--feature-size", feature_size, "Square feature size")->required()->check(CLI::PositiveNumber);
    agg->add_option("--out", out_path, "Output directory")->required();
    agg->callback([&] {
        action = [&] {
            const Mesh mesh = read_obj(mesh_path).mesh;
            const auto views = subdir_views(raster_path);
            if (views.empty()) {
                write_aggregate(out_path, aggregate_raster(read_raster(raster_path), mesh, feature_size, feature_size));
            }
            for (int v : views) {
                write_aggregate(fs::path(out_path) / view_dir(v),
                                aggregate_raster(read_raster(fs::path(raster_path) / view_dir(v)), mesh, feature_size,
                                                 feature_size));
            }
            return 0;
        };
    });

    // correspond
    auto* cor = app.add_subcommand("correspond", "Build the cross-view sample table");
    std::string agg_path;
    cor->add_option("--aggregates", agg_path, "Directory with view_XX aggregate subdirectories")->required();
    cor->add_option("--rig", rig_path, "Rig JSON")->required();
    cor->add_option("--out", out_path, "Output directory")->required();
    cor->callback([&] {
        action = [&] {
            const Rig rig = read_rig(rig_path);
            std::vector<AggregatedRaster> aggs;
            for (int v : subdir_views(agg_path)) aggs.push_back(read_aggregate(fs::path(agg_path) / view_dir(v)));
            write_correspondence(out_path, build_correspondence_table(aggs, rig.cameras));
            return 0;
        };
    });

    // fuse
    auto* fuse = app.add_subcommand("fuse", "Run one fusion scheme over a feature stack");
    std::string features_path, table_path, scheme_text = "mesh";
    std::vector<std::string> ref_files;
    int ref_view = 0, samples = 8;
    fuse->add_option("--features", features_path, "f32 [N, C, H, W] tensor")->required();
    fuse->add_option("--rig", rig_path, "Rig JSON")->required();
    fuse->add_option("--table", table_path, "Correspondence directory (mesh scheme)");
    fuse->add_option("--scheme", scheme_text, "mesh | dense | epipolar | self")
        ->check(CLI::IsMember({"mesh", "dense", "epipolar", "self"}));
    fuse->add_option("--ref-view", ref_view, "Reference view id");
    fuse->add_option("--ref-features", ref_files, "Reference feature scales, coarse to fine");
    fuse->add_option("--mesh", mesh_path, "OBJ mesh (epipolar depth range)");
    fuse->add_option("--samples", samples, "Epipolar depth samples")->check(CLI::PositiveNumber);
    fuse->add_option("--out", out_path, "Output tensor")->required();
    fuse->callback([&] {
        action = [&] {
            const Scheme scheme = parse_scheme(scheme_text);
            if (scheme == Scheme::Mesh && table_path.empty()) throw CLI::RequiredError("--table");
            if (scheme == Scheme::Epipolar && mesh_path.empty()) throw CLI::RequiredError("--mesh");
            const FeatureStack features = read_features(features_path);
            const Rig rig = read_rig(rig_path);
            std::optional<CorrespondenceTable> table;
            std::optional<MultiScaleFeatures> ref;
            std::optional<Mesh> mesh;
            if (scheme == Scheme::Mesh) {
                if (ref_view < 0 || ref_view >= features.n_views()) fail(ErrorCode::InvalidArgument, "--ref-view out of range");
                table = read_correspondence(table_path);
                ref = load_ref_features(ref_files, features, ref_view);
            }
            if (scheme == Scheme::Epipolar) mesh = read_obj(mesh_path).mesh;
            const FeatureStack fused = run_scheme(scheme, features, rig, table ? &*table : nullptr, ref ? &*ref : nullptr,
                                                  ref_view, mesh ? &*mesh : nullptr, samples, seed);
            write_tensor(out_path, fused.data);
            return 0;
        };
    });

    // adapt
    auto* adapt = app.add_subcommand("adapt", "Fit the mesh similarity transform to a rig");
    std::string matches_path;
    int raster_size = 256, stride = kDefaultFrontalStride, max_iter = 5000;
    adapt->add_option("--matches", matches_path, "MatchSet JSON")->required();
    adapt->add_option("--mesh", mesh_path, "Monocular OBJ mesh")->required();
    adapt->add_option("--rig", rig_path, "Rig JSON")->required();
    adapt->add_option("--raster", raster_path, "Orthographic raster directory (default: rasterize)");
    adapt->add_option("--raster-size", raster_size, "Orthographic raster size")->check(CLI::PositiveNumber);
    adapt->add_option("--extent", extent, "Orthographic frame extent")->check(CLI::PositiveNumber);
    adapt->add_option("--stride", stride, "Frontal pixel stride")->check(CLI::PositiveNumber);
    adapt->add_option("--max-iterations", max_iter, "Optimizer iteration cap")->check(CLI::PositiveNumber);
    adapt->add_option("--out", out_path, "Result JSON")->required();
    adapt->callback([&] {
        action = [&] {
            const Mesh mesh = read_obj(mesh_path).mesh;
            const Rig rig = read_rig(rig_path);
            const MatchSet matches = matches_from_json(read_json(matches_path), matches_path);
            OrthographicFrame frame;
            frame.extent = extent;
            const RasterMap raster = raster_path.empty() ? rasterize_orthographic(mesh, frame, raster_size, raster_size)
                                                         : read_raster(raster_path);
            OptimizerConfig cfg;
            cfg.max_iterations = max_iter;
            const AdaptationResult r = fit_transform(matches, MonocularView{&mesh, &raster, frame}, rig.cameras, cfg, stride);
            write_json(out_path, adaptation_result_to_json(r));
            return 0;
        };
    });

    // select-front
    auto* sel = app.add_subcommand("select-front", "Print the camera facing the body orientation");
    std::string pelvis_text, orient_text;
    sel->add_option("--rig", rig_path, "Rig JSON")->required();
    sel->add_option("--pelvis", pelvis_text, "Pelvis position x,y,z")->required()->check(kVec3Check);
    sel->add_option("--orientation", orient_text, "Body orientation x,y,z")->required()->check(kVec3Check);
    sel->callback([&] {
        action = [&] {
            const Rig rig = read_rig(rig_path);
            out << select_frontal_view(rig.cameras, parse_vec3(pelvis_text), parse_vec3(orient_text)) << "\n";
            return 0;
        };
    });

    // crop
    auto* crop = app.add_subcommand("crop", "Pelvis-centered crops and adjusted intrinsics");
    std::string keypoints_path;
    int crop_size = 512;
    crop->add_option("--rig", rig_path, "Rig JSON")->required();
    crop->add_option("--keypoints", keypoints_path, "Keypoints JSON")->required();
    crop->add_option("--size", crop_size, "Square output size")->check(CLI::PositiveNumber);
    crop->add_option("--out", out_path, "Output directory")->required();
    crop->callback([&] {
        action = [&] {
            const Rig rig = read_rig(rig_path);
            const Keypoints kp = keypoints_from_json(read_json(keypoints_path), keypoints_path);
            Json crops = Json::array();
            Rig adjusted{{}, rig.origin};
            for (int v = 0; v < static_cast<int>(rig.cameras.size()); ++v) {
                const CropSpec c = compute_crop(rig.cameras[sz(v)], kp.joints, kp.pelvis(), crop_size, v);
                crops.push_back(crop_to_json(c));
                adjusted.cameras.push_back(apply_crop_to_intrinsics(rig.cameras[sz(v)], c));
            }
            write_json(fs::path(out_path) / "crops.json", crops);
            write_rig(fs::path(out_path) / "rig.json", adjusted);
            const auto projected = project_keypoints(adjusted.cameras, kp.joints);
            for (int v = 0; v < static_cast<int>(adjusted.cameras.size()); ++v) {
                write_tensor(fs::path(out_path) / ("keypoints_" + view_dir(v) + ".mtn"),
                             render_keypoint_image(projected[sz(v)], kp.bones, crop_size, crop_size));
            }
            return 0;
        };
    });

    // orbit
    auto* orbit = app.add_subcommand("orbit", "Look-at cameras on a circle around the pelvis");
    double distance = 3.0, elevation = 0.0, fov = 50.0 * M_PI / 180.0;
    int n_cams = 16, image = 512;
    pelvis_text = "0,0,0";
    orbit->add_option("--pelvis", pelvis_text, "Pelvis position x,y,z")->check(kVec3Check);
    orbit->add_option("--distance", distance, "Distance to the pelvis")->check(CLI::PositiveNumber);
    orbit->add_option("--elevation", elevation, "Elevation in radians");
    orbit->add_option("--fov", fov, "Horizontal field of view in radians")->check(CLI::Range(1e-6, M_PI - 1e-6));
    orbit->add_option("--n", n_cams, "Number of cameras")->check(CLI::PositiveNumber);
    orbit->add_option("--size", image, "Square image size")->check(CLI::PositiveNumber);
    orbit->add_option("--out", out_path, "Rig JSON")->required();
    orbit->callback([&] {
        action = [&] {
            const Vector3d pelvis = parse_vec3(pelvis_text);
            write_rig(out_path, Rig{sample_orbit_cameras(pelvis, distance, elevation, fov, n_cams, image, image), pelvis});
            return 0;
        };
    });

    // bench
    auto* bench = app.add_subcommand("bench", "Analytic counts and measured fusion buffers");
    std::vector<int> sizes = {8, 16, 32, 64};
    std::vector<std::string> scheme_list = {"mesh", "dense", "epipolar", "self"};
    int n_views = 4, channels = 16, depth_samples = 8;
    double budget_mb = 512.0;
    bool analytic_only = false, no_timings = false;
    std::string table_out;
    bench->add_option("--sizes", sizes, "Feature sizes S")->delimiter(',')->check(CLI::PositiveNumber);
    bench->add_option("--schemes", scheme_list, "Schemes to run")
        ->delimiter(',')
        ->check(CLI::IsMember({"mesh", "dense", "epipolar", "self"}));
    bench->add_option("--views", n_views, "N")->check(CLI::PositiveNumber);
    bench->add_option("--channels", channels, "C")->check(CLI::PositiveNumber);
    bench->add_option("--samples", depth_samples, "Epipolar K")->check(CLI::PositiveNumber);
    bench->add_option("--budget-mb", budget_mb, "Transient memory budget")->check(CLI::PositiveNumber);
    bench->add_flag("--analytic", analytic_only, "Only print the closed-form table");
    bench->add_flag("--no-timings", no_timings, "Leave timings out of the report");
    bench->add_option("--out", out_path, "Report JSON");
    bench->add_option("--table", table_out, "Report text table");
    bench->callback([&] {
        action = [&] {
            const auto params = bench_sizes(sizes, n_views, channels, depth_samples);
            if (analytic_only) {
                for (const auto& p : params) out << complexity_table(complexity_counts(p)) << "\n";
                return 0;
            }
            std::vector<Scheme> schemes;
            for (const auto& s : scheme_list) schemes.push_back(parse_scheme(s));
            BenchConfig cfg;
            cfg.budget_bytes = static_cast<std::uint64_t>(budget_mb * 1024.0 * 1024.0);
            const auto records = run_benchmark(schemes, params, seed, cfg);
            const std::string text = bench_report_table(records, !no_timings);
            out << text;
            if (!out_path.empty()) write_text(out_path, bench_report_json(records, !no_timings));
            if (!table_out.empty()) write_text(table_out, text);
            return 0;
        };
    });

    // demo
    auto* demo = app.add_subcommand("demo", "Seeded end-to-end synthetic pipeline");
    demo->add_option("--out", out_path, "Artifact directory")->required();
    demo->callback([&] { action = [&] { return run_demo(out_path, seed, out); }; });

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }
    set_max_threads(threads);
    try {
        return action ? action() : 1;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace meatkit
