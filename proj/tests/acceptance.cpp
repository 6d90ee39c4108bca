// Copyright 2026 The meatkit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
// Usage: meatkit_acceptance [path-to-meatkit-tool]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "meatkit/adaptation.hpp"
#include "meatkit/alloc_tracker.hpp"
#include "meatkit/bench.hpp"
#include "meatkit/cli.hpp"
#include "meatkit/conv.hpp"
#include "meatkit/correspondence.hpp"
#include "meatkit/dataprep.hpp"
#include "meatkit/error.hpp"
#include "meatkit/fusion.hpp"
#include "meatkit/rasterizer.hpp"
#include "meatkit/synthetic.hpp"
#include "meatkit/tensor_io.hpp"
#include "oracles.hpp"

using namespace meatkit;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;
};

// Collects the first few failures of a criterion.
class Verdict {
public:
    void expect(bool cond, const std::string& what) {
        if (cond) return;
        if (failures_++ < 3) notes_ += (notes_.empty() ? "" : "; ") + what;
    }
    void note(const std::string& s) { info_ += (info_.empty() ? "" : ", ") + s; }
    Outcome done() const {
        if (failures_ == 0) return {true, info_};
        return {false, std::to_string(failures_) + " failure(s): " + notes_ + (info_.empty() ? "" : " [" + info_ + "]")};
    }

private:
    int failures_ = 0;
    std::string notes_;
    std::string info_;
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

bool bit_equal(float a, float b) { return std::memcmp(&a, &b, sizeof(float)) == 0; }

float at(const FeatureStack& f, int v, int c, int y, int x) { return view_of(f, v).at(c, y, x); }

Camera frontal_camera(int size) {
    Matrix3d K;
    K << size, 0, size / 2.0, 0, size, size / 2.0, 0, 0, 1;
    return Camera(K, Matrix3d::Identity(), Vector3d::Zero(), size, size);
}

struct Scene {
    std::vector<Camera> cameras;
    std::vector<AggregatedRaster> aggregates;
    CorrespondenceTable table;
    ViewEmbeddings embeddings;
};

Scene make_scene(std::uint64_t seed, int views, int size, int factor = 8) {
    Scene s;
    const Mesh mesh = synthetic::blob_mesh(seed);
    s.cameras = synthetic::random_rig(seed, views, 1.6, 2.4, size * factor, size * factor);
    std::vector<ViewEmbedding> e;
    for (const auto& cam : s.cameras) {
        s.aggregates.push_back(aggregate_raster(rasterize_mesh(mesh, cam, size * factor, size * factor), mesh, size, size));
        e.push_back(view_embedding(cam, Vector3d::Zero()));
    }
    s.table = build_correspondence_table(s.aggregates, s.cameras);
    s.embeddings = ViewEmbeddings::from(e);
    return s;
}

std::vector<double> pixel_input(const FeatureView& view, int x, int y, std::span<const float> embedding) {
    std::vector<double> out;
    for (int c = 0; c < view.channels; ++c) out.push_back(view.at(c, y, x));
    for (float e : embedding) out.push_back(e);
    return out;
}

class RowSumObserver : public AttentionMapObserver {
public:
    void on_attention_map(std::string_view, std::span<const float> map, std::size_t rows, std::size_t cols,
                          std::span<const std::uint8_t> active) override {
        ++maps;
        for (std::size_t r = 0; r < rows; ++r) {
            if (!active[r]) continue;
            double sum = 0.0;
            for (std::size_t c = 0; c < cols; ++c) sum += map[r * cols + c];
            worst = std::max(worst, std::abs(sum - 1.0));
            ++active_rows;
        }
    }
    int maps = 0;
    double worst = 0.0;
    std::size_t active_rows = 0;
};

double rotation_angle_deg(const Matrix3d& a, const Matrix3d& b) {
    const double c = std::clamp(((a * b.transpose()).trace() - 1.0) / 2.0, -1.0, 1.0);
    return std::acos(c) * 180.0 / std::numbers::pi;
}

Outcome rasterizer_oracle() {
    Verdict v;
    const auto start = std::chrono::steady_clock::now();
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Mesh mesh = synthetic::random_triangles(seed, 5 + 5 * static_cast<int>(seed), 4.0);
        const Camera cam = frontal_camera(32);
        const RasterMap r = rasterize_mesh(mesh, cam, 32, 32);
        for (int y = 0; y < 32; ++y) {
            for (int x = 0; x < 32; ++x) {
                const auto o = oracle::brute_force_pixel(mesh, cam, 32, 32, x, y);
                const std::size_t i = r.index(x, y);
                const std::string where = "seed " + std::to_string(seed) + " pixel " + std::to_string(x) + "," + std::to_string(y);
                v.expect(r.mask[i] == (o.hit ? 1 : 0), where + " mask");
                v.expect(r.face_index[i] == o.face, where + " face");
                if (o.hit) {
                    v.expect((r.bary[i] - o.bary).cwiseAbs().maxCoeff() <= 1e-6, where + " bary");
                    v.expect(std::abs(r.depth[i] - o.depth) <= 1e-6, where + " depth");
                }
            }
        }
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    v.expect(secs < 10.0, "took " + fmt(secs) + " s");
    v.note("10 meshes, 5..50 faces, " + fmt(secs) + " s");
    return v.done();
}

Outcome aggregation_laws() {
    Verdict v;
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> small(-8, 8);
    std::uniform_int_distribution<int> eighth(0, 8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    // Dyadic vertices and barycentrics keep every sum exact, so the mean has one
    // correctly rounded value.
    std::vector<Vector3d> verts;
    std::vector<Face> faces;
    for (int f = 0; f < 20; ++f) {
        for (int k = 0; k < 3; ++k) verts.emplace_back(small(rng) / 4.0, small(rng) / 4.0, small(rng) / 4.0);
        faces.push_back({3 * f, 3 * f + 1, 3 * f + 2});
    }
    const Mesh mesh(verts, faces);
    const int factors[] = {1, 2, 3, 4, 8};
    int nonempty = 0;
    for (int t = 0; t < 1000; ++t) {
        const int k = factors[t % 5];
        const double density = u(rng);
        RasterMap r(k, k);
        std::vector<Vector3d> pts;
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (u(rng) >= density) continue;
            const int a = eighth(rng);
            const int b = std::uniform_int_distribution<int>(0, 8 - a)(rng);
            r.mask[i] = 1;
            r.face_index[i] = static_cast<int>(rng() % faces.size());
            r.bary[i] = Vector3d(a / 8.0, b / 8.0, (8 - a - b) / 8.0);
            r.depth[i] = 1.0;
            const auto& f = faces[static_cast<std::size_t>(r.face_index[i])];
            pts.push_back(r.bary[i][0] * verts[f[0]] + r.bary[i][1] * verts[f[1]] + r.bary[i][2] * verts[f[2]]);
        }
        const AggregatedRaster a = aggregate_raster(r, mesh, 1, 1);
        const std::string where = "region " + std::to_string(t);
        v.expect(a.mask[0] == (pts.empty() ? 0 : 1), where + " mask");
        v.expect(a.sample_count[0] == static_cast<int>(pts.size()), where + " count");
        if (pts.empty()) {
            v.expect(a.point[0] == Vector3d::Zero(), where + " empty point");
            continue;
        }
        ++nonempty;
        Vector3d sum = Vector3d::Zero(), lo = pts[0], hi = pts[0];
        for (const auto& p : pts) {
            sum += p;
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
        v.expect(a.point[0] == sum / static_cast<double>(pts.size()), where + " mean");
        v.expect((a.point[0] - lo).minCoeff() >= 0.0 && (hi - a.point[0]).minCoeff() >= 0.0, where + " bounding box");
    }
    v.note("1000 regions, " + std::to_string(nonempty) + " non-empty");
    return v.done();
}

Outcome correspondence_round_trip() {
    Verdict v;
    constexpr int kViews = 8, kFeature = 64, kFactor = 8, kImage = kFeature * kFactor;
    const Mesh mesh = synthetic::blob_mesh(3);
    v.expect(mesh.face_count() == 200, "mesh has " + std::to_string(mesh.face_count()) + " faces");
    const auto cams = synthetic::random_rig(3, kViews, 2.0, 3.0, kImage, kImage);
    std::vector<RasterMap> rasters;
    std::vector<AggregatedRaster> aggs;
    for (const auto& cam : cams) {
        rasters.push_back(rasterize_mesh(mesh, cam, kImage, kImage));
        aggs.push_back(aggregate_raster(rasters.back(), mesh, kFeature, kFeature));
    }
    const CorrespondenceTable table = build_correspondence_table(aggs, cams);
    const double to_feature = static_cast<double>(kFeature) / kImage;
    const double margin = 1.0 / kFactor;
    std::size_t valid = 0, inside = 0, single = 0, single_exact = 0;
    for (int view = 0; view < kViews; ++view) {
        const auto& agg = aggs[static_cast<std::size_t>(view)];
        const auto& raster = rasters[static_cast<std::size_t>(view)];
        for (int y = 0; y < kFeature; ++y) {
            for (int x = 0; x < kFeature; ++x) {
                const std::size_t i = agg.index(x, y);
                if (!agg.mask[i]) continue;
                v.expect(table.mask(table.row(view, x, y)), "table mask differs from the aggregate");
                ++valid;
                const Vector2d f = project_point(cams[static_cast<std::size_t>(view)], agg.point[i]) * to_feature;
                if (f.x() >= x - margin && f.x() <= x + 1 + margin && f.y() >= y - margin && f.y() <= y + 1 + margin) {
                    ++inside;
                }
                if (agg.sample_count[i] != 1) continue;
                ++single;
                for (int yy = y * kFactor; yy < (y + 1) * kFactor; ++yy) {
                    for (int xx = x * kFactor; xx < (x + 1) * kFactor; ++xx) {
                        if (!raster.mask[raster.index(xx, yy)]) continue;
                        const Vector2d center((xx + 0.5) * to_feature, (yy + 0.5) * to_feature);
                        if ((f - center).cwiseAbs().maxCoeff() <= 1e-6) ++single_exact;
                    }
                }
            }
        }
    }
    const double frac = valid ? static_cast<double>(inside) / valid : 0.0;
    v.expect(valid > 1000, "only " + std::to_string(valid) + " valid pixels");
    v.expect(frac >= 0.99, "footprint fraction " + fmt(frac));
    v.expect(single_exact == single, std::to_string(single - single_exact) + " single-sample pixels off");
    v.note(std::to_string(valid) + " valid pixels, " + fmt(100.0 * frac) + "% in footprint, " + std::to_string(single_exact) +
           "/" + std::to_string(single) + " single-sample exact");
    return v.done();
}

Outcome masked_skip() {
    Verdict v;
    std::size_t checked = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const int views = 2 + static_cast<int>(seed % 3);
        const int channels = 3 + static_cast<int>(seed % 4);
        const Scene s = make_scene(seed, views, 8);
        const FeatureStack f = synthetic::random_features(seed + 1000, views, channels, 8, 8);
        MultiScaleFeatures ref;
        ref.scales = {synthetic::random_image(seed + 2000, 5, 4, 4), synthetic::random_image(seed + 3000, 5, 8, 8)};
        const int e = s.embeddings.length;
        const AttentionParams pf = AttentionParams::random(channels + e, channels + e, channels, channels, seed);
        const AttentionParams pv = AttentionParams::random(channels + e, 5 + e, channels, channels, seed + 1);
        const int ref_view = static_cast<int>(seed % static_cast<std::uint64_t>(views));
        const FeatureStack a = meat_feat(f, s.table, s.embeddings, pf);
        const FeatureStack b = meat_vae(f, ref, s.table, s.embeddings, s.embeddings.row(ref_view), ref_view, pv);
        for (int view = 0; view < views; ++view) {
            for (int y = 0; y < 8; ++y) {
                for (int x = 0; x < 8; ++x) {
                    if (s.table.mask(s.table.row(view, x, y))) continue;
                    for (int c = 0; c < channels; ++c) {
                        ++checked;
                        v.expect(bit_equal(at(a, view, c, y, x), at(f, view, c, y, x)), "meat_feat changed a masked pixel");
                        v.expect(bit_equal(at(b, view, c, y, x), at(f, view, c, y, x)), "meat_vae changed a masked pixel");
                    }
                }
            }
        }
    }
    v.expect(checked > 0, "no masked pixels");
    v.note("100 instances, " + std::to_string(checked) + " masked values");
    return v.done();
}

Outcome attention_correctness() {
    Verdict v;
    // Dense fusion against a from-scratch brute force.
    const FeatureStack f = synthetic::random_features(101, 2, 4, 2, 2);
    const Scene s = make_scene(10, 2, 2);
    const int e = s.embeddings.length;
    const AttentionParams p = AttentionParams::random(4 + e, 4 + e, 4, 4, 102);
    const FeatureStack out = dense_mv_fuse(f, s.embeddings, p);
    std::vector<std::vector<double>> keys, values;
    for (int u = 0; u < 2; ++u) {
        for (int y = 0; y < 2; ++y) {
            for (int x = 0; x < 2; ++x) {
                const auto in = pixel_input(view_of(f, u), x, y, s.embeddings.row(u));
                keys.push_back(oracle::matvec(p.w_k, in));
                values.push_back(oracle::matvec(p.w_v, in));
            }
        }
    }
    double worst_dense = 0.0;
    for (int view = 0; view < 2; ++view) {
        for (int y = 0; y < 2; ++y) {
            for (int x = 0; x < 2; ++x) {
                const auto q = oracle::matvec(p.w_q, pixel_input(view_of(f, view), x, y, s.embeddings.row(view)));
                const auto proj = oracle::matvec(p.w_o, oracle::attention(q, keys, values));
                for (int c = 0; c < 4; ++c) {
                    worst_dense = std::max(worst_dense, std::abs(at(out, view, c, y, x) - (at(f, view, c, y, x) + proj[c])));
                }
            }
        }
    }
    v.expect(worst_dense <= 1e-6, "dense error " + fmt(worst_dense));

    // Row sums in every kernel.
    const Scene big = make_scene(12, 3, 8);
    const FeatureStack g = synthetic::random_features(121, 3, 4, 8, 8);
    MultiScaleFeatures ref;
    ref.scales = {synthetic::random_image(122, 6, 8, 8)};
    std::vector<EpipolarCandidates> per_view;
    for (int view = 0; view < 3; ++view) per_view.push_back(build_epipolar_candidates(big.cameras, view, {1.0, 3.0}, 4, 8));
    RowSumObserver obs;
    {
        ScopedAttentionObserver scope(obs);
        meat_block(g, big.table, ref, big.embeddings, 0, make_block_params(4, e, 6, 123));
        dense_mv_fuse(g, big.embeddings, AttentionParams::random(4 + e, 4 + e, 4, 4, 124));
        epipolar_fuse(g, to_key_samples(per_view), big.embeddings, AttentionParams::random(4 + e, 4 + e, 4, 4, 125));
    }
    v.expect(obs.maps == 5, std::to_string(obs.maps) + " attention maps observed");
    v.expect(obs.worst <= 1e-6, "row sum error " + fmt(obs.worst));

    // Key-set permutation invariance: relabel the views, rebuild the table, compare.
    double worst_perm = 0.0;
    for (std::uint64_t seed = 3; seed < 6; ++seed) {
        const Scene sc = make_scene(seed, 4, 8);
        const FeatureStack h = synthetic::random_features(seed + 30, 4, 6, 8, 8);
        const AttentionParams pp = AttentionParams::random(6 + e, 6 + e, 6, 6, seed + 31);
        const FeatureStack base = meat_feat(h, sc.table, sc.embeddings, pp);
        const std::vector<int> perm{2, 0, 3, 1};
        std::vector<Camera> cams;
        std::vector<AggregatedRaster> aggs;
        ViewEmbeddings emb;
        emb.length = sc.embeddings.length;
        Tensor<float> data(h.data.shape());
        const std::size_t stride = 6 * 64;
        for (int i = 0; i < 4; ++i) {
            const auto old = static_cast<std::size_t>(perm[static_cast<std::size_t>(i)]);
            cams.push_back(sc.cameras[old]);
            aggs.push_back(sc.aggregates[old]);
            emb.rows.push_back(sc.embeddings.rows[old]);
            std::copy_n(h.data.data() + old * stride, stride, data.data() + static_cast<std::size_t>(i) * stride);
        }
        const FeatureStack permuted = meat_feat(FeatureStack(data, {0, 1, 2, 3}), build_correspondence_table(aggs, cams), emb, pp);
        for (int i = 0; i < 4; ++i) {
            for (int c = 0; c < 6; ++c) {
                for (int y = 0; y < 8; ++y) {
                    for (int x = 0; x < 8; ++x) {
                        const double ref_v = at(base, perm[static_cast<std::size_t>(i)], c, y, x);
                        worst_perm = std::max(worst_perm, std::abs(at(permuted, i, c, y, x) - ref_v) / std::max(1.0, std::abs(ref_v)));
                    }
                }
            }
        }
    }
    v.expect(worst_perm <= 1e-6, "permutation error " + fmt(worst_perm));
    v.note("dense err " + fmt(worst_dense) + ", row sum err " + fmt(obs.worst) + ", permutation err " + fmt(worst_perm));
    return v.done();
}

std::uint64_t ipow(std::uint64_t b, int e) {
    std::uint64_t r = 1;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
}

Outcome complexity_analytic() {
    Verdict v;
    for (int N : {1, 2, 4, 16}) {
        for (int S : {1, 8, 32, 64}) {
            for (int K : {1, 8}) {
                const std::uint64_t n = N, s = S, c = 16, k = K, g = 4;
                const ComplexityReport r = complexity_counts({N, S, 16, K, 4}, 27);
                const std::string where = "N=" + std::to_string(N) + " S=" + std::to_string(S) + " K=" + std::to_string(K);
                v.expect(r.row(Scheme::Self).map_elements == n * ipow(s, 4) && r.row(Scheme::Self).kv_elements == n * s * s * c,
                         where + " self");
                v.expect(r.row(Scheme::Dense).map_elements == n * n * ipow(s, 4) &&
                             r.row(Scheme::Dense).kv_elements == n * n * s * s * c,
                         where + " dense");
                v.expect(r.row(Scheme::RowWise).map_elements == n * n * ipow(s, 3) &&
                             r.row(Scheme::RowWise).kv_elements == n * n * s * s * c,
                         where + " row-wise");
                v.expect(r.row(Scheme::Epipolar).map_elements == n * n * s * s * k * g &&
                             r.row(Scheme::Epipolar).kv_elements == n * n * s * s * c * k * g,
                         where + " epipolar");
                v.expect(r.row(Scheme::Mesh).map_elements == n * n * s * s * g &&
                             r.row(Scheme::Mesh).kv_elements == n * n * s * s * c * g &&
                             r.row(Scheme::Mesh).concat_overhead == (n * s * s + n * n * s * s * g) * 27,
                         where + " mesh");
                for (Scheme sc : kAllSchemes) v.expect(r.row(sc).q_elements == n * s * s * c, where + " queries");
            }
        }
    }
    const ComplexityReport r = complexity_counts({16, 32, 16, 8, 4});
    const auto mesh = r.row(Scheme::Mesh).map_elements;
    v.expect(r.row(Scheme::Dense).map_elements == 256 * mesh, "mesh/dense is not 1/256");
    v.expect(r.row(Scheme::Epipolar).map_elements == 8 * mesh, "mesh/epipolar is not 1/8");
    v.note("mesh " + std::to_string(mesh) + ", dense " + std::to_string(r.row(Scheme::Dense).map_elements) + ", epipolar " +
           std::to_string(r.row(Scheme::Epipolar).map_elements));
    return v.done();
}

Outcome complexity_empirical() {
    Verdict v;
    const auto start = std::chrono::steady_clock::now();
    const std::vector<Scheme> schemes{Scheme::Mesh, Scheme::Dense};
    std::vector<ComplexityParams> sizes;
    for (int S : {8, 16, 32, 64}) sizes.push_back({4, S, 16, 8, 4});
    const auto records = run_benchmark(schemes, sizes, 0);
    constexpr auto kKey = static_cast<std::size_t>(BufferRole::Key);
    constexpr auto kValue = static_cast<std::size_t>(BufferRole::Value);
    constexpr auto kMap = static_cast<std::size_t>(BufferRole::AttentionMap);
    std::vector<double> s_mesh, mesh_map, s_dense, dense_map;
    int measured = 0, estimated = 0;
    for (const auto& rec : records) {
        const std::string where = std::string(scheme_name(rec.scheme)) + " S=" + std::to_string(rec.params.S);
        if (rec.measured) {
            ++measured;
            v.expect(rec.role_elements[kKey] == rec.analytic.kv_elements, where + " key elements");
            v.expect(rec.role_elements[kValue] == rec.analytic.kv_elements, where + " value elements");
            v.expect(rec.role_elements[kMap] == rec.analytic.map_elements, where + " map elements");
        } else {
            ++estimated;
        }
        auto& xs = rec.scheme == Scheme::Mesh ? s_mesh : s_dense;
        auto& ys = rec.scheme == Scheme::Mesh ? mesh_map : dense_map;
        xs.push_back(rec.params.S);
        ys.push_back(static_cast<double>(rec.role_peak_bytes[kMap]));
    }
    v.expect(s_mesh.size() == 4 && s_dense.size() == 4, "missing records");
    const double mesh_slope = loglog_slope(s_mesh, mesh_map);
    const double dense_slope = loglog_slope(s_dense, dense_map);
    v.expect(std::abs(mesh_slope - 2.0) <= 0.4, "mesh slope " + fmt(mesh_slope));
    v.expect(std::abs(dense_slope - 4.0) <= 0.6, "dense slope " + fmt(dense_slope));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    v.expect(secs < 300.0, "took " + fmt(secs) + " s");
    v.note("mesh slope " + fmt(mesh_slope) + ", dense slope " + fmt(dense_slope) + ", " + std::to_string(measured) +
           " measured, " + std::to_string(estimated) + " estimated, " + fmt(secs) + " s");
    return v.done();
}

Outcome adaptation_recovery() {
    Verdict v;
    double worst_rot = 0.0, worst_t = 0.0, worst_s = 0.0;
    int worst_iter = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto fx = synthetic::adaptation_fixture(seed, 200, 0.0);
        v.expect(fx.cameras.size() == 4 && fx.matches.pairs.size() == 200, "fixture shape");
        const AdaptationResult r = fit_transform(fx.matches, fx.mono(), fx.cameras);
        worst_rot = std::max(worst_rot, rotation_angle_deg(r.transform.rotation(), fx.truth.rotation()));
        worst_t = std::max(worst_t, (r.transform.translation - fx.truth.translation).cwiseAbs().maxCoeff());
        for (int i = 0; i < 3; ++i) worst_s = std::max(worst_s, std::abs(r.transform.scale[i] / fx.truth.scale[i] - 1.0));
        worst_iter = std::max(worst_iter, r.iterations);
    }
    v.expect(worst_rot < 0.5, "rotation error " + fmt(worst_rot) + " deg");
    v.expect(worst_t < 1e-3, "translation error " + fmt(worst_t));
    v.expect(worst_s < 1e-3, "scale error " + fmt(worst_s));
    v.expect(worst_iter <= 5000, std::to_string(worst_iter) + " iterations");

    const double sigma = 0.005;
    double worst_rms = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto fx = synthetic::adaptation_fixture(seed + 30, 200, sigma);
        const AdaptationProblem problem = AdaptationProblem::build(fx.matches, fx.mono(), fx.cameras);
        const AdaptationResult r = fit_transform(problem);
        const auto res = match_residuals(r.transform, problem);
        double sq = 0.0;
        for (double e : res) sq += e * e;
        worst_rms = std::max(worst_rms, std::sqrt(sq / static_cast<double>(res.size())));
    }
    v.expect(worst_rms <= 2.0 * sigma, "noisy RMS " + fmt(worst_rms));

    // Gradient check, relative to the norm of the finite-difference gradient.
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst_grad = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto fx = synthetic::adaptation_fixture(seed + 10, 40);
        const AdaptationProblem problem = AdaptationProblem::build(fx.matches, fx.mono(), fx.cameras);
        SimilarityTransform tf = fx.truth;
        for (int i = 0; i < 3; ++i) tf.scale[i] *= 1.0 + 0.2 * u(rng);
        const Vector3d axis = Vector3d(u(rng), u(rng), u(rng)).normalized();
        tf.rot6d = matrix_to_rot6d(Eigen::AngleAxisd(0.2 * u(rng), axis).toRotationMatrix() * fx.truth.rotation());
        tf.rot6d.head<3>() *= 1.0 + 0.3 * u(rng);
        tf.translation += 0.1 * Vector3d(u(rng), u(rng), u(rng));
        TransformGradient g;
        adaptation_loss(tf, problem, g);
        const TransformGradient x = pack_transform(tf);
        TransformGradient fd;
        for (int k = 0; k < 12; ++k) {
            TransformGradient a = x, b = x;
            a[k] += 1e-5;
            b[k] -= 1e-5;
            fd[k] = (adaptation_loss(unpack_transform(a), problem) - adaptation_loss(unpack_transform(b), problem)) / 2e-5;
        }
        worst_grad = std::max(worst_grad, (g - fd).norm() / fd.norm());
    }
    v.expect(worst_grad < 1e-4, "gradient relative error " + fmt(worst_grad));
    v.note("rot " + fmt(worst_rot) + " deg, t " + fmt(worst_t) + ", scale " + fmt(worst_s) + ", " + std::to_string(worst_iter) +
           " it, noisy RMS " + fmt(worst_rms) + ", grad err " + fmt(worst_grad));
    return v.done();
}

Outcome crop_commutation() {
    Verdict v;
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const Camera cam = synthetic::random_rig(static_cast<std::uint64_t>(t), 1, 2.0, 5.0, 640, 480)[0];
        const CropSpec crop{0, Vector2d(320 + 200 * u(rng), 240 + 150 * u(rng)), 20 + 300 * (u(rng) + 1),
                            16 + static_cast<int>(500 * (u(rng) + 1))};
        const Camera cropped = apply_crop_to_intrinsics(cam, crop);
        Vector3d P;
        do {
            P = Vector3d(u(rng), u(rng), u(rng));
        } while (cam.to_camera(P).z() < 0.5);
        const Vector2d expected = (project_point(cam, P) - crop.window_origin()) * crop.scale();
        worst = std::max(worst, (project_point(cropped, P) - expected).norm() / std::max(expected.norm(), 1.0));
    }
    v.expect(worst <= 1e-9, "relative error " + fmt(worst));

    Matrix3d K;
    K << 1000, 0, 512, 0, 1000, 512, 0, 0, 1;
    const Camera cam(K, Matrix3d::Identity(), Vector3d::Zero(), 1024, 1024);
    const std::vector<Vector3d> kps{Vector3d(0.05, 0.1, 2), Vector3d(0, 0.2, 2), Vector3d(-0.1, -0.15, 2)};
    const CropSpec c = compute_crop(cam, kps, Vector3d(0, 0, 2), 256);
    v.expect(c.radius == 130.0, "radius " + fmt(c.radius));
    v.note("1000 triples, worst " + fmt(worst) + ", radius " + fmt(c.radius));
    return v.done();
}

Outcome frontal_selection() {
    Verdict v;
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int ties = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto cams = synthetic::random_rig(seed + 500, 2 + static_cast<int>(seed % 9), 1.5, 4.0, 64, 64);
        if (seed % 2 == 0) {
            cams.push_back(cams[seed % cams.size()]);
            ++ties;
        }
        const Vector3d pelvis(0.1 * u(rng), 0.1 * u(rng), 0.1 * u(rng));
        Vector3d d(u(rng), u(rng), u(rng));
        if (seed % 4 == 0) d = camera_center(cams[seed % cams.size()]) - pelvis;
        const int got = select_frontal_view(cams, pelvis, d);
        const std::string where = "rig " + std::to_string(seed);
        v.expect(got == oracle::frontal_view(cams, pelvis, d), where + " disagrees with the oracle");
        const double lambda = 0.25 + 3.0 * (u(rng) + 1.0);
        std::vector<Camera> scaled;
        for (const auto& c : cams) {
            const Vector3d center = pelvis + lambda * (camera_center(c) - pelvis);
            scaled.emplace_back(c.K(), c.R(), -c.R() * center, c.width(), c.height());
        }
        v.expect(select_frontal_view(scaled, pelvis, d) == got, where + " not scale invariant");
        v.expect(select_frontal_view(cams, pelvis, 3.7 * d) == got, where + " depends on |orientation|");
    }
    v.expect(select_frontal_view(synthetic::ring16(), synthetic::kRingPelvis, synthetic::ring16_orientation()) == 5,
             "ring fixture");
    v.note("100 rigs, " + std::to_string(ties) + " with duplicated cameras");
    return v.done();
}

Outcome zero_init_conditioning() {
    Verdict v;
    const KeypointEncoder enc(8, 3);
    std::size_t values = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Tensor<float> img = synthetic::random_image(seed, 3, 32, 48);
        for (auto& x : img.values()) x = x * static_cast<float>(1 + seed * 100);
        const Tensor<float> out = keypoint_encode(img, enc);
        v.expect(out.shape() == Shape{8, 4, 6}, "shape");
        for (float x : out.values()) {
            v.expect(bit_equal(x, 0.0f), "non-zero output");
            ++values;
        }
    }
    const std::pair<int, int> sizes[] = {{64, 64}, {96, 160}, {256, 128}};
    for (const auto& [h, w] : sizes) {
        const Tensor<float> out = keypoint_encode(synthetic::random_image(7, 3, h, w), enc);
        v.expect(out.shape() == Shape{8, static_cast<std::size_t>(h / 8), static_cast<std::size_t>(w / 8)},
                 "downsample at " + std::to_string(h) + "x" + std::to_string(w));
        for (float x : out.values()) v.expect(bit_equal(x, 0.0f), "non-zero output");
    }
    v.note(std::to_string(values) + " zero values, 3 resolutions");
    return v.done();
}

std::map<std::string, std::vector<std::uint8_t>> snapshot(const fs::path& root) {
    std::map<std::string, std::vector<std::uint8_t>> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) files[fs::relative(e.path(), root).generic_string()] = read_bytes(e.path());
    }
    return files;
}

Outcome demo_determinism(const std::string& tool) {
    Verdict v;
    const fs::path root = fs::temp_directory_path() / "meatkit_acceptance";
    fs::remove_all(root);
    const fs::path a = root / "run_a", b = root / "run_b";
    for (const fs::path& dir : {a, b}) {
        int code = 0;
        if (!tool.empty()) {
            const std::string cmd = "\"" + tool + "\" --seed 0 demo --out \"" + dir.string() + "\" > /dev/null";
            code = std::system(cmd.c_str());
        } else {
            std::ostringstream out, err;
            code = dispatch({"--seed", "0", "demo", "--out", dir.string()}, out, err);
        }
        v.expect(code == 0, "demo exited with " + std::to_string(code));
    }
    const auto ta = snapshot(a), tb = snapshot(b);
    v.expect(ta.size() > 40, "only " + std::to_string(ta.size()) + " artifacts");
    v.expect(ta == tb, "artifact trees differ");
    std::size_t bytes = 0;
    for (const auto& [name, data] : ta) bytes += data.size();
    v.note(std::to_string(ta.size()) + " files, " + std::to_string(bytes) + " bytes, " +
           (tool.empty() ? "in-process" : "separate processes"));
    fs::remove_all(root);
    return v.done();
}

}  // namespace

int main(int argc, char** argv) {
    const std::string tool = argc > 1 ? argv[1] : "";
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"rasterizer matches the all-faces oracle", rasterizer_oracle},
        {"aggregation mean and logical-or laws", aggregation_laws},
        {"correspondence round trip", correspondence_round_trip},
        {"masked pixels pass through bit-exactly", masked_skip},
        {"attention correctness", attention_correctness},
        {"analytic complexity table", complexity_analytic},
        {"measured complexity and scaling", complexity_empirical},
        {"similarity transform recovery", adaptation_recovery},
        {"crop commutes with projection", crop_commutation},
        {"frontal view selection", frontal_selection},
        {"zero-initialized keypoint conditioning", zero_init_conditioning},
        {"demo determinism", [&] { return demo_determinism(tool); }},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        const auto start = std::chrono::steady_clock::now();
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s %2zu %s (%s; %.2f s)\n", o.ok ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str(),
                    secs);
        std::fflush(stdout);
        failed += o.ok ? 0 : 1;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
