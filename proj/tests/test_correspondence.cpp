// Copyright 2026 The meatkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <random>

#include <doctest.h>

#include "meatkit/correspondence.hpp"
#include "meatkit/error.hpp"
#include "meatkit/parallel.hpp"
#include "meatkit/rasterizer.hpp"
#include "meatkit/synthetic.hpp"

using namespace meatkit;

namespace {

Matrix3d example_K() {
    Matrix3d K;
    K << 1000, 0, 512, 0, 1000, 512, 0, 0, 1;
    return K;
}

template <class F>
ErrorCode code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::InvalidArgument;
}

using Index = std::array<int, 2>;

std::vector<AggregatedRaster> aggregate_views(const Mesh& mesh, std::span<const Camera> cams, int feature) {
    std::vector<AggregatedRaster> out;
    for (const auto& cam : cams) out.push_back(aggregate_raster(rasterize_mesh(mesh, cam, feature * 8, feature * 8), mesh, feature, feature));
    return out;
}

}  // namespace

TEST_CASE("grid_sample_indices examples") {
    const SampleIndexSet a = grid_sample_indices(Vector2d(2.3, 4.7), 16, 16);
    CHECK(a.indices[0] == Index{2, 4});
    CHECK(a.indices[1] == Index{3, 4});
    CHECK(a.indices[2] == Index{2, 5});
    CHECK(a.indices[3] == Index{3, 5});
    CHECK(a.valid_count() == 4);

    const SampleIndexSet b = grid_sample_indices(Vector2d(2.0, 4.0), 16, 16);
    for (int i = 0; i < 4; ++i) {
        CHECK(b.indices[i] == Index{2, 4});
        CHECK(b.valid[i]);
    }

    const SampleIndexSet c = grid_sample_indices(Vector2d(-0.5, 3.0), 16, 16);
    for (int i = 0; i < 4; ++i) {
        const int x = c.indices[i][0];
        CHECK((x == -1 || x == 0));
        CHECK(c.valid[i] == (x == 0));
    }
    CHECK(c.valid_count() == 2);

    const SampleIndexSet d = grid_sample_indices(Vector2d(NAN, 1.0), 16, 16);
    CHECK(d.valid_count() == 0);
    const SampleIndexSet e = grid_sample_indices(Vector2d(15.5, 15.5), 16, 16);
    CHECK(e.valid_count() == 1);
}

TEST_CASE("grid sample bounds rule on random coordinates") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-3.0, 19.0);
    for (int i = 0; i < 10000; ++i) {
        const Vector2d p(u(rng), u(rng));
        const SampleIndexSet s = grid_sample_indices(p, 16, 12);
        for (int k = 0; k < 4; ++k) {
            const int x = s.indices[k][0];
            const int y = s.indices[k][1];
            CHECK((x == static_cast<int>(std::floor(p.x())) || x == static_cast<int>(std::ceil(p.x()))));
            CHECK((y == static_cast<int>(std::floor(p.y())) || y == static_cast<int>(std::ceil(p.y()))));
            CHECK(s.valid[k] == (x >= 0 && x < 16 && y >= 0 && y < 12));
        }
    }
}

TEST_CASE("project_to_views examples") {
    const std::vector<Camera> cams{Camera(example_K(), Matrix3d::Identity(), Vector3d::Zero(), 1024, 1024),
                                   Camera(example_K(), Matrix3d::Identity(), Vector3d(-0.2, 0, 0), 1024, 1024)};
    const std::vector<double> ones{1.0, 1.0};
    const auto a = project_to_views(Vector3d(0, 0, 2), cams, ones);
    CHECK((a[0] - Vector2d(512, 512)).norm() < 1e-12);
    CHECK((a[1] - Vector2d(412, 512)).norm() < 1e-12);

    // Behind cam1 only: cam1 sits at z = 3 looking the same way.
    const std::vector<Camera> cams2{cams[0], Camera(example_K(), Matrix3d::Identity(), Vector3d(0, 0, -3), 1024, 1024)};
    const auto b = project_to_views(Vector3d(0, 0, 2), cams2, ones);
    CHECK(std::isfinite(b[0].x()));
    CHECK(!std::isfinite(b[1].x()));

    const std::vector<double> small{1.0 / 64.0};
    const auto c = project_to_views(Vector3d(0, 0, 2), std::span(cams).first(1), small);
    CHECK((c[0] - Vector2d(8, 8)).norm() < 1e-12);
}

TEST_CASE("correspondence table shape and completeness") {
    const Mesh mesh = synthetic::blob_mesh(2);
    const auto cams = synthetic::random_rig(2, 4, 2.0, 3.0, 64, 64);
    const auto aggs = aggregate_views(mesh, cams, 16);
    const CorrespondenceTable table = build_correspondence_table(aggs, cams);
    CHECK(table.rows() == 4 * 256);
    CHECK(table.index_data().size() == 4 * 256 * 4 * 4 * 2);
    CHECK(table.valid_data().size() == 4 * 256 * 4 * 4);
    int masked_rows = 0;
    for (int v = 0; v < 4; ++v) {
        for (int y = 0; y < 16; ++y) {
            for (int x = 0; x < 16; ++x) {
                const std::size_t row = table.row(v, x, y);
                const auto& agg = aggs[static_cast<std::size_t>(v)];
                CHECK(table.mask(row) == (agg.mask[agg.index(x, y)] != 0));
                CHECK(table.valid_keys(row) <= 16);
                if (!table.mask(row)) {
                    CHECK(table.valid_keys(row) == 0);
                    ++masked_rows;
                    continue;
                }
                std::vector<double> scales(4, 16.0 / 64.0);
                const auto coords = project_to_views(agg.point[agg.index(x, y)], cams, scales);
                bool all_inside = true;
                for (const auto& c : coords) {
                    all_inside = all_inside && std::isfinite(c.x()) && c.x() >= 0.5 && c.x() < 15.5 && c.y() >= 0.5 &&
                                 c.y() < 15.5;
                }
                if (all_inside) CHECK(table.valid_keys(row) == 16);
            }
        }
    }
    CHECK(masked_rows > 0);
}

TEST_CASE("source-view round trip covers the own footprint") {
    const Mesh mesh = synthetic::blob_mesh(5);
    const auto cams = synthetic::random_rig(5, 3, 2.0, 3.0, 128, 128);
    const auto aggs = aggregate_views(mesh, cams, 32);
    const CorrespondenceTable table = build_correspondence_table(aggs, cams);
    int valid = 0;
    for (int v = 0; v < 3; ++v) {
        for (int y = 0; y < 32; ++y) {
            for (int x = 0; x < 32; ++x) {
                const std::size_t row = table.row(v, x, y);
                if (!table.mask(row)) continue;
                ++valid;
                // The own pixel is among the four self-view samples whenever the
                // projection stays inside the footprint.
                const auto& agg = aggs[static_cast<std::size_t>(v)];
                const Vector2d f = project_point(cams[static_cast<std::size_t>(v)], agg.point[agg.index(x, y)]) * (32.0 / 128.0);
                const double margin = 1.0 / 8.0;
                CHECK(f.x() >= x - margin);
                CHECK(f.x() <= x + 1 + margin);
                CHECK(f.y() >= y - margin);
                CHECK(f.y() <= y + 1 + margin);
                if (f.x() >= x && f.x() < x + 1 && f.y() >= y && f.y() < y + 1) {
                    const SampleIndexSet s = table.samples(row, v);
                    bool own = false;
                    for (int k = 0; k < 4; ++k) own = own || (s.indices[k] == Index{x, y} && s.valid[k]);
                    CHECK(own);
                }
            }
        }
    }
    CHECK(valid > 100);
}

TEST_CASE("all-masked view yields an all-invalid table") {
    const Mesh mesh = synthetic::blob_mesh(3);
    // Every camera looks away from the mesh.
    std::vector<Camera> cams;
    for (int i = 0; i < 3; ++i) {
        const Vector3d eye(0.5 * i, 0.0, 3.0);
        cams.push_back(look_at_camera(eye, eye + Vector3d(0, 0, 1), 0.8, 64, 64));
    }
    const auto aggs = aggregate_views(mesh, cams, 8);
    const CorrespondenceTable table = build_correspondence_table(aggs, cams);
    for (std::size_t r = 0; r < table.rows(); ++r) {
        CHECK(!table.mask(r));
        CHECK(table.valid_keys(r) == 0);
    }
}

TEST_CASE("table construction errors") {
    const Mesh mesh = synthetic::blob_mesh(3);
    const auto cams = synthetic::random_rig(3, 2, 2.0, 3.0, 64, 64);
    auto aggs = aggregate_views(mesh, cams, 8);
    CHECK(code_of([&] { build_correspondence_table(std::span(aggs).first(1), cams); }) == ErrorCode::ResolutionMismatch);
    aggs[1] = aggregate_raster(rasterize_mesh(mesh, cams[1], 64, 64), mesh, 16, 16);
    CHECK(code_of([&] { build_correspondence_table(aggs, cams); }) == ErrorCode::ResolutionMismatch);
}

TEST_CASE("table construction is deterministic across thread counts") {
    const Mesh mesh = synthetic::blob_mesh(8);
    const auto cams = synthetic::random_rig(8, 5, 2.0, 3.0, 64, 64);
    const auto aggs = aggregate_views(mesh, cams, 16);
    set_max_threads(1);
    const CorrespondenceTable a = build_correspondence_table(aggs, cams);
    set_max_threads(5);
    const CorrespondenceTable b = build_correspondence_table(aggs, cams);
    set_max_threads(0);
    CHECK(a.index_data() == b.index_data());
    CHECK(a.valid_data() == b.valid_data());
    CHECK(a.mask_data() == b.mask_data());
}

TEST_CASE("table serialization round trip") {
    const Mesh mesh = synthetic::blob_mesh(6);
    const auto cams = synthetic::random_rig(6, 3, 2.0, 3.0, 64, 64);
    const auto aggs = aggregate_views(mesh, cams, 8);
    const CorrespondenceTable a = build_correspondence_table(aggs, cams);
    const CorrespondenceTable b = CorrespondenceTable::from_data(3, 8, 8, a.index_data(), a.valid_data(), a.mask_data());
    CHECK(b.index_data() == a.index_data());
    CHECK(b.mask_data() == a.mask_data());
    const CorrespondenceTable c = CorrespondenceTable::from_data(3, 8, 8, a.index_data(), a.valid_data(), {});
    for (std::size_t r = 0; r < a.rows(); ++r) CHECK(c.mask(r) == (a.valid_keys(r) > 0));
}

TEST_CASE("epipolar candidates") {
    const auto cams = synthetic::random_rig(4, 4, 2.0, 3.0, 64, 64);
    const EpipolarCandidates a = build_epipolar_candidates(cams, 0, {1.0, 3.0}, 3, 8);
    REQUIRE(a.depths.size() == 3);
    CHECK(a.depths[0] == 1.0);
    CHECK(a.depths[1] == 2.0);
    CHECK(a.depths[2] == 3.0);

    const EpipolarCandidates b = build_epipolar_candidates(cams, 1, {1.0, 4.0}, 8, 8);
    CHECK(b.keys_per_pixel() == 128);
    CHECK(b.index.size() == 8 * 8 * 128);
    CHECK(b.valid.size() == 8 * 8 * 128);

    const EpipolarCandidates c = build_epipolar_candidates(cams, 0, {1.0, 3.0}, 1, 4);
    REQUIRE(c.depths.size() == 1);
    CHECK(c.depths[0] == 2.0);

    CHECK(code_of([&] { build_epipolar_candidates(cams, 0, {2.0, 2.0}, 1, 4); }) == ErrorCode::InvalidDepthRange);
    CHECK(code_of([&] { build_epipolar_candidates(cams, 0, {0.0, 2.0}, 1, 4); }) == ErrorCode::InvalidDepthRange);
    CHECK(code_of([&] { build_epipolar_candidates(cams, 0, {3.0, 2.0}, 1, 4); }) == ErrorCode::InvalidDepthRange);
}

TEST_CASE("epipolar samples of the target view land on the query pixel") {
    const auto cams = synthetic::random_rig(9, 3, 2.0, 3.0, 64, 64);
    const EpipolarCandidates e = build_epipolar_candidates(cams, 2, {1.0, 4.0}, 4, 16);
    for (int y = 0; y < 16; ++y) {
        for (int x = 0; x < 16; ++x) {
            const std::size_t pix = static_cast<std::size_t>(y) * 16 + x;
            for (int k = 0; k < 4; ++k) {
                bool own = false;
                for (int s = 0; s < 4; ++s) {
                    const std::size_t slot = ((pix * 4 + k) * 3 + 2) * 4 + s;
                    const Index idx = e.index[slot];
                    CHECK(std::abs(idx[0] - x) <= 1);
                    CHECK(std::abs(idx[1] - y) <= 1);
                    own = own || (idx == Index{x, y} && e.valid[slot]);
                }
                CHECK(own);
            }
        }
    }
}

TEST_CASE("key sample tables") {
    const Mesh mesh = synthetic::blob_mesh(2);
    const auto cams = synthetic::random_rig(2, 3, 2.0, 3.0, 64, 64);
    const auto aggs = aggregate_views(mesh, cams, 8);
    const CorrespondenceTable table = build_correspondence_table(aggs, cams);
    const KeySampleTable all = to_key_samples(table);
    CHECK(all.keys_per_query == 12);
    CHECK(all.queries() == table.rows());
    const KeySampleTable single = to_key_samples_single_source(table, 1);
    CHECK(single.keys_per_query == 4);
    for (std::size_t q = 0; q < single.queries(); ++q) {
        for (int k = 0; k < 4; ++k) {
            const std::size_t i = q * 4 + k;
            CHECK(single.source[i] == 1);
            const SampleIndexSet s = table.samples(q, 1);
            CHECK(single.valid[i] == (s.valid[k] ? 1 : 0));
        }
    }
    std::vector<EpipolarCandidates> per_view;
    for (int v = 0; v < 3; ++v) per_view.push_back(build_epipolar_candidates(cams, v, {1.0, 4.0}, 2, 8));
    const KeySampleTable epi = to_key_samples(per_view);
    CHECK(epi.keys_per_query == 3 * 2 * 4);
    CHECK(epi.queries() * epi.keys_per_query == 8 * 8 * 3 * 3 * 2 * 4);
}
