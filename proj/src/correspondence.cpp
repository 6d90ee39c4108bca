// Copyright 2026 The meatkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "meatkit/correspondence.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "meatkit/error.hpp"
#include "meatkit/parallel.hpp"

namespace meatkit {

int SampleIndexSet::valid_count() const {
    int n = 0;
    for (bool v : valid) n += v ? 1 : 0;
    return n;
}

SampleIndexSet grid_sample_indices(const Vector2d& pixel, int width, int height) {
    SampleIndexSet out;
    for (auto& idx : out.indices) idx = {-1, -1};
    // Anything beyond this cannot be in bounds and would overflow int.
    constexpr double kLimit = 1e9;
    if (!pixel.allFinite() || std::abs(pixel.x()) > kLimit || std::abs(pixel.y()) > kLimit) return out;
    const int fx = static_cast<int>(std::floor(pixel.x()));
    const int cx = static_cast<int>(std::ceil(pixel.x()));
    const int fy = static_cast<int>(std::floor(pixel.y()));
    const int cy = static_cast<int>(std::ceil(pixel.y()));
    out.indices = {{{fx, fy}, {cx, fy}, {fx, cy}, {cx, cy}}};
    for (int i = 0; i < kGridSamples; ++i) {
        const auto [x, y] = out.indices[i];
        out.valid[i] = x >= 0 && x < width && y >= 0 && y < height;
    }
    return out;
}

std::vector<Vector2d> project_to_views(const Vector3d& point, std::span<const Camera> cameras,
                                       std::span<const double> feature_scale) {
    if (cameras.empty()) fail(ErrorCode::InvalidArgument, "no cameras to project into");
    if (feature_scale.size() != cameras.size()) {
        fail(ErrorCode::ShapeMismatch, "one feature scale per camera is required");
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<Vector2d> out;
    out.reserve(cameras.size());
    for (std::size_t v = 0; v < cameras.size(); ++v) {
        const Vector3d cam = cameras[v].to_camera(point);
        if (!(cam.z() > kMinDepth)) {
            out.emplace_back(nan, nan);
            continue;
        }
        out.push_back(project_point(cameras[v], point) * feature_scale[v]);
    }
    return out;
}

CorrespondenceTable::CorrespondenceTable(int n_views, int width, int height)
    : n_views_(n_views), width_(width), height_(height) {
    if (n_views < 1 || width < 1 || height < 1) fail(ErrorCode::InvalidArgument, "empty correspondence table");
    index_.assign(rows() * n_views * kGridSamples * 2, -1);
    valid_.assign(rows() * n_views * kGridSamples, 0);
    mask_.assign(rows(), 0);
}

SampleIndexSet CorrespondenceTable::samples(std::size_t row, int source) const {
    SampleIndexSet s;
    const std::size_t base = (row * n_views_ + static_cast<std::size_t>(source)) * kGridSamples;
    for (int k = 0; k < kGridSamples; ++k) {
        s.indices[k] = {index_[(base + k) * 2], index_[(base + k) * 2 + 1]};
        s.valid[k] = valid_[base + k] != 0;
    }
    return s;
}

void CorrespondenceTable::set(std::size_t row, bool mask, std::span<const SampleIndexSet> per_source) {
    if (per_source.size() != static_cast<std::size_t>(n_views_)) {
        fail(ErrorCode::ShapeMismatch, "one sample set per source view is required");
    }
    mask_[row] = mask ? 1 : 0;
    for (int u = 0; u < n_views_; ++u) {
        const std::size_t base = (row * n_views_ + static_cast<std::size_t>(u)) * kGridSamples;
        for (int k = 0; k < kGridSamples; ++k) {
            const bool ok = mask && per_source[u].valid[k];
            index_[(base + k) * 2] = per_source[u].indices[k][0];
            index_[(base + k) * 2 + 1] = per_source[u].indices[k][1];
            valid_[base + k] = ok ? 1 : 0;
        }
    }
}

int CorrespondenceTable::valid_keys(std::size_t row) const {
    int n = 0;
    const std::size_t base = row * n_views_ * kGridSamples;
    for (std::size_t k = 0; k < static_cast<std::size_t>(n_views_) * kGridSamples; ++k) n += valid_[base + k];
    return n;
}

CorrespondenceTable CorrespondenceTable::from_data(int n_views, int width, int height,
                                                   std::vector<std::int32_t> index,
                                                   std::vector<std::uint8_t> valid,
                                                   std::vector<std::uint8_t> mask) {
    CorrespondenceTable t(n_views, width, height);
    if (index.size() != t.index_.size() || valid.size() != t.valid_.size() ||
        (!mask.empty() && mask.size() != t.mask_.size())) {
        fail(ErrorCode::ShapeMismatch, "correspondence tensors do not match the table shape");
    }
    t.index_ = std::move(index);
    t.valid_ = std::move(valid);
    if (mask.empty()) {
        for (std::size_t r = 0; r < t.rows(); ++r) t.mask_[r] = t.valid_keys(r) > 0 ? 1 : 0;
    } else {
        t.mask_ = std::move(mask);
    }
    return t;
}

namespace {

std::vector<double> feature_scales(std::span<const Camera> cameras, int width, int height) {
    std::vector<double> scales;
    for (std::size_t v = 0; v < cameras.size(); ++v) {
        const double sx = static_cast<double>(width) / cameras[v].width();
        const double sy = static_cast<double>(height) / cameras[v].height();
        if (std::abs(sx - sy) > 1e-9 * sx) {
            fail(ErrorCode::ResolutionMismatch, "view " + std::to_string(v) +
                                                    " has a different aspect ratio than the feature map");
        }
        scales.push_back(sx);
    }
    return scales;
}

SampleIndexSet sample_feature_point(const Vector2d& feature_xy, int width, int height) {
    return grid_sample_indices(feature_xy - Vector2d(0.5, 0.5), width, height);
}

}  // namespace

CorrespondenceTable build_correspondence_table(std::span<const AggregatedRaster> aggregates,
                                               std::span<const Camera> cameras) {
    if (aggregates.empty()) fail(ErrorCode::ResolutionMismatch, "no aggregated rasters");
    if (aggregates.size() != cameras.size()) {
        fail(ErrorCode::ResolutionMismatch, std::to_string(aggregates.size()) + " aggregates for " +
                                                std::to_string(cameras.size()) + " cameras");
    }
    const int w = aggregates[0].width;
    const int h = aggregates[0].height;
    for (const auto& a : aggregates) {
        if (a.width != w || a.height != h) fail(ErrorCode::ResolutionMismatch, "aggregates differ in size");
    }
    const int n = static_cast<int>(cameras.size());
    const auto scales = feature_scales(cameras, w, h);
    CorrespondenceTable table(n, w, h);

    parallel_for(0, table.rows(), [&](std::size_t row) {
        const int v = static_cast<int>(row / (static_cast<std::size_t>(w) * h));
        const std::size_t pix = row % (static_cast<std::size_t>(w) * h);
        const auto& agg = aggregates[static_cast<std::size_t>(v)];
        std::vector<SampleIndexSet> sets(static_cast<std::size_t>(n));
        if (!agg.mask[pix]) {
            table.set(row, false, sets);
            return;
        }
        const auto coords = project_to_views(agg.point[pix], cameras, scales);
        for (int u = 0; u < n; ++u) sets[u] = sample_feature_point(coords[u], w, h);
        table.set(row, true, sets);
    });
    return table;
}

EpipolarCandidates build_epipolar_candidates(std::span<const Camera> cameras, int target_view,
                                             DepthRange range, int depth_samples, int feature_size) {
    if (cameras.empty()) fail(ErrorCode::InvalidArgument, "no cameras");
    if (target_view < 0 || static_cast<std::size_t>(target_view) >= cameras.size()) {
        fail(ErrorCode::InvalidArgument, "target view out of range");
    }
    if (!(range.near > 0.0) || !(range.near < range.far) || !std::isfinite(range.far)) {
        fail(ErrorCode::InvalidDepthRange, "need 0 < near < far");
    }
    if (depth_samples < 1) fail(ErrorCode::InvalidArgument, "need at least one depth sample");
    if (feature_size < 1) fail(ErrorCode::InvalidArgument, "feature size must be positive");

    EpipolarCandidates out;
    out.n_views = static_cast<int>(cameras.size());
    out.target_view = target_view;
    out.width = feature_size;
    out.height = feature_size;
    out.depth_samples = depth_samples;
    out.depth_range = range;
    if (depth_samples == 1) {
        out.depths = {0.5 * (range.near + range.far)};
    } else {
        for (int k = 0; k < depth_samples; ++k) {
            out.depths.push_back(range.near + (range.far - range.near) * k / (depth_samples - 1));
        }
    }
    const auto scales = feature_scales(cameras, feature_size, feature_size);
    const std::size_t pixels = static_cast<std::size_t>(feature_size) * feature_size;
    out.index.assign(pixels * out.keys_per_pixel(), {-1, -1});
    out.valid.assign(pixels * out.keys_per_pixel(), 0);

    const Camera& target = cameras[static_cast<std::size_t>(target_view)];
    const Vector3d origin = camera_center(target);
    const double tscale = scales[static_cast<std::size_t>(target_view)];
    parallel_for(0, pixels, [&](std::size_t pix) {
        const int x = static_cast<int>(pix % feature_size);
        const int y = static_cast<int>(pix / feature_size);
        const Vector2d image_xy((x + 0.5) / tscale, (y + 0.5) / tscale);
        const Vector3d dir = pixel_ray(target, image_xy);
        std::size_t slot = pix * out.keys_per_pixel();
        for (double depth : out.depths) {
            const auto coords = project_to_views(origin + depth * dir, cameras, scales);
            for (int u = 0; u < out.n_views; ++u) {
                const auto s = sample_feature_point(coords[u], feature_size, feature_size);
                for (int k = 0; k < kGridSamples; ++k, ++slot) {
                    out.index[slot] = s.indices[k];
                    out.valid[slot] = s.valid[k] ? 1 : 0;
                }
            }
        }
    });
    return out;
}

DepthRange default_epipolar_range(const Mesh& mesh, const Camera& camera) {
    const auto [lo, hi] = mesh_depth_range(mesh, camera);
    return {0.9 * lo, 1.1 * hi};
}

KeySampleTable to_key_samples(const CorrespondenceTable& table) {
    KeySampleTable out;
    out.n_views = table.n_views();
    out.width = table.width();
    out.height = table.height();
    out.keys_per_query = table.n_views() * kGridSamples;
    const std::size_t total = table.rows() * out.keys_per_query;
    out.source.resize(total);
    out.x.resize(total);
    out.y.resize(total);
    out.valid.resize(total);
    out.mask.resize(table.rows());
    for (std::size_t r = 0; r < table.rows(); ++r) {
        out.mask[r] = table.mask(r) ? 1 : 0;
        std::size_t slot = r * out.keys_per_query;
        for (int u = 0; u < table.n_views(); ++u) {
            const auto s = table.samples(r, u);
            for (int k = 0; k < kGridSamples; ++k, ++slot) {
                out.source[slot] = u;
                out.x[slot] = s.indices[k][0];
                out.y[slot] = s.indices[k][1];
                out.valid[slot] = s.valid[k] ? 1 : 0;
            }
        }
    }
    return out;
}

KeySampleTable to_key_samples_single_source(const CorrespondenceTable& table, int source_view) {
    if (source_view < 0 || source_view >= table.n_views()) fail(ErrorCode::InvalidArgument, "source view out of range");
    KeySampleTable out;
    out.n_views = table.n_views();
    out.width = table.width();
    out.height = table.height();
    out.keys_per_query = kGridSamples;
    const std::size_t total = table.rows() * kGridSamples;
    out.source.assign(total, source_view);
    out.x.resize(total);
    out.y.resize(total);
    out.valid.resize(total);
    out.mask.resize(table.rows());
    for (std::size_t r = 0; r < table.rows(); ++r) {
        out.mask[r] = table.mask(r) ? 1 : 0;
        const auto s = table.samples(r, source_view);
        for (int k = 0; k < kGridSamples; ++k) {
            out.x[r * kGridSamples + k] = s.indices[k][0];
            out.y[r * kGridSamples + k] = s.indices[k][1];
            out.valid[r * kGridSamples + k] = s.valid[k] ? 1 : 0;
        }
    }
    return out;
}

KeySampleTable to_key_samples(std::span<const EpipolarCandidates> per_view) {
    if (per_view.empty()) fail(ErrorCode::InvalidArgument, "no epipolar candidates");
    KeySampleTable out;
    out.n_views = per_view[0].n_views;
    out.width = per_view[0].width;
    out.height = per_view[0].height;
    out.keys_per_query = static_cast<int>(per_view[0].keys_per_pixel());
    if (per_view.size() != static_cast<std::size_t>(out.n_views)) {
        fail(ErrorCode::ShapeMismatch, "need epipolar candidates for every target view");
    }
    for (std::size_t v = 0; v < per_view.size(); ++v) {
        const auto& c = per_view[v];
        if (c.target_view != static_cast<int>(v) || c.width != out.width || c.height != out.height ||
            c.n_views != out.n_views || static_cast<int>(c.keys_per_pixel()) != out.keys_per_query) {
            fail(ErrorCode::ShapeMismatch, "epipolar candidates are inconsistent across views");
        }
    }
    const std::size_t total = out.queries() * out.keys_per_query;
    out.source.resize(total);
    out.x.resize(total);
    out.y.resize(total);
    out.valid.resize(total);
    out.mask.assign(out.queries(), 1);
    const std::size_t per_pixel = static_cast<std::size_t>(out.keys_per_query);
    const std::size_t pixels = static_cast<std::size_t>(out.width) * out.height;
    for (std::size_t v = 0; v < per_view.size(); ++v) {
        const auto& c = per_view[v];
        for (std::size_t p = 0; p < pixels; ++p) {
            for (std::size_t k = 0; k < per_pixel; ++k) {
                const std::size_t src = p * per_pixel + k;
                const std::size_t dst = (v * pixels + p) * per_pixel + k;
                out.source[dst] = static_cast<std::int32_t>((k / kGridSamples) % c.n_views);
                out.x[dst] = c.index[src][0];
                out.y[dst] = c.index[src][1];
                out.valid[dst] = c.valid[src];
            }
        }
    }
    return out;
}

}  // namespace meatkit
