// Copyright 2026 The meatkit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Cross-view pixel correspondence from pooled mesh intersection points.
//
// Feature-map coordinates follow the pixel-center convention: feature pixel i covers
// [i, i + 1) and its center sits at i + 0.5. Before floor/ceil index generation a
// projected coordinate is shifted by -0.5, so a point anywhere inside pixel i always
// produces i among its four indices.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "meatkit/geometry.hpp"
#include "meatkit/mesh.hpp"
#include "meatkit/rasterizer.hpp"

namespace meatkit {

inline constexpr int kGridSamples = 4;

// {floor x, ceil x} x {floor y, ceil y} in the order (fx,fy), (cx,fy), (fx,cy), (cx,cy).
// Duplicates are kept; out-of-bounds entries are flagged, never clamped.
struct SampleIndexSet {
    std::array<std::array<int, 2>, kGridSamples> indices{};
    std::array<bool, kGridSamples> valid{};

    int valid_count() const;
};

SampleIndexSet grid_sample_indices(const Vector2d& pixel, int width, int height);

// Per-camera projection scaled into feature coordinates. A camera that sees the point
// at non-positive depth yields (NaN, NaN).
std::vector<Vector2d> project_to_views(const Vector3d& point, std::span<const Camera> cameras,
                                       std::span<const double> feature_scale);

// For every (target view, feature pixel), four sample indices into every source view.
// Layout: index [view, y, x, source, sample, 2] int32; valid [view, y, x, source, sample].
class CorrespondenceTable {
public:
    CorrespondenceTable() = default;
    CorrespondenceTable(int n_views, int width, int height);

    int n_views() const { return n_views_; }
    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t rows() const { return static_cast<std::size_t>(n_views_) * width_ * height_; }

    std::size_t row(int view, int x, int y) const {
        return (static_cast<std::size_t>(view) * height_ + static_cast<std::size_t>(y)) * width_ + static_cast<std::size_t>(x);
    }

    bool mask(std::size_t row) const { return mask_[row] != 0; }
    SampleIndexSet samples(std::size_t row, int source) const;
    void set(std::size_t row, bool mask, std::span<const SampleIndexSet> per_source);

    // Valid key indices in a row; at most 4 * n_views.
    int valid_keys(std::size_t row) const;

    const std::vector<std::int32_t>& index_data() const { return index_; }
    const std::vector<std::uint8_t>& valid_data() const { return valid_; }
    const std::vector<std::uint8_t>& mask_data() const { return mask_; }

    // Rebuilds a table from serialized tensors. When `mask` is empty the mask is taken
    // as "row has any valid key", which is equivalent for attention purposes.
    static CorrespondenceTable from_data(int n_views, int width, int height, std::vector<std::int32_t> index,
                                         std::vector<std::uint8_t> valid, std::vector<std::uint8_t> mask);

private:
    int n_views_ = 0;
    int width_ = 0;
    int height_ = 0;
    std::vector<std::int32_t> index_;
    std::vector<std::uint8_t> valid_;
    std::vector<std::uint8_t> mask_;
};

// Throws ResolutionMismatch when the aggregates differ in size or do not pair up with
// the cameras.
CorrespondenceTable build_correspondence_table(std::span<const AggregatedRaster> aggregates,
                                               std::span<const Camera> cameras);

struct DepthRange {
    double near = 0.0;
    double far = 0.0;
};

// Epipolar baseline: K depth samples along each target pixel ray, each projected into
// every view. Samples are stored [pixel, depth, view, sample].
struct EpipolarCandidates {
    int n_views = 0;
    int target_view = 0;
    int width = 0;
    int height = 0;
    int depth_samples = 0;
    DepthRange depth_range;
    std::vector<double> depths;
    std::vector<std::array<int, 2>> index;
    std::vector<std::uint8_t> valid;

    std::size_t keys_per_pixel() const {
        return static_cast<std::size_t>(depth_samples) * n_views * kGridSamples;
    }
};

// Throws InvalidDepthRange unless 0 < near < far, InvalidArgument for K < 1.
// K == 1 samples the midpoint, otherwise depths are uniform with both ends included.
EpipolarCandidates build_epipolar_candidates(std::span<const Camera> cameras, int target_view,
                                             DepthRange range, int depth_samples, int feature_size);

// Mesh depth extent in the view, widened by 10% on both ends.
DepthRange default_epipolar_range(const Mesh& mesh, const Camera& camera);

// Fixed-width key layout consumed by the gathered attention kernels: each query row
// (view, y, x) carries keys_per_query (source view, x, y, valid) entries in reduction
// order, plus the query's mask.
struct KeySampleTable {
    int n_views = 0;
    int width = 0;
    int height = 0;
    int keys_per_query = 0;
    std::vector<std::int32_t> source;
    std::vector<std::int32_t> x;
    std::vector<std::int32_t> y;
    std::vector<std::uint8_t> valid;
    std::vector<std::uint8_t> mask;

    std::size_t queries() const { return static_cast<std::size_t>(n_views) * width * height; }
};

KeySampleTable to_key_samples(const CorrespondenceTable& table);
// Only the samples landing in `source_view`, four per query.
KeySampleTable to_key_samples_single_source(const CorrespondenceTable& table, int source_view);
// One EpipolarCandidates per target view, all at the same feature size. Every query
// is unmasked.
KeySampleTable to_key_samples(std::span<const EpipolarCandidates> per_view);

}  // namespace meatkit
