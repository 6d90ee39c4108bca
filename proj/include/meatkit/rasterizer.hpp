// Copyright 2026 The meatkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "meatkit/geometry.hpp"
#include "meatkit/mesh.hpp"

namespace meatkit {

// Per-pixel nearest-hit record. Where mask is 0, face_index is -1, bary is zero and
// depth is zero.
struct RasterMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> mask;
    std::vector<std::int32_t> face_index;
    std::vector<Vector3d> bary;
    std::vector<double> depth;

    RasterMap() = default;
    RasterMap(int w, int h);

    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x);
    }
    std::size_t size() const { return mask.size(); }
};

// Pooled intersection points at feature resolution. `sample_count` is the number of
// valid high-res samples that contributed to each pixel.
struct AggregatedRaster {
    int width = 0;
    int height = 0;
    int source_factor = 1;
    std::vector<Vector3d> point;
    std::vector<std::uint8_t> mask;
    std::vector<std::int32_t> sample_count;

    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x);
    }
};

// Nearest positive-depth hit per pixel center, ties within 1e-9 depth go to the
// lower face index. The raster may be finer than the camera image; raster pixel
// centers are mapped back into camera pixels by the width/height ratio. Faces are hit
// from either side.
RasterMap rasterize_mesh(const Mesh& mesh, const Camera& camera, int width, int height);

// Parallel-ray view used by monocular reconstructions: normalized image coordinates
// (u, v) in [0, 1]^2 map to mesh-frame x = cx + (u - 0.5) * extent and
// y = cy - (v - 0.5) * extent. Rays travel along -z; the hit nearest the viewer
// (largest z) wins and depth is measured from the plane z = max vertex z + 1.
struct OrthographicFrame {
    double extent = 2.0;
    Vector2d center = Vector2d::Zero();

    Vector2d to_mesh_xy(const Vector2d& normalized) const {
        return {center.x() + (normalized.x() - 0.5) * extent, center.y() - (normalized.y() - 0.5) * extent};
    }
    Vector2d to_normalized(const Vector2d& xy) const {
        return {(xy.x() - center.x()) / extent + 0.5, 0.5 - (xy.y() - center.y()) / extent};
    }
};

RasterMap rasterize_orthographic(const Mesh& mesh, const OrthographicFrame& frame, int width, int height);

// lambda1 V1 + lambda2 V2 + lambda3 V3. Throws FaceOutOfRange, InvalidBary (sum off by
// more than 1e-6).
Vector3d interpolate_point(const Mesh& mesh, int face_index, const Vector3d& bary);

// Mean of valid high-res points and logical-or of masks over each feature pixel's
// region. Throws NonDivisibleResolution when the raster is not an integer multiple
// (same factor on both axes) of the feature size.
AggregatedRaster aggregate_raster(const RasterMap& raster, const Mesh& mesh, int feature_width,
                                  int feature_height);

// Mesh point under a normalized orthographic pixel: the face recorded for the raster
// pixel containing it, intersected exactly with the parallel ray through the
// position. Throws NoIntersection when that raster pixel is empty or the position is
// outside [0, 1)^2.
Vector3d inverse_rasterize_orthographic(const Mesh& mesh, const RasterMap& raster,
                                        const OrthographicFrame& frame, const Vector2d& normalized);

// Camera-frame depth range of the mesh vertices in front of the camera.
std::pair<double, double> mesh_depth_range(const Mesh& mesh, const Camera& camera);

}  // namespace meatkit
