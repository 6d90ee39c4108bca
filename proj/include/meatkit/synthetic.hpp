// Copyright 2026 The meatkit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Seeded synthetic fixtures shared by the tests, the benchmark and the demo.

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "meatkit/adaptation.hpp"
#include "meatkit/fusion.hpp"
#include "meatkit/geometry.hpp"
#include "meatkit/mesh.hpp"
#include "meatkit/rasterizer.hpp"

namespace meatkit::synthetic {

// Closed UV-sphere blob stretched along y, with smooth seeded radial bumps. The face
// count is 2 * lon * (lat - 1); the defaults give 200 faces.
Mesh blob_mesh(std::uint64_t seed, int lat = 11, int lon = 10, double radius = 0.5);

// Random triangle soup inside [-1, 1]^2 x [-1, 1] + (0, 0, z_offset).
Mesh random_triangles(std::uint64_t seed, int faces, double z_offset);

// Height field over [-half, half]^2 facing +z.
Mesh height_field(std::uint64_t seed, int cells, double half, double amplitude);

// Random look-at cameras around the origin at distances in [lo, hi].
std::vector<Camera> random_rig(std::uint64_t seed, int n, double lo, double hi, int width, int height);

// 16 cameras on a horizontal ring of radius 3 around the origin.
std::vector<Camera> ring16();
inline const Vector3d kRingPelvis = Vector3d::Zero();
// Points from the pelvis at camera 5 of ring16.
Vector3d ring16_orientation();

FeatureStack random_features(std::uint64_t seed, int views, int channels, int height, int width);
Tensor<float> random_image(std::uint64_t seed, int channels, int height, int width);

// Monocular height-field mesh, its orthographic frontal raster and a 4-view rig where
// the frontal view is a distant telephoto camera so that the orthographic frontal
// convention holds at the ground-truth transform.
struct AdaptationFixture {
    Mesh mesh;
    RasterMap raster;
    OrthographicFrame frame;
    std::vector<Camera> cameras;
    SimilarityTransform truth;
    MatchSet matches;

    MonocularView mono() const { return {&mesh, &raster, frame}; }
};

AdaptationFixture adaptation_fixture(std::uint64_t seed, int n_matches = 200, double noise = 0.0,
                                     int raster_size = 128);

// 15-joint stick figure about 1 unit tall, pelvis at index 0.
struct Skeleton {
    std::vector<Vector3d> joints;
    std::vector<std::pair<int, int>> bones;
    std::vector<std::string> names;
    int pelvis_index = 0;
};

Skeleton stick_figure(const Vector3d& pelvis = Vector3d::Zero(), double height = 1.0);

}  // namespace meatkit::synthetic
