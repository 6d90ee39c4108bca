// Copyright 2026 The meatkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "meatkit/synthetic.hpp"

#include <cmath>
#include <random>

#include "meatkit/error.hpp"

namespace meatkit::synthetic {

Mesh blob_mesh(std::uint64_t seed, int lat, int lon, double radius) {
    if (lat < 2 || lon < 3) fail(ErrorCode::InvalidArgument, "blob needs lat >= 2 and lon >= 3");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
    std::uniform_real_distribution<double> amp(-0.04, 0.04);
    struct Bump {
        double a, m, n, p, q;
    };
    std::vector<Bump> bumps;
    for (int k = 0; k < 3; ++k) bumps.push_back({amp(rng), double(k + 1), double(k % 2 + 1), phase(rng), phase(rng)});
    auto point = [&](double theta, double phi) {
        double r = radius;
        for (const auto& b : bumps) r += radius * b.a * std::sin(b.m * theta + b.p) * std::cos(b.n * phi + b.q);
        return Vector3d(r * std::sin(theta) * std::sin(phi), 1.6 * r * std::cos(theta), r * std::sin(theta) * std::cos(phi));
    };
    std::vector<Vector3d> v;
    v.push_back(point(0.0, 0.0));
    for (int i = 1; i < lat; ++i) {
        for (int j = 0; j < lon; ++j) v.push_back(point(M_PI * i / lat, 2.0 * M_PI * j / lon));
    }
    v.push_back(point(M_PI, 0.0));
    const int bottom = static_cast<int>(v.size()) - 1;
    auto ring = [&](int i, int j) { return 1 + (i - 1) * lon + (j % lon); };
    std::vector<Face> f;
    for (int j = 0; j < lon; ++j) f.push_back({0, ring(1, j), ring(1, j + 1)});
    for (int i = 1; i + 1 < lat; ++i) {
        for (int j = 0; j < lon; ++j) {
            f.push_back({ring(i, j), ring(i + 1, j), ring(i + 1, j + 1)});
            f.push_back({ring(i, j), ring(i + 1, j + 1), ring(i, j + 1)});
        }
    }
    for (int j = 0; j < lon; ++j) f.push_back({bottom, ring(lat - 1, j + 1), ring(lat - 1, j)});
    return Mesh(std::move(v), std::move(f));
}

Mesh random_triangles(std::uint64_t seed, int faces, double z_offset) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> center(-1.0, 1.0);
    std::uniform_real_distribution<double> spread(-0.6, 0.6);
    std::vector<Vector3d> v;
    std::vector<Face> f;
    while (static_cast<int>(f.size()) < faces) {
        const Vector3d c(center(rng), center(rng), center(rng) + z_offset);
        Vector3d p[3];
        for (auto& q : p) q = c + Vector3d(spread(rng), spread(rng), spread(rng));
        if ((p[1] - p[0]).cross(p[2] - p[0]).norm() < 1e-3) continue;
        const int base = static_cast<int>(v.size());
        for (const auto& q : p) v.push_back(q);
        f.push_back({base, base + 1, base + 2});
    }
    return Mesh(std::move(v), std::move(f));
}

Mesh height_field(std::uint64_t seed, int cells, double half, double amplitude) {
    if (cells < 1) fail(ErrorCode::InvalidArgument, "height field needs at least one cell");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
    const double p1 = phase(rng), p2 = phase(rng);
    std::vector<Vector3d> v;
    for (int j = 0; j <= cells; ++j) {
        for (int i = 0; i <= cells; ++i) {
            const double x = -half + 2.0 * half * i / cells;
            const double y = -half + 2.0 * half * j / cells;
            const double z = amplitude * (std::sin(2.0 * x + p1) * std::cos(1.5 * y + p2) + 0.5 * std::cos(3.0 * x * y));
            v.emplace_back(x, y, z);
        }
    }
    std::vector<Face> f;
    auto id = [&](int i, int j) { return j * (cells + 1) + i; };
    for (int j = 0; j < cells; ++j) {
        for (int i = 0; i < cells; ++i) {
            f.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            f.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    }
    return Mesh(std::move(v), std::move(f));
}

std::vector<Camera> random_rig(std::uint64_t seed, int n, double lo, double hi, int width, int height) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> az(0.0, 2.0 * M_PI);
    std::uniform_real_distribution<double> el(-0.6, 0.6);
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<Camera> out;
    for (int k = 0; k < n; ++k) {
        const double a = az(rng), e = el(rng), d = dist(rng);
        const Vector3d eye = d * Vector3d(std::cos(e) * std::sin(a), std::sin(e), std::cos(e) * std::cos(a));
        out.push_back(look_at_camera(eye, Vector3d::Zero(), 50.0 * M_PI / 180.0, width, height));
    }
    return out;
}

std::vector<Camera> ring16() {
    return sample_orbit_cameras(kRingPelvis, 3.0, 0.0, 50.0 * M_PI / 180.0, 16, 256, 256);
}

Vector3d ring16_orientation() { return camera_center(ring16()[5]) - kRingPelvis; }

FeatureStack random_features(std::uint64_t seed, int views, int channels, int height, int width) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    Tensor<float> data({static_cast<std::size_t>(views), static_cast<std::size_t>(channels),
                        static_cast<std::size_t>(height), static_cast<std::size_t>(width)});
    for (auto& x : data.values()) x = u(rng);
    std::vector<int> ids(static_cast<std::size_t>(views));
    for (int v = 0; v < views; ++v) ids[static_cast<std::size_t>(v)] = v;
    return FeatureStack(std::move(data), std::move(ids));
}

Tensor<float> random_image(std::uint64_t seed, int channels, int height, int width) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    Tensor<float> img({static_cast<std::size_t>(channels), static_cast<std::size_t>(height),
                       static_cast<std::size_t>(width)});
    for (auto& x : img.values()) x = u(rng);
    return img;
}

AdaptationFixture adaptation_fixture(std::uint64_t seed, int n_matches, double noise, int raster_size) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    AdaptationFixture fx;
    fx.mesh = height_field(seed + 1, 16, 0.8, 0.15);
    fx.raster = rasterize_orthographic(fx.mesh, fx.frame, raster_size, raster_size);

    // Frontal camera: ground-truth rotation equals the initialization, and the camera is
    // far enough away (with a matching focal length) to be orthographic in effect.
    const double az = 0.5 * (unit(rng) - 0.5);
    const double el = 0.2 * (unit(rng) - 0.5);
    const Vector3d front_dir(std::cos(el) * std::sin(az), std::sin(el), std::cos(el) * std::cos(az));
    const Matrix3d r1 = look_at_rotation(front_dir, Vector3d::Zero());
    const Matrix3d flip = Vector3d(1.0, -1.0, -1.0).asDiagonal();
    fx.truth.scale = Vector3d(1.1, 1.1, 0.9);
    fx.truth.rot6d = matrix_to_rot6d(r1.transpose() * flip);
    fx.truth.translation = Vector3d(0.05, -0.02, 0.1);
    const double distance = 1e8;
    const double focal = distance * raster_size / (fx.frame.extent * fx.truth.scale.x());
    Matrix3d k;
    k << focal, 0.0, 0.5 * raster_size, 0.0, focal, 0.5 * raster_size, 0.0, 0.0, 1.0;
    fx.cameras.emplace_back(k, r1, Vector3d(0.0, 0.0, distance) - r1 * fx.truth.translation, raster_size,
                            raster_size);

    const Vector3d c = fx.truth.translation;
    const double fov = 50.0 * M_PI / 180.0;
    const Eigen::AngleAxisd yaw_l(0.9, Vector3d::UnitY()), yaw_r(-0.9, Vector3d::UnitY());
    const Vector3d up_dir = (front_dir + Vector3d(0.0, 0.8, 0.0)).normalized();
    for (const Vector3d& d : {Vector3d(yaw_l * front_dir), Vector3d(yaw_r * front_dir), up_dir}) {
        fx.cameras.push_back(look_at_camera(c + 3.0 * d, c, fov, 256, 256));
    }

    fx.matches.frontal_view = 0;
    std::normal_distribution<double> gauss(0.0, 1.0);
    const MonocularView mono = fx.mono();
    int attempts = 0;
    while (static_cast<int>(fx.matches.pairs.size()) < n_matches) {
        if (++attempts > 1000 * n_matches) fail(ErrorCode::InvalidArgument, "could not place synthetic matches");
        const Vector2d p(unit(rng), unit(rng));
        const int view = 1 + static_cast<int>(fx.matches.pairs.size() % 3);
        Vector2d q;
        try {
            q = reproject(p, mono, fx.truth, fx.cameras[static_cast<std::size_t>(view)]);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::NoIntersection) continue;
            throw;
        }
        if (noise > 0.0) q += noise * Vector2d(gauss(rng), gauss(rng));
        if (q.x() < 0.0 || q.x() > 1.0 || q.y() < 0.0 || q.y() > 1.0) continue;
        fx.matches.pairs.push_back({view, p, q});
    }
    return fx;
}

Skeleton stick_figure(const Vector3d& pelvis, double height) {
    Skeleton s;
    const std::vector<std::pair<std::string, Vector3d>> joints = {
        {"pelvis", {0.0, 0.0, 0.0}},         {"neck", {0.0, 0.45, 0.02}},
        {"head", {0.0, 0.6, 0.04}},          {"left_shoulder", {-0.15, 0.42, 0.0}},
        {"left_elbow", {-0.28, 0.25, 0.05}}, {"left_wrist", {-0.36, 0.08, 0.1}},
        {"right_shoulder", {0.15, 0.42, 0.0}}, {"right_elbow", {0.28, 0.25, 0.05}},
        {"right_wrist", {0.36, 0.08, 0.1}},  {"left_hip", {-0.1, -0.04, 0.0}},
        {"left_knee", {-0.11, -0.22, 0.04}}, {"left_ankle", {-0.12, -0.4, -0.02}},
        {"right_hip", {0.1, -0.04, 0.0}},    {"right_knee", {0.11, -0.22, 0.04}},
        {"right_ankle", {0.12, -0.4, -0.02}},
    };
    for (const auto& [name, p] : joints) {
        s.names.push_back(name);
        s.joints.push_back(pelvis + height * p);
    }
    s.bones = {{0, 1}, {1, 2}, {1, 3}, {3, 4}, {4, 5}, {1, 6}, {6, 7}, {7, 8},
               {0, 9}, {9, 10}, {10, 11}, {0, 12}, {12, 13}, {13, 14}};
    return s;
}

}  // namespace meatkit::synthetic
