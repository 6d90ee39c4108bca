// Copyright 2026 The meatkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "meatkit/dataprep.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "meatkit/error.hpp"
#include "meatkit/parallel.hpp"

namespace meatkit {

void CropSpec::validate() const {
    if (!(radius > 0.0) || !std::isfinite(radius)) fail(ErrorCode::InvalidArgument, "crop radius must be positive");
    if (output_size < 1) fail(ErrorCode::InvalidArgument, "crop output size must be at least 1");
    if (!center.allFinite()) fail(ErrorCode::InvalidArgument, "crop center is not finite");
}

CropSpec compute_crop(const Camera& camera, std::span<const Vector3d> keypoints_3d, const Vector3d& pelvis,
                      int output_size, int view) {
    if (keypoints_3d.empty()) fail(ErrorCode::InvalidArgument, "crop needs keypoints");
    const Vector2d center = project_point(camera, pelvis);
    double extent = 0.0;
    for (const auto& k : keypoints_3d) extent = std::max(extent, std::abs(project_point(camera, k).y() - center.y()));
    if (extent < 1e-9) fail(ErrorCode::ZeroExtent, "keypoints have no vertical extent around the pelvis");
    CropSpec crop{view, center, kCropRadiusFactor * extent, output_size};
    crop.validate();
    return crop;
}

Camera apply_crop_to_intrinsics(const Camera& camera, const CropSpec& crop) {
    crop.validate();
    const double s = crop.scale();
    const Vector2d o = crop.window_origin();
    Matrix3d a;
    a << s, 0.0, -s * o.x(),
         0.0, s, -s * o.y(),
         0.0, 0.0, 1.0;
    return Camera(a * camera.K(), camera.R(), camera.T(), crop.output_size, crop.output_size);
}

std::vector<std::vector<ProjectedKeypoint>> project_keypoints(std::span<const Camera> cameras,
                                                              std::span<const Vector3d> keypoints_3d) {
    if (cameras.empty() || keypoints_3d.empty()) fail(ErrorCode::InvalidArgument, "no cameras or keypoints");
    std::vector<std::vector<ProjectedKeypoint>> out(cameras.size(),
                                                    std::vector<ProjectedKeypoint>(keypoints_3d.size()));
    parallel_for(0, cameras.size(), [&](std::size_t v) {
        const Camera& cam = cameras[v];
        for (std::size_t j = 0; j < keypoints_3d.size(); ++j) {
            if (!(cam.to_camera(keypoints_3d[j]).z() > kMinDepth)) continue;
            const Vector2d p = project_point(cam, keypoints_3d[j]);
            if (p.x() >= 0.0 && p.x() < cam.width() && p.y() >= 0.0 && p.y() < cam.height()) {
                out[v][j] = {p, true};
            }
        }
    });
    return out;
}

const std::vector<std::array<std::uint8_t, 3>>& joint_color_table() {
    static const std::vector<std::array<std::uint8_t, 3>> table = {
        {255, 0, 0},   {255, 85, 0},  {255, 170, 0}, {255, 255, 0}, {170, 255, 0}, {85, 255, 0},
        {0, 255, 0},   {0, 255, 85},  {0, 255, 170}, {0, 255, 255}, {0, 170, 255}, {0, 85, 255},
        {0, 0, 255},   {85, 0, 255},  {170, 0, 255}, {255, 0, 255}, {255, 0, 170}, {255, 0, 85},
    };
    return table;
}

namespace {

double segment_distance(const Vector2d& p, const Vector2d& a, const Vector2d& b) {
    const Vector2d ab = b - a;
    const double len2 = ab.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    return (p - (a + t * ab)).norm();
}

void paint(Tensor<float>& img, int x, int y, const std::array<std::uint8_t, 3>& color) {
    const std::size_t h = img.dim(1), w = img.dim(2);
    for (std::size_t c = 0; c < 3; ++c) img[(c * h + static_cast<std::size_t>(y)) * w + static_cast<std::size_t>(x)] = color[c] / 255.0f;
}

}  // namespace

Tensor<float> render_keypoint_image(std::span<const ProjectedKeypoint> joints,
                                    std::span<const std::pair<int, int>> bones, int width, int height) {
    if (width < 1 || height < 1) fail(ErrorCode::InvalidArgument, "keypoint image must be non-empty");
    Tensor<float> img({3, static_cast<std::size_t>(height), static_cast<std::size_t>(width)});
    const auto& colors = joint_color_table();
    auto color_of = [&](std::size_t j) { return colors[j % colors.size()]; };
    auto for_box = [&](Vector2d lo, Vector2d hi, auto&& fn) {
        const int x0 = std::max(0, static_cast<int>(std::floor(lo.x())));
        const int y0 = std::max(0, static_cast<int>(std::floor(lo.y())));
        const int x1 = std::min(width - 1, static_cast<int>(std::ceil(hi.x())));
        const int y1 = std::min(height - 1, static_cast<int>(std::ceil(hi.y())));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) fn(x, y, Vector2d(x + 0.5, y + 0.5));
        }
    };
    for (const auto& [a, b] : bones) {
        if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= joints.size() || static_cast<std::size_t>(b) >= joints.size()) {
            fail(ErrorCode::InvalidArgument, "bone references a missing joint");
        }
        const auto& ja = joints[static_cast<std::size_t>(a)];
        const auto& jb = joints[static_cast<std::size_t>(b)];
        if (!ja.visible || !jb.visible) continue;
        const double half = 0.5 * kBoneWidth;
        const Vector2d lo = ja.pixel.cwiseMin(jb.pixel) - Vector2d::Constant(half);
        const Vector2d hi = ja.pixel.cwiseMax(jb.pixel) + Vector2d::Constant(half);
        for_box(lo, hi, [&](int x, int y, const Vector2d& p) {
            if (segment_distance(p, ja.pixel, jb.pixel) <= half) paint(img, x, y, color_of(static_cast<std::size_t>(a)));
        });
    }
    for (std::size_t j = 0; j < joints.size(); ++j) {
        if (!joints[j].visible) continue;
        const Vector2d r = Vector2d::Constant(kJointDiscRadius);
        for_box(joints[j].pixel - r, joints[j].pixel + r, [&](int x, int y, const Vector2d& p) {
            if ((p - joints[j].pixel).norm() <= kJointDiscRadius) paint(img, x, y, color_of(j));
        });
    }
    return img;
}

}  // namespace meatkit
