// Copyright 2026 The meatkit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Pelvis-centered square crops with matching intrinsics, and keypoint projection and
// skeleton drawing for the conditioning image.

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "meatkit/geometry.hpp"
#include "meatkit/tensor.hpp"

namespace meatkit {

inline constexpr double kCropRadiusFactor = 1.3;

struct CropSpec {
    int view = 0;
    Vector2d center = Vector2d::Zero();
    double radius = 0.0;
    int output_size = 0;

    // Throws InvalidArgument unless radius > 0 and output_size >= 1.
    void validate() const;
    Vector2d window_origin() const { return center - Vector2d::Constant(radius); }
    double scale() const { return output_size / (2.0 * radius); }
};

// Center at the projected pelvis, radius 1.3 x the largest vertical pixel offset of
// any keypoint from it. Throws ZeroExtent, NonPositiveDepth.
CropSpec compute_crop(const Camera& camera, std::span<const Vector3d> keypoints_3d, const Vector3d& pelvis,
                      int output_size, int view = 0);

// Same R and T; intrinsics shifted to the window origin and scaled to output_size.
Camera apply_crop_to_intrinsics(const Camera& camera, const CropSpec& crop);

struct ProjectedKeypoint {
    Vector2d pixel = Vector2d::Zero();  // zero when not visible
    bool visible = false;
};

// One list per camera, one entry per joint. Visible means positive depth and inside
// the image.
std::vector<std::vector<ProjectedKeypoint>> project_keypoints(std::span<const Camera> cameras,
                                                              std::span<const Vector3d> keypoints_3d);

inline constexpr double kJointDiscRadius = 4.0;
inline constexpr double kBoneWidth = 2.0;

// Fixed joint colors, cycled by joint index.
const std::vector<std::array<std::uint8_t, 3>>& joint_color_table();

// [3, height, width] image in [0, 1] on black: bones first (segments of width 2 px, the
// color of their first joint), then joint discs of radius 4 px. Pixels are colored when
// their center lies within the shape.
Tensor<float> render_keypoint_image(std::span<const ProjectedKeypoint> joints,
                                    std::span<const std::pair<int, int>> bones, int width, int height);

}  // namespace meatkit
