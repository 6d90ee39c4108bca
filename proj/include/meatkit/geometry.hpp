// Copyright 2026 The meatkit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Pinhole camera model and the small amount of rigid-body math shared by the
// rasterizer, correspondence, fusion and adaptation code.
//
// Conventions (binding everywhere in the library):
//   * world -> camera is P_cam = R * P + T, camera looks down +z, image y points down;
//   * pixel origin is the top-left image corner, pixel (i, j) has its center at
//     (i + 0.5, j + 0.5);
//   * all geometry is double precision.

#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace meatkit {

using Eigen::Matrix3d;
using Eigen::Vector2d;
using Eigen::Vector3d;
using Vector6d = Eigen::Matrix<double, 6, 1>;

inline constexpr double kMinDepth = 1e-12;

class Camera {
public:
    // Throws InvalidCamera when R is not a proper rotation (1e-6), K is not upper
    // triangular with K(2,2) == 1 and positive focals, or the image size is empty.
    Camera(const Matrix3d& K, const Matrix3d& R, const Vector3d& T, int width, int height);

    const Matrix3d& K() const { return K_; }
    const Matrix3d& R() const { return R_; }
    const Vector3d& T() const { return T_; }
    int width() const { return width_; }
    int height() const { return height_; }

    Vector3d to_camera(const Vector3d& world) const { return R_ * world + T_; }

private:
    Matrix3d K_;
    Matrix3d R_;
    Vector3d T_;
    int width_;
    int height_;
};

// [K(R P + T)]_xy after homogeneous division. Throws NonPositiveDepth when the
// camera-frame z is <= 1e-12. No clamping to the image.
Vector2d project_point(const Camera& camera, const Vector3d& point);

// -R^T T
Vector3d camera_center(const Camera& camera);

// World-space direction of the ray through a continuous pixel position, scaled so
// that its camera-frame z component is exactly 1 (the ray parameter is depth).
Vector3d pixel_ray(const Camera& camera, const Vector2d& pixel);

// Gram-Schmidt on the two 3-vectors packed in rot6d; the result has columns b1, b2,
// b1 x b2. Throws DegenerateRotation for a vanishing first vector or parallel inputs.
Matrix3d rot6d_to_matrix(const Vector6d& rot6d);

// First two columns of a rotation matrix.
Vector6d matrix_to_rot6d(const Matrix3d& rotation);

struct SimilarityTransform {
    Vector3d scale = Vector3d::Ones();
    Vector6d rot6d = (Vector6d() << 1, 0, 0, 0, 1, 0).finished();
    Vector3d translation = Vector3d::Zero();

    // Positive scales and a non-degenerate rot6d; throws InvalidTransform otherwise.
    void validate() const;
    Matrix3d rotation() const { return rot6d_to_matrix(rot6d); }
    // R (S P) + t
    Vector3d apply(const Vector3d& point) const;
};

struct ViewEmbedding {
    std::vector<double> values;
};

// [v, sin(2^0 v), cos(2^0 v), ..., sin(2^(L-1) v), cos(2^(L-1) v)] blockwise, so the
// output has (2L + 1) * k entries.
ViewEmbedding harmonic_embed(std::span<const double> values, int bands);

inline constexpr int kDefaultEmbeddingBands = 4;

// (azimuth, elevation, log distance) of the camera center relative to `origin`.
// Azimuth is atan2(x, z) in the horizontal plane, elevation is measured toward +y.
std::array<double, 3> pose_scalars(const Camera& camera, const Vector3d& origin);

ViewEmbedding view_embedding(const Camera& camera, const Vector3d& origin,
                             int bands = kDefaultEmbeddingBands);

constexpr int embedding_length(int scalars, int bands) { return (2 * bands + 1) * scalars; }

// Camera with intrinsics premultiplied by the pixel -> [-1, 1]^2 map.
struct NdcCamera {
    Matrix3d K;
    Matrix3d R;
    Vector3d T;
};

NdcCamera normalize_to_ndc(const Camera& camera);
Vector2d project_point(const NdcCamera& camera, const Vector3d& point);
Vector2d pixel_to_ndc(const Vector2d& pixel, int width, int height);

// World -> camera rotation of a camera at `eye` looking at `target` with the given
// world up vector (image y points away from up). Throws DegenerateUp when the
// viewing direction is parallel to up.
Matrix3d look_at_rotation(const Vector3d& eye, const Vector3d& target,
                          const Vector3d& up = Vector3d::UnitY());

// Square-pixel intrinsics with the principal point at the image center; `fov` is the
// horizontal field of view in radians.
Matrix3d intrinsics_from_fov(double fov, int width, int height);

Camera look_at_camera(const Vector3d& eye, const Vector3d& target, double fov, int width,
                      int height);

Matrix3d skew(const Vector3d& v);

}  // namespace meatkit
