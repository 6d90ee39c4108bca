// Copyright 2026 The meatkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "meatkit/geometry.hpp"

#include <cmath>
#include <sstream>

#include "meatkit/error.hpp"

namespace meatkit {

Camera::Camera(const Matrix3d& K, const Matrix3d& R, const Vector3d& T, int width, int height)
    : K_(K), R_(R), T_(T), width_(width), height_(height) {
    if (width < 1 || height < 1) {
        std::ostringstream oss;
        oss << "image size must be positive, got " << width << "x" << height;
        fail(ErrorCode::InvalidCamera, oss.str());
    }
    if (!K.allFinite() || !R.allFinite() || !T.allFinite()) {
        fail(ErrorCode::InvalidCamera, "non-finite camera parameters");
    }
    const double ortho_err = (R.transpose() * R - Matrix3d::Identity()).cwiseAbs().maxCoeff();
    if (ortho_err > 1e-6 || std::abs(R.determinant() - 1.0) > 1e-6) {
        fail(ErrorCode::InvalidCamera, "R is not a proper rotation");
    }
    if (K(1, 0) != 0.0 || K(2, 0) != 0.0 || K(2, 1) != 0.0 || K(2, 2) != 1.0) {
        fail(ErrorCode::InvalidCamera, "K must be upper triangular with K[2][2] = 1");
    }
    if (!(K(0, 0) > 0.0) || !(K(1, 1) > 0.0)) {
        fail(ErrorCode::InvalidCamera, "focal lengths must be positive");
    }
}

Vector2d project_point(const Camera& camera, const Vector3d& point) {
    const Vector3d cam = camera.to_camera(point);
    if (!(cam.z() > kMinDepth)) {
        std::ostringstream oss;
        oss << "camera-frame depth " << cam.z() << " is not positive";
        fail(ErrorCode::NonPositiveDepth, oss.str());
    }
    const Vector3d h = camera.K() * cam;
    return {h.x() / h.z(), h.y() / h.z()};
}

Vector3d camera_center(const Camera& camera) { return -(camera.R().transpose() * camera.T()); }

Vector3d pixel_ray(const Camera& camera, const Vector2d& pixel) {
    const Matrix3d& K = camera.K();
    // K is upper triangular with unit K(2,2); invert by back substitution.
    const double y = (pixel.y() - K(1, 2)) / K(1, 1);
    const double x = (pixel.x() - K(0, 2) - K(0, 1) * y) / K(0, 0);
    return camera.R().transpose() * Vector3d(x, y, 1.0);
}

Matrix3d rot6d_to_matrix(const Vector6d& rot6d) {
    const Vector3d c1 = rot6d.head<3>();
    const Vector3d c2 = rot6d.tail<3>();
    const double n1 = c1.norm();
    if (!(n1 >= 1e-9)) fail(ErrorCode::DegenerateRotation, "first rot6d vector vanishes");
    const Vector3d b1 = c1 / n1;
    const Vector3d u = c2 - b1.dot(c2) * b1;
    const double n2 = c2.norm();
    if (!(n2 >= 1e-9) || b1.cross(c2 / n2).norm() < 1e-9) {
        fail(ErrorCode::DegenerateRotation, "rot6d vectors are parallel");
    }
    const Vector3d b2 = u.normalized();
    Matrix3d m;
    m.col(0) = b1;
    m.col(1) = b2;
    m.col(2) = b1.cross(b2);
    return m;
}

Vector6d matrix_to_rot6d(const Matrix3d& rotation) {
    Vector6d out;
    out.head<3>() = rotation.col(0);
    out.tail<3>() = rotation.col(1);
    return out;
}

void SimilarityTransform::validate() const {
    if (!scale.allFinite() || !rot6d.allFinite() || !translation.allFinite()) {
        fail(ErrorCode::InvalidTransform, "non-finite transform parameters");
    }
    if (!(scale.minCoeff() > 0.0)) fail(ErrorCode::InvalidTransform, "scale must be positive");
    try {
        (void)rot6d_to_matrix(rot6d);
    } catch (const Error& e) {
        fail(ErrorCode::InvalidTransform, e.what());
    }
}

Vector3d SimilarityTransform::apply(const Vector3d& point) const {
    return rotation() * scale.cwiseProduct(point) + translation;
}

ViewEmbedding harmonic_embed(std::span<const double> values, int bands) {
    if (bands < 1) fail(ErrorCode::InvalidArgument, "harmonic_embed needs at least one band");
    ViewEmbedding out;
    out.values.reserve(values.size() * (2 * bands + 1));
    out.values.assign(values.begin(), values.end());
    double freq = 1.0;
    for (int b = 0; b < bands; ++b) {
        for (double v : values) out.values.push_back(std::sin(freq * v));
        for (double v : values) out.values.push_back(std::cos(freq * v));
        freq *= 2.0;
    }
    return out;
}

std::array<double, 3> pose_scalars(const Camera& camera, const Vector3d& origin) {
    const Vector3d rel = camera_center(camera) - origin;
    const double dist = rel.norm();
    if (!(dist > 0.0)) fail(ErrorCode::InvalidArgument, "camera center coincides with origin");
    const double azimuth = std::atan2(rel.x(), rel.z());
    const double elevation = std::atan2(rel.y(), std::hypot(rel.x(), rel.z()));
    return {azimuth, elevation, std::log(dist)};
}

ViewEmbedding view_embedding(const Camera& camera, const Vector3d& origin, int bands) {
    const auto pose = pose_scalars(camera, origin);
    return harmonic_embed(pose, bands);
}

NdcCamera normalize_to_ndc(const Camera& camera) {
    Matrix3d to_ndc;
    to_ndc << 2.0 / camera.width(), 0.0, -1.0,
              0.0, 2.0 / camera.height(), -1.0,
              0.0, 0.0, 1.0;
    return {to_ndc * camera.K(), camera.R(), camera.T()};
}

Vector2d project_point(const NdcCamera& camera, const Vector3d& point) {
    const Vector3d cam = camera.R * point + camera.T;
    if (!(cam.z() > kMinDepth)) fail(ErrorCode::NonPositiveDepth, "point behind NDC camera");
    const Vector3d h = camera.K * cam;
    return {h.x() / h.z(), h.y() / h.z()};
}

Vector2d pixel_to_ndc(const Vector2d& pixel, int width, int height) {
    return {(2.0 * pixel.x() - width) / width, (2.0 * pixel.y() - height) / height};
}

Matrix3d look_at_rotation(const Vector3d& eye, const Vector3d& target, const Vector3d& up) {
    const Vector3d forward = target - eye;
    if (!(forward.norm() > 1e-12)) fail(ErrorCode::DegenerateUp, "eye coincides with target");
    const Vector3d z = forward.normalized();
    const Vector3d side = z.cross(up.normalized());
    if (side.norm() < 1e-9) fail(ErrorCode::DegenerateUp, "viewing direction is parallel to up");
    const Vector3d x = side.normalized();
    const Vector3d y = z.cross(x);
    Matrix3d R;
    R.row(0) = x.transpose();
    R.row(1) = y.transpose();
    R.row(2) = z.transpose();
    return R;
}

Matrix3d intrinsics_from_fov(double fov, int width, int height) {
    if (!(fov > 0.0 && fov < M_PI)) fail(ErrorCode::InvalidArgument, "fov must be in (0, pi)");
    const double f = 0.5 * width / std::tan(0.5 * fov);
    Matrix3d K;
    K << f, 0.0, 0.5 * width,
         0.0, f, 0.5 * height,
         0.0, 0.0, 1.0;
    return K;
}

Camera look_at_camera(const Vector3d& eye, const Vector3d& target, double fov, int width,
                      int height) {
    const Matrix3d R = look_at_rotation(eye, target);
    return Camera(intrinsics_from_fov(fov, width, height), R, -(R * eye), width, height);
}

Matrix3d skew(const Vector3d& v) {
    Matrix3d m;
    m << 0.0, -v.z(), v.y(),
         v.z(), 0.0, -v.x(),
         -v.y(), v.x(), 0.0;
    return m;
}

}  // namespace meatkit
