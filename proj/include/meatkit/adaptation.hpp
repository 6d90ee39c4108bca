// Copyright 2026 The meatkit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Calibration helpers: frontal-view selection, the similarity-transform fit that
// aligns a monocular (orthographic) mesh with a calibrated rig, and look-at camera
// fitting and sampling around a subject.

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "meatkit/geometry.hpp"
#include "meatkit/mesh.hpp"
#include "meatkit/rasterizer.hpp"

namespace meatkit {

// Argmax over cameras of cos(orientation, C_v - pelvis); ties go to the lowest id.
// Throws ZeroOrientation when |orientation| <= 1e-9, InvalidArgument for no cameras.
int select_frontal_view(std::span<const Camera> cameras, const Vector3d& pelvis, const Vector3d& orientation);

// p is a frontal-view pixel, q its match in view `view`; both normalized to [0, 1].
struct MatchPair {
    int view = 0;
    Vector2d p = Vector2d::Zero();
    Vector2d q = Vector2d::Zero();
};

struct MatchSet {
    int frontal_view = 0;
    std::vector<MatchPair> pairs;

    // Throws InvalidArgument for coordinates outside [0, 1] or unknown views.
    void validate(int n_views) const;
};

// Monocular mesh and its orthographic frontal raster.
struct MonocularView {
    const Mesh* mesh = nullptr;
    const RasterMap* raster = nullptr;
    OrthographicFrame frame;
};

// TF(P) projected into `camera`, normalized by the camera resolution.
Vector2d project_normalized(const Camera& camera, const SimilarityTransform& transform, const Vector3d& point);

// Inverse-rasterizes the normalized frontal pixel, applies the transform and projects
// into `camera`. Throws NoIntersection when the pixel misses the mesh.
Vector2d reproject(const Vector2d& pixel, const MonocularView& mono, const SimilarityTransform& transform,
                   const Camera& camera);

inline constexpr int kDefaultFrontalStride = 4;

// Transform-independent part of the alignment objective: mesh points behind the
// frontal self-consistency term and behind every surviving match.
struct AdaptationProblem {
    struct Term {
        int view = 0;
        Vector2d target = Vector2d::Zero();
        Vector3d point = Vector3d::Zero();
    };

    std::vector<Camera> cameras;
    int frontal_view = 0;
    std::vector<Term> frontal_terms;
    std::vector<Term> match_terms;
    std::size_t filtered_matches = 0;

    // Frontal terms are the valid raster pixel centers on a `stride` grid. Matches whose
    // source pixel misses the mesh are dropped; throws EmptyMatchSet when none remain.
    static AdaptationProblem build(const MatchSet& matches, const MonocularView& mono,
                                   std::span<const Camera> cameras, int stride = kDefaultFrontalStride);
};

using TransformGradient = Eigen::Matrix<double, 12, 1>;

// Packed as (scale, rot6d, translation).
TransformGradient pack_transform(const SimilarityTransform& transform);
SimilarityTransform unpack_transform(const TransformGradient& x);

// Sum of squared normalized reprojection residuals over frontal and match terms.
// Throws NonPositiveDepth when a transformed point falls behind a camera.
double adaptation_loss(const SimilarityTransform& transform, const AdaptationProblem& problem);
double adaptation_loss(const SimilarityTransform& transform, const AdaptationProblem& problem,
                       TransformGradient& gradient);

// Per-match residual norms (normalized units) under `transform`.
std::vector<double> match_residuals(const SimilarityTransform& transform, const AdaptationProblem& problem);

// s = 1, t = 0, R = (diag(1, -1, -1) R_frontal)^-1.
SimilarityTransform initial_transform(const Camera& frontal);

struct OptimizerConfig {
    int max_iterations = 5000;
    double gradient_tolerance = 1e-8;
    int max_halvings = 60;
    // Starting point; defaults to initial_transform(frontal camera).
    std::optional<SimilarityTransform> initial;
};

struct AdaptationResult {
    SimilarityTransform transform;
    double final_loss = 0.0;
    double gradient_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    // Loss at the start and after every accepted step.
    std::vector<double> loss_history;
};

AdaptationResult fit_transform(const AdaptationProblem& problem, const OptimizerConfig& config = {});
AdaptationResult fit_transform(const MatchSet& matches, const MonocularView& mono, std::span<const Camera> cameras,
                               const OptimizerConfig& config = {}, int stride = kDefaultFrontalStride);

struct FrontalFitConfig {
    int width = 512;
    int height = 512;
    std::optional<Vector3d> initial_position;  // defaults to pelvis + (0, 0, 2.5)
    int max_iterations = 2000;
    double gradient_tolerance = 1e-9;
};

// Look-at camera toward the pelvis whose position minimizes the mean squared pixel
// error of the projected keypoints. Throws TooFewKeypoints (< 4 pairs) and
// DegenerateUp.
Camera fit_frontal_camera(std::span<const Vector3d> keypoints_3d, std::span<const Vector2d> keypoints_2d,
                          double fov, const Vector3d& pelvis, const FrontalFitConfig& config = {});

// Mean squared pixel error of the keypoints through `camera`.
double keypoint_error(const Camera& camera, std::span<const Vector3d> keypoints_3d,
                      std::span<const Vector2d> keypoints_2d);

// n look-at cameras on a circle around the pelvis; camera 0 sits at azimuth 0 (+z).
std::vector<Camera> sample_orbit_cameras(const Vector3d& pelvis, double distance, double elevation, double fov,
                                         int n, int width = 512, int height = 512);

// Generic kinematic tree for pose-noise robustness experiments.
struct JointTree {
    std::vector<int> parent;             // -1 for the root
    std::vector<Vector3d> offset;        // rest offset from the parent
    std::vector<Vector3d> rotation;      // local axis-angle
    std::vector<std::uint8_t> is_hand;   // noised with the hand sigma
    Vector3d root = Vector3d::Zero();

    std::vector<Vector3d> joint_positions() const;
};

inline constexpr double kMainJointSigma = 0.06;
inline constexpr double kHandJointSigma = 0.2;

// Adds Gaussian noise to every local axis-angle.
JointTree perturb_pose(const JointTree& tree, std::mt19937_64& rng, double sigma_main = kMainJointSigma,
                       double sigma_hand = kHandJointSigma);

// Mean per-joint position error.
double mpjpe(std::span<const Vector3d> a, std::span<const Vector3d> b);

}  // namespace meatkit
