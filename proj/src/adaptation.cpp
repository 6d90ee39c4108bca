// Copyright 2026 The meatkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "meatkit/adaptation.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "meatkit/error.hpp"
#include "meatkit/parallel.hpp"

namespace meatkit {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kTermSlots = 13;  // loss + 12 gradient entries

Matrix3d axis_angle_matrix(const Vector3d& aa) {
    const double angle = aa.norm();
    if (angle < 1e-15) return Matrix3d::Identity();
    return Eigen::AngleAxisd(angle, aa / angle).toRotationMatrix();
}

struct TermEval {
    double loss = 0.0;
    bool behind = false;
};

// Residual of one term; when `grad` is set, accumulates d loss / d (s, c1, c2, t) in
// the order (s, b-columns as a 3x3 matrix gradient, t) for the caller to chain.
TermEval eval_term(const AdaptationProblem::Term& term, const Camera& cam, const Vector3d& scale,
                   const Matrix3d& rotation, const Vector3d& translation, Vector3d* g_scale, Matrix3d* g_rotation,
                   Vector3d* g_translation) {
    const Vector3d scaled = scale.cwiseProduct(term.point);
    const Vector3d world = rotation * scaled + translation;
    const Vector3d y = cam.R() * world + cam.T();
    if (!(y.z() > kMinDepth)) return {0.0, true};
    const Vector3d ky = cam.K() * y;
    const Vector2d pix(ky.x() / y.z(), ky.y() / y.z());
    const Vector2d norm(pix.x() / cam.width(), pix.y() / cam.height());
    const Vector2d r = term.target - norm;
    TermEval out{r.squaredNorm(), false};
    if (g_scale) {
        // d loss / d norm = -2 r; norm = pix / size; d pix / d y = (K_top - pix e3^T) / y_z.
        const Vector2d g_pix(-2.0 * r.x() / cam.width(), -2.0 * r.y() / cam.height());
        Eigen::Matrix<double, 2, 3> j = cam.K().topRows<2>();
        j.row(0) -= pix.x() * Eigen::RowVector3d::UnitZ();
        j.row(1) -= pix.y() * Eigen::RowVector3d::UnitZ();
        j /= y.z();
        const Vector3d g_y = j.transpose() * g_pix;
        const Vector3d g_world = cam.R().transpose() * g_y;
        *g_translation = g_world;
        *g_scale = (rotation.transpose() * g_world).cwiseProduct(term.point);
        *g_rotation = g_world * scaled.transpose();
    }
    return out;
}

// Chains a gradient with respect to the rotation matrix back to the rot6d inputs.
Vector6d rot6d_gradient(const Vector6d& rot6d, const Matrix3d& g_rotation) {
    const Vector3d c1 = rot6d.head<3>();
    const Vector3d c2 = rot6d.tail<3>();
    const double n1 = c1.norm();
    const Vector3d b1 = c1 / n1;
    const Vector3d u = c2 - b1.dot(c2) * b1;
    const double nu = u.norm();
    const Vector3d b2 = u / nu;
    const Matrix3d I = Matrix3d::Identity();

    const Vector3d g_b3 = g_rotation.col(2);
    Vector3d g_b1 = g_rotation.col(0) + skew(b2) * g_b3;
    const Vector3d g_b2 = g_rotation.col(1) - skew(b1) * g_b3;
    const Vector3d g_u = (I - b2 * b2.transpose()) * g_b2 / nu;
    const Vector3d g_c2 = (I - b1 * b1.transpose()) * g_u;
    g_b1 -= (c2 * b1.transpose() + b1.dot(c2) * I) * g_u;
    const Vector3d g_c1 = (I - b1 * b1.transpose()) * g_b1 / n1;
    Vector6d out;
    out << g_c1, g_c2;
    return out;
}

// Loss (and gradient) with points behind a camera reported as +inf.
double evaluate(const SimilarityTransform& tf, const AdaptationProblem& problem, TransformGradient* gradient) {
    Matrix3d rotation;
    try {
        rotation = tf.rotation();
    } catch (const Error&) {
        return kInf;
    }
    const std::size_t n_front = problem.frontal_terms.size();
    const std::size_t n = n_front + problem.match_terms.size();
    const int slots = gradient ? kTermSlots : 1;
    std::vector<double> per_term(static_cast<std::size_t>(slots) * n, 0.0);
    std::vector<std::uint8_t> behind(n, 0);
    parallel_for(0, n, [&](std::size_t i) {
        const auto& term = i < n_front ? problem.frontal_terms[i] : problem.match_terms[i - n_front];
        const Camera& cam = problem.cameras[static_cast<std::size_t>(term.view)];
        Vector3d gs, gt;
        Matrix3d gr;
        const TermEval e = eval_term(term, cam, tf.scale, rotation, tf.translation, gradient ? &gs : nullptr,
                                     gradient ? &gr : nullptr, gradient ? &gt : nullptr);
        if (e.behind) {
            behind[i] = 1;
            return;
        }
        per_term[i] = e.loss;
        if (gradient) {
            const Vector6d g6 = rot6d_gradient(tf.rot6d, gr);
            double g[12];
            for (int k = 0; k < 3; ++k) g[k] = gs[k];
            for (int k = 0; k < 6; ++k) g[3 + k] = g6[k];
            for (int k = 0; k < 3; ++k) g[9 + k] = gt[k];
            for (int k = 0; k < 12; ++k) per_term[static_cast<std::size_t>(k + 1) * n + i] = g[k];
        }
    });
    for (auto b : behind) {
        if (b) return kInf;
    }
    const std::span<const double> all(per_term);
    if (gradient) {
        for (int k = 0; k < 12; ++k) (*gradient)[k] = pairwise_sum(all.subspan(static_cast<std::size_t>(k + 1) * n, n));
    }
    return pairwise_sum(all.subspan(0, n));
}

double require_finite(double loss) {
    if (!std::isfinite(loss)) fail(ErrorCode::NonPositiveDepth, "transformed mesh point falls behind a camera");
    return loss;
}

}  // namespace

int select_frontal_view(std::span<const Camera> cameras, const Vector3d& pelvis, const Vector3d& orientation) {
    if (cameras.empty()) fail(ErrorCode::InvalidArgument, "no cameras");
    const double dn = orientation.norm();
    if (!(dn > 1e-9)) fail(ErrorCode::ZeroOrientation, "orientation vector vanishes");
    int best = 0;
    double best_cos = -kInf;
    for (std::size_t v = 0; v < cameras.size(); ++v) {
        const Vector3d to_cam = camera_center(cameras[v]) - pelvis;
        const double len = to_cam.norm();
        const double c = len > 0.0 ? orientation.dot(to_cam) / (dn * len) : -2.0;
        if (c > best_cos) {
            best_cos = c;
            best = static_cast<int>(v);
        }
    }
    return best;
}

void MatchSet::validate(int n_views) const {
    if (frontal_view < 0 || frontal_view >= n_views) {
        fail(ErrorCode::InvalidArgument, "frontal view " + std::to_string(frontal_view) + " not in the rig");
    }
    auto in_unit = [](const Vector2d& v) { return v.x() >= 0.0 && v.x() <= 1.0 && v.y() >= 0.0 && v.y() <= 1.0; };
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& m = pairs[i];
        if (m.view < 0 || m.view >= n_views) {
            fail(ErrorCode::InvalidArgument, "pairs[" + std::to_string(i) + "].view not in the rig");
        }
        if (!in_unit(m.p) || !in_unit(m.q)) {
            fail(ErrorCode::InvalidArgument, "pairs[" + std::to_string(i) + "] has coordinates outside [0, 1]");
        }
    }
}

Vector2d project_normalized(const Camera& camera, const SimilarityTransform& transform, const Vector3d& point) {
    const Vector2d pix = project_point(camera, transform.apply(point));
    return {pix.x() / camera.width(), pix.y() / camera.height()};
}

Vector2d reproject(const Vector2d& pixel, const MonocularView& mono, const SimilarityTransform& transform,
                   const Camera& camera) {
    const Vector3d point = inverse_rasterize_orthographic(*mono.mesh, *mono.raster, mono.frame, pixel);
    return project_normalized(camera, transform, point);
}

AdaptationProblem AdaptationProblem::build(const MatchSet& matches, const MonocularView& mono,
                                           std::span<const Camera> cameras, int stride) {
    if (!mono.mesh || !mono.raster) fail(ErrorCode::InvalidArgument, "monocular mesh and raster are required");
    if (stride < 1) fail(ErrorCode::InvalidArgument, "frontal stride must be positive");
    matches.validate(static_cast<int>(cameras.size()));
    AdaptationProblem problem;
    problem.cameras.assign(cameras.begin(), cameras.end());
    problem.frontal_view = matches.frontal_view;

    const RasterMap& raster = *mono.raster;
    for (int y = 0; y < raster.height; y += stride) {
        for (int x = 0; x < raster.width; x += stride) {
            if (!raster.mask[raster.index(x, y)]) continue;
            const Vector2d p((x + 0.5) / raster.width, (y + 0.5) / raster.height);
            problem.frontal_terms.push_back(
                {matches.frontal_view, p, inverse_rasterize_orthographic(*mono.mesh, raster, mono.frame, p)});
        }
    }
    for (const auto& m : matches.pairs) {
        try {
            problem.match_terms.push_back(
                {m.view, m.q, inverse_rasterize_orthographic(*mono.mesh, raster, mono.frame, m.p)});
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NoIntersection) throw;
            ++problem.filtered_matches;
        }
    }
    if (problem.match_terms.empty()) fail(ErrorCode::EmptyMatchSet, "no match hits the mesh");
    return problem;
}

TransformGradient pack_transform(const SimilarityTransform& transform) {
    TransformGradient x;
    x << transform.scale, transform.rot6d, transform.translation;
    return x;
}

SimilarityTransform unpack_transform(const TransformGradient& x) {
    SimilarityTransform tf;
    tf.scale = x.segment<3>(0);
    tf.rot6d = x.segment<6>(3);
    tf.translation = x.segment<3>(9);
    return tf;
}

double adaptation_loss(const SimilarityTransform& transform, const AdaptationProblem& problem) {
    transform.validate();
    return require_finite(evaluate(transform, problem, nullptr));
}

double adaptation_loss(const SimilarityTransform& transform, const AdaptationProblem& problem,
                       TransformGradient& gradient) {
    transform.validate();
    return require_finite(evaluate(transform, problem, &gradient));
}

std::vector<double> match_residuals(const SimilarityTransform& transform, const AdaptationProblem& problem) {
    std::vector<double> out;
    out.reserve(problem.match_terms.size());
    for (const auto& term : problem.match_terms) {
        const Camera& cam = problem.cameras[static_cast<std::size_t>(term.view)];
        out.push_back((term.target - project_normalized(cam, transform, term.point)).norm());
    }
    return out;
}

SimilarityTransform initial_transform(const Camera& frontal) {
    const Matrix3d flip = Eigen::Vector3d(1.0, -1.0, -1.0).asDiagonal();
    SimilarityTransform tf;
    tf.rot6d = matrix_to_rot6d(frontal.R().transpose() * flip);
    return tf;
}

AdaptationResult fit_transform(const AdaptationProblem& problem, const OptimizerConfig& config) {
    if (problem.match_terms.empty()) fail(ErrorCode::EmptyMatchSet, "no matches to fit");
    const Camera& frontal = problem.cameras.at(static_cast<std::size_t>(problem.frontal_view));
    const SimilarityTransform start = config.initial.value_or(initial_transform(frontal));
    start.validate();
    TransformGradient x = pack_transform(start);
    TransformGradient g;
    double f = evaluate(unpack_transform(x), problem, &g);
    if (!std::isfinite(f)) fail(ErrorCode::NonPositiveDepth, "initial transform puts the mesh behind a camera");

    AdaptationResult result;
    result.loss_history.push_back(f);
    double step = 1e-2 / std::max(g.norm(), 1e-12);
    TransformGradient prev_x = x, prev_g = g;
    bool have_prev = false;
    while (result.iterations < config.max_iterations) {
        if (g.norm() < config.gradient_tolerance) {
            result.converged = true;
            break;
        }
        if (have_prev) {
            // Barzilai-Borwein trial step, refined by halving below.
            const TransformGradient s = x - prev_x;
            const TransformGradient y = g - prev_g;
            const double sy = s.dot(y);
            step = sy > 0.0 ? s.squaredNorm() / sy : 2.0 * step;
        }
        bool accepted = false;
        TransformGradient x_new, g_new;
        double f_new = kInf;
        for (int h = 0; h <= config.max_halvings; ++h, step *= 0.5) {
            x_new = x - step * g;
            f_new = evaluate(unpack_transform(x_new), problem, &g_new);
            if (std::isfinite(f_new) && f_new <= f) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        prev_x = x;
        prev_g = g;
        have_prev = true;
        x = x_new;
        g = g_new;
        f = f_new;
        result.loss_history.push_back(f);
        ++result.iterations;
    }
    if (!result.converged && g.norm() < config.gradient_tolerance) result.converged = true;
    result.transform = unpack_transform(x);
    result.final_loss = f;
    result.gradient_norm = g.norm();
    return result;
}

AdaptationResult fit_transform(const MatchSet& matches, const MonocularView& mono, std::span<const Camera> cameras,
                               const OptimizerConfig& config, int stride) {
    return fit_transform(AdaptationProblem::build(matches, mono, cameras, stride), config);
}

double keypoint_error(const Camera& camera, std::span<const Vector3d> keypoints_3d,
                      std::span<const Vector2d> keypoints_2d) {
    if (keypoints_3d.size() != keypoints_2d.size() || keypoints_3d.empty()) {
        fail(ErrorCode::InvalidArgument, "keypoint lists differ in length or are empty");
    }
    std::vector<double> sq(keypoints_3d.size());
    for (std::size_t i = 0; i < keypoints_3d.size(); ++i) {
        sq[i] = (project_point(camera, keypoints_3d[i]) - keypoints_2d[i]).squaredNorm();
    }
    return pairwise_sum(sq) / static_cast<double>(sq.size());
}

Camera fit_frontal_camera(std::span<const Vector3d> keypoints_3d, std::span<const Vector2d> keypoints_2d,
                          double fov, const Vector3d& pelvis, const FrontalFitConfig& config) {
    if (keypoints_3d.size() != keypoints_2d.size()) fail(ErrorCode::InvalidArgument, "keypoint lists differ in length");
    if (keypoints_3d.size() < 4) fail(ErrorCode::TooFewKeypoints, "need at least 4 keypoint pairs");
    Vector3d pos = config.initial_position.value_or(pelvis + Vector3d(0.0, 0.0, 2.5));
    // Validates the starting direction; throws DegenerateUp.
    (void)look_at_camera(pos, pelvis, fov, config.width, config.height);

    auto cost = [&](const Vector3d& c) {
        try {
            return keypoint_error(look_at_camera(c, pelvis, fov, config.width, config.height), keypoints_3d,
                                  keypoints_2d);
        } catch (const Error&) {
            return kInf;
        }
    };
    auto gradient = [&](const Vector3d& c) {
        const double h = 1e-6 * std::max(1.0, (c - pelvis).norm());
        Vector3d g;
        for (int k = 0; k < 3; ++k) {
            Vector3d a = c, b = c;
            a[k] += h;
            b[k] -= h;
            g[k] = (cost(a) - cost(b)) / (2.0 * h);
        }
        return g;
    };

    double f = cost(pos);
    if (!std::isfinite(f)) fail(ErrorCode::NonPositiveDepth, "keypoints behind the initial frontal camera");
    Vector3d g = gradient(pos);
    double step = 1e-3 / std::max(g.norm(), 1e-12);
    Vector3d prev_pos = pos, prev_g = g;
    bool have_prev = false;
    for (int it = 0; it < config.max_iterations && g.allFinite() && g.norm() >= config.gradient_tolerance; ++it) {
        if (have_prev) {
            const Vector3d s = pos - prev_pos;
            const Vector3d y = g - prev_g;
            const double sy = s.dot(y);
            step = sy > 0.0 ? s.squaredNorm() / sy : 2.0 * step;
        }
        bool accepted = false;
        Vector3d trial;
        double f_trial = kInf;
        for (int h = 0; h <= 60; ++h, step *= 0.5) {
            trial = pos - step * g;
            f_trial = cost(trial);
            if (std::isfinite(f_trial) && f_trial <= f) {
                accepted = true;
                break;
            }
        }
        if (!accepted || trial == pos) break;
        prev_pos = pos;
        prev_g = g;
        have_prev = true;
        pos = trial;
        f = f_trial;
        g = gradient(pos);
    }
    return look_at_camera(pos, pelvis, fov, config.width, config.height);
}

std::vector<Camera> sample_orbit_cameras(const Vector3d& pelvis, double distance, double elevation, double fov,
                                         int n, int width, int height) {
    if (n < 1) fail(ErrorCode::InvalidArgument, "orbit needs at least one camera");
    if (!(distance > 0.0)) fail(ErrorCode::InvalidArgument, "orbit distance must be positive");
    std::vector<Camera> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double az = 2.0 * M_PI * k / n;
        const Vector3d dir(std::cos(elevation) * std::sin(az), std::sin(elevation),
                           std::cos(elevation) * std::cos(az));
        out.push_back(look_at_camera(pelvis + distance * dir, pelvis, fov, width, height));
    }
    return out;
}

std::vector<Vector3d> JointTree::joint_positions() const {
    const std::size_t n = parent.size();
    if (offset.size() != n || rotation.size() != n || (!is_hand.empty() && is_hand.size() != n)) {
        fail(ErrorCode::ShapeMismatch, "joint tree arrays differ in length");
    }
    std::vector<Vector3d> pos(n);
    std::vector<Matrix3d> global(n);
    for (std::size_t j = 0; j < n; ++j) {
        const int p = parent[j];
        if (p >= static_cast<int>(j)) fail(ErrorCode::InvalidArgument, "joint parents must precede children");
        const Matrix3d local = axis_angle_matrix(rotation[j]);
        if (p < 0) {
            global[j] = local;
            pos[j] = root + offset[j];
        } else {
            global[j] = global[static_cast<std::size_t>(p)] * local;
            pos[j] = pos[static_cast<std::size_t>(p)] + global[static_cast<std::size_t>(p)] * offset[j];
        }
    }
    return pos;
}

JointTree perturb_pose(const JointTree& tree, std::mt19937_64& rng, double sigma_main, double sigma_hand) {
    JointTree out = tree;
    for (std::size_t j = 0; j < out.rotation.size(); ++j) {
        const bool hand = j < out.is_hand.size() && out.is_hand[j];
        std::normal_distribution<double> dist(0.0, hand ? sigma_hand : sigma_main);
        for (int k = 0; k < 3; ++k) out.rotation[j][k] += dist(rng);
    }
    return out;
}

double mpjpe(std::span<const Vector3d> a, std::span<const Vector3d> b) {
    if (a.size() != b.size() || a.empty()) fail(ErrorCode::ShapeMismatch, "joint lists differ in length");
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = (a[i] - b[i]).norm();
    return pairwise_sum(d) / static_cast<double>(d.size());
}

}  // namespace meatkit
