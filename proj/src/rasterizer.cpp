// Copyright 2026 The meatkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "meatkit/rasterizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "meatkit/error.hpp"
#include "meatkit/parallel.hpp"

namespace meatkit {

RasterMap::RasterMap(int w, int h)
    : width(w),
      height(h),
      mask(static_cast<std::size_t>(w) * h, 0),
      face_index(static_cast<std::size_t>(w) * h, -1),
      bary(static_cast<std::size_t>(w) * h, Vector3d::Zero()),
      depth(static_cast<std::size_t>(w) * h, 0.0) {}

namespace {

constexpr int kTile = 16;
constexpr double kDepthTie = 1e-9;

// Triangle in "ray space": every ray is o + t d with the depth equal to t.
struct RayTriangle {
    Vector3d a, b, c;
    Vector3d normal;
    double inv_normal_sq = 0.0;
    // Inclusive raster pixel bounds touched by the triangle.
    int x0 = 0, x1 = -1, y0 = 0, y1 = -1;
};

struct Hit {
    double depth;
    Vector3d bary;
};

// Plane intersection followed by signed sub-area barycentrics.
bool intersect(const RayTriangle& tri, const Vector3d& origin, const Vector3d& dir, Hit& hit) {
    const double denom = tri.normal.dot(dir);
    if (std::abs(denom) < 1e-300) return false;
    const double t = tri.normal.dot(tri.a - origin) / denom;
    if (!(t > kMinDepth)) return false;
    const Vector3d x = origin + t * dir;
    const double l1 = tri.normal.dot((tri.b - x).cross(tri.c - x)) * tri.inv_normal_sq;
    const double l2 = tri.normal.dot((tri.c - x).cross(tri.a - x)) * tri.inv_normal_sq;
    const double l3 = 1.0 - l1 - l2;
    if (l1 < 0.0 || l2 < 0.0 || l3 < 0.0) return false;
    hit.depth = t;
    hit.bary = Vector3d(l1, l2, l3);
    return true;
}

template <class RayFn>
RasterMap rasterize_generic(const std::vector<RayTriangle>& tris, int width, int height, RayFn ray_for) {
    RasterMap out(width, height);
    const int tiles_x = (width + kTile - 1) / kTile;
    const int tiles_y = (height + kTile - 1) / kTile;
    std::vector<std::vector<int>> bins(static_cast<std::size_t>(tiles_x) * tiles_y);
    for (std::size_t f = 0; f < tris.size(); ++f) {
        const auto& t = tris[f];
        if (t.x1 < t.x0 || t.y1 < t.y0) continue;
        for (int ty = t.y0 / kTile; ty <= t.y1 / kTile; ++ty) {
            for (int tx = t.x0 / kTile; tx <= t.x1 / kTile; ++tx) {
                bins[static_cast<std::size_t>(ty) * tiles_x + tx].push_back(static_cast<int>(f));
            }
        }
    }

    parallel_for(0, bins.size(), [&](std::size_t tile) {
        const auto& faces = bins[tile];
        if (faces.empty()) return;
        const int tx = static_cast<int>(tile % tiles_x);
        const int ty = static_cast<int>(tile / tiles_x);
        for (int y = ty * kTile; y < std::min(height, (ty + 1) * kTile); ++y) {
            for (int x = tx * kTile; x < std::min(width, (tx + 1) * kTile); ++x) {
                const auto [origin, dir] = ray_for(x, y);
                double best = std::numeric_limits<double>::infinity();
                int best_face = -1;
                Vector3d best_bary = Vector3d::Zero();
                for (int f : faces) {
                    const auto& t = tris[static_cast<std::size_t>(f)];
                    if (x < t.x0 || x > t.x1 || y < t.y0 || y > t.y1) continue;
                    Hit hit;
                    if (!intersect(t, origin, dir, hit)) continue;
                    if (hit.depth < best - kDepthTie) {
                        best = hit.depth;
                        best_face = f;
                        best_bary = hit.bary;
                    }
                }
                if (best_face >= 0) {
                    const std::size_t i = out.index(x, y);
                    out.mask[i] = 1;
                    out.face_index[i] = best_face;
                    out.bary[i] = best_bary;
                    out.depth[i] = best;
                }
            }
        }
    });
    return out;
}

RayTriangle make_triangle(const Vector3d& a, const Vector3d& b, const Vector3d& c) {
    RayTriangle t;
    t.a = a;
    t.b = b;
    t.c = c;
    t.normal = (b - a).cross(c - a);
    t.inv_normal_sq = 1.0 / t.normal.squaredNorm();
    return t;
}

// Pixel index range whose centers (i + 0.5) fall in [lo, hi], padded by one pixel.
std::pair<int, int> pixel_span(double lo, double hi, int size) {
    const double a = std::ceil(lo - 0.5) - 1.0;
    const double b = std::floor(hi - 0.5) + 1.0;
    const int i0 = static_cast<int>(std::max(0.0, a));
    const int i1 = static_cast<int>(std::min(static_cast<double>(size - 1), b));
    return {i0, i1};
}

void check_raster_size(int width, int height) {
    if (width < 1 || height < 1) fail(ErrorCode::InvalidArgument, "raster size must be positive");
}

}  // namespace

RasterMap rasterize_mesh(const Mesh& mesh, const Camera& camera, int width, int height) {
    if (mesh.empty()) fail(ErrorCode::EmptyMesh, "mesh has no faces");
    check_raster_size(width, height);
    const double sx = static_cast<double>(width) / camera.width();
    const double sy = static_cast<double>(height) / camera.height();

    std::vector<RayTriangle> tris(mesh.face_count());
    for (std::size_t f = 0; f < tris.size(); ++f) {
        const int fi = static_cast<int>(f);
        Vector3d v[3];
        bool all_front = true;
        for (int k = 0; k < 3; ++k) {
            v[k] = camera.to_camera(mesh.vertex(fi, k));
            all_front = all_front && v[k].z() > kMinDepth;
        }
        RayTriangle t = make_triangle(v[0], v[1], v[2]);
        if (all_front) {
            double min_x = std::numeric_limits<double>::infinity(), max_x = -min_x;
            double min_y = min_x, max_y = -min_x;
            for (const auto& p : v) {
                const Vector3d h = camera.K() * p;
                const double px = h.x() / h.z() * sx;
                const double py = h.y() / h.z() * sy;
                min_x = std::min(min_x, px);
                max_x = std::max(max_x, px);
                min_y = std::min(min_y, py);
                max_y = std::max(max_y, py);
            }
            if (max_x < -1.0 || max_y < -1.0 || min_x > width + 1.0 || min_y > height + 1.0) {
                t.x1 = -1;  // off-screen
            } else {
                std::tie(t.x0, t.x1) = pixel_span(min_x, max_x, width);
                std::tie(t.y0, t.y1) = pixel_span(min_y, max_y, height);
            }
        } else {
            // Straddles or sits behind the camera plane; test against every pixel.
            t.x0 = 0;
            t.x1 = width - 1;
            t.y0 = 0;
            t.y1 = height - 1;
        }
        tris[f] = t;
    }

    const Matrix3d& K = camera.K();
    const Vector3d origin = Vector3d::Zero();
    return rasterize_generic(tris, width, height, [&](int x, int y) {
        const double u = (x + 0.5) / sx;
        const double v = (y + 0.5) / sy;
        const double cy = (v - K(1, 2)) / K(1, 1);
        const double cx = (u - K(0, 2) - K(0, 1) * cy) / K(0, 0);
        return std::pair<Vector3d, Vector3d>(origin, Vector3d(cx, cy, 1.0));
    });
}

RasterMap rasterize_orthographic(const Mesh& mesh, const OrthographicFrame& frame, int width, int height) {
    if (mesh.empty()) fail(ErrorCode::EmptyMesh, "mesh has no faces");
    check_raster_size(width, height);
    if (!(frame.extent > 0.0)) fail(ErrorCode::InvalidArgument, "orthographic extent must be positive");
    double eye_z = -std::numeric_limits<double>::infinity();
    for (const auto& v : mesh.vertices()) eye_z = std::max(eye_z, v.z());
    eye_z += 1.0;

    // Ray space: (x, y, eye_z - z); rays start on the z = 0 plane and travel +z.
    std::vector<RayTriangle> tris(mesh.face_count());
    for (std::size_t f = 0; f < tris.size(); ++f) {
        const int fi = static_cast<int>(f);
        Vector3d v[3];
        double min_x = std::numeric_limits<double>::infinity(), max_x = -min_x;
        double min_y = min_x, max_y = -min_x;
        for (int k = 0; k < 3; ++k) {
            const Vector3d& p = mesh.vertex(fi, k);
            v[k] = Vector3d(p.x(), p.y(), eye_z - p.z());
            const Vector2d n = frame.to_normalized(p.head<2>());
            min_x = std::min(min_x, n.x() * width);
            max_x = std::max(max_x, n.x() * width);
            min_y = std::min(min_y, n.y() * height);
            max_y = std::max(max_y, n.y() * height);
        }
        RayTriangle t = make_triangle(v[0], v[1], v[2]);
        if (max_x < -1.0 || max_y < -1.0 || min_x > width + 1.0 || min_y > height + 1.0) {
            t.x1 = -1;
        } else {
            std::tie(t.x0, t.x1) = pixel_span(min_x, max_x, width);
            std::tie(t.y0, t.y1) = pixel_span(min_y, max_y, height);
        }
        tris[f] = t;
    }

    const Vector3d dir(0.0, 0.0, 1.0);
    return rasterize_generic(tris, width, height, [&](int x, int y) {
        const Vector2d xy = frame.to_mesh_xy(Vector2d((x + 0.5) / width, (y + 0.5) / height));
        return std::pair<Vector3d, Vector3d>(Vector3d(xy.x(), xy.y(), 0.0), dir);
    });
}

Vector3d interpolate_point(const Mesh& mesh, int face_index, const Vector3d& bary) {
    if (face_index < 0 || static_cast<std::size_t>(face_index) >= mesh.face_count()) {
        fail(ErrorCode::FaceOutOfRange, "face index " + std::to_string(face_index) + " of " +
                                            std::to_string(mesh.face_count()));
    }
    if (!bary.allFinite() || std::abs(bary.sum() - 1.0) > 1e-6) {
        fail(ErrorCode::InvalidBary, "barycentric weights do not sum to 1");
    }
    return bary.x() * mesh.vertex(face_index, 0) + bary.y() * mesh.vertex(face_index, 1) +
           bary.z() * mesh.vertex(face_index, 2);
}

AggregatedRaster aggregate_raster(const RasterMap& raster, const Mesh& mesh, int feature_width,
                                  int feature_height) {
    if (feature_width < 1 || feature_height < 1 || raster.width % feature_width != 0 ||
        raster.height % feature_height != 0 ||
        raster.width / feature_width != raster.height / feature_height) {
        fail(ErrorCode::NonDivisibleResolution,
             "raster " + std::to_string(raster.width) + "x" + std::to_string(raster.height) +
                 " is not a uniform multiple of " + std::to_string(feature_width) + "x" +
                 std::to_string(feature_height));
    }
    const int factor = raster.width / feature_width;
    AggregatedRaster out;
    out.width = feature_width;
    out.height = feature_height;
    out.source_factor = factor;
    const std::size_t n = static_cast<std::size_t>(feature_width) * feature_height;
    out.point.assign(n, Vector3d::Zero());
    out.mask.assign(n, 0);
    out.sample_count.assign(n, 0);

    parallel_for(0, n, [&](std::size_t i) {
        const int fx = static_cast<int>(i % feature_width);
        const int fy = static_cast<int>(i / feature_width);
        Vector3d sum = Vector3d::Zero();
        Vector3d lo = Vector3d::Constant(std::numeric_limits<double>::infinity());
        Vector3d hi = -lo;
        int count = 0;
        for (int y = fy * factor; y < (fy + 1) * factor; ++y) {
            for (int x = fx * factor; x < (fx + 1) * factor; ++x) {
                const std::size_t s = raster.index(x, y);
                if (!raster.mask[s]) continue;
                const Vector3d p = interpolate_point(mesh, raster.face_index[s], raster.bary[s]);
                sum += p;
                lo = lo.cwiseMin(p);
                hi = hi.cwiseMax(p);
                ++count;
            }
        }
        if (count == 0) return;
        const Vector3d mean = sum / static_cast<double>(count);
        const Vector3d slack = 1e-12 * (hi.cwiseAbs().cwiseMax(lo.cwiseAbs()) + Vector3d::Ones());
        if (((mean - lo).array() < -slack.array()).any() || ((hi - mean).array() < -slack.array()).any()) {
            fail(ErrorCode::InvalidArgument, "aggregated point left its bounding box");
        }
        out.point[i] = mean;
        out.mask[i] = 1;
        out.sample_count[i] = count;
    });
    return out;
}

Vector3d inverse_rasterize_orthographic(const Mesh& mesh, const RasterMap& raster,
                                        const OrthographicFrame& frame, const Vector2d& normalized) {
    if (!normalized.allFinite() || normalized.x() < 0.0 || normalized.y() < 0.0 || normalized.x() >= 1.0 ||
        normalized.y() >= 1.0) {
        fail(ErrorCode::NoIntersection, "pixel outside the monocular image");
    }
    const int x = std::min(raster.width - 1, static_cast<int>(normalized.x() * raster.width));
    const int y = std::min(raster.height - 1, static_cast<int>(normalized.y() * raster.height));
    const std::size_t i = raster.index(x, y);
    if (!raster.mask[i]) fail(ErrorCode::NoIntersection, "pixel does not intersect the mesh");
    const int face = raster.face_index[i];
    if (face < 0 || static_cast<std::size_t>(face) >= mesh.face_count()) {
        fail(ErrorCode::FaceOutOfRange, "raster references face " + std::to_string(face));
    }
    const Vector3d& a = mesh.vertex(face, 0);
    const Vector3d& b = mesh.vertex(face, 1);
    const Vector3d& c = mesh.vertex(face, 2);
    const Vector3d normal = (b - a).cross(c - a);
    const Vector2d xy = frame.to_mesh_xy(normalized);
    if (std::abs(normal.z()) < 1e-300) fail(ErrorCode::NoIntersection, "face is parallel to the view rays");
    // Solve normal . (X - a) = 0 for z on the parallel ray through (x, y).
    const double z = a.z() - (normal.x() * (xy.x() - a.x()) + normal.y() * (xy.y() - a.y())) / normal.z();
    return {xy.x(), xy.y(), z};
}

std::pair<double, double> mesh_depth_range(const Mesh& mesh, const Camera& camera) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& v : mesh.vertices()) {
        const double z = camera.to_camera(v).z();
        if (z <= kMinDepth) continue;
        lo = std::min(lo, z);
        hi = std::max(hi, z);
    }
    if (!(lo <= hi)) fail(ErrorCode::InvalidDepthRange, "mesh lies entirely behind the camera");
    return {lo, hi};
}

}  // namespace meatkit
