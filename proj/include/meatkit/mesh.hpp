// Copyright 2026 The meatkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <vector>

#include "meatkit/geometry.hpp"

namespace meatkit {

using Face = std::array<int, 3>;

// Triangle mesh used as the shared coarse geometry for all views.
class Mesh {
public:
    Mesh() = default;
    // Throws InvalidMesh on out-of-range indices, non-finite coordinates or faces with
    // area <= 1e-12.
    Mesh(std::vector<Vector3d> vertices, std::vector<Face> faces);

    const std::vector<Vector3d>& vertices() const { return vertices_; }
    const std::vector<Face>& faces() const { return faces_; }
    std::size_t face_count() const { return faces_.size(); }
    bool empty() const { return faces_.empty(); }

    const Vector3d& vertex(int face, int corner) const {
        return vertices_[static_cast<std::size_t>(faces_[static_cast<std::size_t>(face)][corner])];
    }

private:
    std::vector<Vector3d> vertices_;
    std::vector<Face> faces_;
};

struct ObjReadResult {
    Mesh mesh;
    std::size_t ignored_lines = 0;
};

// OBJ subset: `v x y z` and `f i j k` (1-based, triangles only; `i/t/n` forms keep the
// position index). Blank and comment lines are skipped; every other line is counted
// in ignored_lines.
ObjReadResult read_obj(const std::filesystem::path& path);
void write_obj(const std::filesystem::path& path, const Mesh& mesh);

}  // namespace meatkit
