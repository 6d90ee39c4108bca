// Copyright 2026 The meatkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "meatkit/mesh.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "meatkit/error.hpp"

namespace meatkit {

Mesh::Mesh(std::vector<Vector3d> vertices, std::vector<Face> faces)
    : vertices_(std::move(vertices)), faces_(std::move(faces)) {
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
        if (!vertices_[i].allFinite()) {
            fail(ErrorCode::InvalidMesh, "vertex " + std::to_string(i) + " is not finite");
        }
    }
    const int nv = static_cast<int>(vertices_.size());
    for (std::size_t f = 0; f < faces_.size(); ++f) {
        for (int idx : faces_[f]) {
            if (idx < 0 || idx >= nv) {
                fail(ErrorCode::InvalidMesh, "face " + std::to_string(f) + " references vertex " +
                                                 std::to_string(idx) + " of " + std::to_string(nv));
            }
        }
        const Vector3d& a = vertices_[faces_[f][0]];
        const Vector3d& b = vertices_[faces_[f][1]];
        const Vector3d& c = vertices_[faces_[f][2]];
        if (!(0.5 * (b - a).cross(c - a).norm() > 1e-12)) {
            fail(ErrorCode::InvalidMesh, "face " + std::to_string(f) + " is degenerate");
        }
    }
}

namespace {

int parse_face_index(const std::string& token, int line_no) {
    const std::string head = token.substr(0, token.find('/'));
    try {
        std::size_t used = 0;
        const int idx = std::stoi(head, &used);
        if (used != head.size() || idx < 1) throw std::invalid_argument(head);
        return idx - 1;
    } catch (const std::exception&) {
        fail(ErrorCode::Format, "line " + std::to_string(line_no) + ": bad face index '" + token + "'");
    }
}

}  // namespace

ObjReadResult read_obj(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
    std::vector<Vector3d> vertices;
    std::vector<Face> faces;
    ObjReadResult result;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream iss(line);
        std::string tag;
        if (!(iss >> tag) || tag[0] == '#') continue;
        if (tag == "v") {
            double x, y, z;
            if (!(iss >> x >> y >> z)) {
                fail(ErrorCode::Format, path.string() + ":" + std::to_string(line_no) + ": bad vertex");
            }
            vertices.emplace_back(x, y, z);
        } else if (tag == "f") {
            std::vector<std::string> tokens;
            std::string tok;
            while (iss >> tok) tokens.push_back(tok);
            if (tokens.size() != 3) {
                fail(ErrorCode::Format, path.string() + ":" + std::to_string(line_no) +
                                            ": only triangular faces are supported");
            }
            faces.push_back({parse_face_index(tokens[0], line_no), parse_face_index(tokens[1], line_no),
                             parse_face_index(tokens[2], line_no)});
        } else {
            ++result.ignored_lines;
        }
    }
    try {
        result.mesh = Mesh(std::move(vertices), std::move(faces));
    } catch (const Error& e) {
        fail(e.code(), path.string() + ": " + e.what());
    }
    return result;
}

void write_obj(const std::filesystem::path& path, const Mesh& mesh) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
    char buf[128];
    for (const auto& v : mesh.vertices()) {
        std::snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g\n", v.x(), v.y(), v.z());
        out << buf;
    }
    for (const auto& f : mesh.faces()) {
        out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
    }
}

}  // namespace meatkit
