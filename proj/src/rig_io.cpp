// Copyright 2026 The meatkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "meatkit/rig_io.hpp"

#include <optional>

#include "meatkit/error.hpp"
#include "meatkit/tensor_io.hpp"

namespace meatkit {
namespace {

const Json& field(const Json& j, const char* key, const std::string& context) {
    if (!j.is_object() || !j.contains(key)) fail(ErrorCode::Format, context + ": missing field '" + key + "'");
    return j.at(key);
}

double number(const Json& j, const std::string& context) {
    if (!j.is_number()) fail(ErrorCode::Format, context + ": expected a number");
    return j.get<double>();
}

int integer(const Json& j, const std::string& context) {
    if (!j.is_number_integer()) fail(ErrorCode::Format, context + ": expected an integer");
    return j.get<int>();
}

template <int N>
Eigen::Matrix<double, N, 1> vec(const Json& j, const std::string& context) {
    if (!j.is_array() || j.size() != N) fail(ErrorCode::Format, context + ": expected " + std::to_string(N) + " numbers");
    Eigen::Matrix<double, N, 1> v;
    for (int i = 0; i < N; ++i) v[i] = number(j[static_cast<std::size_t>(i)], context + "[" + std::to_string(i) + "]");
    return v;
}

Matrix3d mat3(const Json& j, const std::string& context) {
    if (!j.is_array() || j.size() != 3) fail(ErrorCode::Format, context + ": expected a 3x3 array");
    Matrix3d m;
    for (int r = 0; r < 3; ++r) m.row(r) = vec<3>(j[static_cast<std::size_t>(r)], context + "[" + std::to_string(r) + "]");
    return m;
}

Json to_json(const Matrix3d& m) {
    Json out = Json::array();
    for (int r = 0; r < 3; ++r) out.push_back({m(r, 0), m(r, 1), m(r, 2)});
    return out;
}

template <class V>
Json to_json_vec(const V& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

template <class F>
auto wrap(const std::string& context, F&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        if (e.code() == ErrorCode::Format) throw;
        fail(e.code(), context + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::Format, context + ": " + e.what());
    }
}

}  // namespace

Json camera_to_json(const Camera& camera, int id) {
    Json j;
    j["id"] = id;
    j["K"] = to_json(camera.K());
    j["R"] = to_json(camera.R());
    j["T"] = to_json_vec(camera.T());
    j["width"] = camera.width();
    j["height"] = camera.height();
    return j;
}

Json rig_to_json(const Rig& rig) {
    Json j;
    j["views"] = Json::array();
    for (std::size_t i = 0; i < rig.cameras.size(); ++i) j["views"].push_back(camera_to_json(rig.cameras[i], static_cast<int>(i)));
    j["origin"] = to_json_vec(rig.origin);
    return j;
}

Rig rig_from_json(const Json& j, const std::string& context) {
    return wrap(context, [&] {
        Rig rig;
        if (j.is_object() && j.contains("origin")) rig.origin = vec<3>(j["origin"], context + ".origin");
        const Json& views = field(j, "views", context);
        if (!views.is_array() || views.empty()) fail(ErrorCode::Format, context + ".views: expected a non-empty array");
        // Ids must be a permutation of 0..n-1; cameras are stored in id order.
        std::vector<std::optional<Camera>> by_id(views.size());
        for (std::size_t i = 0; i < views.size(); ++i) {
            const std::string c = context + ".views[" + std::to_string(i) + "]";
            const Json& cj = views[i];
            const int id = integer(field(cj, "id", c), c + ".id");
            if (id < 0 || id >= static_cast<int>(views.size())) {
                fail(ErrorCode::Format, c + ".id: ids must be 0.." + std::to_string(views.size() - 1));
            }
            if (by_id[static_cast<std::size_t>(id)]) fail(ErrorCode::Format, c + ".id: duplicate id " + std::to_string(id));
            const Matrix3d K = mat3(field(cj, "K", c), c + ".K");
            const Matrix3d R = mat3(field(cj, "R", c), c + ".R");
            const Vector3d T = vec<3>(field(cj, "T", c), c + ".T");
            const int width = integer(field(cj, "width", c), c + ".width");
            const int height = integer(field(cj, "height", c), c + ".height");
            try {
                by_id[static_cast<std::size_t>(id)].emplace(K, R, T, width, height);
            } catch (const Error& e) {
                if (e.code() == ErrorCode::Format) throw;
                fail(e.code(), c + ": " + e.what());
            }
        }
        for (auto& cam : by_id) rig.cameras.push_back(*cam);
        return rig;
    });
}

Json matches_to_json(const MatchSet& matches) {
    Json j;
    j["frontal_view"] = matches.frontal_view;
    j["pairs"] = Json::array();
    for (const auto& m : matches.pairs) {
        j["pairs"].push_back({{"view", m.view}, {"p", to_json_vec(m.p)}, {"q", to_json_vec(m.q)}});
    }
    return j;
}

MatchSet matches_from_json(const Json& j, const std::string& context) {
    return wrap(context, [&] {
        MatchSet out;
        out.frontal_view = integer(field(j, "frontal_view", context), context + ".frontal_view");
        const Json& pairs = field(j, "pairs", context);
        if (!pairs.is_array()) fail(ErrorCode::Format, context + ".pairs: expected an array");
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const std::string c = context + ".pairs[" + std::to_string(i) + "]";
            out.pairs.push_back({integer(field(pairs[i], "view", c), c + ".view"), vec<2>(field(pairs[i], "p", c), c + ".p"),
                                 vec<2>(field(pairs[i], "q", c), c + ".q")});
        }
        return out;
    });
}

Json keypoints_to_json(const Keypoints& keypoints) {
    Json j;
    j["joints"] = Json::array();
    for (const auto& p : keypoints.joints) j["joints"].push_back(to_json_vec(p));
    j["pelvis_index"] = keypoints.pelvis_index;
    if (!keypoints.names.empty()) j["names"] = keypoints.names;
    if (!keypoints.bones.empty()) {
        j["bones"] = Json::array();
        for (const auto& [a, b] : keypoints.bones) j["bones"].push_back({a, b});
    }
    return j;
}

Keypoints keypoints_from_json(const Json& j, const std::string& context) {
    return wrap(context, [&] {
        Keypoints k;
        const Json& joints = field(j, "joints", context);
        if (!joints.is_array() || joints.empty()) fail(ErrorCode::Format, context + ".joints: expected a non-empty array");
        for (std::size_t i = 0; i < joints.size(); ++i) k.joints.push_back(vec<3>(joints[i], context + ".joints[" + std::to_string(i) + "]"));
        k.pelvis_index = integer(field(j, "pelvis_index", context), context + ".pelvis_index");
        if (k.pelvis_index < 0 || k.pelvis_index >= static_cast<int>(k.joints.size())) {
            fail(ErrorCode::Format, context + ".pelvis_index: out of range");
        }
        if (j.contains("names")) {
            for (const auto& n : j["names"]) {
                if (!n.is_string()) fail(ErrorCode::Format, context + ".names: expected strings");
                k.names.push_back(n.get<std::string>());
            }
        }
        if (j.contains("bones")) {
            for (std::size_t i = 0; i < j["bones"].size(); ++i) {
                const std::string c = context + ".bones[" + std::to_string(i) + "]";
                const Json& b = j["bones"][i];
                if (!b.is_array() || b.size() != 2) fail(ErrorCode::Format, c + ": expected [a, b]");
                const int a0 = integer(b[0], c), a1 = integer(b[1], c);
                if (a0 < 0 || a1 < 0 || a0 >= static_cast<int>(k.joints.size()) || a1 >= static_cast<int>(k.joints.size())) {
                    fail(ErrorCode::Format, c + ": joint index out of range");
                }
                k.bones.emplace_back(a0, a1);
            }
        }
        return k;
    });
}

Json crop_to_json(const CropSpec& crop) {
    Json j;
    j["view"] = crop.view;
    j["center"] = to_json_vec(crop.center);
    j["radius"] = crop.radius;
    j["output_size"] = crop.output_size;
    return j;
}

CropSpec crop_from_json(const Json& j, const std::string& context) {
    return wrap(context, [&] {
        CropSpec c{integer(field(j, "view", context), context + ".view"), vec<2>(field(j, "center", context), context + ".center"),
                   number(field(j, "radius", context), context + ".radius"),
                   integer(field(j, "output_size", context), context + ".output_size")};
        c.validate();
        return c;
    });
}

Json transform_to_json(const SimilarityTransform& transform) {
    Json j;
    j["scale"] = to_json_vec(transform.scale);
    j["rot6d"] = to_json_vec(transform.rot6d);
    j["translation"] = to_json_vec(transform.translation);
    return j;
}

SimilarityTransform transform_from_json(const Json& j, const std::string& context) {
    return wrap(context, [&] {
        SimilarityTransform tf;
        tf.scale = vec<3>(field(j, "scale", context), context + ".scale");
        tf.rot6d = vec<6>(field(j, "rot6d", context), context + ".rot6d");
        tf.translation = vec<3>(field(j, "translation", context), context + ".translation");
        tf.validate();
        return tf;
    });
}

Json adaptation_result_to_json(const AdaptationResult& result) {
    Json j = transform_to_json(result.transform);
    j["rotation"] = to_json(result.transform.rotation());
    j["loss"] = result.final_loss;
    j["gradient_norm"] = result.gradient_norm;
    j["iterations"] = result.iterations;
    j["converged"] = result.converged;
    return j;
}

Json read_json(const std::filesystem::path& path) {
    const std::string text = read_text(path);
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::Format, path.string() + ": " + e.what());
    }
}

void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

Rig read_rig(const std::filesystem::path& path) { return rig_from_json(read_json(path), path.string()); }

void write_rig(const std::filesystem::path& path, const Rig& rig) { write_json(path, rig_to_json(rig)); }

}  // namespace meatkit
