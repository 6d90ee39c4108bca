// Copyright 2026 The meatkit Authors
// SPDX-License-Identifier: Apache-2.0
//
// JSON documents: camera rigs, match sets, keypoints, crops and fitted transforms.

#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "meatkit/adaptation.hpp"
#include "meatkit/dataprep.hpp"
#include "meatkit/geometry.hpp"

namespace meatkit {

using Json = nlohmann::ordered_json;

struct Rig {
    std::vector<Camera> cameras;
    Vector3d origin = Vector3d::Zero();  // reference point for view embeddings
};

struct Keypoints {
    std::vector<Vector3d> joints;
    int pelvis_index = 0;
    std::vector<std::string> names;
    std::vector<std::pair<int, int>> bones;

    const Vector3d& pelvis() const { return joints.at(static_cast<std::size_t>(pelvis_index)); }
};

Json camera_to_json(const Camera& camera, int id);
Json rig_to_json(const Rig& rig);
Rig rig_from_json(const Json& j, const std::string& context = "rig");

Json matches_to_json(const MatchSet& matches);
MatchSet matches_from_json(const Json& j, const std::string& context = "matches");

Json keypoints_to_json(const Keypoints& keypoints);
Keypoints keypoints_from_json(const Json& j, const std::string& context = "keypoints");

Json crop_to_json(const CropSpec& crop);
CropSpec crop_from_json(const Json& j, const std::string& context = "crop");

Json transform_to_json(const SimilarityTransform& transform);
SimilarityTransform transform_from_json(const Json& j, const std::string& context = "transform");
Json adaptation_result_to_json(const AdaptationResult& result);

// Parse errors and missing or mistyped fields surface as Format errors naming the
// file and field.
Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);

Rig read_rig(const std::filesystem::path& path);
void write_rig(const std::filesystem::path& path, const Rig& rig);

}  // namespace meatkit
