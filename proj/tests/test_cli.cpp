// Copyright 2026 The meatkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <filesystem>
#include <map>
#include <sstream>

#include <doctest.h>

#include "meatkit/cli.hpp"
#include "meatkit/mesh.hpp"
#include "meatkit/rig_io.hpp"
#include "meatkit/synthetic.hpp"
#include "meatkit/tensor_io.hpp"

using namespace meatkit;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = 0;
    std::string out;
    std::string err;
};

Run run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    Run r;
    r.code = dispatch(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "meatkit_test_cli" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::map<std::string, std::vector<std::uint8_t>> snapshot(const fs::path& root) {
    std::map<std::string, std::vector<std::uint8_t>> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) files[fs::relative(e.path(), root).generic_string()] = read_bytes(e.path());
    }
    return files;
}

std::string vec3(const Vector3d& v) {
    std::ostringstream s;
    s.precision(17);
    s << v.x() << "," << v.y() << "," << v.z();
    return s.str();
}

// Mesh plus a 3-view rig that never sees it, and features to fuse.
void write_masked_fixture(const fs::path& dir) {
    write_obj(dir / "mesh.obj", synthetic::blob_mesh(4));
    REQUIRE(run({"orbit", "--pelvis", "0,50,0", "--distance", "2", "--fov", "0.5", "--n", "3", "--size", "64", "--out",
                 (dir / "rig.json").string()})
                .code == 0);
    write_tensor(dir / "features.mtn", synthetic::random_features(9, 3, 8, 8, 8).data);
}

}  // namespace

TEST_CASE("select-front on the ring fixture prints 5") {
    const fs::path dir = fresh_dir("ring");
    write_rig(dir / "ring.json", Rig{synthetic::ring16(), Vector3d::Zero()});
    const Run r = run({"select-front", "--rig", (dir / "ring.json").string(), "--pelvis", vec3(synthetic::kRingPelvis),
                       "--orientation", vec3(synthetic::ring16_orientation())});
    CHECK(r.code == 0);
    CHECK(r.out == "5\n");

    REQUIRE(run({"orbit", "--n", "16", "--distance", "3", "--size", "256", "--out", (dir / "orbit.json").string()}).code == 0);
    const Run o = run({"select-front", "--rig", (dir / "orbit.json").string(), "--pelvis", "0,0,0", "--orientation",
                       vec3(synthetic::ring16_orientation())});
    CHECK(o.out == "5\n");
}

TEST_CASE("usage errors exit 1 with usage text") {
    for (const auto& args : std::vector<std::vector<std::string>>{
             {"orbit", "--bogus"}, {"frobnicate"}, {}, {"select-front", "--rig", "x.json"},
             {"select-front", "--rig", "x.json", "--pelvis", "1,2", "--orientation", "0,0,1"},
             {"fuse", "--features", "f.mtn", "--rig", "r.json", "--scheme", "rowwise", "--out", "o.mtn"}}) {
        const Run r = run(args);
        CHECK(r.code == 1);
        CHECK(r.err.find("Usage") != std::string::npos);
        CHECK(r.out.empty());
    }
    const fs::path dir = fresh_dir("usage");
    write_masked_fixture(dir);
    // A scheme that needs the table but was given none.
    const Run r = run({"fuse", "--features", (dir / "features.mtn").string(), "--rig", (dir / "rig.json").string(),
                       "--out", (dir / "o.mtn").string()});
    CHECK(r.code == 1);
    CHECK(run({"--help"}).code == 0);
}

TEST_CASE("data errors exit 2 with file context") {
    const fs::path dir = fresh_dir("data");
    const Run missing = run({"select-front", "--rig", (dir / "nope.json").string(), "--pelvis", "0,0,0", "--orientation",
                             "0,0,1"});
    CHECK(missing.code == 2);
    CHECK(missing.err.find("nope.json") != std::string::npos);

    write_text(dir / "bad.json", R"({"views": [{"id": 0, "K": [[1,0,0],[0,1,0],[0,0,1]]}]})");
    const Run bad = run({"select-front", "--rig", (dir / "bad.json").string(), "--pelvis", "0,0,0", "--orientation", "0,0,1"});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("bad.json") != std::string::npos);
    CHECK(bad.err.find("views[0]: missing field 'R'") != std::string::npos);

    write_rig(dir / "ring.json", Rig{synthetic::ring16(), Vector3d::Zero()});
    const Run zero = run({"select-front", "--rig", (dir / "ring.json").string(), "--pelvis", "0,0,0", "--orientation", "0,0,0"});
    CHECK(zero.code == 2);

    write_masked_fixture(dir);
    write_tensor(dir / "wrong.mtn", synthetic::random_features(9, 2, 8, 8, 8).data);
    const Run shape = run({"fuse", "--scheme", "dense", "--features", (dir / "wrong.mtn").string(), "--rig",
                           (dir / "rig.json").string(), "--out", (dir / "o.mtn").string()});
    CHECK(shape.code == 2);
}

TEST_CASE("fuse --scheme mesh on an all-masked table equals --scheme self") {
    const fs::path dir = fresh_dir("masked");
    write_masked_fixture(dir);
    const std::string mesh = (dir / "mesh.obj").string(), rig = (dir / "rig.json").string();
    REQUIRE(run({"rasterize", "--mesh", mesh, "--rig", rig, "--width", "64", "--height", "64", "--out",
                 (dir / "raster").string()}).code == 0);
    REQUIRE(run({"aggregate", "--mesh", mesh, "--raster", (dir / "raster").string(), "--feature-size", "8", "--out",
                 (dir / "agg").string()}).code == 0);
    REQUIRE(run({"correspond", "--aggregates", (dir / "agg").string(), "--rig", rig, "--out", (dir / "table").string()})
                .code == 0);
    const CorrespondenceTable table = read_correspondence(dir / "table");
    for (std::size_t r = 0; r < table.rows(); ++r) REQUIRE(!table.mask(r));

    const std::string features = (dir / "features.mtn").string();
    for (const char* seed : {"0", "7"}) {
        REQUIRE(run({"--seed", seed, "fuse", "--scheme", "mesh", "--features", features, "--rig", rig, "--table",
                     (dir / "table").string(), "--out", (dir / "mesh.mtn").string()}).code == 0);
        REQUIRE(run({"--seed", seed, "fuse", "--scheme", "self", "--features", features, "--rig", rig, "--out",
                     (dir / "self.mtn").string()}).code == 0);
        CHECK(read_bytes(dir / "mesh.mtn") == read_bytes(dir / "self.mtn"));
        CHECK(read_bytes(dir / "mesh.mtn") != read_bytes(dir / "features.mtn"));
    }
}

TEST_CASE("subcommands are idempotent") {
    const fs::path dir = fresh_dir("idem");
    REQUIRE(run({"demo", "--out", (dir / "demo").string()}).code == 0);
    const auto first = snapshot(dir / "demo");
    CHECK(first.size() > 40);
    REQUIRE(run({"demo", "--out", (dir / "demo").string()}).code == 0);
    CHECK(snapshot(dir / "demo") == first);

    const fs::path demo = dir / "demo";
    const std::vector<std::vector<std::string>> commands{
        {"rasterize", "--mesh", (demo / "mesh.obj").string(), "--rig", (demo / "rig.json").string(), "--width", "32",
         "--height", "32", "--out", (dir / "raster").string()},
        {"aggregate", "--mesh", (demo / "mesh.obj").string(), "--raster", (dir / "raster").string(), "--feature-size", "8",
         "--out", (dir / "agg").string()},
        {"correspond", "--aggregates", (dir / "agg").string(), "--rig", (demo / "rig.json").string(), "--out",
         (dir / "table").string()},
        {"crop", "--rig", (demo / "rig.json").string(), "--keypoints", (demo / "keypoints.json").string(), "--size", "64",
         "--out", (dir / "crop").string()},
        {"adapt", "--matches", (demo / "adapt" / "matches.json").string(), "--mesh", (demo / "adapt" / "mono_mesh.obj").string(),
         "--rig", (demo / "adapt" / "rig.json").string(), "--raster", (demo / "adapt" / "ortho_raster").string(),
         "--max-iterations", "50", "--out", (dir / "adapt.json").string()},
        {"bench", "--sizes", "4,8", "--views", "2", "--channels", "4", "--no-timings", "--out", (dir / "bench.json").string()},
    };
    for (const auto& cmd : commands) {
        INFO(cmd[0]);
        const Run a = run(cmd);
        REQUIRE(a.code == 0);
        const auto before = snapshot(dir);
        const Run b = run(cmd);
        CHECK(b.code == 0);
        CHECK(a.out == b.out);
        CHECK(snapshot(dir) == before);
    }
}

TEST_CASE("outputs do not depend on the thread count") {
    const fs::path dir = fresh_dir("threads");
    REQUIRE(run({"demo", "--out", (dir / "demo").string()}).code == 0);
    const fs::path demo = dir / "demo";
    for (const char* scheme : {"mesh", "dense", "epipolar"}) {
        std::vector<std::vector<std::uint8_t>> outs;
        for (const char* threads : {"1", "2", "5"}) {
            REQUIRE(run({"--threads", threads, "fuse", "--scheme", scheme, "--features", (demo / "features.mtn").string(),
                         "--rig", (demo / "rig.json").string(), "--table", (demo / "correspondence").string(), "--mesh",
                         (demo / "mesh.obj").string(), "--ref-features", (demo / "ref_scale_0.mtn").string(),
                         (demo / "ref_scale_1.mtn").string(), (demo / "ref_scale_2.mtn").string(), "--out",
                         (dir / "o.mtn").string()}).code == 0);
            outs.push_back(read_bytes(dir / "o.mtn"));
        }
        CHECK(outs[0] == outs[1]);
        CHECK(outs[0] == outs[2]);
        CHECK(outs[0] == read_bytes(demo / (std::string("fused_") + scheme + ".mtn")));
    }
}

TEST_CASE("flags take precedence over environment variables") {
    const fs::path dir = fresh_dir("env");
    write_masked_fixture(dir);
    const auto fuse = [&](std::vector<std::string> extra, const char* out) {
        std::vector<std::string> args = std::move(extra);
        for (const std::string a : {"fuse", "--scheme", "dense", "--features"}) args.push_back(a);
        args.push_back((dir / "features.mtn").string());
        args.push_back("--rig");
        args.push_back((dir / "rig.json").string());
        args.push_back("--out");
        args.push_back((dir / out).string());
        REQUIRE(run(args).code == 0);
        return read_bytes(dir / out);
    };
    const auto seed0 = fuse({}, "a.mtn");
    const auto seed3 = fuse({"--seed", "3"}, "b.mtn");
    CHECK(seed0 != seed3);
    ::setenv("MEATKIT_SEED", "3", 1);
    const auto from_env = fuse({}, "c.mtn");
    const auto flag_wins = fuse({"--seed", "0"}, "d.mtn");
    ::unsetenv("MEATKIT_SEED");
    CHECK(from_env == seed3);
    CHECK(flag_wins == seed0);
}
