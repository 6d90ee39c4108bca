// Copyright 2026 The meatkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "meatkit/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "meatkit/correspondence.hpp"
#include "meatkit/error.hpp"
#include "meatkit/fusion.hpp"
#include "meatkit/parallel.hpp"
#include "meatkit/rasterizer.hpp"
#include "meatkit/synthetic.hpp"

namespace meatkit {

void ComplexityParams::validate() const {
    if (N < 1 || S < 1 || C < 1 || K < 1 || d < 1) fail(ErrorCode::InvalidArgument, "complexity parameters must be >= 1");
}

const char* scheme_name(Scheme scheme) {
    switch (scheme) {
        case Scheme::Self: return "self";
        case Scheme::Dense: return "dense";
        case Scheme::RowWise: return "row-wise";
        case Scheme::Epipolar: return "epipolar";
        case Scheme::Mesh: return "mesh";
    }
    return "?";
}

Scheme parse_scheme(const std::string& name) {
    for (Scheme s : kAllSchemes) {
        if (name == scheme_name(s)) return s;
    }
    fail(ErrorCode::InvalidArgument, "unknown scheme '" + name + "'");
}

bool scheme_runnable(Scheme scheme) { return scheme != Scheme::RowWise; }

ComplexityReport complexity_counts(const ComplexityParams& p, int embedding) {
    p.validate();
    using u64 = std::uint64_t;
    const u64 N = static_cast<u64>(p.N), S = static_cast<u64>(p.S), C = static_cast<u64>(p.C);
    const u64 K = static_cast<u64>(p.K), d = static_cast<u64>(p.d), E = static_cast<u64>(embedding);
    const u64 H = S, W = S;
    ComplexityReport r;
    r.params = p;
    r.embedding = embedding;
    auto set = [&](Scheme s, u64 q, u64 kv, u64 map, bool concat) {
        r.rows[static_cast<std::size_t>(s)] = {q, kv, map, concat ? (q + kv) / C * E : 0};
    };
    set(Scheme::Self, N * C * S * S, N * C * S * S, N * S * S * S * S, false);
    set(Scheme::Dense, N * C * S * S, N * C * (N * S * S), N * N * S * S * S * S, true);
    set(Scheme::RowWise, (N * H) * C * W, (N * H) * C * (N * W), N * N * S * S * S, true);
    set(Scheme::Epipolar, (N * S * S) * C, (N * S * S) * C * (N * K * d), N * N * S * S * K * d, true);
    set(Scheme::Mesh, (N * S * S) * C, (N * S * S) * C * (N * d), N * N * S * S * d, true);
    return r;
}

std::array<std::uint64_t, kBufferRoles> estimated_role_bytes(Scheme scheme, const ComplexityParams& p) {
    p.validate();
    using u64 = std::uint64_t;
    const u64 f = sizeof(float);
    const u64 N = static_cast<u64>(p.N), P = static_cast<u64>(p.S) * static_cast<u64>(p.S), C = static_cast<u64>(p.C);
    const u64 nq = N * P;
    std::array<u64, kBufferRoles> b{};
    auto set = [&](u64 q, u64 k, u64 map, u64 scratch) {
        b[static_cast<std::size_t>(BufferRole::Query)] = q * f;
        b[static_cast<std::size_t>(BufferRole::Key)] = k * f;
        b[static_cast<std::size_t>(BufferRole::Value)] = k * f;
        b[static_cast<std::size_t>(BufferRole::AttentionMap)] = map * f;
        b[static_cast<std::size_t>(BufferRole::Scratch)] = scratch * f;
    };
    switch (scheme) {
        case Scheme::Self: set(nq * C, nq * C, nq * P, 0); break;
        case Scheme::Dense: set(nq * C, N * nq * C, nq * nq, 0); break;
        case Scheme::RowWise: {
            const u64 S = static_cast<u64>(p.S);
            set(nq * C, N * nq * C, N * N * S * S * S, 0);
            break;
        }
        case Scheme::Epipolar: {
            const u64 kpq = static_cast<u64>(p.K) * N * static_cast<u64>(p.d);
            set(nq * C, nq * kpq * C, nq * kpq, 2 * nq * C);
            break;
        }
        case Scheme::Mesh: {
            const u64 kpq = N * static_cast<u64>(p.d);
            set(nq * C, nq * kpq * C, nq * kpq, 2 * nq * C);
            break;
        }
    }
    return b;
}

namespace {

struct Scene {
    std::vector<Camera> cameras;
    Vector3d origin = Vector3d::Zero();
    Mesh mesh;
};

Scene make_scene(const ComplexityParams& p, std::uint64_t seed, int raster_factor) {
    Scene s;
    s.mesh = synthetic::blob_mesh(seed);
    const int size = p.S * raster_factor;
    s.cameras = sample_orbit_cameras(s.origin, 2.5, 0.15, 50.0 * M_PI / 180.0, p.N, size, size);
    return s;
}

ViewEmbeddings scene_embeddings(const Scene& s) {
    std::vector<ViewEmbedding> e;
    for (const auto& c : s.cameras) e.push_back(view_embedding(c, s.origin));
    return ViewEmbeddings::from(e);
}

void run_pass(Scheme scheme, const ComplexityParams& p, std::uint64_t seed, const BenchConfig& config,
              AllocationTracker& tracker, double& seconds) {
    const Scene scene = make_scene(p, seed, config.raster_factor);
    const ViewEmbeddings emb = scene_embeddings(scene);
    const FeatureStack features = synthetic::random_features(seed + 7, p.N, p.C, p.S, p.S);
    const AttentionParams cross = AttentionParams::random(p.C + emb.length, p.C + emb.length, p.C, p.C, seed + 11);
    const int hi = p.S * config.raster_factor;
    using clock = std::chrono::steady_clock;
    switch (scheme) {
        case Scheme::Mesh: {
            std::vector<AggregatedRaster> agg;
            for (const auto& cam : scene.cameras) {
                agg.push_back(aggregate_raster(rasterize_mesh(scene.mesh, cam, hi, hi), scene.mesh, p.S, p.S));
            }
            const CorrespondenceTable table = build_correspondence_table(agg, scene.cameras);
            const auto t0 = clock::now();
            ScopedAllocationTracking scope(tracker);
            (void)meat_feat(features, table, emb, cross);
            seconds = std::chrono::duration<double>(clock::now() - t0).count();
            break;
        }
        case Scheme::Epipolar: {
            std::vector<EpipolarCandidates> cands;
            for (int v = 0; v < p.N; ++v) {
                const auto range = default_epipolar_range(scene.mesh, scene.cameras[static_cast<std::size_t>(v)]);
                cands.push_back(build_epipolar_candidates(scene.cameras, v, range, p.K, p.S));
            }
            const KeySampleTable keys = to_key_samples(cands);
            const auto t0 = clock::now();
            ScopedAllocationTracking scope(tracker);
            (void)epipolar_fuse(features, keys, emb, cross);
            seconds = std::chrono::duration<double>(clock::now() - t0).count();
            break;
        }
        case Scheme::Dense: {
            const auto t0 = clock::now();
            ScopedAllocationTracking scope(tracker);
            (void)dense_mv_fuse(features, emb, cross);
            seconds = std::chrono::duration<double>(clock::now() - t0).count();
            break;
        }
        case Scheme::Self: {
            const AttentionParams self = self_attention_params(p.C, seed + 13);
            const auto t0 = clock::now();
            ScopedAllocationTracking scope(tracker);
            (void)per_view_self_attention(features, self);
            seconds = std::chrono::duration<double>(clock::now() - t0).count();
            break;
        }
        case Scheme::RowWise: fail(ErrorCode::InvalidArgument, "row-wise attention is analytic only");
    }
}

}  // namespace

std::vector<BenchRecord> run_benchmark(std::span<const Scheme> schemes, std::span<const ComplexityParams> sizes,
                                       std::uint64_t seed, const BenchConfig& config) {
    if (sizes.empty()) fail(ErrorCode::InvalidArgument, "no benchmark sizes");
    std::vector<BenchRecord> out;
    for (Scheme scheme : schemes) {
        if (!scheme_runnable(scheme)) fail(ErrorCode::InvalidArgument, "row-wise attention is analytic only");
        auto total = [&](const ComplexityParams& p) {
            std::uint64_t sum = 0;
            for (auto b : estimated_role_bytes(scheme, p)) sum += b;
            return sum;
        };
        const auto smallest = std::min_element(sizes.begin(), sizes.end(), [&](const auto& a, const auto& b) {
            return total(a) < total(b);
        });
        if (total(*smallest) > config.budget_bytes) {
            fail(ErrorCode::BudgetExceeded, std::string(scheme_name(scheme)) + " exceeds the memory budget at every size");
        }
        for (const auto& p : sizes) {
            BenchRecord rec;
            rec.scheme = scheme;
            rec.params = p;
            rec.analytic = complexity_counts(p).row(scheme);
            rec.threads = max_threads();
            if (total(p) > config.budget_bytes) {
                rec.role_peak_bytes = estimated_role_bytes(scheme, p);
                for (std::size_t r = 0; r < kBufferRoles; ++r) {
                    rec.peak_bytes += rec.role_peak_bytes[r];
                    rec.role_elements[r] = rec.role_peak_bytes[r] / sizeof(float);
                }
            } else {
                AllocationTracker tracker;
                run_pass(scheme, p, seed, config, tracker, rec.seconds);
                rec.measured = true;
                rec.peak_bytes = tracker.peak_bytes();
                for (std::size_t r = 0; r < kBufferRoles; ++r) {
                    const RoleStats st = tracker.role(static_cast<BufferRole>(r));
                    rec.role_peak_bytes[r] = st.peak_bytes;
                    rec.role_elements[r] = st.elements_allocated;
                }
            }
            out.push_back(rec);
        }
    }
    return out;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) fail(ErrorCode::InvalidArgument, "slope needs at least two points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0 && y[i] > 0.0)) fail(ErrorCode::InvalidArgument, "slope needs positive values");
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    if (sxx == 0.0) fail(ErrorCode::InvalidArgument, "slope needs distinct x values");
    return sxy / sxx;
}

std::string bench_report_json(std::span<const BenchRecord> records, bool include_timings) {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& r : records) {
        nlohmann::ordered_json e;
        e["scheme"] = scheme_name(r.scheme);
        e["N"] = r.params.N;
        e["S"] = r.params.S;
        e["C"] = r.params.C;
        e["K"] = r.params.K;
        e["d"] = r.params.d;
        e["analytic"] = {{"q_elements", r.analytic.q_elements},
                         {"kv_elements", r.analytic.kv_elements},
                         {"attn_map_elements", r.analytic.map_elements},
                         {"concat_overhead", r.analytic.concat_overhead}};
        e["measured"] = r.measured;
        e["peak_bytes"] = r.peak_bytes;
        nlohmann::ordered_json roles, elems;
        for (std::size_t k = 0; k < kBufferRoles; ++k) {
            roles[buffer_role_name(static_cast<BufferRole>(k))] = r.role_peak_bytes[k];
            elems[buffer_role_name(static_cast<BufferRole>(k))] = r.role_elements[k];
        }
        e["role_peak_bytes"] = roles;
        e["role_elements"] = elems;
        if (include_timings) {
            e["seconds"] = r.seconds;
            e["threads"] = r.threads;
        }
        j.push_back(e);
    }
    return j.dump(2) + "\n";
}

namespace {

std::string row_label(Scheme s) {
    switch (s) {
        case Scheme::Self: return "Self-Attn";
        case Scheme::Dense: return "Dense MV";
        case Scheme::RowWise: return "Row-wise";
        case Scheme::Epipolar: return "Epipolar";
        case Scheme::Mesh: return "Mesh Attn";
    }
    return "?";
}

}  // namespace

std::string complexity_table(const ComplexityReport& report) {
    std::ostringstream os;
    char line[256];
    std::snprintf(line, sizeof line, "N=%d S=%d C=%d K=%d d=%d E=%d\n", report.params.N, report.params.S,
                  report.params.C, report.params.K, report.params.d, report.embedding);
    os << line;
    std::snprintf(line, sizeof line, "%-10s %16s %20s %20s %16s\n", "scheme", "Q", "KV", "attn map", "concat");
    os << line;
    for (Scheme s : kAllSchemes) {
        const auto& r = report.row(s);
        std::snprintf(line, sizeof line, "%-10s %16llu %20llu %20llu %16llu\n", row_label(s).c_str(),
                      static_cast<unsigned long long>(r.q_elements), static_cast<unsigned long long>(r.kv_elements),
                      static_cast<unsigned long long>(r.map_elements),
                      static_cast<unsigned long long>(r.concat_overhead));
        os << line;
    }
    return os.str();
}

std::string bench_report_table(std::span<const BenchRecord> records, bool include_timings) {
    std::ostringstream os;
    char line[320];
    std::snprintf(line, sizeof line, "%-10s %4s %4s %4s %16s %20s %16s %16s %9s%s\n", "scheme", "N", "S", "C", "KV",
                  "attn map", "key elems", "peak bytes", "source", include_timings ? "  seconds" : "");
    os << line;
    std::vector<BenchRecord> sorted(records.begin(), records.end());
    std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.scheme < b.scheme; });
    for (const auto& r : sorted) {
        char timing[32] = "";
        if (include_timings) std::snprintf(timing, sizeof timing, "  %7.3f", r.seconds);
        std::snprintf(line, sizeof line, "%-10s %4d %4d %4d %16llu %20llu %16llu %16llu %9s%s\n", row_label(r.scheme).c_str(),
                      r.params.N, r.params.S, r.params.C, static_cast<unsigned long long>(r.analytic.kv_elements),
                      static_cast<unsigned long long>(r.analytic.map_elements),
                      static_cast<unsigned long long>(r.role_elements[static_cast<std::size_t>(BufferRole::Key)]),
                      static_cast<unsigned long long>(r.peak_bytes), r.measured ? "measured" : "estimate", timing);
        os << line;
    }
    return os.str();
}

}  // namespace meatkit
