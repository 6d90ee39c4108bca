// Copyright 2026 The meatkit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Closed-form element counts of the multiview attention variants and a harness that
// measures the transient buffers of one fusion pass per scheme and size.

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "meatkit/alloc_tracker.hpp"
#include "meatkit/geometry.hpp"

namespace meatkit {

struct ComplexityParams {
    int N = 4;   // views
    int S = 16;  // square feature size
    int C = 16;  // channels
    int K = 8;   // epipolar depth samples
    int d = 4;   // grid sampling constant

    void validate() const;
};

enum class Scheme { Self = 0, Dense, RowWise, Epipolar, Mesh };
inline constexpr std::array<Scheme, 5> kAllSchemes = {Scheme::Self, Scheme::Dense, Scheme::RowWise, Scheme::Epipolar,
                                                      Scheme::Mesh};

const char* scheme_name(Scheme scheme);
// Accepts self, dense, row-wise, epipolar, mesh; throws InvalidArgument.
Scheme parse_scheme(const std::string& name);
bool scheme_runnable(Scheme scheme);

struct SchemeCounts {
    std::uint64_t q_elements = 0;
    std::uint64_t kv_elements = 0;
    std::uint64_t map_elements = 0;
    // Extra input elements from concatenating an embedding to every query and key.
    std::uint64_t concat_overhead = 0;
};

struct ComplexityReport {
    ComplexityParams params;
    int embedding = 0;
    std::array<SchemeCounts, 5> rows{};

    const SchemeCounts& row(Scheme s) const { return rows[static_cast<std::size_t>(s)]; }
};

inline constexpr int kDefaultBenchEmbedding = embedding_length(3, kDefaultEmbeddingBands);

ComplexityReport complexity_counts(const ComplexityParams& params, int embedding = kDefaultBenchEmbedding);

struct BenchConfig {
    std::uint64_t budget_bytes = std::uint64_t{512} << 20;
    int raster_factor = 8;
};

struct BenchRecord {
    Scheme scheme = Scheme::Mesh;
    ComplexityParams params;
    SchemeCounts analytic;
    bool measured = false;  // false: over budget, byte figures are estimates
    double seconds = 0.0;
    std::uint64_t peak_bytes = 0;
    std::array<std::uint64_t, kBufferRoles> role_peak_bytes{};
    std::array<std::uint64_t, kBufferRoles> role_elements{};
    unsigned threads = 1;
};

// Analytic transient bytes of one pass (all buffers alive at once), per role.
std::array<std::uint64_t, kBufferRoles> estimated_role_bytes(Scheme scheme, const ComplexityParams& params);

// One fusion pass per (scheme, size) on a seeded blob mesh and orbit rig. Schemes over
// the budget are reported as estimates; throws BudgetExceeded when a scheme cannot
// run even its smallest size, InvalidArgument for row-wise.
std::vector<BenchRecord> run_benchmark(std::span<const Scheme> schemes, std::span<const ComplexityParams> sizes,
                                       std::uint64_t seed, const BenchConfig& config = {});

// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

std::string bench_report_json(std::span<const BenchRecord> records, bool include_timings);
std::string bench_report_table(std::span<const BenchRecord> records, bool include_timings);
std::string complexity_table(const ComplexityReport& report);

}  // namespace meatkit
