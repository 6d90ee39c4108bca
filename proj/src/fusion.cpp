// Copyright 2026 The meatkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "meatkit/fusion.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "meatkit/alloc_tracker.hpp"
#include "meatkit/error.hpp"
#include "meatkit/parallel.hpp"

namespace meatkit {
namespace {

std::atomic<AttentionMapObserver*> g_observer{nullptr};

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

void shape_check(bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::ShapeMismatch, what);
}

// out[r] = sum_c W[r, c] * x[c] over the concatenation x = a ++ b.
void project_concat(const std::vector<float>& w, int rows, std::span<const float> a, std::span<const float> b,
                    float* out) {
    const std::size_t cols = a.size() + b.size();
    for (int r = 0; r < rows; ++r) {
        const float* row = w.data() + static_cast<std::size_t>(r) * cols;
        double acc = 0.0;
        for (std::size_t c = 0; c < a.size(); ++c) acc += static_cast<double>(row[c]) * a[c];
        for (std::size_t c = 0; c < b.size(); ++c) acc += static_cast<double>(row[a.size() + c]) * b[c];
        out[r] = static_cast<float>(acc);
    }
}

void gather_pixel(const FeatureView& view, int x, int y, float* out) {
    for (int c = 0; c < view.channels; ++c) out[c] = view.at(c, y, x);
}

// Softmax attention over `count` key rows where valid[k] is set; returns false when no
// key is valid. `weights` receives the normalized weights (0 for invalid keys).
bool attend_rows(const float* q, const float* keys, const float* values, const std::uint8_t* valid,
                 std::size_t count, std::size_t d, std::size_t dv, float* weights, double* out) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    double max_logit = -std::numeric_limits<double>::infinity();
    std::vector<double> logits(count, 0.0);
    bool any = false;
    for (std::size_t k = 0; k < count; ++k) {
        if (valid && !valid[k]) continue;
        double dot = 0.0;
        const float* key = keys + k * d;
        for (std::size_t j = 0; j < d; ++j) dot += static_cast<double>(q[j]) * key[j];
        logits[k] = dot * scale;
        max_logit = std::max(max_logit, logits[k]);
        any = true;
    }
    if (!any) return false;
    double denom = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
        if (valid && !valid[k]) {
            logits[k] = 0.0;
            continue;
        }
        logits[k] = std::exp(logits[k] - max_logit);
        denom += logits[k];
    }
    std::fill(out, out + dv, 0.0);
    for (std::size_t k = 0; k < count; ++k) {
        const double w = logits[k] / denom;
        weights[k] = static_cast<float>(w);
        if (w == 0.0) continue;
        const float* value = values + k * dv;
        for (std::size_t j = 0; j < dv; ++j) out[j] += w * value[j];
    }
    return true;
}

void add_output_projection(const AttentionParams& p, const double* attended, const float* input,
                           std::size_t channel_stride, float* output) {
    for (int c = 0; c < p.out_channels; ++c) {
        const float* row = p.w_o.data() + static_cast<std::size_t>(c) * p.d_head;
        double acc = 0.0;
        for (int j = 0; j < p.d_head; ++j) acc += static_cast<double>(row[j]) * attended[j];
        output[c * channel_stride] = input[c * channel_stride] + static_cast<float>(acc);
    }
}

void notify_observer(std::string_view op, const TrackedBuffer<float>& map, std::size_t rows, std::size_t cols,
                     const std::vector<std::uint8_t>& active) {
    if (auto* obs = g_observer.load()) obs->on_attention_map(op, {map.data(), map.size()}, rows, cols, active);
}

void check_embeddings(const ViewEmbeddings& e, int views, const char* what) {
    if (static_cast<int>(e.rows.size()) != views) {
        fail(ErrorCode::ShapeMismatch, std::string(what) + ": expected " + std::to_string(views) +
                                           " embeddings, got " + std::to_string(e.rows.size()));
    }
}

}  // namespace

FeatureStack::FeatureStack(Tensor<float> d, std::vector<int> ids) : data(std::move(d)), view_ids(std::move(ids)) {
    validate();
}

void FeatureStack::validate() const {
    shape_check(data.rank() == 4, "feature stack must be [views, channels, height, width]");
    shape_check(data.dim(0) >= 1 && data.dim(1) >= 1 && data.dim(2) >= 1 && data.dim(3) >= 1,
                "feature stack has an empty axis");
    shape_check(view_ids.size() == data.dim(0), "view id count differs from the view axis");
    for (float v : data.values()) {
        if (!std::isfinite(v)) fail(ErrorCode::InvalidArgument, "feature stack holds non-finite values");
    }
}

void MultiScaleFeatures::validate() const {
    if (scales.empty()) fail(ErrorCode::ShapeMismatch, "no reference feature scales");
    const auto& finest = scales.back();
    for (std::size_t i = 0; i < scales.size(); ++i) {
        const auto& s = scales[i];
        shape_check(s.rank() == 3, "reference scale must be [channels, height, width]");
        if (i > 0) {
            shape_check(s.dim(1) > scales[i - 1].dim(1) && s.dim(2) > scales[i - 1].dim(2),
                        "reference scales must increase strictly in resolution");
        }
        shape_check(finest.dim(1) % s.dim(1) == 0 && finest.dim(2) % s.dim(2) == 0,
                    "reference scale does not divide the finest scale");
    }
}

const Tensor<float>& MultiScaleFeatures::select(int width, int height) const {
    for (const auto& s : scales) {
        if (s.rank() == 3 && static_cast<int>(s.dim(1)) == height && static_cast<int>(s.dim(2)) == width) return s;
    }
    fail(ErrorCode::NoMatchingScale, "no reference scale at " + std::to_string(width) + "x" + std::to_string(height));
}

AttentionParams AttentionParams::random(int q_in, int kv_in, int d_head, int out_channels, std::uint64_t seed) {
    AttentionParams p;
    p.q_in = q_in;
    p.kv_in = kv_in;
    p.d_head = d_head;
    p.out_channels = out_channels;
    std::mt19937_64 rng(splitmix64(seed));
    auto fill = [&](std::vector<float>& w, int rows, int cols) {
        std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(cols)));
        w.resize(static_cast<std::size_t>(rows) * cols);
        for (auto& v : w) v = static_cast<float>(dist(rng));
    };
    fill(p.w_q, d_head, q_in);
    fill(p.w_k, d_head, kv_in);
    fill(p.w_v, d_head, kv_in);
    fill(p.w_o, out_channels, d_head);
    return p;
}

void AttentionParams::zero_output() { std::fill(w_o.begin(), w_o.end(), 0.0f); }

void AttentionParams::validate() const {
    shape_check(q_in >= 1 && kv_in >= 1 && d_head >= 1 && out_channels >= 1, "attention dims must be positive");
    shape_check(w_q.size() == static_cast<std::size_t>(d_head) * q_in, "w_q has the wrong size");
    shape_check(w_k.size() == static_cast<std::size_t>(d_head) * kv_in, "w_k has the wrong size");
    shape_check(w_v.size() == static_cast<std::size_t>(d_head) * kv_in, "w_v has the wrong size");
    shape_check(w_o.size() == static_cast<std::size_t>(out_channels) * d_head, "w_o has the wrong size");
    for (const auto* w : {&w_q, &w_k, &w_v, &w_o}) {
        for (float v : *w) {
            if (!std::isfinite(v)) fail(ErrorCode::InvalidArgument, "attention parameters are not finite");
        }
    }
}

AttentionParams self_attention_params(int channels, std::uint64_t seed) {
    return AttentionParams::random(channels, channels, channels, channels, splitmix64(seed) + 3);
}

MeatBlockParams make_block_params(int channels, int embedding, int ref_channels, std::uint64_t seed) {
    MeatBlockParams p;
    p.feat = AttentionParams::random(channels + embedding, channels + embedding, channels, channels,
                                     splitmix64(seed) + 1);
    p.vae = AttentionParams::random(channels + embedding, ref_channels + embedding, channels, channels,
                                    splitmix64(seed) + 2);
    p.self = self_attention_params(channels, seed);
    return p;
}

ViewEmbeddings ViewEmbeddings::from(std::span<const ViewEmbedding> embeddings) {
    ViewEmbeddings out;
    for (const auto& e : embeddings) {
        if (!out.rows.empty() && static_cast<int>(e.values.size()) != out.length) {
            fail(ErrorCode::ShapeMismatch, "view embeddings differ in length");
        }
        out.length = static_cast<int>(e.values.size());
        out.rows.emplace_back(e.values.begin(), e.values.end());
    }
    return out;
}

void attention(std::span<const float> q, std::span<const float> keys, std::span<const float> values,
               std::size_t count, std::span<float> out, std::span<float> weights) {
    if (count == 0) fail(ErrorCode::EmptyKeySet, "attention over an empty key set");
    const std::size_t d = q.size();
    const std::size_t dv = out.size();
    shape_check(d > 0 && keys.size() == count * d, "keys do not match the query width");
    shape_check(values.size() == count * dv, "values do not match the output width");
    shape_check(weights.empty() || weights.size() == count, "weights buffer has the wrong size");
    std::vector<float> w(count);
    std::vector<double> acc(dv);
    attend_rows(q.data(), keys.data(), values.data(), nullptr, count, d, dv, w.data(), acc.data());
    for (std::size_t j = 0; j < dv; ++j) out[j] = static_cast<float>(acc[j]);
    if (!weights.empty()) std::copy(w.begin(), w.end(), weights.begin());
}

std::vector<float> attention(std::span<const float> q, std::span<const float> keys, std::span<const float> values,
                             std::size_t count) {
    if (count == 0) fail(ErrorCode::EmptyKeySet, "attention over an empty key set");
    std::vector<float> out(values.size() / count);
    attention(q, keys, values, count, out);
    return out;
}

FeatureView view_of(const FeatureStack& stack, int view) {
    const std::size_t stride = static_cast<std::size_t>(stack.channels()) * stack.height() * stack.width();
    return {stack.data.data() + static_cast<std::size_t>(view) * stride, stack.channels(), stack.height(),
            stack.width()};
}

FeatureView view_of(const Tensor<float>& chw) {
    shape_check(chw.rank() == 3, "expected a [channels, height, width] tensor");
    return {chw.data(), static_cast<int>(chw.dim(0)), static_cast<int>(chw.dim(1)), static_cast<int>(chw.dim(2))};
}

FeatureStack gathered_attention(const FeatureStack& features, std::span<const FeatureView> sources,
                                const KeySampleTable& table, const ViewEmbeddings& query_embeddings,
                                const ViewEmbeddings& source_embeddings, const AttentionParams& params) {
    params.validate();
    const int n = features.n_views();
    const int c = features.channels();
    const int h = features.height();
    const int w = features.width();
    shape_check(table.n_views == n && table.width == w && table.height == h,
                "key table does not match the feature stack");
    shape_check(!sources.empty(), "no key sources");
    check_embeddings(query_embeddings, n, "query embeddings");
    check_embeddings(source_embeddings, static_cast<int>(sources.size()), "source embeddings");
    const int src_c = sources[0].channels;
    for (const auto& s : sources) {
        shape_check(s.channels == src_c && s.width == w && s.height == h, "key sources differ in shape");
    }
    shape_check(params.q_in == c + query_embeddings.length, "w_q input width != channels + embedding");
    shape_check(params.kv_in == src_c + source_embeddings.length, "w_k input width != source channels + embedding");
    shape_check(params.out_channels == c, "output projection does not map back to the feature channels");

    const std::size_t pixels = static_cast<std::size_t>(h) * w;
    const std::size_t nq = static_cast<std::size_t>(n) * pixels;
    const std::size_t kpq = static_cast<std::size_t>(table.keys_per_query);
    const std::size_t d = static_cast<std::size_t>(params.d_head);
    const std::size_t n_src = sources.size();
    for (std::size_t i = 0; i < table.source.size(); ++i) {
        if (table.valid[i] && (table.source[i] < 0 || static_cast<std::size_t>(table.source[i]) >= n_src)) {
            fail(ErrorCode::ShapeMismatch, "key table references a missing source");
        }
    }

    // Per-source projected keys and values, gathered below.
    TrackedBuffer<float> key_src(BufferRole::Scratch, n_src * pixels * d);
    TrackedBuffer<float> value_src(BufferRole::Scratch, n_src * pixels * d);
    parallel_for(0, n_src * pixels, [&](std::size_t i) {
        const std::size_t s = i / pixels;
        const int x = static_cast<int>(i % pixels % w);
        const int y = static_cast<int>(i % pixels / w);
        std::vector<float> f(static_cast<std::size_t>(src_c));
        gather_pixel(sources[s], x, y, f.data());
        project_concat(params.w_k, params.d_head, f, source_embeddings.row(static_cast<int>(s)), key_src.data() + i * d);
        project_concat(params.w_v, params.d_head, f, source_embeddings.row(static_cast<int>(s)), value_src.data() + i * d);
    });

    TrackedBuffer<float> q(BufferRole::Query, nq * d);
    parallel_for(0, nq, [&](std::size_t i) {
        const int v = static_cast<int>(i / pixels);
        const int x = static_cast<int>(i % pixels % w);
        const int y = static_cast<int>(i % pixels / w);
        std::vector<float> f(static_cast<std::size_t>(c));
        gather_pixel(view_of(features, v), x, y, f.data());
        project_concat(params.w_q, params.d_head, f, query_embeddings.row(v), q.data() + i * d);
    });

    TrackedBuffer<float> keys(BufferRole::Key, nq * kpq * d);
    TrackedBuffer<float> values(BufferRole::Value, nq * kpq * d);
    parallel_for(0, nq, [&](std::size_t i) {
        for (std::size_t k = 0; k < kpq; ++k) {
            const std::size_t slot = i * kpq + k;
            if (!table.valid[slot]) continue;
            const std::size_t src = (static_cast<std::size_t>(table.source[slot]) * pixels +
                                     static_cast<std::size_t>(table.y[slot]) * w + static_cast<std::size_t>(table.x[slot])) * d;
            std::copy_n(key_src.data() + src, d, keys.data() + slot * d);
            std::copy_n(value_src.data() + src, d, values.data() + slot * d);
        }
    });

    TrackedBuffer<float> map(BufferRole::AttentionMap, nq * kpq);
    FeatureStack out = features;
    std::vector<std::uint8_t> active(nq, 0);
    parallel_for(0, nq, [&](std::size_t i) {
        if (!table.mask[i]) return;
        std::vector<double> attended(d);
        if (!attend_rows(q.data() + i * d, keys.data() + i * kpq * d, values.data() + i * kpq * d,
                         table.valid.data() + i * kpq, kpq, d, d, map.data() + i * kpq, attended.data())) {
            return;  // empty key set: identity residual
        }
        active[i] = 1;
        const std::size_t v = i / pixels;
        const std::size_t pix = i % pixels;
        const std::size_t base = v * static_cast<std::size_t>(c) * pixels + pix;
        add_output_projection(params, attended.data(), features.data.data() + base, pixels, out.data.data() + base);
    });
    notify_observer("gathered", map, nq, kpq, active);
    return out;
}

FeatureStack meat_feat(const FeatureStack& features, const CorrespondenceTable& table,
                       const ViewEmbeddings& embeddings, const AttentionParams& params) {
    shape_check(table.n_views() == features.n_views() && table.width() == features.width() &&
                    table.height() == features.height(),
                "correspondence table does not match the feature stack");
    std::vector<FeatureView> sources;
    for (int v = 0; v < features.n_views(); ++v) sources.push_back(view_of(features, v));
    return gathered_attention(features, sources, to_key_samples(table), embeddings, embeddings, params);
}

FeatureStack meat_vae(const FeatureStack& features, const MultiScaleFeatures& ref_features,
                      const CorrespondenceTable& table, const ViewEmbeddings& target_embeddings,
                      std::span<const float> ref_embedding, int ref_view, const AttentionParams& params) {
    shape_check(table.n_views() == features.n_views() && table.width() == features.width() &&
                    table.height() == features.height(),
                "correspondence table does not match the feature stack");
    ref_features.validate();
    const auto& scale = ref_features.select(features.width(), features.height());
    KeySampleTable keys = to_key_samples_single_source(table, ref_view);
    std::fill(keys.source.begin(), keys.source.end(), 0);
    const FeatureView source = view_of(scale);
    ViewEmbeddings ref;
    ref.length = static_cast<int>(ref_embedding.size());
    ref.rows.emplace_back(ref_embedding.begin(), ref_embedding.end());
    return gathered_attention(features, {&source, 1}, keys, target_embeddings, ref, params);
}

FeatureStack per_view_self_attention(const FeatureStack& features, const AttentionParams& params) {
    params.validate();
    const int n = features.n_views();
    const int c = features.channels();
    shape_check(params.q_in == c && params.kv_in == c && params.out_channels == c,
                "self-attention parameters must be channels wide");
    const std::size_t pixels = static_cast<std::size_t>(features.height()) * features.width();
    const std::size_t tokens = static_cast<std::size_t>(n) * pixels;
    const std::size_t d = static_cast<std::size_t>(params.d_head);
    const std::span<const float> none;

    TrackedBuffer<float> q(BufferRole::Query, tokens * d);
    TrackedBuffer<float> k(BufferRole::Key, tokens * d);
    TrackedBuffer<float> val(BufferRole::Value, tokens * d);
    parallel_for(0, tokens, [&](std::size_t i) {
        const int v = static_cast<int>(i / pixels);
        const int x = static_cast<int>(i % pixels % features.width());
        const int y = static_cast<int>(i % pixels / features.width());
        std::vector<float> f(static_cast<std::size_t>(c));
        gather_pixel(view_of(features, v), x, y, f.data());
        project_concat(params.w_q, params.d_head, f, none, q.data() + i * d);
        project_concat(params.w_k, params.d_head, f, none, k.data() + i * d);
        project_concat(params.w_v, params.d_head, f, none, val.data() + i * d);
    });

    TrackedBuffer<float> map(BufferRole::AttentionMap, tokens * pixels);
    FeatureStack out = features;
    parallel_for(0, tokens, [&](std::size_t i) {
        const std::size_t v = i / pixels;
        const std::size_t pix = i % pixels;
        std::vector<double> attended(d);
        attend_rows(q.data() + i * d, k.data() + v * pixels * d, val.data() + v * pixels * d, nullptr, pixels, d, d,
                    map.data() + i * pixels, attended.data());
        const std::size_t base = v * static_cast<std::size_t>(c) * pixels + pix;
        add_output_projection(params, attended.data(), features.data.data() + base, pixels, out.data.data() + base);
    });
    notify_observer("self", map, tokens, pixels, std::vector<std::uint8_t>(tokens, 1));
    return out;
}

FeatureStack meat_block(const FeatureStack& features, const CorrespondenceTable& table,
                        const MultiScaleFeatures& ref_features, const ViewEmbeddings& embeddings, int ref_view,
                        const MeatBlockParams& params) {
    check_embeddings(embeddings, features.n_views(), "view embeddings");
    if (ref_view < 0 || ref_view >= features.n_views()) fail(ErrorCode::InvalidArgument, "reference view out of range");
    FeatureStack x = meat_feat(features, table, embeddings, params.feat);
    x = meat_vae(x, ref_features, table, embeddings, embeddings.row(ref_view), ref_view, params.vae);
    return per_view_self_attention(x, params.self);
}

FeatureStack dense_mv_fuse(const FeatureStack& features, const ViewEmbeddings& embeddings,
                           const AttentionParams& params) {
    params.validate();
    const int n = features.n_views();
    const int c = features.channels();
    check_embeddings(embeddings, n, "view embeddings");
    shape_check(params.q_in == c + embeddings.length && params.kv_in == c + embeddings.length &&
                    params.out_channels == c,
                "dense parameters must be channels + embedding wide");
    const std::size_t pixels = static_cast<std::size_t>(features.height()) * features.width();
    const std::size_t tokens = static_cast<std::size_t>(n) * pixels;
    const std::size_t d = static_cast<std::size_t>(params.d_head);

    TrackedBuffer<float> q(BufferRole::Query, tokens * d);
    // Each target view materializes the keys/values of all N * S^2 pixels.
    TrackedBuffer<float> k(BufferRole::Key, static_cast<std::size_t>(n) * tokens * d);
    TrackedBuffer<float> val(BufferRole::Value, static_cast<std::size_t>(n) * tokens * d);
    parallel_for(0, tokens, [&](std::size_t i) {
        const int v = static_cast<int>(i / pixels);
        const int x = static_cast<int>(i % pixels % features.width());
        const int y = static_cast<int>(i % pixels / features.width());
        std::vector<float> f(static_cast<std::size_t>(c));
        gather_pixel(view_of(features, v), x, y, f.data());
        project_concat(params.w_q, params.d_head, f, embeddings.row(v), q.data() + i * d);
        project_concat(params.w_k, params.d_head, f, embeddings.row(v), k.data() + i * d);
        project_concat(params.w_v, params.d_head, f, embeddings.row(v), val.data() + i * d);
    });
    for (int v = 1; v < n; ++v) {
        std::copy_n(k.data(), tokens * d, k.data() + static_cast<std::size_t>(v) * tokens * d);
        std::copy_n(val.data(), tokens * d, val.data() + static_cast<std::size_t>(v) * tokens * d);
    }

    TrackedBuffer<float> map(BufferRole::AttentionMap, tokens * tokens);
    FeatureStack out = features;
    parallel_for(0, tokens, [&](std::size_t i) {
        const std::size_t v = i / pixels;
        const std::size_t pix = i % pixels;
        std::vector<double> attended(d);
        attend_rows(q.data() + i * d, k.data() + v * tokens * d, val.data() + v * tokens * d, nullptr, tokens, d, d,
                    map.data() + i * tokens, attended.data());
        const std::size_t base = v * static_cast<std::size_t>(c) * pixels + pix;
        add_output_projection(params, attended.data(), features.data.data() + base, pixels, out.data.data() + base);
    });
    notify_observer("dense", map, tokens, tokens, std::vector<std::uint8_t>(tokens, 1));
    return out;
}

FeatureStack epipolar_fuse(const FeatureStack& features, const KeySampleTable& candidates,
                           const ViewEmbeddings& embeddings, const AttentionParams& params) {
    std::vector<FeatureView> sources;
    for (int v = 0; v < features.n_views(); ++v) sources.push_back(view_of(features, v));
    return gathered_attention(features, sources, candidates, embeddings, embeddings, params);
}

ScopedAttentionObserver::ScopedAttentionObserver(AttentionMapObserver& observer)
    : previous_(g_observer.exchange(&observer)) {}

ScopedAttentionObserver::~ScopedAttentionObserver() { g_observer.store(previous_); }

}  // namespace meatkit
