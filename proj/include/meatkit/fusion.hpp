// Copyright 2026 The meatkit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Attention arithmetic for multiview feature fusion.
//
// Every kernel works on single-precision feature stacks [views, channels, height,
// width], uses one head with d_head = channels, and applies its update as a residual:
// out = f + W_o * Attention(W_q x_q, W_k x_k, W_v x_k). The mesh-guided kernels skip
// the residual (bit-exact passthrough) for pixels whose ray misses the mesh or that
// end up with no valid key. Transient buffers are allocated through TrackedBuffer so
// their element counts can be compared against the analytic complexity model.

#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "meatkit/correspondence.hpp"
#include "meatkit/geometry.hpp"
#include "meatkit/tensor.hpp"

namespace meatkit {

struct FeatureStack {
    Tensor<float> data;  // [n_views, channels, height, width]
    std::vector<int> view_ids;

    FeatureStack() = default;
    FeatureStack(Tensor<float> d, std::vector<int> ids);

    int n_views() const { return static_cast<int>(data.dim(0)); }
    int channels() const { return static_cast<int>(data.dim(1)); }
    int height() const { return static_cast<int>(data.dim(2)); }
    int width() const { return static_cast<int>(data.dim(3)); }

    // Throws ShapeMismatch on a bad shape, InvalidArgument on non-finite values.
    void validate() const;
};

// Reference-view features at several resolutions, ordered coarse to fine. Each scale
// is [channels, height, width].
struct MultiScaleFeatures {
    std::vector<Tensor<float>> scales;

    void validate() const;
    // Scale whose spatial size matches; throws NoMatchingScale.
    const Tensor<float>& select(int width, int height) const;
};

// Row-major projection matrices: w_q [d_head, q_in], w_k / w_v [d_head, kv_in],
// w_o [out_channels, d_head].
struct AttentionParams {
    int q_in = 0;
    int kv_in = 0;
    int d_head = 0;
    int out_channels = 0;
    std::vector<float> w_q, w_k, w_v, w_o;

    // Gaussian entries with std 1/sqrt(fan_in), deterministic in the seed.
    static AttentionParams random(int q_in, int kv_in, int d_head, int out_channels, std::uint64_t seed);
    void zero_output();
    void validate() const;
};

struct MeatBlockParams {
    AttentionParams feat;
    AttentionParams vae;
    AttentionParams self;
};

// Random parameters for a block over `channels`-wide features, `embedding` long view
// embeddings and `ref_channels`-wide reference features. Each stage draws from its own
// seed derived from `seed`, so the self stage equals self_attention_params(channels,
// seed).
MeatBlockParams make_block_params(int channels, int embedding, int ref_channels, std::uint64_t seed);
AttentionParams self_attention_params(int channels, std::uint64_t seed);

// Per-view embeddings as float rows of equal length.
struct ViewEmbeddings {
    int length = 0;
    std::vector<std::vector<float>> rows;

    static ViewEmbeddings from(std::span<const ViewEmbedding> embeddings);
    std::span<const float> row(int view) const { return rows.at(static_cast<std::size_t>(view)); }
};

// softmax(q K^T / sqrt(d)) V with max subtraction. `keys` holds count rows of q.size()
// values, `values` holds count rows of out.size() values. Writes the weights when
// `weights` is non-empty. Throws EmptyKeySet when count == 0.
void attention(std::span<const float> q, std::span<const float> keys, std::span<const float> values,
               std::size_t count, std::span<float> out, std::span<float> weights = {});

std::vector<float> attention(std::span<const float> q, std::span<const float> keys,
                             std::span<const float> values, std::size_t count);

// Cross-view mesh attention: each masked-in pixel attends over the <= 4N features its
// mesh point lands on in all views, each concatenated with that view's embedding.
FeatureStack meat_feat(const FeatureStack& features, const CorrespondenceTable& table,
                       const ViewEmbeddings& embeddings, const AttentionParams& params);

// Mesh attention against the reference view only, keys drawn from the reference
// feature scale matching the working resolution.
FeatureStack meat_vae(const FeatureStack& features, const MultiScaleFeatures& ref_features,
                      const CorrespondenceTable& table, const ViewEmbeddings& target_embeddings,
                      std::span<const float> ref_embedding, int ref_view, const AttentionParams& params);

// Full attention over the pixels of each view independently.
FeatureStack per_view_self_attention(const FeatureStack& features, const AttentionParams& params);

// meat_feat -> meat_vae -> per_view_self_attention.
FeatureStack meat_block(const FeatureStack& features, const CorrespondenceTable& table,
                        const MultiScaleFeatures& ref_features, const ViewEmbeddings& embeddings,
                        int ref_view, const MeatBlockParams& params);

// Baseline: every pixel attends over all pixels of all views.
FeatureStack dense_mv_fuse(const FeatureStack& features, const ViewEmbeddings& embeddings,
                           const AttentionParams& params);

// Baseline: keys from K depth candidates along each pixel ray in every view. No mesh
// mask; pixels with no valid candidate pass through.
FeatureStack epipolar_fuse(const FeatureStack& features, const KeySampleTable& candidates,
                           const ViewEmbeddings& embeddings, const AttentionParams& params);

// Non-owning [channels, height, width] slice.
struct FeatureView {
    const float* data = nullptr;
    int channels = 0;
    int height = 0;
    int width = 0;

    float at(int c, int y, int x) const {
        return data[(static_cast<std::size_t>(c) * height + static_cast<std::size_t>(y)) * width +
                    static_cast<std::size_t>(x)];
    }
};

FeatureView view_of(const FeatureStack& stack, int view);
FeatureView view_of(const Tensor<float>& chw);

// Shared gathered-key kernel behind meat_feat, meat_vae and epipolar_fuse. Key
// features come from `sources` (indexed by the table's source ids) concatenated with
// the matching row of `source_embeddings`.
FeatureStack gathered_attention(const FeatureStack& features, std::span<const FeatureView> sources,
                                const KeySampleTable& table, const ViewEmbeddings& query_embeddings,
                                const ViewEmbeddings& source_embeddings, const AttentionParams& params);

// Receives every attention-map buffer right before it is released. Rows that were
// skipped (masked passthrough) are flagged inactive and hold zeros.
class AttentionMapObserver {
public:
    virtual ~AttentionMapObserver() = default;
    virtual void on_attention_map(std::string_view op, std::span<const float> map, std::size_t rows,
                                  std::size_t cols, std::span<const std::uint8_t> row_active) = 0;
};

class ScopedAttentionObserver {
public:
    explicit ScopedAttentionObserver(AttentionMapObserver& observer);
    ~ScopedAttentionObserver();
    ScopedAttentionObserver(const ScopedAttentionObserver&) = delete;
    ScopedAttentionObserver& operator=(const ScopedAttentionObserver&) = delete;

private:
    AttentionMapObserver* previous_;
};

}  // namespace meatkit
