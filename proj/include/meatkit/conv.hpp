// Copyright 2026 The meatkit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Small convolutional encoders: the keypoint conditioning encoder and a fixed,
// seeded-random residual encoder producing reference features at several scales.

#pragma once

#include <cstdint>
#include <vector>

#include "meatkit/fusion.hpp"
#include "meatkit/tensor.hpp"

namespace meatkit {

// 2D convolution over [channels, height, width] tensors, weights [out, in, k, k].
struct Conv2d {
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 1;
    int stride = 1;
    int padding = 0;
    std::vector<float> weight;
    std::vector<float> bias;

    static Conv2d random(int in, int out, int kernel, int stride, int padding, std::uint64_t seed);
    static Conv2d zeros(int in, int out, int kernel, int stride, int padding);

    int output_size(int input) const { return (input + 2 * padding - kernel) / stride + 1; }
    Tensor<float> forward(const Tensor<float>& input) const;
};

void silu_inplace(Tensor<float>& t);

class KeypointEncoder {
public:
    // Stages 3 -> 16 -> 32 -> 64, each halving the resolution, then a zero-initialized
    // 1x1 projection to `out_channels`.
    KeypointEncoder(int out_channels, std::uint64_t seed);

    int out_channels() const { return projection_.out_channels; }
    const std::vector<Conv2d>& stages() const { return stages_; }
    const Conv2d& projection() const { return projection_; }
    Conv2d& projection() { return projection_; }

private:
    std::vector<Conv2d> stages_;
    Conv2d projection_;
};

// [3, H, W] -> [C, H/8, W/8]. Throws NonDivisibleResolution unless 8 divides H and W.
Tensor<float> keypoint_encode(const Tensor<float>& image, const KeypointEncoder& encoder);

class ReferenceEncoder {
public:
    ReferenceEncoder(int channels, int n_scales, std::uint64_t seed);

    int channels() const { return channels_; }
    int scales() const { return n_scales_; }

    // [3, H, W] -> scales at H / 2^(n-1) ... H, coarse to fine. The finest scale keeps
    // the input resolution.
    MultiScaleFeatures encode(const Tensor<float>& image) const;

private:
    int channels_;
    int n_scales_;
    Conv2d stem_;
    std::vector<Conv2d> residual_;
    std::vector<Conv2d> down_;
};

}  // namespace meatkit
