// Copyright 2026 The meatkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "meatkit/conv.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "meatkit/error.hpp"
#include "meatkit/parallel.hpp"

namespace meatkit {

Conv2d Conv2d::zeros(int in, int out, int kernel, int stride, int padding) {
    if (in < 1 || out < 1 || kernel < 1 || stride < 1 || padding < 0) {
        fail(ErrorCode::InvalidArgument, "bad convolution geometry");
    }
    Conv2d c;
    c.in_channels = in;
    c.out_channels = out;
    c.kernel = kernel;
    c.stride = stride;
    c.padding = padding;
    c.weight.assign(static_cast<std::size_t>(out) * in * kernel * kernel, 0.0f);
    c.bias.assign(static_cast<std::size_t>(out), 0.0f);
    return c;
}

Conv2d Conv2d::random(int in, int out, int kernel, int stride, int padding, std::uint64_t seed) {
    Conv2d c = zeros(in, out, kernel, stride, padding);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(in * kernel * kernel)));
    for (auto& w : c.weight) w = static_cast<float>(dist(rng));
    return c;
}

Tensor<float> Conv2d::forward(const Tensor<float>& input) const {
    if (input.rank() != 3 || static_cast<int>(input.dim(0)) != in_channels) {
        fail(ErrorCode::ShapeMismatch, "convolution expects " + std::to_string(in_channels) + " input channels, got " +
                                           shape_string(input.shape()));
    }
    const int h = static_cast<int>(input.dim(1));
    const int w = static_cast<int>(input.dim(2));
    const int oh = output_size(h);
    const int ow = output_size(w);
    if (oh < 1 || ow < 1) fail(ErrorCode::ShapeMismatch, "convolution input smaller than the kernel");
    Tensor<float> out({static_cast<std::size_t>(out_channels), static_cast<std::size_t>(oh), static_cast<std::size_t>(ow)});
    const float* src = input.data();
    float* dst = out.data();
    parallel_for(0, static_cast<std::size_t>(out_channels) * oh, [&](std::size_t job) {
        const int o = static_cast<int>(job / oh);
        const int y = static_cast<int>(job % oh);
        std::vector<double> acc(static_cast<std::size_t>(ow), static_cast<double>(bias[o]));
        for (int c = 0; c < in_channels; ++c) {
            const float* wk = weight.data() + ((static_cast<std::size_t>(o) * in_channels + c) * kernel) * kernel;
            for (int ky = 0; ky < kernel; ++ky) {
                const int iy = y * stride - padding + ky;
                if (iy < 0 || iy >= h) continue;
                const float* row = src + (static_cast<std::size_t>(c) * h + iy) * w;
                for (int kx = 0; kx < kernel; ++kx) {
                    const double wt = wk[ky * kernel + kx];
                    // Output columns whose tap stays inside the row.
                    const int shift = kx - padding;
                    const int x0 = std::max(0, (-shift + stride - 1) / stride);
                    const int x1 = std::min(ow, (w - 1 - shift) / stride + 1);
                    for (int x = x0; x < x1; ++x) acc[x] += wt * row[x * stride + shift];
                }
            }
        }
        float* out_row = dst + (static_cast<std::size_t>(o) * oh + y) * ow;
        for (int x = 0; x < ow; ++x) out_row[x] = static_cast<float>(acc[x]);
    });
    return out;
}

void silu_inplace(Tensor<float>& t) {
    for (auto& v : t.values()) v = static_cast<float>(v / (1.0 + std::exp(-static_cast<double>(v))));
}

KeypointEncoder::KeypointEncoder(int out_channels, std::uint64_t seed)
    : projection_(Conv2d::zeros(64, out_channels, 1, 1, 0)) {
    const int widths[] = {3, 16, 32, 64};
    for (int s = 0; s < 3; ++s) {
        stages_.push_back(Conv2d::random(widths[s], widths[s + 1], 3, 1, 1, seed * 8 + 2 * s));
        stages_.push_back(Conv2d::random(widths[s + 1], widths[s + 1], 3, 2, 1, seed * 8 + 2 * s + 1));
    }
}

Tensor<float> keypoint_encode(const Tensor<float>& image, const KeypointEncoder& encoder) {
    if (image.rank() != 3 || image.dim(0) != 3) fail(ErrorCode::ShapeMismatch, "keypoint image must be [3, H, W]");
    if (image.dim(1) % 8 != 0 || image.dim(2) % 8 != 0 || image.dim(1) == 0 || image.dim(2) == 0) {
        fail(ErrorCode::NonDivisibleResolution,
             "keypoint image " + shape_string(image.shape()) + " is not divisible by 8");
    }
    Tensor<float> x = image;
    for (const auto& stage : encoder.stages()) {
        x = stage.forward(x);
        silu_inplace(x);
    }
    return encoder.projection().forward(x);
}

ReferenceEncoder::ReferenceEncoder(int channels, int n_scales, std::uint64_t seed)
    : channels_(channels), n_scales_(n_scales), stem_(Conv2d::random(3, channels, 3, 1, 1, seed * 16)) {
    if (channels < 1 || n_scales < 1) fail(ErrorCode::InvalidArgument, "reference encoder needs channels and scales");
    for (int s = 0; s < n_scales; ++s) {
        residual_.push_back(Conv2d::random(channels, channels, 3, 1, 1, seed * 16 + 1 + 2 * s));
        if (s + 1 < n_scales) down_.push_back(Conv2d::random(channels, channels, 3, 2, 1, seed * 16 + 2 + 2 * s));
    }
}

MultiScaleFeatures ReferenceEncoder::encode(const Tensor<float>& image) const {
    if (image.rank() != 3 || image.dim(0) != 3) fail(ErrorCode::ShapeMismatch, "reference image must be [3, H, W]");
    const std::size_t factor = std::size_t{1} << (n_scales_ - 1);
    if (image.dim(1) % factor != 0 || image.dim(2) % factor != 0) {
        fail(ErrorCode::NonDivisibleResolution, "reference image " + shape_string(image.shape()) +
                                                    " is not divisible by " + std::to_string(factor));
    }
    MultiScaleFeatures out;
    Tensor<float> x = stem_.forward(image);
    for (int s = 0; s < n_scales_; ++s) {
        if (s > 0) {
            x = down_[s - 1].forward(x);
            silu_inplace(x);
        }
        Tensor<float> r = residual_[s].forward(x);
        silu_inplace(r);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += r[i];
        out.scales.push_back(x);
    }
    std::reverse(out.scales.begin(), out.scales.end());
    return out;
}

}  // namespace meatkit
