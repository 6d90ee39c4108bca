// Copyright 2026 The meatkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace meatkit {

// Caps the worker count used by parallel_for. 0 selects the hardware default.
void set_max_threads(unsigned n);
unsigned max_threads();

// Runs fn(i) for i in [begin, end) over contiguous static chunks. Callers must write
// only to index-disjoint outputs; results never depend on the thread count.
void parallel_for(std::size_t begin, std::size_t end, const std::function<void(std::size_t)>& fn);

// Sum with a fixed pairwise tree, independent of how the terms were produced.
double pairwise_sum(std::span<const double> values);

}  // namespace meatkit
