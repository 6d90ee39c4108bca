// Copyright 2026 The meatkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "meatkit/alloc_tracker.hpp"

#include <algorithm>
#include <atomic>
#include <sstream>

#include "meatkit/tensor.hpp"

namespace meatkit {
namespace {

std::atomic<AllocationTracker*> g_active{nullptr};

}  // namespace

std::string shape_string(const Shape& shape) {
    std::ostringstream oss;
    oss << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) oss << (i ? ", " : "") << shape[i];
    oss << ']';
    return oss.str();
}

const char* buffer_role_name(BufferRole role) {
    switch (role) {
        case BufferRole::Query: return "query";
        case BufferRole::Key: return "key";
        case BufferRole::Value: return "value";
        case BufferRole::AttentionMap: return "attention_map";
        case BufferRole::Scratch: return "scratch";
    }
    return "unknown";
}

void AllocationTracker::on_allocate(BufferRole role, std::size_t elements, std::size_t bytes) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto& r = roles_[static_cast<std::size_t>(role)];
    r.current_bytes += bytes;
    r.peak_bytes = std::max(r.peak_bytes, r.current_bytes);
    r.elements_allocated += elements;
    ++r.allocations;
    current_ += bytes;
    peak_ = std::max(peak_, current_);
}

void AllocationTracker::on_release(BufferRole role, std::size_t bytes) {
    std::lock_guard<std::mutex> lock(mutex_);
    roles_[static_cast<std::size_t>(role)].current_bytes -= bytes;
    current_ -= bytes;
}

std::size_t AllocationTracker::peak_bytes() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return peak_;
}

std::size_t AllocationTracker::current_bytes() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return current_;
}

RoleStats AllocationTracker::role(BufferRole role) const {
    std::lock_guard<std::mutex> lock(mutex_);
    return roles_[static_cast<std::size_t>(role)];
}

ScopedAllocationTracking::ScopedAllocationTracking(AllocationTracker& tracker)
    : previous_(g_active.exchange(&tracker)) {}

ScopedAllocationTracking::~ScopedAllocationTracking() { g_active.store(previous_); }

AllocationTracker* active_tracker() { return g_active.load(); }

}  // namespace meatkit
