// Copyright 2026 The meatkit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Accounting for the transient buffers of a fusion pass. Kernels allocate their
// query/key/value/attention-map storage through TrackedBuffer; while a
// ScopedAllocationTracking is alive every such allocation is reported to it.

#pragma once

#include <array>
#include <cstddef>
#include <mutex>
#include <utility>
#include <vector>

namespace meatkit {

enum class BufferRole { Query = 0, Key, Value, AttentionMap, Scratch };
inline constexpr std::size_t kBufferRoles = 5;

const char* buffer_role_name(BufferRole role);

struct RoleStats {
    std::size_t current_bytes = 0;
    std::size_t peak_bytes = 0;
    std::size_t elements_allocated = 0;
    std::size_t allocations = 0;
};

class AllocationTracker {
public:
    void on_allocate(BufferRole role, std::size_t elements, std::size_t bytes);
    void on_release(BufferRole role, std::size_t bytes);

    std::size_t peak_bytes() const;
    std::size_t current_bytes() const;
    RoleStats role(BufferRole role) const;

private:
    mutable std::mutex mutex_;
    std::array<RoleStats, kBufferRoles> roles_{};
    std::size_t current_ = 0;
    std::size_t peak_ = 0;
};

// Installs `tracker` as the process-wide sink until destruction, restoring the
// previous one afterwards.
class ScopedAllocationTracking {
public:
    explicit ScopedAllocationTracking(AllocationTracker& tracker);
    ~ScopedAllocationTracking();
    ScopedAllocationTracking(const ScopedAllocationTracking&) = delete;
    ScopedAllocationTracking& operator=(const ScopedAllocationTracking&) = delete;

private:
    AllocationTracker* previous_;
};

AllocationTracker* active_tracker();

template <class T>
class TrackedBuffer {
public:
    TrackedBuffer(BufferRole role, std::size_t elements, T fill = T{})
        : role_(role), data_(elements, fill), tracker_(active_tracker()) {
        if (tracker_) tracker_->on_allocate(role_, elements, bytes());
    }
    ~TrackedBuffer() { release(); }

    TrackedBuffer(const TrackedBuffer&) = delete;
    TrackedBuffer& operator=(const TrackedBuffer&) = delete;
    TrackedBuffer(TrackedBuffer&& other) noexcept
        : role_(other.role_), data_(std::move(other.data_)), tracker_(std::exchange(other.tracker_, nullptr)) {}
    TrackedBuffer& operator=(TrackedBuffer&& other) noexcept {
        if (this != &other) {
            release();
            role_ = other.role_;
            data_ = std::move(other.data_);
            tracker_ = std::exchange(other.tracker_, nullptr);
        }
        return *this;
    }

    std::size_t size() const { return data_.size(); }
    std::size_t bytes() const { return data_.size() * sizeof(T); }
    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

private:
    void release() {
        if (tracker_) tracker_->on_release(role_, bytes());
        tracker_ = nullptr;
        data_.clear();
        data_.shrink_to_fit();
    }

    BufferRole role_;
    std::vector<T> data_;
    AllocationTracker* tracker_;
};

}  // namespace meatkit
