#pragma once

#include <atomic>
#include <cstddef>
#include <new>
#include <vector>

namespace hermite {

/// Process-wide accounting of auxiliary (non-field) buffers owned by the
/// pipeline: the two-pass coefficient field and per-worker scratch.
class AuxMemory {
 public:
  static std::size_t current() { return current_.load(std::memory_order_relaxed); }
  static std::size_t peak() { return peak_.load(std::memory_order_relaxed); }

  /// Restarts peak tracking from the current footprint.
  static void reset_peak() { peak_.store(current(), std::memory_order_relaxed); }

  static void on_allocate(std::size_t bytes) {
    const std::size_t now = current_.fetch_add(bytes, std::memory_order_relaxed) + bytes;
    std::size_t prev = peak_.load(std::memory_order_relaxed);
    while (now > prev && !peak_.compare_exchange_weak(prev, now, std::memory_order_relaxed)) {
    }
  }
  static void on_deallocate(std::size_t bytes) {
    current_.fetch_sub(bytes, std::memory_order_relaxed);
  }

 private:
  static inline std::atomic<std::size_t> current_{0};
  static inline std::atomic<std::size_t> peak_{0};
};

template <typename T>
struct TrackedAllocator {
  using value_type = T;

  TrackedAllocator() = default;
  template <typename U>
  TrackedAllocator(const TrackedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    T* p = std::allocator<T>{}.allocate(n);
    AuxMemory::on_allocate(n * sizeof(T));
    return p;
  }
  void deallocate(T* p, std::size_t n) noexcept {
    AuxMemory::on_deallocate(n * sizeof(T));
    std::allocator<T>{}.deallocate(p, n);
  }

  template <typename U>
  friend bool operator==(const TrackedAllocator&, const TrackedAllocator<U>&) noexcept {
    return true;
  }
};

template <typename T>
using TrackedVector = std::vector<T, TrackedAllocator<T>>;

}  // namespace hermite
