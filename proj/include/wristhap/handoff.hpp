#pragma once
// Thread handoff primitives used between the control loop and its
// producers/consumers.

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <utility>

namespace wristhap {

/// Holds the most recent value written by a producer. Readers never wait on
/// a producer; they see either the previous or the new value.
template <class T>
class LatestValueCell {
 public:
  struct Snapshot {
    T value;
    std::uint64_t version;
  };

  void write(T value) {
    std::lock_guard lock(mutex_);
    value_ = std::move(value);
    ++version_;
  }

  std::optional<Snapshot> read() const {
    std::lock_guard lock(mutex_);
    if (!value_) return std::nullopt;
    return Snapshot{*value_, version_};
  }

  std::uint64_t version() const {
    std::lock_guard lock(mutex_);
    return version_;
  }

 private:
  mutable std::mutex mutex_;
  std::optional<T> value_;
  std::uint64_t version_ = 0;
};

/// Bounded FIFO that evicts the oldest element when full, so push() never
/// waits for the consumer.
template <class T>
class DropOldestQueue {
 public:
  explicit DropOldestQueue(std::size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

  /// Returns false when an element had to be evicted to make room.
  bool push(T value) {
    bool dropped = false;
    {
      std::lock_guard lock(mutex_);
      if (closed_) {
        ++drops_;
        return false;
      }
      if (items_.size() >= capacity_) {
        items_.pop_front();
        ++drops_;
        dropped = true;
      }
      items_.push_back(std::move(value));
    }
    cv_.notify_one();
    return !dropped;
  }

  std::optional<T> try_pop() {
    std::lock_guard lock(mutex_);
    if (items_.empty()) return std::nullopt;
    T v = std::move(items_.front());
    items_.pop_front();
    return v;
  }

  template <class Rep, class Period>
  std::optional<T> pop_for(std::chrono::duration<Rep, Period> timeout) {
    std::unique_lock lock(mutex_);
    cv_.wait_for(lock, timeout, [&] { return !items_.empty() || closed_; });
    if (items_.empty()) return std::nullopt;
    T v = std::move(items_.front());
    items_.pop_front();
    return v;
  }

  void close() {
    {
      std::lock_guard lock(mutex_);
      closed_ = true;
    }
    cv_.notify_all();
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return items_.size();
  }
  std::uint64_t drops() const {
    std::lock_guard lock(mutex_);
    return drops_;
  }
  std::size_t capacity() const { return capacity_; }

 private:
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<T> items_;
  std::size_t capacity_;
  std::uint64_t drops_ = 0;
  bool closed_ = false;
};

}  // namespace wristhap
