#pragma once

#include <cstddef>
#include <vector>

#include "wristhap/compensation.hpp"

namespace wristhap {

struct FilteredForce {
  Vec3 force = Vec3::Zero();
  double timestamp = 0.0;
};

/// Per-axis moving average over the last `window` compensated samples.
/// During warm-up the mean is taken over the samples seen so far.
///
/// The mean is recomputed from the buffer each step with extended-precision
/// accumulation, so a constant input is reproduced exactly and no running-sum
/// drift builds up over long sessions.
class MovingAverageFilter {
 public:
  static constexpr std::size_t kDefaultWindow = 10;

  explicit MovingAverageFilter(std::size_t window = kDefaultWindow);

  FilteredForce step(const CompensatedForce& in);
  void reset();

  std::size_t window() const { return window_; }
  std::size_t size() const { return count_; }

 private:
  std::size_t window_;
  std::vector<Vec3> buffer_;
  std::size_t head_ = 0;
  std::size_t count_ = 0;
};

}  // namespace wristhap
