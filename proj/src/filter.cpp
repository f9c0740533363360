#include "wristhap/filter.hpp"

#include <stdexcept>

namespace wristhap {

MovingAverageFilter::MovingAverageFilter(std::size_t window) : window_(window), buffer_(window, Vec3::Zero()) {
  if (window == 0) throw std::invalid_argument("MovingAverageFilter: window must be positive");
}

FilteredForce MovingAverageFilter::step(const CompensatedForce& in) {
  if (!in.force.allFinite()) throw std::invalid_argument("MovingAverageFilter: non-finite input");
  buffer_[head_] = in.force;
  head_ = (head_ + 1) % window_;
  if (count_ < window_) ++count_;

  // Oldest to newest, so the summation order only depends on the stream.
  long double sx = 0.0L, sy = 0.0L, sz = 0.0L;
  const std::size_t start = (head_ + window_ - count_) % window_;
  for (std::size_t k = 0; k < count_; ++k) {
    const Vec3& v = buffer_[(start + k) % window_];
    sx += v.x();
    sy += v.y();
    sz += v.z();
  }
  const long double n = static_cast<long double>(count_);
  return {Vec3(static_cast<double>(sx / n), static_cast<double>(sy / n), static_cast<double>(sz / n)),
          in.timestamp};
}

void MovingAverageFilter::reset() {
  head_ = 0;
  count_ = 0;
}

}  // namespace wristhap
