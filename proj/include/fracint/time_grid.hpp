#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace fracint {

/// Strictly increasing grid a = t_0 < t_1 < ... < t_P. Immutable after
/// construction and shareable between threads.
template <typename Scalar>
class TimeGrid {
 public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  using Index = Eigen::Index;

  explicit TimeGrid(Array points) : points_(std::move(points)) {
    if (points_.size() < 2)
      throw std::invalid_argument("time grid needs at least two points (t_0 and t_1)");
    for (Index n = 1; n < points_.size(); ++n)
      if (!(points_[n - 1] < points_[n]))
        throw std::invalid_argument("time grid must be strictly increasing; violated at index " +
                                    std::to_string(n));
  }

  static TimeGrid uniform(Scalar a, Scalar b, Index steps) {
    if (steps < 1) throw std::invalid_argument("uniform grid needs at least one step");
    if (!(a < b)) throw std::invalid_argument("uniform grid needs a < b");
    Array pts(steps + 1);
    for (Index n = 0; n <= steps; ++n)
      pts[n] = a + (b - a) * Scalar(n) / Scalar(steps);
    pts[steps] = b;
    return TimeGrid(std::move(pts));
  }

  Index steps() const { return points_.size() - 1; }  // P
  Scalar origin() const { return points_[0]; }        // a
  Scalar horizon() const { return points_[points_.size() - 1] - points_[0]; }
  Scalar operator[](Index n) const { return points_[n]; }
  /// Step width t_n - t_{n-1} for n in 1..P.
  Scalar dt(Index n) const { return points_[n] - points_[n - 1]; }
  const Array& points() const { return points_; }

 private:
  Array points_;
};

}  // namespace fracint
