#pragma once

#include <Eigen/Core>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>

#include "fracint/time_grid.hpp"

namespace fracint {

/// A driving function f(t), either callable everywhere or given as samples
/// F^n = f(t_n) aligned to one grid. Sample-driven and callable-driven
/// algorithms both read values through at_grid_point().
template <typename Scalar>
class SampledFunction {
 public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  using Index = Eigen::Index;

  SampledFunction(std::function<Scalar(Scalar)> fn) : fn_(std::move(fn)) {
    if (!fn_) throw std::invalid_argument("sampled function needs a non-empty callable");
  }

  static SampledFunction from_samples(const TimeGrid<Scalar>& grid, Array samples) {
    if (samples.size() != grid.points().size())
      throw std::invalid_argument("sample count " + std::to_string(samples.size()) +
                                  " does not match grid point count " +
                                  std::to_string(grid.points().size()));
    SampledFunction f;
    f.samples_ = std::move(samples);
    return f;
  }

  bool sample_backed() const { return !fn_; }

  /// Value at grid point n. For sample backing the grid must have the same
  /// point count as the one the samples were taken on.
  Scalar at_grid_point(const TimeGrid<Scalar>& grid, Index n) const {
    if (fn_) return fn_(grid[n]);
    if (samples_.size() != grid.points().size())
      throw std::invalid_argument("samples are aligned to a grid with " +
                                  std::to_string(samples_.size()) + " points, queried with " +
                                  std::to_string(grid.points().size()));
    return samples_[n];
  }

  /// Pointwise evaluation; only available for callable backing.
  Scalar operator()(Scalar t) const {
    if (!fn_) throw std::invalid_argument("sample-backed function cannot be evaluated off-grid");
    return fn_(t);
  }

 private:
  SampledFunction() = default;
  std::function<Scalar(Scalar)> fn_;
  Array samples_;
};

}  // namespace fracint
