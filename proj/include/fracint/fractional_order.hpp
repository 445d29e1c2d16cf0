#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace fracint {

/// Validated fractional order alpha in the open interval (0,1) together with
/// the constant c_alpha = sin(pi alpha)/pi that normalizes the diffusive
/// representation.
template <typename Scalar>
class FractionalOrder {
 public:
  explicit FractionalOrder(Scalar alpha) : alpha_(alpha) {
    if (!(alpha > Scalar(0)) || !(alpha < Scalar(1)))
      throw std::domain_error("fractional order alpha must lie in the open interval (0, 1), got " +
                              std::to_string(static_cast<double>(alpha)));
    c_alpha_ = std::sin(pi() * alpha) / pi();
  }

  Scalar alpha() const { return alpha_; }
  Scalar c_alpha() const { return c_alpha_; }
  Scalar one_minus_alpha() const { return Scalar(1) - alpha_; }

  static constexpr Scalar pi() { return Scalar(3.141592653589793238462643383279502884L); }

 private:
  Scalar alpha_;
  Scalar c_alpha_;
};

template <typename Scalar>
FractionalOrder<Scalar> make_order(Scalar alpha) {
  return FractionalOrder<Scalar>(alpha);
}

}  // namespace fracint
