#pragma once

#include <cmath>

namespace fracint {

/// Exponent of the diffusive transformation, r - e^{-r}.
///
/// Computing the exponent first and exponentiating once keeps the
/// transformation well behaved over the whole real line: for r far below
/// zero e^{-r} saturates to +inf, the exponent to -inf, and psi() to an
/// exact 0, matching the analytic limit.
template <typename Scalar>
Scalar psi_exponent(Scalar r) {
  return r - std::exp(-r);
}

/// The transformation psi(r) = exp(r - e^{-r}): strictly increasing,
/// positive, with psi(r) -> 0 as r -> -inf and psi(r) -> +inf as r -> +inf.
/// Overflow for very large r saturates to +inf.
template <typename Scalar>
Scalar psi(Scalar r) {
  return std::exp(psi_exponent(r));
}

/// Derivative psi'(r) = (1 + e^{-r}) psi(r).
template <typename Scalar>
Scalar psi_prime(Scalar r) {
  return (Scalar(1) + std::exp(-r)) * psi(r);
}

/// log(1 + e^u) evaluated without overflow for any u.
/// This is the logarithm of the (1 + e^{-r}) factor of psi' at u = -r.
template <typename Scalar>
Scalar log1p_exp(Scalar u) {
  return u > Scalar(0) ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u));
}

}  // namespace fracint
