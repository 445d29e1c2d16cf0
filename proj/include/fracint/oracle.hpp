#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracint/fractional_order.hpp"

namespace fracint {

/// Power function f(tau) = (tau - a)^p with p >= 0, the family with a
/// closed-form fractional integral.
template <typename Scalar>
struct MonomialSpec {
  MonomialSpec(Scalar p_, Scalar a_) : p(p_), a(a_) {
    if (!(p >= Scalar(0))) throw std::domain_error("monomial exponent p must be non-negative");
  }
  Scalar p;
  Scalar a;
};

/// Closed form: I_a^alpha (.-a)^p (t) = Gamma(p+1)/Gamma(p+1+alpha) (t-a)^{p+alpha}.
template <typename Scalar>
Scalar rl_monomial(const FractionalOrder<Scalar>& order, const MonomialSpec<Scalar>& spec,
                   Scalar t) {
  if (t < spec.a) throw std::domain_error("monomial integral queried left of its origin");
  return std::tgamma(spec.p + Scalar(1)) / std::tgamma(spec.p + Scalar(1) + order.alpha()) *
         std::pow(t - spec.a, spec.p + order.alpha());
}

/// Refinement failed to reach the requested tolerance; carries the last two
/// panel-quadrature estimates.
class AccuracyError : public std::runtime_error {
 public:
  AccuracyError(double last, double previous)
      : std::runtime_error("quadrature refinement did not converge: last estimate " +
                           std::to_string(last) + ", previous " + std::to_string(previous)),
        last_estimate_(last),
        previous_estimate_(previous) {}
  double last_estimate() const { return last_estimate_; }
  double previous_estimate() const { return previous_estimate_; }

 private:
  double last_estimate_;
  double previous_estimate_;
};

namespace detail {

// 16-point Gauss-Legendre half rule on [-1,1] (symmetric halves).
inline constexpr double kGl16Nodes[8] = {
    0.095012509837637440, 0.28160355077925891, 0.45801677765722739, 0.61787624440264375,
    0.75540440835500303,  0.86563120238783174, 0.94457502307323258, 0.98940093499164993};
inline constexpr double kGl16Weights[8] = {
    0.18945061045506850, 0.18260341504492359, 0.16915651939500254, 0.14959598881657673,
    0.12462897125553387, 0.095158511682492785, 0.062253523938647893, 0.027152459411754095};

template <typename Scalar, typename F>
Scalar panel_gauss16(F&& g, Scalar a, Scalar b) {
  const Scalar center = (a + b) / Scalar(2);
  const Scalar half = (b - a) / Scalar(2);
  Scalar sum = Scalar(0);
  for (int i = 0; i < 8; ++i) {
    const Scalar dx = half * Scalar(kGl16Nodes[i]);
    sum += Scalar(kGl16Weights[i]) * (g(center - dx) + g(center + dx));
  }
  return sum * half;
}

}  // namespace detail

/// Singularity-regularized numerical reference for I_a^alpha f(t).
///
/// The substitution u = (t - tau)^alpha turns the integral into
///   1/Gamma(alpha+1) int_0^{(t-a)^alpha} f(t - u^{1/alpha}) du
/// with a bounded integrand. Each refinement level integrates a
/// dyadically-graded panel partition of [0, U] with a fixed 16-point Gauss
/// rule per panel; grading toward both endpoints keeps the scheme
/// converging even when f has an algebraic endpoint singularity (as the
/// non-integer monomials do at tau = a). Refinement stops once successive
/// estimates differ by less than tol; after 20 refinements an AccuracyError
/// carrying the last two estimates is thrown.
template <typename Scalar, typename F>
Scalar rl_numeric(const FractionalOrder<Scalar>& order, F&& f, Scalar a, Scalar t, Scalar tol) {
  if (!(t > a)) throw std::domain_error("rl_numeric needs t > a");
  if (!(tol > Scalar(0))) throw std::domain_error("rl_numeric needs a positive tolerance");

  const Scalar alpha = order.alpha();
  const Scalar upper = std::pow(t - a, alpha);
  const auto integrand = [&](Scalar u) { return f(t - std::pow(u, Scalar(1) / alpha)); };

  const Scalar norm = std::tgamma(alpha + Scalar(1));
  Scalar previous = Scalar(0);
  Scalar current = Scalar(0);
  constexpr int kMaxRefinements = 20;
  for (int level = 0; level <= kMaxRefinements; ++level) {
    const int depth = 8 + 3 * level;   // dyadic grading levels per endpoint
    const int splits = level + 1;      // uniform subpanels per graded cell
    std::vector<Scalar> cuts;
    cuts.reserve(2 * depth + 2);
    cuts.push_back(Scalar(0));
    for (int k = depth; k >= 1; --k) cuts.push_back(upper * std::ldexp(Scalar(1), -k));
    for (int k = 2; k <= depth; ++k)
      cuts.push_back(upper * (Scalar(1) - std::ldexp(Scalar(1), -k)));
    cuts.push_back(upper);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    Scalar sum = Scalar(0);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const Scalar lo = cuts[i];
      const Scalar width = cuts[i + 1] - cuts[i];
      for (int m = 0; m < splits; ++m)
        sum += detail::panel_gauss16(integrand, lo + width * Scalar(m) / Scalar(splits),
                                     lo + width * Scalar(m + 1) / Scalar(splits));
    }
    current = sum / norm;
    if (level > 0 && std::abs(current - previous) < tol) return current;
    if (level == kMaxRefinements)
      throw AccuracyError(static_cast<double>(current), static_cast<double>(previous));
    previous = current;
  }
  return current;  // unreachable
}

}  // namespace fracint
