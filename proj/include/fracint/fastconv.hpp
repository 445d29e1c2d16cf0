#pragma once

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>
#include <string>

#include "fracint/expsum.hpp"
#include "fracint/fractional_order.hpp"
#include "fracint/sampled_function.hpp"
#include "fracint/time_grid.hpp"

namespace fracint {

/// Instrumentation for the complexity contracts: term_ops counts one unit
/// per kernel-term operation (per (n,j) pair for the direct paths, per
/// (n,l) pair for the recursion), state_size the peak live history length.
struct ConvolutionStats {
  unsigned long long term_ops = 0;
  Eigen::Index state_size = 0;
};

/// Exact local step weight z_nn = dt^alpha / Gamma(alpha+1), the integral of
/// c_alpha K over the newest interval where the exponential sum is not
/// certified.
template <typename Scalar>
Scalar local_step_weight(const FractionalOrder<Scalar>& order, Scalar dt) {
  return std::pow(dt, order.alpha()) / std::tgamma(order.alpha() + Scalar(1));
}

/// Exact interval weight z_nj = [(t_n - t_{j-1})^alpha - (t_n - t_j)^alpha] / Gamma(alpha+1)
/// expressed through the two lags lag1 = t_n - t_{j-1} > lag0 = t_n - t_j.
template <typename Scalar>
Scalar exact_interval_weight(const FractionalOrder<Scalar>& order, Scalar lag0, Scalar lag1) {
  return (std::pow(lag1, order.alpha()) - std::pow(lag0, order.alpha())) /
         std::tgamma(order.alpha() + Scalar(1));
}

/// Running per-term history integrals of the recursion. After absorbing the
/// sample at time t_k, phi[l] holds
///   c_alpha w_l int_{t_0}^{t_k} e^{-beta_l (t_k - tau)} F~(tau) dtau,
/// so producing the value at a later time only needs one decay factor per
/// term. last_index counts completed steps.
template <typename Scalar>
struct HistoryState {
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  explicit HistoryState(Eigen::Index lambda) : phi(Array::Zero(lambda)), last_index(0) {}
  Array phi;
  Eigen::Index last_index;
};

namespace detail {

// (1 - e^{-beta dt}) / beta without cancellation; beta dt -> 0 tends to dt,
// which also covers underflowed beta = 0 terms.
template <typename Scalar>
Scalar one_minus_exp_over(Scalar beta, Scalar dt) {
  const Scalar x = beta * dt;
  return x > Scalar(0) ? -std::expm1(-x) / beta : dt;
}

}  // namespace detail

/// One recursion update, overwriting the state in place: for every term l
///   phi_l <- e^{-beta_l dt} phi_l + c_alpha w_l (1 - e^{-beta_l dt}) / beta_l * F_prev
/// where dt is the width of the interval just completed and F_prev the
/// piecewise-constant sample on it (its right-endpoint value).
template <typename Scalar>
void step_history(HistoryState<Scalar>& state, const ExpSumKernel<Scalar>& kernel,
                  const FractionalOrder<Scalar>& order, Scalar F_prev, Scalar dt) {
  if (!(dt > Scalar(0)) || dt < kernel.delta())
    throw std::invalid_argument("history step dt = " + std::to_string(static_cast<double>(dt)) +
                                " violates dt >= kernel delta = " +
                                std::to_string(static_cast<double>(kernel.delta())));
  if (state.phi.size() != kernel.size())
    throw std::invalid_argument("history state length does not match kernel term count");
  const Scalar c = order.c_alpha();
  for (Eigen::Index l = 0; l < kernel.size(); ++l) {
    const Scalar beta = kernel.exponent(l);
    state.phi[l] = std::exp(-beta * dt) * state.phi[l] +
                   c * kernel.weight(l) * detail::one_minus_exp_over(beta, dt) * F_prev;
  }
  ++state.last_index;
}

/// Streaming evaluator: feed (t_n, F^n) pairs in time order, get the
/// approximate integral value at each t_n back, with O(Lambda) live memory.
template <typename Scalar>
class ConvolutionStream {
 public:
  ConvolutionStream(ExpSumKernel<Scalar> kernel, FractionalOrder<Scalar> order, Scalar t_start)
      : kernel_(std::move(kernel)), order_(order), state_(kernel_.size()), t_prev_(t_start) {}

  /// Value of the integral at t from the exact local weight on (t_prev, t]
  /// plus the decayed history; the sample is then absorbed into the state.
  Scalar push(Scalar t, Scalar F, ConvolutionStats* stats = nullptr) {
    const Scalar dt = t - t_prev_;
    if (!(dt > Scalar(0)) || dt < kernel_.delta())
      throw std::invalid_argument(
          "stream step " + std::to_string(static_cast<double>(state_.last_index + 1)) + " has dt = " +
          std::to_string(static_cast<double>(dt)) + " below the kernel validity delta = " +
          std::to_string(static_cast<double>(kernel_.delta())));
    Scalar history = Scalar(0);
    for (Eigen::Index l = 0; l < kernel_.size(); ++l)
      history += std::exp(-kernel_.exponent(l) * dt) * state_.phi[l];
    const Scalar value = local_step_weight(order_, dt) * F + history;
    step_history(state_, kernel_, order_, F, dt);
    t_prev_ = t;
    if (stats) {
      stats->term_ops += static_cast<unsigned long long>(kernel_.size());
      stats->state_size = std::max(stats->state_size, state_.phi.size());
    }
    return value;
  }

  const HistoryState<Scalar>& state() const { return state_; }

 private:
  ExpSumKernel<Scalar> kernel_;
  FractionalOrder<Scalar> order_;
  HistoryState<Scalar> state_;
  Scalar t_prev_;
};

/// O(P^2) reference: I(t_n) = sum_{j<=n} z_nj F^j with every weight taken
/// from the exact kernel c_alpha K(t) = t^{alpha-1} / Gamma(alpha).
template <typename Scalar>
Eigen::Array<Scalar, Eigen::Dynamic, 1> direct_convolution(const FractionalOrder<Scalar>& order,
                                                           const TimeGrid<Scalar>& grid,
                                                           const SampledFunction<Scalar>& f,
                                                           ConvolutionStats* stats = nullptr) {
  const Eigen::Index P = grid.steps();
  Eigen::Array<Scalar, Eigen::Dynamic, 1> out(P);
  for (Eigen::Index n = 1; n <= P; ++n) {
    Scalar acc = Scalar(0);
    for (Eigen::Index j = 1; j <= n; ++j) {
      acc += exact_interval_weight(order, grid[n] - grid[j], grid[n] - grid[j - 1]) *
             f.at_grid_point(grid, j);
      if (stats) ++stats->term_ops;
    }
    out[n - 1] = acc;
    if (stats) stats->state_size = std::max(stats->state_size, n);  // all samples stay live
  }
  return out;
}

/// O(Lambda P^2) reference used to pin the recursion: history weights for
/// j < n computed term by term from the exponential sum,
///   K_lnj = c_alpha w_l (e^{-beta_l (t_n - t_j)} - e^{-beta_l (t_n - t_{j-1})}) / beta_l,
/// with the local weight z_nn kept exact.
template <typename Scalar>
Eigen::Array<Scalar, Eigen::Dynamic, 1> expsum_direct_convolution(
    const ExpSumKernel<Scalar>& kernel, const FractionalOrder<Scalar>& order,
    const TimeGrid<Scalar>& grid, const SampledFunction<Scalar>& f,
    ConvolutionStats* stats = nullptr) {
  const Eigen::Index P = grid.steps();
  for (Eigen::Index n = 1; n <= P; ++n)
    if (grid.dt(n) < kernel.delta())
      throw std::invalid_argument("grid step " + std::to_string(n) +
                                  " is smaller than the kernel validity delta");
  const Scalar c = order.c_alpha();
  Eigen::Array<Scalar, Eigen::Dynamic, 1> out(P);
  for (Eigen::Index n = 1; n <= P; ++n) {
    Scalar acc = local_step_weight(order, grid.dt(n)) * f.at_grid_point(grid, n);
    for (Eigen::Index j = 1; j < n; ++j) {
      const Scalar lag0 = grid[n] - grid[j];
      const Scalar Fj = f.at_grid_point(grid, j);
      Scalar knj = Scalar(0);
      for (Eigen::Index l = 0; l < kernel.size(); ++l) {
        const Scalar beta = kernel.exponent(l);
        knj += kernel.weight(l) * std::exp(-beta * lag0) *
               detail::one_minus_exp_over(beta, grid.dt(j));
        if (stats) ++stats->term_ops;
      }
      acc += c * knj * Fj;
    }
    out[n - 1] = acc;
  }
  return out;
}

/// O(Lambda P) evaluation via the exponential recursion; agrees with
/// expsum_direct_convolution up to round-off on any admissible grid.
template <typename Scalar>
Eigen::Array<Scalar, Eigen::Dynamic, 1> fast_convolution(const ExpSumKernel<Scalar>& kernel,
                                                         const FractionalOrder<Scalar>& order,
                                                         const TimeGrid<Scalar>& grid,
                                                         const SampledFunction<Scalar>& f,
                                                         ConvolutionStats* stats = nullptr) {
  const Eigen::Index P = grid.steps();
  for (Eigen::Index n = 1; n <= P; ++n)
    if (grid.dt(n) < kernel.delta())
      throw std::invalid_argument("grid step " + std::to_string(n) +
                                  " is smaller than the kernel validity delta");
  ConvolutionStream<Scalar> stream(kernel, order, grid.origin());
  Eigen::Array<Scalar, Eigen::Dynamic, 1> out(P);
  for (Eigen::Index n = 1; n <= P; ++n)
    out[n - 1] = stream.push(grid[n], f.at_grid_point(grid, n), stats);
  return out;
}

}  // namespace fracint
