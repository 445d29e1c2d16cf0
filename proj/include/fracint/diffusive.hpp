#pragma once

#include <Eigen/Core>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>

#include "fracint/fractional_order.hpp"
#include "fracint/laguerre.hpp"
#include "fracint/sampled_function.hpp"
#include "fracint/text_format.hpp"
#include "fracint/time_grid.hpp"
#include "fracint/transformation.hpp"

namespace fracint {

/// Coefficients of the per-node relaxation ODE
///   d phi / dt = -decay(r) phi + source(r) f(t),
/// decay(r) = psi(r) and source(r) = c_alpha (1 + e^{-r}) psi(r)^{1-alpha}.
template <typename Scalar>
struct PhiCoefficients {
  Scalar decay;
  Scalar source;
};

/// Log-domain form of the same coefficients. The mapped quadrature nodes
/// reach arguments where decay and source overflow or underflow a double,
/// so all stepping math goes through these.
template <typename Scalar>
struct PhiLogCoefficients {
  Scalar log_decay;   // r - e^{-r}; -inf once e^{-r} overflows
  Scalar log_source;  // log c_alpha + log(1+e^{-r}) + (1-alpha)(r - e^{-r})
};

template <typename Scalar>
PhiLogCoefficients<Scalar> phi_rhs_log_coefficients(const FractionalOrder<Scalar>& order,
                                                    Scalar r) {
  const Scalar ld = psi_exponent(r);
  return {ld, std::log(order.c_alpha()) + log1p_exp(-r) + order.one_minus_alpha() * ld};
}

template <typename Scalar>
PhiCoefficients<Scalar> phi_rhs_coefficients(const FractionalOrder<Scalar>& order, Scalar r) {
  const PhiLogCoefficients<Scalar> lc = phi_rhs_log_coefficients(order, r);
  return {std::exp(lc.log_decay), std::exp(lc.log_source)};
}

namespace detail {

// Thresholds beyond which materialized decay values risk overflow and the
// updates switch to their algebraic stiff limits.
inline constexpr double kLogHuge = 600.0;

// Backward Euler: phi' = (phi + h src f) / (1 + h dec), rewritten for the
// stiff range as phi' = e^{-log(h dec)} phi + (src/dec) f.
template <typename Scalar>
Scalar backward_euler_node(const PhiLogCoefficients<Scalar>& c, Scalar phi, Scalar f_n, Scalar h) {
  const Scalar lq = std::log(h) + c.log_decay;
  if (c.log_decay < Scalar(kLogHuge) && lq < Scalar(kLogHuge)) {
    const Scalar q = h * std::exp(c.log_decay);
    return (phi + h * std::exp(c.log_source) * f_n) / (Scalar(1) + q);
  }
  return std::exp(-lq) * phi + std::exp(c.log_source - c.log_decay) * f_n;
}

// Trapezoidal: phi' = [(1 - q) phi + (h/2) src (f_n + f_prev)] / (1 + q),
// q = (h/2) dec. The propagator is evaluated as -1 + 2/(1+q), which is the
// same fraction but stays finite through q = inf.
template <typename Scalar>
Scalar trapezoidal_node(const PhiLogCoefficients<Scalar>& c, Scalar phi, Scalar f_n, Scalar f_prev,
                        Scalar h) {
  const Scalar lq = std::log(h / Scalar(2)) + c.log_decay;
  if (c.log_decay < Scalar(kLogHuge) && lq < Scalar(kLogHuge)) {
    const Scalar q = (h / Scalar(2)) * std::exp(c.log_decay);
    const Scalar prop = Scalar(-1) + Scalar(2) / (Scalar(1) + q);
    return prop * phi + (h / Scalar(2)) * std::exp(c.log_source) / (Scalar(1) + q) * (f_n + f_prev);
  }
  const Scalar prop = Scalar(-1) + Scalar(2) * std::exp(-lq);
  return prop * phi + std::exp(c.log_source - c.log_decay) * (f_n + f_prev);
}

}  // namespace detail

/// One backward-Euler update of a single node value at transform argument r.
template <typename Scalar>
Scalar backward_euler_update(const FractionalOrder<Scalar>& order, Scalar r, Scalar phi,
                             Scalar f_n, Scalar h) {
  if (!(h > Scalar(0))) throw std::domain_error("step size h must be positive");
  return detail::backward_euler_node(phi_rhs_log_coefficients(order, r), phi, f_n, h);
}

/// One trapezoidal update of a single node value at transform argument r.
template <typename Scalar>
Scalar trapezoidal_update(const FractionalOrder<Scalar>& order, Scalar r, Scalar phi, Scalar f_n,
                          Scalar f_prev, Scalar h) {
  if (!(h > Scalar(0))) throw std::domain_error("step size h must be positive");
  return detail::trapezoidal_node(phi_rhs_log_coefficients(order, r), phi, f_n, f_prev, h);
}

/// Closed solution of the node ODE for constant forcing f == 1 after an
/// elapsed time: phi = (source/decay)(1 - e^{-decay elapsed}). Evaluated as
/// source * elapsed * g(decay * elapsed) with g(z) = (1 - e^{-z})/z so the
/// vanishing-decay end of the node range stays finite.
template <typename Scalar>
Scalar phi_exact_constant(const FractionalOrder<Scalar>& order, Scalar r, Scalar elapsed) {
  if (!(elapsed > Scalar(0))) return Scalar(0);
  const PhiLogCoefficients<Scalar> lc = phi_rhs_log_coefficients(order, r);
  const Scalar ldt = lc.log_decay + std::log(elapsed);
  if (ldt > Scalar(36)) return std::exp(lc.log_source - lc.log_decay);  // fully relaxed
  const Scalar z = std::exp(ldt);
  const Scalar g = z < Scalar(1e-280) ? Scalar(1) : -std::expm1(-z) / z;
  return std::exp(lc.log_source + std::log(elapsed)) * g;
}

/// Per-node states of the split diffusive integral: phi[l] lives at
/// r_l = -x_l/(1-alpha) (the fast-decaying branch), phi_tilde[l] at
/// r~_l = x_l/alpha. Both start at zero, matching phi(a, r) = 0.
template <typename Scalar>
struct DiffusiveState {
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  DiffusiveState(Eigen::Index lambda, Scalar t_start)
      : phi(Array::Zero(lambda)), phi_tilde(Array::Zero(lambda)), t_current(t_start) {}
  Array phi;
  Array phi_tilde;
  Scalar t_current;
};

/// Advance every node by one backward-Euler step with sample f_n = f(t_n).
/// Unconditionally stable for any h > 0.
template <typename Scalar>
void step_backward_euler(DiffusiveState<Scalar>& state, const FractionalOrder<Scalar>& order,
                         const QuadratureRule<Scalar>& rule, Scalar f_n, Scalar h) {
  if (!(h > Scalar(0))) throw std::domain_error("step size h must be positive");
  if (state.phi.size() != rule.size())
    throw std::invalid_argument("diffusive state length does not match rule size");
  for (Eigen::Index l = 0; l < rule.size(); ++l) {
    const Scalar x = rule.node(l);
    state.phi[l] = detail::backward_euler_node(
        phi_rhs_log_coefficients(order, -x / order.one_minus_alpha()), state.phi[l], f_n, h);
    state.phi_tilde[l] = detail::backward_euler_node(
        phi_rhs_log_coefficients(order, x / order.alpha()), state.phi_tilde[l], f_n, h);
  }
  state.t_current += h;
}

/// Advance every node by one trapezoidal step with samples f_n = f(t_n) and
/// f_prev = f(t_{n-1}). Second-order accurate, A-stable.
template <typename Scalar>
void step_trapezoidal(DiffusiveState<Scalar>& state, const FractionalOrder<Scalar>& order,
                      const QuadratureRule<Scalar>& rule, Scalar f_n, Scalar f_prev, Scalar h) {
  if (!(h > Scalar(0))) throw std::domain_error("step size h must be positive");
  if (state.phi.size() != rule.size())
    throw std::invalid_argument("diffusive state length does not match rule size");
  for (Eigen::Index l = 0; l < rule.size(); ++l) {
    const Scalar x = rule.node(l);
    state.phi[l] = detail::trapezoidal_node(
        phi_rhs_log_coefficients(order, -x / order.one_minus_alpha()), state.phi[l], f_n, f_prev,
        h);
    state.phi_tilde[l] = detail::trapezoidal_node(
        phi_rhs_log_coefficients(order, x / order.alpha()), state.phi_tilde[l], f_n, f_prev, h);
  }
  state.t_current += h;
}

/// Assembled quadrature value
///   sum_l w_l e^{x_l} [ phi_l / (1-alpha) + phi~_l / alpha ].
/// The factor w_l e^{x_l} is computed as exp(log w_l + x_l) because the two
/// factors individually leave the double range long before their product
/// does. With lambda_star set, the phi branch keeps only the leading
/// lambda_star summands; the phi~ branch always uses all of them.
template <typename Scalar>
Scalar assemble(const DiffusiveState<Scalar>& state, const FractionalOrder<Scalar>& order,
                const QuadratureRule<Scalar>& rule) {
  if (state.phi.size() != rule.size())
    throw std::invalid_argument("diffusive state length does not match rule size");
  const Eigen::Index keep = rule.lambda_star() ? *rule.lambda_star() : rule.size();
  Scalar total = Scalar(0);
  for (Eigen::Index l = 0; l < rule.size(); ++l) {
    const Scalar factor = std::exp(std::log(rule.weight(l)) + rule.node(l));
    Scalar branch = state.phi_tilde[l] / order.alpha();
    if (l < keep) branch += state.phi[l] / order.one_minus_alpha();
    total += factor * branch;
  }
  return total;
}

enum class Stepper { backward_euler, trapezoidal };

/// Full march: build the rule, zero-initialize the split states, advance
/// through the grid with the chosen stepper at per-step width t_n - t_{n-1},
/// and assemble the value after every step. O(Lambda) memory, O(Lambda P)
/// time.
///
/// In trapezoidal mode the first two steps use the backward-Euler update.
/// The trapezoidal propagator (1-q)/(1+q) has modulus near one at strongly
/// stiff nodes, so the jump from the zero initial state to an active source
/// otherwise oscillates for many steps and saturates the achievable
/// accuracy; two damped steps remove that transient and leave the global
/// second-order behaviour intact.
template <typename Scalar>
Eigen::Array<Scalar, Eigen::Dynamic, 1> gl_integrate(
    const FractionalOrder<Scalar>& order, const SampledFunction<Scalar>& f,
    const TimeGrid<Scalar>& grid, Eigen::Index lambda, Stepper stepper,
    std::optional<Eigen::Index> lambda_star = std::nullopt) {
  QuadratureRule<Scalar> rule = laguerre_rule<Scalar>(lambda);
  if (lambda_star) rule = rule.with_lambda_star(*lambda_star);

  DiffusiveState<Scalar> state(lambda, grid.origin());
  Eigen::Array<Scalar, Eigen::Dynamic, 1> out(grid.steps());
  for (Eigen::Index n = 1; n <= grid.steps(); ++n) {
    const Scalar h = grid.dt(n);
    const Scalar f_n = f.at_grid_point(grid, n);
    if (stepper == Stepper::backward_euler || n <= 2) {
      step_backward_euler(state, order, rule, f_n, h);
    } else {
      step_trapezoidal(state, order, rule, f_n, f.at_grid_point(grid, n - 1), h);
    }
    out[n - 1] = assemble(state, order, rule);
  }
  return out;
}

/// State snapshot export for restart: current time then one
/// "l phi phi_tilde" record per node, 17 significant digits.
template <typename Scalar>
void write_state(std::ostream& out, const DiffusiveState<Scalar>& state) {
  out << "fracint-diffusive-state v1\n";
  out << "t " << format_real(state.t_current) << "\n";
  out << "lambda " << state.phi.size() << "\n";
  for (Eigen::Index l = 0; l < state.phi.size(); ++l)
    out << (l + 1) << " " << format_real(state.phi[l]) << " " << format_real(state.phi_tilde[l])
        << "\n";
}

template <typename Scalar>
DiffusiveState<Scalar> read_state(std::istream& in) {
  std::string magic, version, key, value;
  if (!(in >> magic >> version) || magic != "fracint-diffusive-state" || version != "v1")
    throw std::runtime_error("state file: bad header");
  if (!(in >> key >> value) || key != "t") throw std::runtime_error("state file: missing t");
  const Scalar t = Scalar(parse_real(value));
  if (!(in >> key >> value) || key != "lambda")
    throw std::runtime_error("state file: missing lambda");
  const Eigen::Index lambda = parse_integer(value);
  DiffusiveState<Scalar> state(lambda, t);
  for (Eigen::Index l = 0; l < lambda; ++l) {
    std::string idx, ps, qs;
    if (!(in >> idx >> ps >> qs)) throw std::runtime_error("state file: truncated records");
    if (parse_integer(idx) != l + 1) throw std::runtime_error("state file: records out of order");
    state.phi[l] = Scalar(parse_real(ps));
    state.phi_tilde[l] = Scalar(parse_real(qs));
  }
  return state;
}

}  // namespace fracint
