#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fracint/fractional_order.hpp"
#include "fracint/text_format.hpp"
#include "fracint/transformation.hpp"

namespace fracint {

/// Accuracy budget for the truncated trapezoidal kernel approximation:
/// target relative accuracy epsilon on times t in [delta, horizon].
/// C1, C2, beta_exp and theta are the tail-bound constants; the bounds the
/// parameter selection solves are
///   C1 exp((alpha-1) e^{Mh})            <= epsilon   (left tail)
///   C2 delta^{-beta_exp}
///      exp(-theta delta e^{Nh-1})       <= epsilon   (right tail)
template <typename Scalar>
struct TruncationBudget {
  Scalar epsilon;
  Scalar delta;
  Scalar horizon = Scalar(1);
  Scalar C1 = Scalar(1);
  Scalar C2 = Scalar(1);
  Scalar beta_exp = Scalar(0);
  Scalar theta = Scalar(1);
};

template <typename Scalar>
struct TrapezoidParams {
  Scalar h;
  Eigen::Index M;
  Eigen::Index N;
};

/// Finite exponential sum K(t) ~= sum_l w_l e^{-beta_l t} for the diffusive
/// kernel (without the c_alpha factor), built by the trapezoidal rule with
/// step h over term indices l = -M..N. Terms are stored flat from the most
/// negative l upward. Immutable after construction.
///
/// For strongly negative l h the true beta_l = psi(l h) falls below the
/// smallest representable double; such terms come out as exact zeros rather
/// than failing the build.
template <typename Scalar>
class ExpSumKernel {
 public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  using Index = Eigen::Index;

  ExpSumKernel(FractionalOrder<Scalar> order, Scalar h, Index M, Index N, Array weights,
               Array exponents, Scalar delta, Scalar horizon, Scalar epsilon)
      : order_(order),
        h_(h),
        M_(M),
        N_(N),
        weights_(std::move(weights)),
        exponents_(std::move(exponents)),
        delta_(delta),
        horizon_(horizon),
        epsilon_(epsilon) {
    if (weights_.size() != M_ + 1 + N_ || exponents_.size() != weights_.size())
      throw std::invalid_argument("kernel term arrays must have M+1+N entries");
  }

  Index size() const { return weights_.size(); }  // Lambda = M+1+N
  Index term_index(Index i) const { return i - M_; }
  Scalar weight(Index i) const { return weights_[i]; }
  Scalar exponent(Index i) const { return exponents_[i]; }
  const Array& weights() const { return weights_; }
  const Array& exponents() const { return exponents_; }

  const FractionalOrder<Scalar>& order() const { return order_; }
  Scalar h() const { return h_; }
  Index M() const { return M_; }
  Index N() const { return N_; }
  Scalar delta() const { return delta_; }
  Scalar horizon() const { return horizon_; }
  Scalar epsilon() const { return epsilon_; }

 private:
  FractionalOrder<Scalar> order_;
  Scalar h_;
  Index M_, N_;
  Array weights_, exponents_;
  Scalar delta_, horizon_, epsilon_;
};

/// Build the trapezoidal exponential sum with terms l = -M..N:
///   beta_l = exp(l h - e^{-l h}),  w_l = h (1 + e^{-l h}) beta_l^{1-alpha}.
/// delta/horizon/epsilon are validity metadata carried along for certify()
/// and file export; a raw build records no validity window (delta = 0).
template <typename Scalar>
ExpSumKernel<Scalar> build_expsum(const FractionalOrder<Scalar>& order, Scalar h, Eigen::Index M,
                                  Eigen::Index N, Scalar delta = Scalar(0),
                                  Scalar horizon = Scalar(1), Scalar epsilon = Scalar(0)) {
  if (!(h > Scalar(0))) throw std::domain_error("trapezoidal step h must be positive");
  if (M < 0 || N < 0) throw std::domain_error("term counts M and N must be non-negative");
  using Array = typename ExpSumKernel<Scalar>::Array;
  const Eigen::Index count = M + 1 + N;
  Array w(count), beta(count);
  for (Eigen::Index i = 0; i < count; ++i) {
    const Scalar lh = Scalar(i - M) * h;
    const Scalar b = psi(lh);
    beta[i] = b;
    w[i] = b > Scalar(0) ? h * (Scalar(1) + std::exp(-lh)) * std::pow(b, Scalar(1) - order.alpha())
                         : Scalar(0);
  }
  return ExpSumKernel<Scalar>(order, h, M, N, std::move(w), std::move(beta), delta, horizon,
                              epsilon);
}

/// Evaluate sum_l w_l e^{-beta_l t}, summing from the largest exponent down
/// so the smallest contributions accumulate first.
template <typename Scalar>
Scalar eval_expsum(const ExpSumKernel<Scalar>& kernel, Scalar t) {
  if (!(t > Scalar(0))) throw std::domain_error("kernel is singular at t <= 0");
  Scalar s = Scalar(0);
  for (Eigen::Index i = kernel.size() - 1; i >= 0; --i)
    s += kernel.weight(i) * std::exp(-kernel.exponent(i) * t);
  return s;
}

/// Closed form of the kernel the sum approximates: K(t) = Gamma(1-alpha) t^{alpha-1}.
/// Note c_alpha K(t) = t^{alpha-1} / Gamma(alpha) by the reflection formula.
template <typename Scalar>
Scalar eval_kernel_reference(const FractionalOrder<Scalar>& order, Scalar t) {
  if (!(t > Scalar(0))) throw std::domain_error("kernel is singular at t <= 0");
  return std::tgamma(Scalar(1) - order.alpha()) * std::pow(t, order.alpha() - Scalar(1));
}

/// Choose (h, M, N) so that both tail bounds of the budget hold on
/// [delta, horizon] with horizon <= 1 (rescale longer spans first; see
/// make_kernel). h ~ 2 pi / log(1/epsilon) balances the trapezoidal
/// discretization error, which decays like exp(-c/h), against the number of
/// retained terms; certify() is the empirical backstop.
template <typename Scalar>
TrapezoidParams<Scalar> select_parameters(const FractionalOrder<Scalar>& order,
                                          const TruncationBudget<Scalar>& budget) {
  if (!(budget.epsilon > Scalar(0)) || !(budget.epsilon < Scalar(1)))
    throw std::domain_error("budget epsilon must lie in (0, 1)");
  if (!(budget.delta > Scalar(0)) || !(budget.delta < budget.horizon))
    throw std::domain_error("budget needs 0 < delta < horizon");
  if (budget.horizon > Scalar(1) + Scalar(1e-12))
    throw std::domain_error("parameter selection expects horizon <= 1; rescale first");
  if (!(budget.theta > Scalar(0)) || budget.theta > Scalar(1))
    throw std::domain_error("budget theta must lie in (0, 1]");
  if (!(budget.C1 > Scalar(0)) || !(budget.C2 > Scalar(0)))
    throw std::domain_error("budget constants C1 and C2 must be positive");

  const Scalar alpha = order.alpha();
  const Scalar one_m = Scalar(1) - alpha;

  Scalar h = Scalar(2) * FractionalOrder<Scalar>::pi() /
             std::log(std::exp(Scalar(1)) + Scalar(1) / budget.epsilon);
  h = std::clamp(h, Scalar(0.1), Scalar(1));

  // Left tail: C1 exp(-(1-alpha) e^{Mh}) <= eps, plus the validity threshold
  // of the bound itself (log(alpha/(1-alpha)) when alpha > 1/2).
  Scalar mh_min = alpha > Scalar(0.5) ? std::log(alpha / one_m) : Scalar(0);
  const Scalar A = std::log(budget.C1 / budget.epsilon);
  if (A > Scalar(0)) mh_min = std::max(mh_min, std::log(A / one_m));
  mh_min = std::max(mh_min, Scalar(0));

  // Right tail: C2 delta^{-beta} exp(-theta delta e^{Nh-1}) <= eps at the
  // worst time t = delta, plus the bound's own threshold Nh >= 1 + log((1-alpha)/t).
  Scalar nh_min = Scalar(1) + std::log(one_m / budget.delta);
  const Scalar B =
      std::log(budget.C2 / budget.epsilon) - budget.beta_exp * std::log(budget.delta);
  if (B > Scalar(0)) nh_min = std::max(nh_min, Scalar(1) + std::log(B / (budget.theta * budget.delta)));
  nh_min = std::max(nh_min, Scalar(0));

  TrapezoidParams<Scalar> p;
  p.h = h;
  p.M = static_cast<Eigen::Index>(std::ceil(mh_min / h));
  p.N = static_cast<Eigen::Index>(std::ceil(nh_min / h));
  return p;
}

/// Rescale a kernel valid on [delta, 1] to the span scale lambda:
/// K(lambda s) = lambda^{alpha-1} K(s), so weights pick up lambda^{alpha-1}
/// and exponents divide by lambda. The validity window becomes
/// [lambda delta, lambda].
template <typename Scalar>
ExpSumKernel<Scalar> rescaled(const ExpSumKernel<Scalar>& kernel, Scalar lambda) {
  if (!(lambda > Scalar(0))) throw std::domain_error("rescale factor must be positive");
  typename ExpSumKernel<Scalar>::Array w = kernel.weights();
  typename ExpSumKernel<Scalar>::Array beta = kernel.exponents();
  const Scalar wf = std::pow(lambda, kernel.order().alpha() - Scalar(1));
  w *= wf;
  beta /= lambda;
  return ExpSumKernel<Scalar>(kernel.order(), kernel.h(), kernel.M(), kernel.N(), std::move(w),
                              std::move(beta), kernel.delta() * lambda, kernel.horizon() * lambda,
                              kernel.epsilon());
}

/// Parameter selection plus build for an arbitrary horizon. Spans longer
/// than 1 are handled by solving the budget on the normalized time
/// s = t / horizon and mapping the terms back through rescaled().
template <typename Scalar>
ExpSumKernel<Scalar> make_kernel(const FractionalOrder<Scalar>& order,
                                 const TruncationBudget<Scalar>& budget) {
  if (!(budget.delta > Scalar(0)) || !(budget.delta < budget.horizon))
    throw std::domain_error("budget needs 0 < delta < horizon");
  if (budget.horizon <= Scalar(1)) {
    const TrapezoidParams<Scalar> p = select_parameters(order, budget);
    return build_expsum(order, p.h, p.M, p.N, budget.delta, budget.horizon, budget.epsilon);
  }
  TruncationBudget<Scalar> normalized = budget;
  normalized.delta = budget.delta / budget.horizon;
  normalized.horizon = Scalar(1);
  const TrapezoidParams<Scalar> p = select_parameters(order, normalized);
  ExpSumKernel<Scalar> unit =
      build_expsum(order, p.h, p.M, p.N, normalized.delta, Scalar(1), budget.epsilon);
  return rescaled(unit, budget.horizon);
}

template <typename Scalar>
struct CertificationReport {
  Scalar max_rel_error;
  Scalar argmax_t;
  std::vector<std::pair<Scalar, Scalar>> table;  // (t, relative error)
};

/// Relative error of the sum against the closed-form kernel at n_check
/// log-spaced times in [t_min, t_max] (defaults: the kernel's validity
/// window). Deterministic evaluation order.
template <typename Scalar>
CertificationReport<Scalar> certify(const ExpSumKernel<Scalar>& kernel,
                                    const FractionalOrder<Scalar>& order, Eigen::Index n_check,
                                    Scalar t_min = Scalar(-1), Scalar t_max = Scalar(-1)) {
  if (n_check < 2) throw std::invalid_argument("certification needs at least 2 check points");
  if (t_min < Scalar(0)) t_min = kernel.delta();
  if (t_max < Scalar(0)) t_max = kernel.horizon();
  if (!(t_min > Scalar(0)) || !(t_min < t_max))
    throw std::domain_error("certification window needs 0 < t_min < t_max");

  CertificationReport<Scalar> report;
  report.max_rel_error = Scalar(0);
  report.argmax_t = t_min;
  report.table.reserve(n_check);
  const Scalar ratio = t_max / t_min;
  for (Eigen::Index i = 0; i < n_check; ++i) {
    const Scalar t = t_min * std::pow(ratio, Scalar(i) / Scalar(n_check - 1));
    const Scalar ref = eval_kernel_reference(order, t);
    const Scalar rel = std::abs(eval_expsum(kernel, t) - ref) / ref;
    report.table.emplace_back(t, rel);
    if (rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.argmax_t = t;
    }
  }
  return report;
}

/// Text export: header fields then one "l w beta" record per term, every
/// real printed with 17 significant digits so the file round-trips
/// bit-exactly.
template <typename Scalar>
void write_kernel(std::ostream& out, const ExpSumKernel<Scalar>& kernel) {
  out << "fracint-expsum-kernel v1\n";
  out << "alpha " << format_real(kernel.order().alpha()) << "\n";
  out << "h " << format_real(kernel.h()) << "\n";
  out << "M " << kernel.M() << "\n";
  out << "N " << kernel.N() << "\n";
  out << "delta " << format_real(kernel.delta()) << "\n";
  out << "horizon " << format_real(kernel.horizon()) << "\n";
  out << "epsilon " << format_real(kernel.epsilon()) << "\n";
  out << "terms " << kernel.size() << "\n";
  for (Eigen::Index i = 0; i < kernel.size(); ++i)
    out << kernel.term_index(i) << " " << format_real(kernel.weight(i)) << " "
        << format_real(kernel.exponent(i)) << "\n";
}

namespace detail {
inline std::string expect_field(std::istream& in, const std::string& name) {
  std::string key, value;
  if (!(in >> key >> value) || key != name)
    throw std::runtime_error("kernel file: expected field '" + name + "'");
  return value;
}
}  // namespace detail

template <typename Scalar>
ExpSumKernel<Scalar> read_kernel(std::istream& in) {
  std::string magic, version;
  if (!(in >> magic >> version) || magic != "fracint-expsum-kernel" || version != "v1")
    throw std::runtime_error("kernel file: bad header");
  const Scalar alpha = Scalar(parse_real(detail::expect_field(in, "alpha")));
  const Scalar h = Scalar(parse_real(detail::expect_field(in, "h")));
  const Eigen::Index M = parse_integer(detail::expect_field(in, "M"));
  const Eigen::Index N = parse_integer(detail::expect_field(in, "N"));
  const Scalar delta = Scalar(parse_real(detail::expect_field(in, "delta")));
  const Scalar horizon = Scalar(parse_real(detail::expect_field(in, "horizon")));
  const Scalar epsilon = Scalar(parse_real(detail::expect_field(in, "epsilon")));
  const Eigen::Index terms = parse_integer(detail::expect_field(in, "terms"));
  if (terms != M + 1 + N) throw std::runtime_error("kernel file: terms != M+1+N");
  typename ExpSumKernel<Scalar>::Array w(terms), beta(terms);
  for (Eigen::Index i = 0; i < terms; ++i) {
    std::string l, ws, bs;
    if (!(in >> l >> ws >> bs)) throw std::runtime_error("kernel file: truncated term records");
    if (parse_integer(l) != i - M) throw std::runtime_error("kernel file: term indices out of order");
    w[i] = Scalar(parse_real(ws));
    beta[i] = Scalar(parse_real(bs));
  }
  return ExpSumKernel<Scalar>(FractionalOrder<Scalar>(alpha), h, M, N, std::move(w),
                              std::move(beta), delta, horizon, epsilon);
}

}  // namespace fracint
