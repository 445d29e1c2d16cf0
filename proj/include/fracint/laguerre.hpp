#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>

#include "fracint/text_format.hpp"

namespace fracint {

/// Gauss-Laguerre rule of size Lambda for integrals against e^{-x} on
/// [0, inf). lambda_star optionally limits how many leading terms a consumer
/// uses for the fast-decaying branch of an assembled sum. Immutable.
template <typename Scalar>
class QuadratureRule {
 public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  using Index = Eigen::Index;

  QuadratureRule(Array nodes, Array weights, std::optional<Index> lambda_star = std::nullopt)
      : nodes_(std::move(nodes)), weights_(std::move(weights)), lambda_star_(lambda_star) {
    if (nodes_.size() < 1 || nodes_.size() != weights_.size())
      throw std::invalid_argument("quadrature rule needs matching non-empty node/weight arrays");
    for (Index l = 0; l < nodes_.size(); ++l) {
      if (!(nodes_[l] > Scalar(0)) || (l > 0 && !(nodes_[l] > nodes_[l - 1])))
        throw std::invalid_argument("quadrature nodes must be positive and strictly increasing");
      if (!(weights_[l] > Scalar(0)))
        throw std::invalid_argument("quadrature weights must be positive");
    }
    if (lambda_star_ && (*lambda_star_ < 1 || *lambda_star_ > nodes_.size()))
      throw std::invalid_argument("lambda_star must lie in [1, Lambda]");
  }

  Index size() const { return nodes_.size(); }
  Scalar node(Index l) const { return nodes_[l]; }
  Scalar weight(Index l) const { return weights_[l]; }
  const Array& nodes() const { return nodes_; }
  const Array& weights() const { return weights_; }
  const std::optional<Index>& lambda_star() const { return lambda_star_; }

  QuadratureRule with_lambda_star(Index lambda_star) const {
    return QuadratureRule(nodes_, weights_, lambda_star);
  }

 private:
  Array nodes_;
  Array weights_;
  std::optional<Index> lambda_star_;
};

namespace detail {

// Laguerre three-term recurrence (k+1) L_{k+1} = (2k+1-x) L_k - k L_{k-1},
// evaluated in extended precision with scaling so that degree-and-argument
// combinations far beyond the double range stay representable. Returns
// L_n and L_{n-1} as mantissas times 1e300^scale_blocks.
struct ScaledLaguerre {
  long double value;       // L_n mantissa
  long double value_prev;  // L_{n-1} mantissa
  long scale_blocks;
};

inline ScaledLaguerre laguerre_recurrence(Eigen::Index n, long double x) {
  long double p0 = 1.0L;
  long double p1 = 1.0L - x;
  long blocks = 0;
  for (Eigen::Index k = 1; k < n; ++k) {
    const long double p2 = ((2.0L * k + 1.0L - x) * p1 - static_cast<long double>(k) * p0) /
                           static_cast<long double>(k + 1);
    p0 = p1;
    p1 = p2;
    if (std::max(std::abs(p0), std::abs(p1)) > 1e300L) {
      p0 *= 1e-300L;
      p1 *= 1e-300L;
      ++blocks;
    }
  }
  return {p1, p0, blocks};
}

}  // namespace detail

/// Gauss-Laguerre nodes and weights: eigenvalues of the symmetric
/// tridiagonal Jacobi matrix of the Laguerre recurrence (diagonal 2k+1,
/// off-diagonal k), each root polished by Newton steps on the three-term
/// recurrence, weights from
///   w_l = x_l / ((Lambda+1)^2 [L_{Lambda+1}(x_l)]^2).
/// The rule integrates polynomials of degree <= 2 Lambda - 1 exactly
/// against e^{-x}; in particular the weights sum to 1.
template <typename Scalar>
QuadratureRule<Scalar> laguerre_rule(Eigen::Index lambda) {
  if (lambda < 1) throw std::domain_error("quadrature size Lambda must be at least 1");

  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(lambda, lambda);
  for (Eigen::Index k = 0; k < lambda; ++k) {
    jacobi(k, k) = 2.0 * static_cast<double>(k) + 1.0;
    if (k + 1 < lambda) {
      jacobi(k, k + 1) = static_cast<double>(k + 1);
      jacobi(k + 1, k) = static_cast<double>(k + 1);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("Jacobi matrix eigenvalue computation failed");

  typename QuadratureRule<Scalar>::Array nodes(lambda), weights(lambda);
  const long double log_scale_block = std::log(1e300L);
  for (Eigen::Index l = 0; l < lambda; ++l) {
    long double x = static_cast<long double>(solver.eigenvalues()[l]);
    for (int iter = 0; iter < 2; ++iter) {
      const auto rec = detail::laguerre_recurrence(lambda, x);
      // L_n'(x) = n (L_n(x) - L_{n-1}(x)) / x; the scale cancels in the ratio.
      const long double derivative = lambda * (rec.value - rec.value_prev) / x;
      x -= rec.value / derivative;
    }
    const auto next = detail::laguerre_recurrence(lambda + 1, x);
    const long double log_w = std::log(x) - 2.0L * std::log(static_cast<long double>(lambda + 1)) -
                              2.0L * (std::log(std::abs(next.value)) +
                                      static_cast<long double>(next.scale_blocks) * log_scale_block);
    nodes[l] = static_cast<Scalar>(x);
    weights[l] = static_cast<Scalar>(std::exp(log_w));
  }
  return QuadratureRule<Scalar>(std::move(nodes), std::move(weights));
}

/// Rule export as "l x w" records with 17 significant digits.
template <typename Scalar>
void write_rule(std::ostream& out, const QuadratureRule<Scalar>& rule) {
  out << "fracint-laguerre-rule v1\n";
  out << "lambda " << rule.size() << "\n";
  out << "lambda_star " << (rule.lambda_star() ? *rule.lambda_star() : 0) << "\n";
  for (Eigen::Index l = 0; l < rule.size(); ++l)
    out << (l + 1) << " " << format_real(rule.node(l)) << " " << format_real(rule.weight(l))
        << "\n";
}

template <typename Scalar>
QuadratureRule<Scalar> read_rule(std::istream& in) {
  std::string magic, version, key, value;
  if (!(in >> magic >> version) || magic != "fracint-laguerre-rule" || version != "v1")
    throw std::runtime_error("rule file: bad header");
  if (!(in >> key >> value) || key != "lambda") throw std::runtime_error("rule file: missing lambda");
  const Eigen::Index lambda = parse_integer(value);
  if (!(in >> key >> value) || key != "lambda_star")
    throw std::runtime_error("rule file: missing lambda_star");
  const Eigen::Index lambda_star = parse_integer(value);
  typename QuadratureRule<Scalar>::Array nodes(lambda), weights(lambda);
  for (Eigen::Index l = 0; l < lambda; ++l) {
    std::string idx, xs, ws;
    if (!(in >> idx >> xs >> ws)) throw std::runtime_error("rule file: truncated records");
    if (parse_integer(idx) != l + 1) throw std::runtime_error("rule file: records out of order");
    nodes[l] = Scalar(parse_real(xs));
    weights[l] = Scalar(parse_real(ws));
  }
  return QuadratureRule<Scalar>(std::move(nodes), std::move(weights),
                                lambda_star > 0 ? std::optional<Eigen::Index>(lambda_star)
                                                : std::nullopt);
}

}  // namespace fracint
