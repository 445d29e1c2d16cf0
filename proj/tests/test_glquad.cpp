#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "fracint/diffusive.hpp"
#include "fracint/laguerre.hpp"

using namespace fracint;

namespace {

constexpr double kPi = 3.14159265358979323846;

QuadratureRule<double> unit_rule() {
  Eigen::ArrayXd x(1), w(1);
  x << 1.0;
  w << 1.0;
  return QuadratureRule<double>(x, w);
}

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

}  // namespace

TEST_SUITE_BEGIN("glquad");

TEST_CASE("laguerre rule: small closed forms") {
  SUBCASE("Lambda = 1 is the midpoint of the exponential weight") {
    const auto rule = laguerre_rule<double>(1);
    CHECK(rule.node(0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(rule.weight(0) == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("Lambda = 2 has nodes 2 -+ sqrt(2)") {
    const auto rule = laguerre_rule<double>(2);
    CHECK(rule.node(0) == doctest::Approx(2.0 - std::sqrt(2.0)).epsilon(1e-14));
    CHECK(rule.node(1) == doctest::Approx(2.0 + std::sqrt(2.0)).epsilon(1e-14));
    CHECK(rule.weight(0) == doctest::Approx((2.0 + std::sqrt(2.0)) / 4.0).epsilon(1e-14));
    CHECK(rule.weight(1) == doctest::Approx((2.0 - std::sqrt(2.0)) / 4.0).epsilon(1e-14));
  }
  SUBCASE("Lambda = 5 reproduces the third moment 3! exactly") {
    const auto rule = laguerre_rule<double>(5);
    double mom = 0.0;
    for (Eigen::Index l = 0; l < 5; ++l) mom += rule.weight(l) * std::pow(rule.node(l), 3);
    CHECK(std::abs(mom - 6.0) <= 1e-12 * 6.0);
  }
  CHECK_THROWS_AS(laguerre_rule<double>(0), std::domain_error);
}

TEST_CASE("laguerre rule: weight normalization and moment exactness") {
  for (Eigen::Index lambda : {5, 20, 60, 80}) {
    const auto rule = laguerre_rule<double>(lambda);
    CHECK(std::abs(rule.weights().sum() - 1.0) <= 1e-12);
    for (Eigen::Index l = 1; l < lambda; ++l) {
      CHECK(rule.node(l) > rule.node(l - 1));
      CHECK(rule.node(l - 1) > 0.0);
      CHECK(rule.weight(l) > 0.0);
    }
    const int k_max = static_cast<int>(std::min<Eigen::Index>(2 * lambda - 1, 40));
    for (int k = 1; k <= k_max; ++k) {
      double mom = 0.0;
      for (Eigen::Index l = 0; l < lambda; ++l) mom += rule.weight(l) * std::pow(rule.node(l), k);
      CHECK(std::abs(mom - factorial(k)) <= 1e-10 * factorial(k));
    }
  }
}

TEST_CASE("lambda_star bounds are validated") {
  const auto rule = laguerre_rule<double>(8);
  CHECK_NOTHROW(rule.with_lambda_star(1));
  CHECK_NOTHROW(rule.with_lambda_star(8));
  CHECK_THROWS_AS(rule.with_lambda_star(0), std::invalid_argument);
  CHECK_THROWS_AS(rule.with_lambda_star(9), std::invalid_argument);
}

TEST_CASE("phi_rhs_coefficients") {
  const auto order = make_order(0.5);

  SUBCASE("hand values at r = 0") {
    const auto c = phi_rhs_coefficients(order, 0.0);
    CHECK(c.decay == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
    CHECK(c.source == doctest::Approx((1.0 / kPi) * 2.0 * std::exp(-0.5)).epsilon(1e-14));
  }

  SUBCASE("source collapses super-exponentially for r -> -inf") {
    CHECK(phi_rhs_coefficients(order, -40.0).source == 0.0);
    CHECK(phi_rhs_coefficients(order, -40.0).decay == 0.0);
    CHECK(phi_rhs_coefficients(make_order(0.25), -1000.0).source == 0.0);  // no NaN either
  }

  SUBCASE("steady state source/decay matches the closed form") {
    for (double r : {-2.0, 0.4, 3.0}) {
      const auto c = phi_rhs_coefficients(order, r);
      const double expected =
          order.c_alpha() * (1.0 + std::exp(-r)) * std::pow(psi(r), -order.alpha());
      CHECK(c.source / c.decay == doctest::Approx(expected).epsilon(1e-13));
    }
  }
}

TEST_CASE("backward Euler node update") {
  const auto order = make_order(0.5);

  SUBCASE("zero state, zero sample") {
    CHECK(backward_euler_update(order, 0.7, 0.0, 0.0, 0.1) == 0.0);
  }

  SUBCASE("hand value at r = 0, h = 0.1, f = 1") {
    const double dec = std::exp(-1.0);
    const double src = (1.0 / kPi) * 2.0 * std::exp(-0.5);
    const double expected = 0.1 * src / (1.0 + 0.1 * dec);
    CHECK(backward_euler_update(order, 0.0, 0.0, 1.0, 0.1) ==
          doctest::Approx(expected).epsilon(1e-13));
    CHECK(expected == doctest::Approx(0.0372428).epsilon(1e-5));
  }

  SUBCASE("constant forcing converges to the source/decay fixed point") {
    const auto c = phi_rhs_coefficients(order, 0.3);
    double phi = 0.0;
    for (int n = 0; n < 500; ++n) phi = backward_euler_update(order, 0.3, phi, 1.0, 0.2);
    CHECK(phi == doctest::Approx(c.source / c.decay).epsilon(1e-10));
  }

  SUBCASE("invalid step") {
    CHECK_THROWS_AS(backward_euler_update(order, 0.0, 0.0, 1.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(backward_euler_update(order, 0.0, 0.0, 1.0, -0.1), std::domain_error);
  }
}

TEST_CASE("trapezoidal node update") {
  const auto order = make_order(0.5);

  SUBCASE("zero state, zero samples") {
    CHECK(trapezoidal_update(order, 0.7, 0.0, 0.0, 0.0, 0.1) == 0.0);
  }

  SUBCASE("decay * h = 2 zeroes the propagator, leaving the pure source term") {
    const double r = 0.8;
    const auto c = phi_rhs_coefficients(order, r);
    const double h = 2.0 / c.decay;
    const double updated = trapezoidal_update(order, r, 5.0, 1.0, 1.0, h);
    const double source_only = (h / 2.0) * c.source / 2.0 * 2.0;  // q = 1
    CHECK(updated == doctest::Approx(source_only).epsilon(1e-12));
  }

  SUBCASE("constant forcing fixed point is source/decay") {
    const auto c = phi_rhs_coefficients(order, 0.0);
    double phi = 0.0;
    for (int n = 0; n < 2000; ++n) phi = trapezoidal_update(order, 0.0, phi, 1.0, 1.0, 0.05);
    CHECK(phi == doctest::Approx(c.source / c.decay).epsilon(1e-10));
  }

  CHECK_THROWS_AS(trapezoidal_update(order, 0.0, 0.0, 1.0, 1.0, 0.0), std::domain_error);
}

TEST_CASE("A-stability: decay never amplifies, for any node and step width") {
  std::mt19937_64 rng(1337);
  std::uniform_real_distribution<double> rdist(-6.0, 6.0);
  std::uniform_real_distribution<double> phidist(-2.0, 2.0);
  for (double alpha : {0.25, 0.75}) {
    const auto order = make_order(alpha);
    for (int i = 0; i < 300; ++i) {
      // cube to cover both mild and extreme mapped arguments
      const double u = rdist(rng);
      const double r = u * u * u * 10.0;
      const double phi = phidist(rng);
      for (double h : {1e-6, 1e-2, 1.0, 1e3}) {
        CHECK(std::abs(backward_euler_update(order, r, phi, 0.0, h)) <= std::abs(phi));
        CHECK(std::abs(trapezoidal_update(order, r, phi, 0.0, 0.0, h)) <= std::abs(phi));
      }
    }
  }
}

TEST_CASE("state stepping applies the node update at the mapped arguments") {
  const auto order = make_order(0.5);
  const auto rule = laguerre_rule<double>(4);
  DiffusiveState<double> state(4, 0.0);
  step_backward_euler(state, order, rule, 1.0, 0.1);
  CHECK(state.t_current == doctest::Approx(0.1));
  for (Eigen::Index l = 0; l < 4; ++l) {
    const double r1 = -rule.node(l) / order.one_minus_alpha();
    const double r2 = rule.node(l) / order.alpha();
    CHECK(state.phi[l] == backward_euler_update(order, r1, 0.0, 1.0, 0.1));
    CHECK(state.phi_tilde[l] == backward_euler_update(order, r2, 0.0, 1.0, 0.1));
  }

  DiffusiveState<double> wrong(3, 0.0);
  CHECK_THROWS_AS(step_backward_euler(wrong, order, rule, 1.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(step_trapezoidal(wrong, order, rule, 1.0, 1.0, 0.1), std::invalid_argument);
}

TEST_CASE("assemble") {
  const auto order = make_order(0.5);

  SUBCASE("all-zero state assembles to zero") {
    const auto rule = laguerre_rule<double>(12);
    const DiffusiveState<double> state(12, 0.0);
    CHECK(assemble(state, order, rule) == 0.0);
  }

  SUBCASE("single-node rule closed form") {
    const auto rule = unit_rule();
    DiffusiveState<double> state(1, 0.0);
    state.phi[0] = 0.3;
    state.phi_tilde[0] = -0.1;
    // e^1 (phi/(1-alpha) + phi~/alpha) = e (2 phi + 2 phi~) at alpha = 1/2
    CHECK(assemble(state, order, rule) ==
          doctest::Approx(std::exp(1.0) * (2.0 * 0.3 - 2.0 * 0.1)).epsilon(1e-14));
  }

  SUBCASE("lambda_star = Lambda is a no-op") {
    const auto rule = laguerre_rule<double>(16);
    DiffusiveState<double> state(16, 0.0);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (Eigen::Index l = 0; l < 16; ++l) {
      state.phi[l] = dist(rng);
      state.phi_tilde[l] = dist(rng);
    }
    CHECK(assemble(state, order, rule) == assemble(state, order, rule.with_lambda_star(16)));
  }
}

TEST_CASE("stepper convergence orders on the constant-forcing exact solution") {
  const auto order = make_order(0.5);
  const auto rule = laguerre_rule<double>(12);

  auto march = [&](Stepper stepper, double h) {
    const long steps = std::lround(1.0 / h);
    DiffusiveState<double> state(rule.size(), 0.0);
    for (long n = 1; n <= steps; ++n) {
      if (stepper == Stepper::backward_euler || n <= 2)
        step_backward_euler(state, order, rule, 1.0, h);
      else
        step_trapezoidal(state, order, rule, 1.0, 1.0, h);
    }
    double err = 0.0;
    for (Eigen::Index l = 0; l < rule.size(); ++l) {
      const double r1 = -rule.node(l) / order.one_minus_alpha();
      const double r2 = rule.node(l) / order.alpha();
      err = std::max(err, std::abs(state.phi[l] - phi_exact_constant(order, r1, 1.0)));
      err = std::max(err, std::abs(state.phi_tilde[l] - phi_exact_constant(order, r2, 1.0)));
    }
    return err;
  };

  auto fitted_order = [&](Stepper stepper) {
    std::vector<double> errs;
    for (int i = 0; i < 5; ++i) errs.push_back(march(stepper, 1e-2 / (1 << i)));
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < errs.size(); ++i) sum += std::log2(errs[i] / errs[i + 1]);
    return sum / static_cast<double>(errs.size() - 1);
  };

  const double be = fitted_order(Stepper::backward_euler);
  CHECK(be >= 0.7);
  CHECK(be <= 1.3);
  const double tr = fitted_order(Stepper::trapezoidal);
  CHECK(tr >= 1.7);
  CHECK(tr <= 2.3);
}

TEST_CASE("gl_integrate end to end") {
  const auto order = make_order(0.5);
  const TimeGrid<double> grid = TimeGrid<double>::uniform(0.0, 1.0, 1000);

  SUBCASE("constant driving") {
    const SampledFunction<double> one([](double) { return 1.0; });
    const Eigen::ArrayXd out =
        gl_integrate(order, one, grid, 60, Stepper::trapezoidal);
    CHECK(std::abs(out[999] - 2.0 / std::sqrt(kPi)) <= 1e-3);
  }

  SUBCASE("linear driving") {
    const SampledFunction<double> lin([](double t) { return t; });
    const Eigen::ArrayXd out =
        gl_integrate(order, lin, grid, 60, Stepper::trapezoidal);
    CHECK(std::abs(out[999] - std::tgamma(2.0) / std::tgamma(2.5)) <= 1e-3);
  }

  SUBCASE("backward Euler variant stays within its first-order budget") {
    const SampledFunction<double> one([](double) { return 1.0; });
    const Eigen::ArrayXd out =
        gl_integrate(order, one, grid, 60, Stepper::backward_euler);
    CHECK(std::abs(out[999] - 2.0 / std::sqrt(kPi)) <= 5e-3);
  }

  SUBCASE("value at the grid origin is zero by the initial condition") {
    const auto rule = laguerre_rule<double>(20);
    const DiffusiveState<double> fresh(20, 0.0);
    CHECK(assemble(fresh, order, rule) == 0.0);
  }
}

TEST_CASE("evolved states respect the two-sided decay bounds") {
  const auto order = make_order(0.5);
  const double t = 1.0;

  const auto bound_right = [&](double r) {  // r > 0 branch shape
    return std::exp(log1p_exp(-r) - order.alpha() * psi_exponent(r));
  };
  const auto bound_left = [&](double r) {  // r < 0 branch shape
    return std::exp(log1p_exp(-r) + order.one_minus_alpha() * psi_exponent(r));
  };

  // calibrate C on a coarse probe rule, then verify on a finer one
  const auto calibrate = [&](Eigen::Index lambda) {
    const auto rule = laguerre_rule<double>(lambda);
    double c_right = 0.0, c_left = 0.0;
    for (Eigen::Index l = 0; l < lambda; ++l) {
      const double r2 = rule.node(l) / order.alpha();
      const double r1 = -rule.node(l) / order.one_minus_alpha();
      const double phi2 = phi_exact_constant(order, r2, t);
      const double phi1 = phi_exact_constant(order, r1, t);
      if (bound_right(r2) > 1e-250) c_right = std::max(c_right, phi2 / bound_right(r2));
      if (bound_left(r1) > 1e-250) c_left = std::max(c_left, phi1 / bound_left(r1));
    }
    return std::make_pair(1.01 * c_right, 1.01 * c_left);
  };

  const auto [c_right, c_left] = calibrate(20);
  CHECK(c_right > 0.0);
  CHECK(c_left > 0.0);

  const auto rule = laguerre_rule<double>(60);
  DiffusiveState<double> state(60, 0.0);
  const double h = 1e-3;
  for (int n = 1; n <= 1000; ++n) {
    if (n <= 2)
      step_backward_euler(state, order, rule, 1.0, h);
    else
      step_trapezoidal(state, order, rule, 1.0, 1.0, h);
  }
  for (Eigen::Index l = 0; l < 60; ++l) {
    const double r2 = rule.node(l) / order.alpha();
    const double r1 = -rule.node(l) / order.one_minus_alpha();
    CHECK(std::abs(state.phi_tilde[l]) <= c_right * bound_right(r2) + 1e-280);
    CHECK(std::abs(state.phi[l]) <= c_left * bound_left(r1) + 1e-280);
  }
}

TEST_CASE("truncating the fast-decaying branch at Lambda/2 is below the stepping error") {
  const auto order = make_order(0.5);
  const TimeGrid<double> grid = TimeGrid<double>::uniform(0.0, 1.0, 1000);
  const SampledFunction<double> one([](double) { return 1.0; });

  const Eigen::ArrayXd full = gl_integrate(order, one, grid, 60, Stepper::trapezoidal);
  const Eigen::ArrayXd cut = gl_integrate(order, one, grid, 60, Stepper::trapezoidal, 30);
  const double change = (full - cut).abs().maxCoeff();

  // stepping error of the same march, from the exact constant-forcing states
  const auto rule = laguerre_rule<double>(60);
  DiffusiveState<double> exact(60, 0.0);
  for (Eigen::Index l = 0; l < 60; ++l) {
    exact.phi[l] = phi_exact_constant(order, -rule.node(l) / order.one_minus_alpha(), 1.0);
    exact.phi_tilde[l] = phi_exact_constant(order, rule.node(l) / order.alpha(), 1.0);
  }
  const double stepping_error = std::abs(full[999] - assemble(exact, order, rule));
  CHECK(change <= std::max(stepping_error, 1e-12));
}

TEST_CASE("rule and state files round-trip bit-exactly") {
  const auto rule = laguerre_rule<double>(24).with_lambda_star(12);
  std::stringstream rio;
  write_rule(rio, rule);
  const auto rback = read_rule<double>(rio);
  CHECK(rback.size() == rule.size());
  REQUIRE(rback.lambda_star().has_value());
  CHECK(*rback.lambda_star() == 12);
  for (Eigen::Index l = 0; l < rule.size(); ++l) {
    CHECK(rback.node(l) == rule.node(l));
    CHECK(rback.weight(l) == rule.weight(l));
  }

  const auto order = make_order(0.4);
  DiffusiveState<double> state(24, 0.0);
  for (int n = 1; n <= 10; ++n) step_backward_euler(state, order, rule, std::sin(0.3 * n), 0.05);
  std::stringstream sio;
  write_state(sio, state);
  const auto sback = read_state<double>(sio);
  CHECK(sback.t_current == state.t_current);
  for (Eigen::Index l = 0; l < 24; ++l) {
    CHECK(sback.phi[l] == state.phi[l]);
    CHECK(sback.phi_tilde[l] == state.phi_tilde[l]);
  }

  // restart equivalence: continuing from the snapshot matches the straight run
  DiffusiveState<double> resumed = sback;
  DiffusiveState<double> straight = state;
  for (int n = 11; n <= 20; ++n) {
    step_backward_euler(resumed, order, rule, std::sin(0.3 * n), 0.05);
    step_backward_euler(straight, order, rule, std::sin(0.3 * n), 0.05);
  }
  for (Eigen::Index l = 0; l < 24; ++l) CHECK(resumed.phi[l] == straight.phi[l]);
}

TEST_SUITE_END();
