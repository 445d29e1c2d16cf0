#pragma once

#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fracint/diffusive.hpp"
#include "fracint/expsum.hpp"
#include "fracint/fastconv.hpp"
#include "fracint/fractional_order.hpp"
#include "fracint/oracle.hpp"
#include "fracint/text_format.hpp"

namespace fracint {

/// Configuration problem; carries the offending field name so the front end
/// can point at the flag.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error("config error: '" + field + "': " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

/// One flat bag of options; each command validates the fields it uses.
struct RunConfig {
  double alpha = std::numeric_limits<double>::quiet_NaN();
  double a = 0.0;
  double b = 1.0;
  long steps = 0;
  std::string grid_file;
  std::string f_spec = "const";
  std::string method = "gauss-laguerre";
  std::string out_path;  // empty means stdout

  // exponential-sum method
  double epsilon = 1e-6;
  double delta = 1e-3;
  double horizon = 0.0;  // kernel command; 0 means b - a

  // Gauss-Laguerre method
  long lambda = 60;
  std::string stepper = "trapezoidal";
  bool truncate_j1 = false;

  // convergence command
  std::string sweep = "h";
  double h0 = 1e-2;
  int levels = 5;
  std::vector<long> lambda_list = {10, 20, 40, 80};

  // bench command
  std::vector<long> p_list = {100, 200, 400, 800};
};

/// Built-in driving function: const | linear | monomial:p | cos | exp.
/// The monomial family (t-a)^p carries its closed-form reference.
struct BuiltinFunction {
  std::function<double(double)> fn;
  std::optional<double> monomial_p;  // set when a closed-form reference exists
};

inline BuiltinFunction parse_builtin_function(const std::string& spec, double a) {
  if (spec == "const") return {[](double) { return 1.0; }, 0.0};
  if (spec == "linear") return {[a](double t) { return t - a; }, 1.0};
  if (spec.rfind("monomial:", 0) == 0) {
    double p = 0;
    try {
      p = parse_real(spec.substr(9));
    } catch (const std::exception&) {
      throw ConfigError("f", "malformed monomial exponent in '" + spec + "'");
    }
    if (!(p >= 0)) throw ConfigError("f", "monomial exponent must be non-negative");
    return {[a, p](double t) { return std::pow(t - a, p); }, p};
  }
  if (spec == "cos") return {[](double t) { return std::cos(t); }, std::nullopt};
  if (spec == "exp") return {[](double t) { return std::exp(t); }, std::nullopt};
  throw ConfigError("f", "unknown function '" + spec + "' (const|linear|monomial:p|cos|exp)");
}

namespace detail {

inline void validate_order_fields(const RunConfig& config) {
  if (std::isnan(config.alpha)) throw ConfigError("alpha", "required");
  if (!(config.alpha > 0.0) || !(config.alpha < 1.0))
    throw ConfigError("alpha", "must lie in the open interval (0, 1)");
}

inline TimeGrid<double> make_grid(const RunConfig& config) {
  if (!config.grid_file.empty()) {
    std::ifstream in(config.grid_file);
    if (!in) throw ConfigError("grid-file", "cannot open '" + config.grid_file + "'");
    std::vector<double> pts;
    std::string token;
    while (in >> token) {
      try {
        pts.push_back(parse_real(token));
      } catch (const std::exception&) {
        throw ConfigError("grid-file", "malformed grid value '" + token + "'");
      }
    }
    if (pts.size() < 2) throw ConfigError("grid-file", "needs at least two grid points");
    Eigen::ArrayXd arr(static_cast<Eigen::Index>(pts.size()));
    for (Eigen::Index i = 0; i < arr.size(); ++i) arr[i] = pts[static_cast<std::size_t>(i)];
    try {
      return TimeGrid<double>(std::move(arr));
    } catch (const std::exception& e) {
      throw ConfigError("grid-file", e.what());
    }
  }
  if (config.steps < 1) throw ConfigError("steps", "need at least one step (or a grid file)");
  if (!(config.a < config.b)) throw ConfigError("b", "needs a < b");
  return TimeGrid<double>::uniform(config.a, config.b, config.steps);
}

inline Stepper parse_stepper(const std::string& name) {
  if (name == "backward-euler") return Stepper::backward_euler;
  if (name == "trapezoidal") return Stepper::trapezoidal;
  throw ConfigError("stepper", "unknown stepper '" + name + "' (backward-euler|trapezoidal)");
}

inline void write_csv_value(std::ostream& out, double v) { out << format_real(v); }

}  // namespace detail

/// integrate: compute I_a^alpha f on the grid with the chosen method and
/// write (t, value, reference, abs_error) CSV records. Reference column is
/// filled for the monomial family, left empty otherwise.
inline int cmd_integrate(const RunConfig& config, std::ostream& out, std::ostream& log) {
  try {
    detail::validate_order_fields(config);
    const TimeGrid<double> grid = detail::make_grid(config);
    const BuiltinFunction builtin = parse_builtin_function(config.f_spec, grid.origin());
    const FractionalOrder<double> order(config.alpha);

    if (config.method != "expsum" && config.method != "gauss-laguerre" &&
        config.method != "direct" && config.method != "oracle")
      throw ConfigError("method", "unknown method '" + config.method +
                                      "' (expsum|gauss-laguerre|direct|oracle)");

    double min_dt = std::numeric_limits<double>::infinity();
    for (Eigen::Index n = 1; n <= grid.steps(); ++n) min_dt = std::min(min_dt, grid.dt(n));

    Stepper stepper = Stepper::backward_euler;
    if (config.method == "gauss-laguerre") {
      if (config.lambda < 1) throw ConfigError("Lambda", "needs at least one quadrature node");
      stepper = detail::parse_stepper(config.stepper);
    }
    if (config.method == "expsum") {
      if (!(config.epsilon > 0.0) || !(config.epsilon < 1.0))
        throw ConfigError("epsilon", "must lie in (0, 1)");
      if (!(config.delta > 0.0)) throw ConfigError("delta", "must be positive");
      if (config.delta > min_dt)
        throw ConfigError("delta", "kernel validity delta " + format_real(config.delta) +
                                       " exceeds the smallest grid step " + format_real(min_dt));
    }

    const SampledFunction<double> f(builtin.fn);
    Eigen::ArrayXd values;
    if (config.method == "direct") {
      values = direct_convolution(order, grid, f);
    } else if (config.method == "expsum") {
      TruncationBudget<double> budget;
      budget.epsilon = config.epsilon;
      budget.delta = config.delta;
      budget.horizon = grid.horizon();
      const ExpSumKernel<double> kernel = make_kernel(order, budget);
      values = fast_convolution(kernel, order, grid, f);
    } else if (config.method == "gauss-laguerre") {
      std::optional<Eigen::Index> lambda_star;
      if (config.truncate_j1)
        lambda_star = static_cast<Eigen::Index>((config.lambda + 1) / 2);  // ceil(Lambda/2)
      values = gl_integrate(order, f, grid, config.lambda, stepper, lambda_star);
    } else {  // oracle
      values.resize(grid.steps());
      for (Eigen::Index n = 1; n <= grid.steps(); ++n) {
        if (builtin.monomial_p) {
          values[n - 1] = rl_monomial(order, MonomialSpec<double>(*builtin.monomial_p, grid.origin()),
                                      grid[n]);
        } else {
          values[n - 1] = rl_numeric(order, builtin.fn, grid.origin(), grid[n], 1e-10);
        }
      }
    }

    out << "t,value,reference,abs_error\n";
    for (Eigen::Index n = 1; n <= grid.steps(); ++n) {
      detail::write_csv_value(out, grid[n]);
      out << ",";
      detail::write_csv_value(out, values[n - 1]);
      out << ",";
      if (builtin.monomial_p) {
        const double ref =
            rl_monomial(order, MonomialSpec<double>(*builtin.monomial_p, grid.origin()), grid[n]);
        detail::write_csv_value(out, ref);
        out << ",";
        detail::write_csv_value(out, std::abs(values[n - 1] - ref));
      } else {
        out << ",";
      }
      out << "\n";
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    log << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    log << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  }
}

/// kernel: select parameters for the budget, build, certify, report the
/// build and write the kernel file. Certification worse than 100 epsilon
/// exits with the numerical failure code.
inline int cmd_kernel(const RunConfig& config, std::ostream& out, std::ostream& log) {
  try {
    detail::validate_order_fields(config);
    if (!(config.epsilon > 0.0) || !(config.epsilon < 1.0))
      throw ConfigError("epsilon", "must lie in (0, 1)");
    if (!(config.delta > 0.0)) throw ConfigError("delta", "must be positive");
    const double horizon = config.horizon > 0.0 ? config.horizon : config.b - config.a;
    if (!(horizon > 0.0)) throw ConfigError("horizon", "must be positive");
    if (config.delta >= horizon) throw ConfigError("delta", "must be smaller than the horizon");

    const FractionalOrder<double> order(config.alpha);
    TruncationBudget<double> budget;
    budget.epsilon = config.epsilon;
    budget.delta = config.delta;
    budget.horizon = horizon;
    const ExpSumKernel<double> kernel = make_kernel(order, budget);
    const CertificationReport<double> report = certify(kernel, order, 200);

    log << "Lambda " << kernel.size() << "\n";
    log << "h " << format_real(kernel.h()) << "\n";
    log << "M " << kernel.M() << "\n";
    log << "N " << kernel.N() << "\n";
    log << "max_rel_error " << format_real(report.max_rel_error) << "\n";
    log << "argmax_t " << format_real(report.argmax_t) << "\n";
    write_kernel(out, kernel);

    if (report.max_rel_error > 100.0 * config.epsilon) {
      log << "numerical error: certification exceeded 100x the budget epsilon\n";
      return kExitNumerical;
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    log << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    log << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  }
}

namespace detail {

// March the diffusive states over a uniform grid with the same stepping
// policy gl_integrate uses (damped start in trapezoidal mode).
inline DiffusiveState<double> march_uniform(const FractionalOrder<double>& order,
                                            const QuadratureRule<double>& rule,
                                            const std::function<double(double)>& f, double a,
                                            double h, long steps, Stepper stepper) {
  DiffusiveState<double> state(rule.size(), a);
  for (long n = 1; n <= steps; ++n) {
    const double tn = a + h * static_cast<double>(n);
    if (stepper == Stepper::backward_euler || n <= 2) {
      step_backward_euler(state, order, rule, f(tn), h);
    } else {
      step_trapezoidal(state, order, rule, f(tn), f(tn - h), h);
    }
  }
  return state;
}

// Max per-node deviation from the closed constant-forcing solution.
inline double max_node_error_constant(const FractionalOrder<double>& order,
                                      const QuadratureRule<double>& rule,
                                      const DiffusiveState<double>& state, double elapsed) {
  double err = 0.0;
  for (Eigen::Index l = 0; l < rule.size(); ++l) {
    const double r1 = -rule.node(l) / order.one_minus_alpha();
    const double r2 = rule.node(l) / order.alpha();
    err = std::max(err, std::abs(state.phi[l] - phi_exact_constant(order, r1, elapsed)));
    err = std::max(err, std::abs(state.phi_tilde[l] - phi_exact_constant(order, r2, elapsed)));
  }
  return err;
}

}  // namespace detail

/// convergence: sweep the step width (h halving) or the rule size (Lambda
/// doubling), emit an error-vs-parameter CSV and report the fitted order
/// (mean log2 error ratio) on the log stream.
inline int cmd_convergence(const RunConfig& config, std::ostream& out, std::ostream& log) {
  try {
    detail::validate_order_fields(config);
    if (!(config.a < config.b)) throw ConfigError("b", "needs a < b");
    const FractionalOrder<double> order(config.alpha);
    const BuiltinFunction builtin = parse_builtin_function(config.f_spec, config.a);
    const Stepper stepper = detail::parse_stepper(config.stepper);

    std::vector<std::pair<double, double>> table;  // (parameter, error)
    if (config.sweep == "h") {
      if (!(config.h0 > 0.0)) throw ConfigError("h0", "must be positive");
      if (config.levels < 2) throw ConfigError("levels", "need at least two sweep levels");
      if (config.lambda < 1) throw ConfigError("Lambda", "needs at least one quadrature node");
      const QuadratureRule<double> rule = laguerre_rule<double>(config.lambda);
      const double span = config.b - config.a;
      for (int i = 0; i < config.levels; ++i) {
        const double h = config.h0 / static_cast<double>(1 << i);
        const long steps = static_cast<long>(std::llround(span / h));
        if (steps < 1) throw ConfigError("h0", "step width exceeds the integration span");
        const double h_eff = span / static_cast<double>(steps);
        const DiffusiveState<double> state =
            detail::march_uniform(order, rule, builtin.fn, config.a, h_eff, steps, stepper);
        double err;
        if (builtin.monomial_p && *builtin.monomial_p == 0.0) {
          err = detail::max_node_error_constant(order, rule, state, span);
        } else {
          // No closed per-node solution: compare against a 4x finer march.
          const DiffusiveState<double> fine = detail::march_uniform(
              order, rule, builtin.fn, config.a, h_eff / 4.0, steps * 4, stepper);
          err = std::max((state.phi - fine.phi).abs().maxCoeff(),
                         (state.phi_tilde - fine.phi_tilde).abs().maxCoeff());
        }
        table.emplace_back(h_eff, err);
      }
    } else if (config.sweep == "Lambda") {
      if (!builtin.monomial_p)
        throw ConfigError("f", "Lambda sweep needs a function with a closed-form reference");
      if (config.lambda_list.size() < 2)
        throw ConfigError("Lambda-list", "need at least two rule sizes");
      const MonomialSpec<double> spec(*builtin.monomial_p, config.a);
      const double reference = rl_monomial(order, spec, config.b);
      const long steps = config.steps > 0 ? config.steps : 1000;
      const TimeGrid<double> grid = TimeGrid<double>::uniform(config.a, config.b, steps);
      const SampledFunction<double> f(builtin.fn);
      for (long lambda : config.lambda_list) {
        if (lambda < 1) throw ConfigError("Lambda-list", "rule sizes must be positive");
        const Eigen::ArrayXd values = gl_integrate(order, f, grid, lambda, stepper);
        table.emplace_back(static_cast<double>(lambda),
                           std::abs(values[grid.steps() - 1] - reference));
      }
    } else {
      throw ConfigError("sweep", "unknown sweep axis '" + config.sweep + "' (h|Lambda)");
    }

    out << (config.sweep == "h" ? "h,error\n" : "Lambda,error\n");
    for (const auto& [param, err] : table) {
      detail::write_csv_value(out, param);
      out << ",";
      detail::write_csv_value(out, err);
      out << "\n";
    }

    double order_sum = 0.0;
    int order_count = 0;
    for (std::size_t i = 0; i + 1 < table.size(); ++i) {
      if (table[i].second > 0.0 && table[i + 1].second > 0.0) {
        order_sum += std::log2(table[i].second / table[i + 1].second);
        ++order_count;
      }
    }
    const double fitted = order_count > 0 ? order_sum / order_count : 0.0;
    log << "fitted_order " << format_real(fitted) << "\n";
    return kExitOk;
  } catch (const ConfigError& e) {
    log << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    log << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  }
}

/// bench: instrumented operation counts and live-state sizes for the fast
/// recursion against the direct summation over a doubling list of grid
/// sizes; asserts the linear and quadratic growth laws.
inline int cmd_bench(const RunConfig& config, std::ostream& out, std::ostream& log) {
  try {
    detail::validate_order_fields(config);
    if (!(config.a < config.b)) throw ConfigError("b", "needs a < b");
    if (config.p_list.size() < 2) throw ConfigError("P-list", "need at least two grid sizes");
    for (std::size_t i = 0; i < config.p_list.size(); ++i) {
      if (config.p_list[i] < 2) throw ConfigError("P-list", "grid sizes must be at least 2");
      if (i > 0 && config.p_list[i] != 2 * config.p_list[i - 1])
        throw ConfigError("P-list", "entries must double so growth ratios are meaningful");
    }
    if (!(config.epsilon > 0.0) || !(config.epsilon < 1.0))
      throw ConfigError("epsilon", "must lie in (0, 1)");
    const double span = config.b - config.a;
    const double finest_dt = span / static_cast<double>(config.p_list.back());
    if (!(config.delta > 0.0) || config.delta > finest_dt)
      throw ConfigError("delta", "must be positive and no larger than the finest grid step");

    const FractionalOrder<double> order(config.alpha);
    const BuiltinFunction builtin = parse_builtin_function(config.f_spec, config.a);
    const SampledFunction<double> f(builtin.fn);
    TruncationBudget<double> budget;
    budget.epsilon = config.epsilon;
    budget.delta = config.delta;
    budget.horizon = std::max(span, config.delta * 2.0);
    const ExpSumKernel<double> kernel = make_kernel(order, budget);

    struct Row {
      long P;
      unsigned long long fast_ops, direct_ops;
      Eigen::Index fast_state, direct_state;
    };
    std::vector<Row> rows;
    for (long P : config.p_list) {
      const TimeGrid<double> grid = TimeGrid<double>::uniform(config.a, config.b, P);
      ConvolutionStats fast_stats, direct_stats;
      fast_convolution(kernel, order, grid, f, &fast_stats);
      direct_convolution(order, grid, f, &direct_stats);
      rows.push_back({P, fast_stats.term_ops, direct_stats.term_ops, fast_stats.state_size,
                      direct_stats.state_size});
    }

    out << "P,fast_ops,direct_ops,fast_state,direct_state\n";
    for (const Row& r : rows)
      out << r.P << "," << r.fast_ops << "," << r.direct_ops << "," << r.fast_state << ","
          << r.direct_state << "\n";

    for (std::size_t i = 1; i < rows.size(); ++i) {
      const double fast_ratio =
          static_cast<double>(rows[i].fast_ops) / static_cast<double>(rows[i - 1].fast_ops);
      const double direct_ratio =
          static_cast<double>(rows[i].direct_ops) / static_cast<double>(rows[i - 1].direct_ops);
      if (!(fast_ratio >= 1.9 && fast_ratio <= 2.1)) {
        log << "numerical error: fast-path op growth " << format_real(fast_ratio)
            << " outside [1.9, 2.1]\n";
        return kExitNumerical;
      }
      if (!(direct_ratio >= 3.8 && direct_ratio <= 4.2)) {
        log << "numerical error: direct-path op growth " << format_real(direct_ratio)
            << " outside [3.8, 4.2]\n";
        return kExitNumerical;
      }
      if (rows[i].fast_state != rows[0].fast_state) {
        log << "numerical error: fast-path live state depends on P\n";
        return kExitNumerical;
      }
    }
    log << "ok fast linear, direct quadratic, state " << rows[0].fast_state << " terms\n";
    return kExitOk;
  } catch (const ConfigError& e) {
    log << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    log << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  }
}

/// oracle: reference values (t, value) from the closed form where one
/// exists, otherwise from the regularized numerical quadrature.
inline int cmd_oracle(const RunConfig& config, std::ostream& out, std::ostream& log) {
  try {
    detail::validate_order_fields(config);
    const TimeGrid<double> grid = detail::make_grid(config);
    const BuiltinFunction builtin = parse_builtin_function(config.f_spec, grid.origin());
    const FractionalOrder<double> order(config.alpha);

    out << "t,value\n";
    for (Eigen::Index n = 1; n <= grid.steps(); ++n) {
      double value;
      if (builtin.monomial_p) {
        value =
            rl_monomial(order, MonomialSpec<double>(*builtin.monomial_p, grid.origin()), grid[n]);
      } else {
        value = rl_numeric(order, builtin.fn, grid.origin(), grid[n], 1e-10);
      }
      detail::write_csv_value(out, grid[n]);
      out << ",";
      detail::write_csv_value(out, value);
      out << "\n";
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    log << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    log << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace fracint
