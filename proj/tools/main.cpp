#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <string>

#include "fracint/cli.hpp"

namespace {

void add_common_options(CLI::App* cmd, fracint::RunConfig& config, bool needs_grid) {
  cmd->add_option("--alpha", config.alpha, "fractional order in (0, 1)")->required();
  cmd->add_option("--a", config.a, "integration start");
  cmd->add_option("--b", config.b, "integration end");
  if (needs_grid) {
    cmd->add_option("--steps", config.steps, "number of uniform grid steps");
    cmd->add_option("--grid-file", config.grid_file, "file with one grid time per line");
  }
  cmd->add_option("--f", config.f_spec, "driving function (const|linear|monomial:p|cos|exp)");
  cmd->add_option("--out", config.out_path, "output file (default stdout)");
}

int dispatch(const std::string& name, const fracint::RunConfig& config) {
  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!config.out_path.empty()) {
    file.open(config.out_path, std::ios::binary);
    if (!file) {
      std::cerr << "config error: 'out': cannot open '" << config.out_path << "'\n";
      return fracint::kExitConfig;
    }
    out = &file;
  }
  if (name == "integrate") return fracint::cmd_integrate(config, *out, std::cerr);
  if (name == "kernel") return fracint::cmd_kernel(config, *out, std::cout);
  if (name == "convergence") return fracint::cmd_convergence(config, *out, std::cout);
  if (name == "bench") return fracint::cmd_bench(config, *out, std::cout);
  if (name == "oracle") return fracint::cmd_oracle(config, *out, std::cerr);
  std::cerr << "config error: 'command': unknown command '" << name << "'\n";
  return fracint::kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Riemann-Liouville fractional integrals via diffusive representations"};
  app.require_subcommand(1);

  fracint::RunConfig config;

  CLI::App* integrate = app.add_subcommand("integrate", "compute I_a^alpha f on a time grid");
  add_common_options(integrate, config, true);
  integrate->add_option("--method", config.method,
                        "evaluation method (expsum|gauss-laguerre|direct|oracle)");
  integrate->add_option("--epsilon", config.epsilon, "kernel budget accuracy (expsum)");
  integrate->add_option("--delta", config.delta, "kernel validity lower time (expsum)");
  integrate->add_option("--Lambda", config.lambda, "quadrature size (gauss-laguerre)");
  integrate->add_option("--stepper", config.stepper,
                        "ODE stepper (backward-euler|trapezoidal)");
  integrate->add_flag("--truncate-j1", config.truncate_j1,
                      "sum only the leading ceil(Lambda/2) terms of the fast-decaying branch");

  CLI::App* kernel = app.add_subcommand("kernel", "build and certify an exponential-sum kernel");
  kernel->add_option("--alpha", config.alpha, "fractional order in (0, 1)")->required();
  kernel->add_option("--epsilon", config.epsilon, "target relative accuracy")->required();
  kernel->add_option("--delta", config.delta, "validity window lower time")->required();
  kernel->add_option("--horizon", config.horizon, "validity window upper time (default b - a)");
  kernel->add_option("--a", config.a, "integration start");
  kernel->add_option("--b", config.b, "integration end");
  kernel->add_option("--out", config.out_path, "kernel file (default stdout)");

  CLI::App* convergence =
      app.add_subcommand("convergence", "error sweep over the step width or the rule size");
  add_common_options(convergence, config, false);
  convergence->add_option("--sweep", config.sweep, "sweep axis (h|Lambda)");
  convergence->add_option("--h0", config.h0, "coarsest step width for the h sweep");
  convergence->add_option("--levels", config.levels, "number of halvings for the h sweep");
  convergence->add_option("--Lambda-list", config.lambda_list,
                          "rule sizes for the Lambda sweep")->delimiter(',');
  convergence->add_option("--Lambda", config.lambda, "rule size used during the h sweep");
  convergence->add_option("--stepper", config.stepper,
                          "ODE stepper (backward-euler|trapezoidal)");
  convergence->add_option("--steps", config.steps, "grid steps for the Lambda sweep");

  CLI::App* bench = app.add_subcommand("bench", "operation-count scaling of fast vs direct");
  add_common_options(bench, config, false);
  bench->add_option("--P-list", config.p_list, "doubling list of grid sizes")->delimiter(',');
  bench->add_option("--epsilon", config.epsilon, "kernel budget accuracy");
  bench->add_option("--delta", config.delta, "kernel validity lower time");

  CLI::App* oracle = app.add_subcommand("oracle", "reference values of I_a^alpha f");
  add_common_options(oracle, config, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return fracint::kExitConfig;
  }

  for (CLI::App* sub : app.get_subcommands()) return dispatch(sub->get_name(), config);
  return fracint::kExitConfig;
}
