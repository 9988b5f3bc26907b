#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "copr/config.hpp"
#include "copr/experiments.hpp"
#include "copr/io.hpp"
#include "copr/types.hpp"

namespace fs = std::filesystem;
namespace ex = copr::experiments;

namespace {

enum Exit { kOk = 0, kIo = 1, kUsage = 2, kNumerical = 3 };

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  int threads = 1;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "YAML scenario file");
  sub->add_option("--seed", c.seed, "Master seed (overrides the config)");
  sub->add_option("--out", c.out, "Output directory")->capture_default_str();
  sub->add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber);
}

copr::ExperimentConfig resolve(const Common& c) {
  copr::ExperimentConfig cfg;
  if (!c.config.empty()) cfg = copr::load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  cfg.threads = c.threads;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phase retrieval by convex optimization"};
  app.require_subcommand(1);
  Common common;

  auto* sim = app.add_subcommand("simulate", "Simulate measurements from a mirror phase");
  add_common(sim, common);

  auto* solve = app.add_subcommand("solve", "Retrieve coefficients from measurements");
  add_common(solve, common);
  std::string meas, truth, algorithm;
  solve->add_option("measurements", meas, "Measurement file (.bin or .csv)")->required();
  solve->add_option("--truth", truth, "True coefficients for error reporting");
  solve->add_option("--algorithm", algorithm, "copr | ap (overrides the config)");

  auto* sparse = app.add_subcommand("sparse-demo", "Sparse recovery from 8 measurements");
  add_common(sparse, common);
  auto* scale = app.add_subcommand("scaling", "Run time versus number of basis functions");
  add_common(scale, common);
  auto* noise = app.add_subcommand("noise-robustness", "Strehl ratio versus noise level");
  add_common(noise, common);
  auto* fp = app.add_subcommand("fixedpoint-diagnostics", "Picard iteration convergence");
  add_common(fp, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    copr::ExperimentConfig cfg = resolve(common);
    const fs::path out = common.out;
    if (sim->parsed()) {
      ex::simulate(cfg, out);
    } else if (solve->parsed()) {
      if (!algorithm.empty()) {
        if (algorithm != "copr" && algorithm != "ap") {
          std::cerr << "error: unknown algorithm '" << algorithm << "' (expected copr or ap)\n";
          return kUsage;
        }
        cfg.solver.algorithm = algorithm;
      }
      std::optional<fs::path> tp;
      if (!truth.empty()) tp = truth;
      const auto r = ex::solve(cfg, meas, tp, out);
      if (r.aligned_error) std::cout << "aligned_error " << *r.aligned_error << '\n';
    } else if (sparse->parsed()) {
      const auto s = ex::sparse_demo(cfg, out);
      for (std::size_t i = 0; i < s.recovery_rate.size(); ++i)
        std::cout << "lambda " << cfg.solver.lambdas[i] << " recovery " << s.recovery_rate[i]
                  << '\n';
    } else if (scale->parsed()) {
      const auto s = ex::scaling(cfg, out);
      std::cout << "slope " << s.slope_total << '\n';
    } else if (noise->parsed()) {
      ex::noise_robustness(cfg, out);
    } else if (fp->parsed()) {
      const auto d = ex::fixedpoint_diagnostics(cfg, out);
      std::cout << "picard_error " << d.picard_error << " copr_error " << d.copr_error << '\n';
    }
  } catch (const copr::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const copr::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const copr::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const copr::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  }
  return kOk;
}
