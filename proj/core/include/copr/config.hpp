#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace copr {

struct SolverConfig {
  /// copr | ap
  std::string algorithm = "copr";
  double tau = 1e-8;
  int max_outer = 50;
  double rho0 = 1.0;
  double admm_tol = 1e-6;
  int admm_max_iter = 2000;
  double lambda = 0.0;
  /// l1 weights swept by sparse-demo (0 runs plain COPR).
  std::vector<double> lambdas{0.0, 0.01, 0.1, 1.0};
  int ap_iters = 500;
  /// Piston-aligned stopping tolerance used by scaling (0 disables).
  double align_tol = 1e-5;
};

struct ExperimentConfig {
  std::string scenario = "default";
  std::uint64_t seed = 1;
  int trials = 10;
  int threads = 1;

  /// modal | zonal
  std::string form = "modal";
  int m = 32;
  double aperture_radius = 0.5;
  /// Per-side basis count (n_a = k^2).
  int basis_k = 4;
  /// Basis spread; <= 0 selects the default for the layout.
  double spread = 0.0;
  std::vector<int> basis_sizes{4, 7};
  std::vector<int> scaling_k{3, 4, 5, 6, 7};
  /// Defocus coefficients in radians.
  std::vector<double> defocus{-1.5707963267948966, -0.7853981633974483, 0.0,
                              0.7853981633974483, 1.5707963267948966};
  /// Centered crop side in pixels; 0 keeps the full frame.
  int crop = 16;

  double sigma = 0.0;
  std::vector<double> sigmas{0.0, 1e-3, 3e-3, 1e-2};

  int mirror_actuators = 16;
  double mirror_stroke = 0.5;

  int sparse_nonzeros = 2;

  int fp_steps = 20;
  double fp_perturbation = 0.05;

  SolverConfig solver;

  /// Canonical YAML of every field.
  std::string dump() const;
  /// 16 hex digits of FNV-1a over dump().
  std::string hash() const;
  void validate() const;
};

ExperimentConfig parse_config(const std::string& yaml_text);
ExperimentConfig load_config(const std::filesystem::path& p);

}  // namespace copr
