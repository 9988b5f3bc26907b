#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "copr/config.hpp"
#include "copr/copr.hpp"
#include "copr/fixedpoint.hpp"
#include "copr/forward_model.hpp"

namespace copr::experiments {

/// RNG for one trial, seeded from (master seed, trial, stream).
std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t trial,
                          std::uint64_t stream = 0);

/// Runs fn(0..n-1) on `threads` workers. fn must only write to its own slot.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

struct Problem {
  PupilGrid grid;
  BasisSet basis;  // empty for zonal problems
  DiversitySet diversities;
  PropagationMatrix U;
  bool zonal = false;
};

Problem build_problem(const ExperimentConfig& cfg, int basis_k);

/// Ground truth from a random deformable-mirror phase.
struct Truth {
  RMat phi;
  /// Coefficients scaled so that |U a|^2 equals y.clean exactly.
  CVec a;
  Measurements clean;
};

Truth make_truth(const ExperimentConfig& cfg, const Problem& p, std::mt19937_64& rng);

/// Flat pupil scaled to the measured energy; used as -b0 / a0.
CVec flat_start(const Problem& p, const RVec& y);

/// Phase map of a coefficient vector on the problem's aperture.
RMat estimate_phase(const Problem& p, const CVec& a);

CoprOptions copr_options(const SolverConfig& s);

/// Dense CSV table.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void write(const std::filesystem::path& p) const;
};

std::string fmt(double v);

// --- commands ---------------------------------------------------------------

/// measurements.bin, truth.bin, phase_true.csv.
void simulate(const ExperimentConfig& cfg, const std::filesystem::path& out);

struct SolveOutcome {
  CVec a;
  bool converged = false;
  std::optional<double> aligned_error;
};

/// result.json, phase.csv, trace.csv (+ error.csv with a truth file).
SolveOutcome solve(const ExperimentConfig& cfg, const std::filesystem::path& measurements,
                   const std::optional<std::filesystem::path>& truth,
                   const std::filesystem::path& out);

struct SparseTrial {
  int trial = 0;
  double lambda = 0.0;
  std::string status;  // ok | failed
  double error = 0.0;  // piston-aligned, squared
  bool recovered = false;
  bool support_ok = false;
  CVec a_hat;
  CVec a_star;
};

struct SparseSummary {
  std::vector<SparseTrial> trials;
  /// Recovery rate per lambda, in cfg.solver.lambdas order.
  std::vector<double> recovery_rate;
};

SparseSummary sparse_demo(const ExperimentConfig& cfg, const std::filesystem::path& out);

struct ScalingRow {
  int n_a = 0;
  int n_y = 0;
  int outer = 0;
  int inner = 0;
  bool reached = false;
  double error = 0.0;
  double seconds = 0.0;
  double ms_per_iter = 0.0;
};

struct ScalingSummary {
  std::vector<ScalingRow> rows;
  double slope_total = 0.0;
  double slope_per_iter = 0.0;
};

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

ScalingSummary scaling(const ExperimentConfig& cfg, const std::filesystem::path& out);

struct NoiseCell {
  int n_a = 0;
  double sigma = 0.0;
  std::string algorithm;
  double snr_db = 0.0;  // mean over trials
  double median = 0.0;
  double q10 = 0.0;
  double q90 = 0.0;
  int failures = 0;
};

struct NoiseSummary {
  std::vector<NoiseCell> cells;
};

NoiseSummary noise_robustness(const ExperimentConfig& cfg, const std::filesystem::path& out);

struct FixedpointDiagnostics {
  std::vector<PicardRow> picard;
  std::vector<PicardRow> copr_steps;  // dist after each outer step
  double picard_error = 0.0;    // piston-aligned error to a*
  double copr_error = 0.0;
};

/// Zonal, single diversity (cfg.defocus[0]); start a* + eps with
/// ||eps|| = cfg.fp_perturbation ||a*||.
FixedpointDiagnostics fixedpoint_diagnostics(const ExperimentConfig& cfg,
                                             const std::filesystem::path& out);

}  // namespace copr::experiments
