#include "copr/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "copr/baselines.hpp"
#include "copr/fixedpoint.hpp"
#include "copr/io.hpp"
#include "copr/metrics.hpp"

namespace copr::experiments {

namespace fs = std::filesystem;

std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t trial, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  threads = std::clamp(threads, 1, std::max(1, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(err_mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void Table::write(const fs::path& p) const {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw IoError("cannot open " + p.string() + " for writing");
  for (std::size_t j = 0; j < header.size(); ++j) os << (j ? "," : "") << header[j];
  os << '\n';
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < r.size(); ++j) os << (j ? "," : "") << r[j];
    os << '\n';
  }
  if (!os) throw IoError("write failed: " + p.string());
}

namespace {

void prepare(const ExperimentConfig& cfg, const fs::path& out) {
  if (out.empty()) return;
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());
  io::write_text(out / "config.yaml", cfg.dump());
}

ExperimentConfig with_basis(ExperimentConfig cfg, int k) {
  cfg.basis_k = k;
  return cfg;
}

CVec vec_field(const CMat& f) { return Eigen::Map<const CVec>(f.data(), f.size()); }

}  // namespace

Problem build_problem(const ExperimentConfig& cfg, int basis_k) {
  Problem p;
  p.grid = make_pupil_grid(cfg.m, cfg.aperture_radius);
  p.diversities = make_defocus_diversities(p.grid, cfg.defocus);
  p.zonal = cfg.form == "zonal";
  if (p.zonal) {
    p.U = build_zonal_U(p.grid, p.diversities);
  } else {
    p.basis = cfg.spread > 0.0 ? make_basis(p.grid, basis_k, cfg.spread)
                               : make_basis(p.grid, basis_k);
    std::optional<CropWindow> crop;
    if (cfg.crop > 0) crop = CropWindow{cfg.crop};
    p.U = build_modal_U(p.basis, p.diversities, crop);
  }
  return p;
}

Truth make_truth(const ExperimentConfig& cfg, const Problem& p, std::mt19937_64& rng) {
  const MirrorModel mirror = make_mirror(p.grid, cfg.mirror_actuators, cfg.mirror_stroke);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  RVec u(mirror.actuator_count());
  for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = ud(rng);
  Truth t;
  t.phi = mirror_phase(mirror, u);
  CMat field(p.grid.m, p.grid.m);
  for (int j = 0; j < p.grid.m; ++j)
    for (int i = 0; i < p.grid.m; ++i)
      field(i, j) = p.grid.mask(i, j) ? std::polar(1.0, t.phi(i, j)) : cplx(0.0, 0.0);
  const CVec a = p.zonal ? vec_field(field) : fit_field(p.basis, field);
  t.clean = simulate_measurements(p.U, a);
  t.a = a / std::sqrt(t.clean.normalization);
  return t;
}

CVec flat_start(const Problem& p, const RVec& y) {
  CVec flat;
  if (p.zonal) {
    flat = vec_field(p.grid.mask.cast<double>().cast<cplx>());
  } else {
    flat = flat_pupil_coefficients(p.basis);
  }
  const double model = p.U.apply(flat).norm();
  const double meas = y.cwiseMax(0.0).sum();  // ||sqrt(y)||^2
  return flat * (model > 0.0 ? std::sqrt(meas) / model : 1.0);
}

RMat estimate_phase(const Problem& p, const CVec& a) {
  if (!p.zonal) return phase_from_coeffs(p.basis, a);
  const int m = p.grid.m;
  RMat phase = RMat::Zero(m, m);
  const CMat f = unvec(a, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i)
      if (p.grid.mask(i, j)) phase(i, j) = std::arg(f(i, j));
  return phase;
}

CoprOptions copr_options(const SolverConfig& s) {
  CoprOptions o;
  o.tau = s.tau;
  o.max_outer = s.max_outer;
  o.lambda = s.lambda;
  o.inner.rho0 = s.rho0;
  o.inner.tol = s.admm_tol;
  o.inner.max_iter = s.admm_max_iter;
  return o;
}

// ---------------------------------------------------------------------------

void simulate(const ExperimentConfig& cfg, const fs::path& out) {
  prepare(cfg, out);
  const Problem p = build_problem(cfg, cfg.basis_k);
  auto rng = trial_rng(cfg.seed, 0);
  const Truth t = make_truth(cfg, p, rng);
  const Measurements y = add_noise(t.clean, cfg.sigma, rng());
  io::save(out / "measurements.bin", io::from_measurements(y));
  io::save(out / "truth.bin", io::from_coefficients(t.a));
  std::ofstream os(out / "phase_true.csv");
  io::write_matrix_csv(os, t.phi);
}

SolveOutcome solve(const ExperimentConfig& cfg, const fs::path& measurements,
                   const std::optional<fs::path>& truth, const fs::path& out) {
  const Measurements y = io::to_measurements(io::load(measurements));
  std::optional<CVec> a_star;
  if (truth) a_star = io::to_coefficients(io::load(*truth));
  prepare(cfg, out);
  const Problem p = build_problem(cfg, cfg.basis_k);
  if (y.y.size() != p.U.rows())
    throw DimensionMismatch("measurement length " + std::to_string(y.y.size()) +
                            " does not match the configured model (" +
                            std::to_string(p.U.rows()) + ")");
  const CVec start = flat_start(p, y.y);

  SolveOutcome res;
  if (cfg.solver.algorithm == "ap") {
    const ApResult r = alternating_projections(p.U, y.y, start, cfg.solver.ap_iters);
    res.a = r.a;
    std::ofstream os(out / "trace.csv");
    write_trace_csv(os, r.trace, false);
    CoprResult shim;
    shim.a = r.a;
    io::write_text(out / "result.json", io::copr_result_json(shim));
  } else {
    CoprOptions o = copr_options(cfg.solver);
    o.b0 = -start;
    const CoprResult r = copr(p.U, y.y, o);
    res.a = r.a;
    res.converged = r.converged;
    io::write_text(out / "result.json", io::copr_result_json(r));
    std::ofstream os(out / "trace.csv");
    write_outer_csv(os, r);
  }
  {
    std::ofstream os(out / "phase.csv");
    io::write_matrix_csv(os, estimate_phase(p, res.a));
  }
  if (a_star) {
    if (a_star->size() != res.a.size())
      throw DimensionMismatch("truth length does not match the model");
    res.aligned_error = piston_align(res.a, *a_star).error;
    Table t{{"seed", "config_hash", "aligned_error"},
            {{std::to_string(cfg.seed), cfg.hash(), fmt(*res.aligned_error)}}};
    t.write(out / "error.csv");
  }
  return res;
}

// ---------------------------------------------------------------------------

SparseSummary sparse_demo(const ExperimentConfig& cfg, const fs::path& out) {
  prepare(cfg, out);
  const Problem p = build_problem(cfg, cfg.basis_k);
  const auto n_a = p.U.cols();
  const auto& lambdas = cfg.solver.lambdas;
  const int n_l = static_cast<int>(lambdas.size());
  if (cfg.sparse_nonzeros < 1 || cfg.sparse_nonzeros > n_a)
    throw InvalidArgument("sparse_nonzeros must lie in [1, n_a]");

  std::vector<SparseTrial> slots(static_cast<std::size_t>(cfg.trials) * n_l);
  parallel_for(cfg.trials * n_l, cfg.threads, [&](int job) {
    const int trial = job / n_l;
    const int li = job % n_l;
    auto rng = trial_rng(cfg.seed, static_cast<std::uint64_t>(trial));
    std::vector<int> idx(n_a);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::normal_distribution<double> nd(0.0, 1.0);
    CVec a = CVec::Zero(n_a);
    for (int k = 0; k < cfg.sparse_nonzeros; ++k) a(idx[k]) = cplx(nd(rng), nd(rng));
    const Measurements y = simulate_measurements(p.U, a);
    a /= std::sqrt(y.normalization);

    SparseTrial& s = slots[static_cast<std::size_t>(job)];
    s.trial = trial;
    s.lambda = lambdas[li];
    s.a_star = a;
    CoprOptions o = copr_options(cfg.solver);
    o.lambda = lambdas[li];
    try {
      const CoprResult r = copr(p.U, y.y, o);
      s.a_hat = r.a;
      s.status = "ok";
    } catch (const Error& e) {
      s.status = "failed";
      s.a_hat = CVec::Zero(n_a);
    }
    s.error = s.a_hat.squaredNorm() > 0.0 ? piston_align(s.a_hat, a).error
                                          : a.squaredNorm();
    const double thr = 1e-2 * a.cwiseAbs().maxCoeff();
    bool support = true;
    for (Eigen::Index i = 0; i < n_a; ++i)
      support = support && ((std::abs(a(i)) > 0.0) == (std::abs(s.a_hat(i)) > thr));
    s.support_ok = support;
    s.recovered = support && s.error <= 1e-3;
  });

  SparseSummary sum;
  sum.trials = slots;
  sum.recovery_rate.assign(lambdas.size(), 0.0);
  for (const auto& s : slots) {
    const auto li = std::find(lambdas.begin(), lambdas.end(), s.lambda) - lambdas.begin();
    sum.recovery_rate[static_cast<std::size_t>(li)] += s.recovered ? 1.0 / cfg.trials : 0.0;
  }
  if (out.empty()) return sum;

  const std::string seed = std::to_string(cfg.seed), hash = cfg.hash();
  Table res{{"seed", "config_hash", "trial", "lambda", "status", "aligned_error",
             "recovered", "support_ok"}, {}};
  Table mags{{"seed", "config_hash", "trial", "lambda", "index", "abs_true", "abs_est"}, {}};
  for (const auto& s : slots) {
    res.rows.push_back({seed, hash, std::to_string(s.trial), fmt(s.lambda), s.status,
                        fmt(s.error), s.recovered ? "1" : "0", s.support_ok ? "1" : "0"});
    const Alignment al = s.a_hat.squaredNorm() > 0.0 ? piston_align(s.a_hat, s.a_star)
                                                     : Alignment{};
    for (Eigen::Index i = 0; i < n_a; ++i)
      mags.rows.push_back({seed, hash, std::to_string(s.trial), fmt(s.lambda),
                           std::to_string(i), fmt(std::abs(s.a_star(i))),
                           fmt(std::abs(al.c * s.a_hat(i)))});
  }
  res.write(out / "sparse.csv");
  mags.write(out / "magnitudes.csv");
  Table rate{{"seed", "config_hash", "lambda", "recovery_rate"}, {}};
  for (int li = 0; li < n_l; ++li)
    rate.rows.push_back({seed, hash, fmt(lambdas[li]), fmt(sum.recovery_rate[li])});
  rate.write(out / "summary.csv");
  return sum;
}

// ---------------------------------------------------------------------------

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw InvalidArgument("loglog_slope: need two or more paired points");
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ScalingSummary scaling(const ExperimentConfig& cfg, const fs::path& out) {
  using clock = std::chrono::steady_clock;
  prepare(cfg, out);
  ScalingSummary sum;
  // Timings are taken sequentially so that workers do not compete.
  for (int k : cfg.scaling_k) {
    const Problem p = build_problem(cfg, k);
    auto rng = trial_rng(cfg.seed, static_cast<std::uint64_t>(k));
    const Truth t = make_truth(with_basis(cfg, k), p, rng);
    CoprOptions o = copr_options(cfg.solver);
    o.b0 = -flat_start(p, t.clean.y);
    if (cfg.solver.align_tol > 0.0)
      o.stop_when = [&](const CVec& a) {
        return piston_align(a, t.a).error <= cfg.solver.align_tol;
      };
    ScalingRow row;
    row.n_a = static_cast<int>(p.U.cols());
    row.n_y = static_cast<int>(p.U.rows());
    const auto t0 = clock::now();
    try {
      const CoprResult r = copr(p.U, t.clean.y, o);
      row.seconds = std::chrono::duration<double>(clock::now() - t0).count();
      row.outer = static_cast<int>(r.outer_trace.size());
      row.inner = r.total_inner;
      row.error = piston_align(r.a, t.a).error;
    } catch (const CoprFailure& e) {
      row.seconds = std::chrono::duration<double>(clock::now() - t0).count();
      row.outer = static_cast<int>(e.partial().outer_trace.size());
      row.inner = e.partial().total_inner;
      row.error = std::numeric_limits<double>::infinity();
    }
    row.reached = row.error <= cfg.solver.align_tol;
    row.ms_per_iter = row.inner > 0 ? 1e3 * row.seconds / row.inner : 0.0;
    sum.rows.push_back(row);
  }
  std::vector<double> na, secs, per;
  for (const auto& r : sum.rows) {
    na.push_back(r.n_a);
    secs.push_back(std::max(r.seconds, 1e-9));
    per.push_back(std::max(r.ms_per_iter, 1e-9));
  }
  if (sum.rows.size() >= 2) {
    sum.slope_total = loglog_slope(na, secs);
    sum.slope_per_iter = loglog_slope(na, per);
  }
  if (out.empty()) return sum;

  const std::string seed = std::to_string(cfg.seed), hash = cfg.hash();
  Table res{{"seed", "config_hash", "n_a", "n_y", "outer", "inner", "reached", "aligned_error"}, {}};
  Table tim{{"seed", "config_hash", "n_a", "seconds", "ms_per_iter"}, {}};
  for (const auto& r : sum.rows) {
    res.rows.push_back({seed, hash, std::to_string(r.n_a), std::to_string(r.n_y),
                        std::to_string(r.outer), std::to_string(r.inner),
                        r.reached ? "1" : "0", fmt(r.error)});
    tim.rows.push_back({seed, hash, std::to_string(r.n_a), fmt(r.seconds), fmt(r.ms_per_iter)});
  }
  tim.rows.push_back({seed, hash, "slope_total", fmt(sum.slope_total), fmt(sum.slope_per_iter)});
  res.write(out / "scaling.csv");
  tim.write(out / "timing.csv");
  return sum;
}

// ---------------------------------------------------------------------------

NoiseSummary noise_robustness(const ExperimentConfig& cfg, const fs::path& out) {
  prepare(cfg, out);
  const int n_s = static_cast<int>(cfg.sigmas.size());
  const int n_b = static_cast<int>(cfg.basis_sizes.size());
  const int n_t = cfg.trials;
  static const char* kAlgs[2] = {"copr", "ap"};

  struct Slot {
    double snr = 0.0;
    double strehl[2] = {0.0, 0.0};
    bool failed[2] = {false, false};
  };
  std::vector<Problem> problems;
  for (int k : cfg.basis_sizes) problems.push_back(build_problem(cfg, k));
  std::vector<Slot> slots(static_cast<std::size_t>(n_b) * n_s * n_t);

  parallel_for(static_cast<int>(slots.size()), cfg.threads, [&](int job) {
    const int t = job % n_t;
    const int s = (job / n_t) % n_s;
    const int b = job / (n_t * n_s);
    const Problem& p = problems[b];
    // Same mirror shape for a trial across noise levels and bases.
    auto rng = trial_rng(cfg.seed, static_cast<std::uint64_t>(t));
    const Truth truth = make_truth(cfg, p, rng);
    auto noise_rng = trial_rng(cfg.seed, static_cast<std::uint64_t>(t),
                               1 + static_cast<std::uint64_t>(s));
    const Measurements y = add_noise(truth.clean, cfg.sigmas[s], noise_rng());
    Slot& out_slot = slots[static_cast<std::size_t>(job)];
    out_slot.snr = snr_db(truth.clean.y, y.y);
    const CVec start = flat_start(p, y.y);

    for (int alg = 0; alg < 2; ++alg) {
      try {
        CVec a_hat;
        if (alg == 0) {
          CoprOptions o = copr_options(cfg.solver);
          o.b0 = -start;
          o.min_progress = 1e-3;
          a_hat = copr(p.U, y.y, o).a;
        } else {
          a_hat = alternating_projections(p.U, y.y, start, cfg.solver.ap_iters).a;
        }
        out_slot.strehl[alg] = strehl(truth.phi, estimate_phase(p, a_hat), p.grid.mask);
      } catch (const Error&) {
        out_slot.failed[alg] = true;
        out_slot.strehl[alg] = 0.0;
      }
    }
  });

  NoiseSummary sum;
  const std::string seed = std::to_string(cfg.seed), hash = cfg.hash();
  Table trials{{"seed", "config_hash", "n_a", "sigma", "trial", "snr_db", "algorithm",
                "strehl", "failed"}, {}};
  for (int b = 0; b < n_b; ++b)
    for (int s = 0; s < n_s; ++s)
      for (int alg = 0; alg < 2; ++alg) {
        NoiseCell cell;
        cell.n_a = static_cast<int>(problems[b].U.cols());
        cell.sigma = cfg.sigmas[s];
        cell.algorithm = kAlgs[alg];
        std::vector<double> vals;
        double snr_sum = 0.0;
        for (int t = 0; t < n_t; ++t) {
          const Slot& sl = slots[(static_cast<std::size_t>(b) * n_s + s) * n_t + t];
          vals.push_back(sl.strehl[alg]);
          snr_sum += sl.snr;
          cell.failures += sl.failed[alg] ? 1 : 0;
          trials.rows.push_back({seed, hash, std::to_string(cell.n_a), fmt(cell.sigma),
                                 std::to_string(t), fmt(sl.snr), cell.algorithm,
                                 fmt(sl.strehl[alg]), sl.failed[alg] ? "1" : "0"});
        }
        cell.snr_db = snr_sum / n_t;
        cell.median = quantile(vals, 0.5);
        cell.q10 = quantile(vals, 0.1);
        cell.q90 = quantile(vals, 0.9);
        sum.cells.push_back(cell);
      }
  if (out.empty()) return sum;
  trials.write(out / "trials.csv");
  Table cells{{"seed", "config_hash", "n_a", "sigma", "snr_db", "algorithm", "strehl_median",
               "strehl_q10", "strehl_q90", "failures"}, {}};
  for (const auto& c : sum.cells)
    cells.rows.push_back({seed, hash, std::to_string(c.n_a), fmt(c.sigma), fmt(c.snr_db),
                          c.algorithm, fmt(c.median), fmt(c.q10), fmt(c.q90),
                          std::to_string(c.failures)});
  cells.write(out / "summary.csv");
  return sum;
}

// ---------------------------------------------------------------------------

FixedpointDiagnostics fixedpoint_diagnostics(const ExperimentConfig& cfg,
                                             const fs::path& out) {
  prepare(cfg, out);
  ExperimentConfig zc = cfg;
  zc.form = "zonal";
  zc.defocus = {cfg.defocus.front()};
  const Problem p = build_problem(zc, zc.basis_k);
  auto rng = trial_rng(cfg.seed, 0);
  const Truth t = make_truth(zc, p, rng);
  if (t.clean.y.minCoeff() <= 0.0)
    throw InvalidArgument("fixedpoint-diagnostics needs all measurements > 0");

  std::normal_distribution<double> nd(0.0, 1.0);
  CVec eps(t.a.size());
  for (Eigen::Index i = 0; i < eps.size(); ++i) eps(i) = cplx(nd(rng), nd(rng));
  eps *= cfg.fp_perturbation * t.a.norm() / eps.norm();
  const CVec a0 = t.a + eps;
  const RVec& y = t.clean.y;

  FixedpointDiagnostics d;
  const PicardResult pr = picard(a0, y, p.U, cfg.fp_steps);
  d.picard = pr.rows;
  d.picard_error = piston_align(pr.a, t.a).error;

  CoprOptions o = copr_options(cfg.solver);
  o.b0 = -a0;
  o.max_outer = cfg.fp_steps;
  CVec a = a0;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  double prev = distance_to_solution_set(p.U, a0, y);
  d.copr_steps.push_back({0, prev, nan});
  o.max_outer = 1;
  for (int k = 1; k <= cfg.fp_steps; ++k) {
    o.b0 = -a;
    a = copr(p.U, y, o).a;
    const double dist = distance_to_solution_set(p.U, a, y);
    d.copr_steps.push_back({k, dist, prev > 0.0 ? dist / prev : nan});
    prev = dist;
  }
  d.copr_error = piston_align(a, t.a).error;
  if (out.empty()) return d;

  const std::string seed = std::to_string(cfg.seed), hash = cfg.hash();
  Table tab{{"seed", "config_hash", "method", "k", "dist", "ratio"}, {}};
  for (const auto& r : d.picard)
    tab.rows.push_back({seed, hash, "picard", std::to_string(r.k), fmt(r.dist), fmt(r.ratio)});
  for (const auto& r : d.copr_steps)
    tab.rows.push_back({seed, hash, "copr", std::to_string(r.k), fmt(r.dist), fmt(r.ratio)});
  tab.write(out / "fixedpoint.csv");
  Table err{{"seed", "config_hash", "method", "aligned_error"},
            {{seed, hash, "picard", fmt(d.picard_error)}, {seed, hash, "copr", fmt(d.copr_error)}}};
  err.write(out / "alignment.csv");
  return d;
}

}  // namespace copr::experiments
