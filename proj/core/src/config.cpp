#include "copr/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "copr/types.hpp"

namespace copr {

namespace {

template <typename T>
void read(const YAML::Node& n, const char* key, T& out) {
  if (const auto v = n[key]) out = v.as<T>();
}

}  // namespace

std::string ExperimentConfig::dump() const {
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  e << YAML::BeginMap;
  e << YAML::Key << "scenario" << YAML::Value << scenario;
  e << YAML::Key << "seed" << YAML::Value << seed;
  e << YAML::Key << "trials" << YAML::Value << trials;
  e << YAML::Key << "form" << YAML::Value << form;
  e << YAML::Key << "m" << YAML::Value << m;
  e << YAML::Key << "aperture_radius" << YAML::Value << aperture_radius;
  e << YAML::Key << "basis_k" << YAML::Value << basis_k;
  e << YAML::Key << "spread" << YAML::Value << spread;
  e << YAML::Key << "basis_sizes" << YAML::Value << YAML::Flow << basis_sizes;
  e << YAML::Key << "scaling_k" << YAML::Value << YAML::Flow << scaling_k;
  e << YAML::Key << "defocus" << YAML::Value << YAML::Flow << defocus;
  e << YAML::Key << "crop" << YAML::Value << crop;
  e << YAML::Key << "sigma" << YAML::Value << sigma;
  e << YAML::Key << "sigmas" << YAML::Value << YAML::Flow << sigmas;
  e << YAML::Key << "mirror" << YAML::Value << YAML::BeginMap
    << YAML::Key << "actuators" << YAML::Value << mirror_actuators
    << YAML::Key << "stroke" << YAML::Value << mirror_stroke << YAML::EndMap;
  e << YAML::Key << "sparse_nonzeros" << YAML::Value << sparse_nonzeros;
  e << YAML::Key << "fixedpoint" << YAML::Value << YAML::BeginMap
    << YAML::Key << "steps" << YAML::Value << fp_steps
    << YAML::Key << "perturbation" << YAML::Value << fp_perturbation << YAML::EndMap;
  e << YAML::Key << "solver" << YAML::Value << YAML::BeginMap
    << YAML::Key << "algorithm" << YAML::Value << solver.algorithm
    << YAML::Key << "tau" << YAML::Value << solver.tau
    << YAML::Key << "max_outer" << YAML::Value << solver.max_outer
    << YAML::Key << "rho0" << YAML::Value << solver.rho0
    << YAML::Key << "admm_tol" << YAML::Value << solver.admm_tol
    << YAML::Key << "admm_max_iter" << YAML::Value << solver.admm_max_iter
    << YAML::Key << "lambda" << YAML::Value << solver.lambda
    << YAML::Key << "lambdas" << YAML::Value << YAML::Flow << solver.lambdas
    << YAML::Key << "ap_iters" << YAML::Value << solver.ap_iters
    << YAML::Key << "align_tol" << YAML::Value << solver.align_tol << YAML::EndMap;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

std::string ExperimentConfig::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : dump()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& what) { throw InvalidArgument("config: " + what); };
  if (form != "modal" && form != "zonal") fail("form must be modal or zonal");
  if (m < 2) fail("m must be >= 2");
  if (!(aperture_radius > 0.0)) fail("aperture_radius must be > 0");
  if (basis_k < 1) fail("basis_k must be >= 1");
  if (trials < 1) fail("trials must be >= 1");
  if (threads < 1) fail("threads must be >= 1");
  if (defocus.empty()) fail("defocus list is empty");
  if (crop < 0 || crop > m) fail("crop must lie in [0, m]");
  if (sigma < 0.0) fail("sigma must be >= 0");
  for (double s : sigmas)
    if (s < 0.0) fail("sigmas must be >= 0");
  if (mirror_actuators < 1) fail("mirror.actuators must be >= 1");
  if (solver.algorithm != "copr" && solver.algorithm != "ap")
    fail("solver.algorithm must be copr or ap");
  if (!(solver.tau > 0.0)) fail("solver.tau must be > 0");
  if (solver.max_outer < 1) fail("solver.max_outer must be >= 1");
  if (!(solver.rho0 > 0.0)) fail("solver.rho0 must be > 0");
  if (!(solver.admm_tol > 0.0)) fail("solver.admm_tol must be > 0");
  if (solver.lambda < 0.0) fail("solver.lambda must be >= 0");
  if (solver.ap_iters < 1) fail("solver.ap_iters must be >= 1");
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  YAML::Node n;
  try {
    n = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ParseError("config: " + e.msg, static_cast<std::size_t>(e.mark.pos));
  }
  if (!n || n.IsNull()) return c;
  try {
    read(n, "scenario", c.scenario);
    read(n, "seed", c.seed);
    read(n, "trials", c.trials);
    read(n, "threads", c.threads);
    read(n, "form", c.form);
    read(n, "m", c.m);
    read(n, "aperture_radius", c.aperture_radius);
    read(n, "basis_k", c.basis_k);
    read(n, "spread", c.spread);
    read(n, "basis_sizes", c.basis_sizes);
    read(n, "scaling_k", c.scaling_k);
    read(n, "defocus", c.defocus);
    read(n, "crop", c.crop);
    read(n, "sigma", c.sigma);
    read(n, "sigmas", c.sigmas);
    read(n, "sparse_nonzeros", c.sparse_nonzeros);
    if (const auto mm = n["mirror"]) {
      read(mm, "actuators", c.mirror_actuators);
      read(mm, "stroke", c.mirror_stroke);
    }
    if (const auto fp = n["fixedpoint"]) {
      read(fp, "steps", c.fp_steps);
      read(fp, "perturbation", c.fp_perturbation);
    }
    if (const auto s = n["solver"]) {
      read(s, "algorithm", c.solver.algorithm);
      read(s, "tau", c.solver.tau);
      read(s, "max_outer", c.solver.max_outer);
      read(s, "rho0", c.solver.rho0);
      read(s, "admm_tol", c.solver.admm_tol);
      read(s, "admm_max_iter", c.solver.admm_max_iter);
      read(s, "lambda", c.solver.lambda);
      read(s, "lambdas", c.solver.lambdas);
      read(s, "ap_iters", c.solver.ap_iters);
      read(s, "align_tol", c.solver.align_tol);
    }
  } catch (const YAML::Exception& e) {
    throw ParseError("config: " + e.msg, static_cast<std::size_t>(std::max(0, e.mark.pos)));
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& p) {
  std::ifstream is(p);
  if (!is) throw IoError("cannot open config " + p.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

}  // namespace copr
