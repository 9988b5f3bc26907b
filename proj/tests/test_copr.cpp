#include <doctest.h>

#include <random>
#include <sstream>

#include "copr/copr.hpp"
#include "copr/fixedpoint.hpp"
#include "copr/io.hpp"
#include "copr/metrics.hpp"
#include "oracles.hpp"

using namespace copr;

TEST_SUITE("copr") {

TEST_CASE("misfit") {
  std::mt19937_64 rng(1);
  const CMat Ud = oracle::random_cmat(rng, 6, 3);
  const auto U = PropagationMatrix::from_dense(Ud);
  const CVec a = oracle::random_cvec(rng, 3);
  RVec y = (Ud * a).cwiseAbs2();
  CHECK(misfit(U, a, y) <= 1e-12);
  y(2) += 0.125;
  CHECK(misfit(U, a, y) == doctest::Approx(0.125).epsilon(1e-10));
  for (int trial = 0; trial < 10; ++trial) {
    const CVec x = oracle::random_cvec(rng, 3);
    CHECK(std::abs(misfit(U, x, y) - (nuclear_norm(build_M(U, x, -x, y)) - 6.0)) <= 1e-8);
  }
}

TEST_CASE("exact start terminates immediately") {
  std::mt19937_64 rng(2);
  const CMat Ud = oracle::random_cmat(rng, 12, 3);
  const auto U = PropagationMatrix::from_dense(Ud);
  const CVec a = oracle::random_cvec(rng, 3);
  const RVec y = (Ud * a).cwiseAbs2();
  CoprOptions o;
  o.b0 = CVec(-a);
  const CoprResult r = copr::copr(U, y, o);
  CHECK(r.converged);
  CHECK(r.outer_trace.size() <= 2);
  CHECK(r.outer_trace.back().misfit <= 1e-8);

  o.max_outer = 1;
  o.b0 = CVec(-a - 0.1 * oracle::random_cvec(rng, 3));
  const CoprResult one = copr::copr(U, y, o);
  CHECK(one.outer_trace.size() == 1);

  o.tau = 0.0;
  CHECK_THROWS_AS(copr::copr(U, y, o), InvalidArgument);
}

TEST_CASE("fixed-point membership") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const CMat Ud = oracle::random_cmat(rng, 10, 3);
    const auto U = PropagationMatrix::from_dense(Ud);
    const CVec a = oracle::random_cvec(rng, 3);
    const RVec y = (Ud * a).cwiseAbs2();
    const AdmmResult r = nn_admm(U, -a, y);
    CHECK(misfit(U, r.a, y) <= misfit(U, a, y) + 1e-8);
    CHECK(std::abs(r.nuclear_norm - 10.0) <= 1e-6);
  }
}

TEST_CASE("zonal unitary problem converges linearly") {
  std::mt19937_64 rng(4);
  const PupilGrid g = make_pupil_grid(4, 1.0);
  const PropagationMatrix U = build_zonal_U(g, make_defocus_diversities(g, {0.7, -0.4}));
  const CVec a = oracle::random_cvec(rng, 16);
  const RVec y = U.apply(a).cwiseAbs2();
  CoprOptions o;
  o.b0 = CVec(-(a + 0.05 * a.norm() * oracle::random_cvec(rng, 16).normalized()));
  o.max_outer = 40;
  o.tau = 1e-9;
  o.inner.tol = 1e-9;
  o.inner.max_iter = 5000;
  const CoprResult r = copr::copr(U, y, o);
  const auto& t = r.outer_trace;
  REQUIRE(t.size() >= 3);
  // Non-increasing misfit and a contraction rate below 0.95 after burn-in.
  for (std::size_t k = 1; k < t.size(); ++k) CHECK(t[k].misfit <= t[k - 1].misfit + 1e-6);
  for (std::size_t k = 2; k < t.size(); ++k)
    if (t[k - 1].misfit > 1e-7) CHECK(t[k].misfit <= 0.95 * t[k - 1].misfit);
}

TEST_CASE("one outer step equals the unitary fixed-point operator") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const CMat Ud = oracle::random_unitary(rng, 4);
    const auto U = PropagationMatrix::from_dense(Ud);
    const CVec a_star = oracle::random_cvec(rng, 4);
    const RVec y = (Ud * a_star).cwiseAbs2();
    const CVec a = a_star + 0.3 * oracle::random_cvec(rng, 4);
    CoprOptions o;
    o.b0 = CVec(-a);
    o.max_outer = 1;
    o.inner.tol = 1e-10;
    o.inner.max_iter = 20000;
    const CoprResult r = copr::copr(U, y, o);
    CHECK((r.a - t_unitary(a, y, U)).norm() <= 1e-4);
  }
}

TEST_CASE("result json") {
  CoprResult r;
  r.a = CVec(2);
  r.a << cplx(1, 2), cplx(-3, 0.5);
  r.outer_trace.push_back({1, 0.5, 10.5, 12, true});
  const std::string js = io::copr_result_json(r, -1);
  CHECK(js.find("\"a\":[[1.0,2.0],[-3.0,0.5]]") != std::string::npos);
  CHECK(js.find("\"misfit\":[0.5]") != std::string::npos);
  std::ostringstream os;
  write_outer_csv(os, r);
  CHECK(os.str() == "outer,misfit,nuclear_norm,inner_iters,inner_converged\n1,0.5,10.5,12,1\n");
}

}  // TEST_SUITE
