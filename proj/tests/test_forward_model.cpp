#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <fftw3.h>

#include "copr/forward_model.hpp"
#include "oracles.hpp"

using namespace copr;

TEST_SUITE("forward_model") {

TEST_CASE("pupil grid geometry") {
  const PupilGrid g2 = make_pupil_grid(2, 1.0);
  CHECK(g2.mask.size() == 4);
  // Corners of a 2x2 grid sit at (+-0.5, +-0.5), inside radius 1.
  CHECK(g2.aperture_pixels() == 4);

  const PupilGrid g = make_pupil_grid(128, 0.4);
  const double expect = std::numbers::pi * std::pow(0.4 * 64, 2);
  CHECK(std::abs(g.aperture_pixels() - expect) / expect < 0.02);

  const PupilGrid g8 = make_pupil_grid(8, 0.4);
  CHECK(g8.mask == g8.mask.rowwise().reverse().eval());
  CHECK(g8.mask == g8.mask.colwise().reverse().eval());

  CHECK_THROWS_AS(make_pupil_grid(1, 0.5), InvalidArgument);
  CHECK_THROWS_AS(make_pupil_grid(8, 0.0), InvalidArgument);
  CHECK_THROWS_AS(make_pupil_grid(8, 1.5), InvalidArgument);
}

TEST_CASE("defocus phase") {
  const PupilGrid g = make_pupil_grid(33, 1.0);
  CHECK(defocus_phase(g, 0.0).cwiseAbs().maxCoeff() == 0.0);
  const double c = std::numbers::pi / 8;
  const RMat p = defocus_phase(g, c);
  const RMat n = defocus_phase(g, -c);
  CHECK((p + n).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  // Centre pixel of an odd grid is rho = 0: value c * Z(0) = -c.
  CHECK(p(16, 16) == doctest::Approx(-c));
  for (int j = 0; j < 33; ++j)
    for (int i = 0; i < 33; ++i)
      if (g.mask(i, j)) {
        const double rho2 = g.x(i, j) * g.x(i, j) + g.y(i, j) * g.y(i, j);
        CHECK(p(i, j) == doctest::Approx(c * (2.0 * rho2 - 1.0)));
      }
  // Z(1) - Z(0) = 2.
  CHECK(c * (2.0 * 1.0 - 1.0) - p(16, 16) == doctest::Approx(2.0 * c));
  for (Eigen::Index k = 0; k < p.size(); ++k)
    if (!g.mask.data()[k]) CHECK(p.data()[k] == 0.0);
}

TEST_CASE("radial basis") {
  const PupilGrid g = make_pupil_grid(9, 1.0);
  const BasisSet b1 = make_basis(g, 1, 2.0);
  CHECK(b1.size() == 1);
  CHECK(b1.functions[0](4, 4) == doctest::Approx(1.0));
  CHECK(b1.functions[0].maxCoeff() == doctest::Approx(1.0));

  const PupilGrid g32 = make_pupil_grid(32, 0.5);
  const BasisSet b4 = make_basis(g32, 4);
  CHECK(b4.size() == 16);
  for (const auto& G : b4.functions)
    for (Eigen::Index k = 0; k < G.size(); ++k)
      if (!g32.mask.data()[k]) CHECK(G.data()[k] == 0.0);
  // Invariant: G_i = chi * exp(-lambda |r - c_i|^2).
  const auto& c = b4.centers[5];
  const double lam = b4.spread[5];
  for (int j = 0; j < 32; ++j)
    for (int i = 0; i < 32; ++i) {
      const double expect = g32.mask(i, j)
          ? std::exp(-lam * (std::pow(g32.x(i, j) - c.x(), 2) + std::pow(g32.y(i, j) - c.y(), 2)))
          : 0.0;
      CHECK(b4.functions[5](i, j) == doctest::Approx(expect).epsilon(1e-14));
    }
  CHECK_THROWS_AS(make_basis(g32, 4, -1.0), InvalidArgument);
  CHECK_THROWS_AS(make_basis(g32, 0, 1.0), InvalidArgument);
}

namespace {

// Full-frame centred DFT via FFTW on an m x m field, then a centred crop.
CVec fftw_column(const CMat& field, int w) {
  const int m = static_cast<int>(field.rows());
  CMat in = field, out(m, m);
  // Column-major m x m is a row-major transpose; a 2-D DFT commutes with it.
  fftw_plan plan = fftw_plan_dft_2d(m, m, reinterpret_cast<fftw_complex*>(in.data()),
                                    reinterpret_cast<fftw_complex*>(out.data()),
                                    FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
  out /= static_cast<double>(m);
  CMat shifted(m, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) shifted((i + m / 2) % m, (j + m / 2) % m) = out(i, j);
  const int lo = m / 2 - w / 2;
  const CMat crop = shifted.block(lo, lo, w, w);
  return Eigen::Map<const CVec>(crop.data(), crop.size());
}

}  // namespace

TEST_CASE("modal propagation matrix") {
  const PupilGrid g = make_pupil_grid(16, 0.6);
  const BasisSet basis = make_basis(g, 3);
  const DiversitySet div = make_defocus_diversities(g, {-0.7, 0.4});
  for (int w : {16, 6, 2}) {
    const PropagationMatrix U = build_modal_U(basis, div, CropWindow{w});
    CHECK(U.rows() == 2 * w * w);
    CHECK(U.cols() == 9);
    double err = 0.0;
    for (int d = 0; d < 2; ++d)
      for (int i = 0; i < 9; ++i) {
        const CMat field = basis.functions[i].cast<cplx>().cwiseProduct(
            div.phases[d].unaryExpr([](double p) { return std::polar(1.0, p); }));
        const CVec ref = fftw_column(field, w);
        err = std::max(err, (U.dense().block(d * w * w, i, w * w, 1) - ref).cwiseAbs().maxCoeff());
      }
    CHECK(err <= 1e-10);
  }
  CHECK_THROWS_AS(build_modal_U(basis, div, CropWindow{17}), InvalidArgument);

  // Sparse-demo geometry: two diversities, centre 2 x 2 -> n_y = 8.
  const PupilGrid g128 = make_pupil_grid(128, 0.5);
  const PropagationMatrix Us = build_modal_U(
      make_basis(g128, 4),
      make_defocus_diversities(g128, {-std::numbers::pi / 8, std::numbers::pi / 8}),
      CropWindow{2});
  CHECK(Us.rows() == 8);
  CHECK(Us.cols() == 16);
}

TEST_CASE("DFT of a constant is a centred impulse") {
  const PupilGrid g = make_pupil_grid(8, 1.0);
  BasisSet b;
  b.grid = g;
  b.functions.push_back(RMat::Ones(8, 8));
  b.centers.emplace_back(0.0, 0.0);
  b.spread.push_back(1.0);
  DiversitySet flat;
  flat.phases.push_back(RMat::Zero(8, 8));
  flat.labels.push_back(0.0);
  const PropagationMatrix U = build_modal_U(b, flat);
  const CVec col = U.dense().col(0);
  CHECK(std::abs(col(4 + 8 * 4) - 8.0) < 1e-12);  // m * 1 / m * m^2 / m
  CHECK((col.cwiseAbs().sum() - 8.0) < 1e-10);
}

TEST_CASE("zonal operator") {
  std::mt19937_64 rng(3);
  const PupilGrid g = make_pupil_grid(8, 1.0);
  const PropagationMatrix U1 = build_zonal_U(g, make_defocus_diversities(g, {0.0}));
  const CVec v = oracle::random_cvec(rng, 64);
  CHECK(std::abs(U1.apply(v).norm() / v.norm() - 1.0) <= 1e-10);

  const PropagationMatrix U2 = build_zonal_U(g, make_defocus_diversities(g, {-1.0, 0.8}));
  CHECK(U2.rows() == 128);
  for (int d = 0; d < 2; ++d) {
    const CVec w = U2.apply(v).segment(64 * d, 64);
    CHECK(std::abs(w.norm() / v.norm() - 1.0) <= 1e-10);
  }
  const CVec w = oracle::random_cvec(rng, 128);
  CHECK(std::abs(U2.apply(v).dot(w) - v.dot(U2.apply_adjoint(w))) <= 1e-10);
  // Dense materialization agrees with the factored products.
  CHECK((U2.dense() * v - U2.apply(v)).cwiseAbs().maxCoeff() <= 1e-12);

  // Impulse input -> constant-modulus spectrum.
  const RVec y = intensities(U1, CVec::Unit(64, 9));
  CHECK(y.maxCoeff() - y.minCoeff() <= 1e-14);
}

TEST_CASE("measurements and noise") {
  const PupilGrid g = make_pupil_grid(8, 1.0);
  const PropagationMatrix U = build_zonal_U(g, make_defocus_diversities(g, {0.3}));
  CHECK_THROWS_AS(simulate_measurements(U, CVec::Zero(64)), NormalizationError);
  std::mt19937_64 rng(5);
  const CVec a = oracle::random_cvec(rng, 64);
  const Measurements y = simulate_measurements(U, a);
  CHECK(y.y.maxCoeff() == doctest::Approx(1.0));
  CHECK(y.y.minCoeff() >= 0.0);
  CHECK((y.y * y.normalization - intensities(U, a)).cwiseAbs().maxCoeff() <= 1e-12);

  CHECK(add_noise(y, 0.0, 1).y == y.y);
  CHECK(add_noise(y, 0.01, 42).y == add_noise(y, 0.01, 42).y);
  CHECK(add_noise(y, 0.01, 42).y != add_noise(y, 0.01, 43).y);
  CHECK(add_noise(y, 10.0, 7).y.minCoeff() >= 0.0);
  CHECK_THROWS_AS(add_noise(y, -1.0, 1), InvalidArgument);
}

TEST_CASE("deformable mirror") {
  const PupilGrid g = make_pupil_grid(128, 0.4);
  const MirrorModel dm = make_mirror(g, 44);
  CHECK(dm.actuator_count() == 44);
  CHECK(dm.H.allFinite());
  CHECK(mirror_phase(dm, RVec::Zero(44)).cwiseAbs().maxCoeff() == 0.0);
  const RMat col = mirror_phase(dm, RVec::Unit(44, 7));
  CHECK((Eigen::Map<const RVec>(col.data(), col.size()) - dm.H.col(7)).norm() == 0.0);
  CHECK_THROWS_AS(mirror_phase(dm, RVec::Zero(43)), DimensionMismatch);
}

TEST_CASE("field fit") {
  const PupilGrid g = make_pupil_grid(16, 0.8);
  const BasisSet b = make_basis(g, 3);
  std::mt19937_64 rng(9);
  const CVec a = oracle::random_cvec(rng, 9);
  CMat field = CMat::Zero(16, 16);
  for (int i = 0; i < 9; ++i) field += a(i) * b.functions[i].cast<cplx>();
  CHECK((fit_field(b, field) - a).norm() <= 1e-9);
}

}  // TEST_SUITE
