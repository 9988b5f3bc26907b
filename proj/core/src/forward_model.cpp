#include "copr/forward_model.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <numeric>
#include <random>

#include <fftw3.h>

namespace copr {

namespace {

constexpr double kPi = std::numbers::pi;

// The FFTW planner is not thread-safe; execution on new arrays is.
std::mutex& planner_mutex() {
  static std::mutex mu;
  return mu;
}

// Maps unshifted frequency index k to its position after fftshift.
inline int shifted(int k, int m) { return (k + m / 2) % m; }

}  // namespace

/// Unnormalized forward/backward 2-D FFTs of one fixed size.
class Fft2 {
 public:
  explicit Fft2(int m) : m_(m) {
    std::lock_guard lock(planner_mutex());
    auto* buf = fftw_alloc_complex(static_cast<std::size_t>(m) * m);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward_ = fftw_plan_dft_2d(m, m, buf, buf, FFTW_FORWARD, flags);
    backward_ = fftw_plan_dft_2d(m, m, buf, buf, FFTW_BACKWARD, flags);
    fftw_free(buf);
    if (forward_ == nullptr || backward_ == nullptr)
      throw NumericalFailure("FFTW planning failed");
  }
  ~Fft2() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }
  Fft2(const Fft2&) = delete;
  Fft2& operator=(const Fft2&) = delete;

  void forward(cplx* data) const { run(forward_, data); }
  void backward(cplx* data) const { run(backward_, data); }
  int size() const { return m_; }

 private:
  static void run(fftw_plan plan, cplx* data) {
    auto* p = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(plan, p, p);
  }

  int m_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

std::int64_t PupilGrid::aperture_pixels() const { return mask.count(); }

PupilGrid make_pupil_grid(int m, double aperture_radius) {
  if (m < 2) throw InvalidArgument("grid side must be at least 2");
  if (!(aperture_radius > 0.0) || aperture_radius > 1.0)
    throw InvalidArgument("aperture radius must lie in (0, 1]");

  PupilGrid g;
  g.m = m;
  g.aperture_radius = aperture_radius;
  g.x.resize(m, m);
  g.y.resize(m, m);
  g.mask.resize(m, m);
  const double half = m / 2.0;
  const double mid = (m - 1) / 2.0;
  const double r2 = aperture_radius * aperture_radius;
  for (int c = 0; c < m; ++c) {
    for (int r = 0; r < m; ++r) {
      const double x = (c - mid) / half;
      const double y = (r - mid) / half;
      g.x(r, c) = x;
      g.y(r, c) = y;
      g.mask(r, c) = x * x + y * y <= r2;
    }
  }
  if (g.mask.count() == 0)
    throw InvalidArgument("aperture contains no grid points");
  return g;
}

RMat BasisSet::as_matrix() const {
  const int m = grid.m;
  RMat out(static_cast<Eigen::Index>(m) * m, size());
  for (int i = 0; i < size(); ++i)
    out.col(i) = Eigen::Map<const RVec>(functions[i].data(), out.rows());
  return out;
}

double default_spread(const PupilGrid& grid, int k) {
  if (k < 1) throw InvalidArgument("basis layout needs k >= 1");
  const double pitch = 2.0 * grid.aperture_radius / k;
  const double half = pitch / 2.0;
  return std::log(2.0) / (half * half);
}

BasisSet make_basis(const PupilGrid& grid, int k, double spread) {
  if (k < 1) throw InvalidArgument("basis layout needs k >= 1");
  if (!(spread > 0.0) || !std::isfinite(spread))
    throw InvalidArgument("basis spread must be positive");

  BasisSet b;
  b.grid = grid;
  const double r = grid.aperture_radius;
  const double pitch = 2.0 * r / k;
  for (int j = 0; j < k; ++j) {
    for (int i = 0; i < k; ++i) {
      const Eigen::Vector2d c(-r + (i + 0.5) * pitch, -r + (j + 0.5) * pitch);
      const RMat d2 = (grid.x.array() - c.x()).square() +
                      (grid.y.array() - c.y()).square();
      RMat g = (-spread * d2.array()).exp();
      g = grid.mask.select(g, 0.0);
      b.centers.push_back(c);
      b.spread.push_back(spread);
      b.functions.push_back(std::move(g));
    }
  }
  return b;
}

BasisSet make_basis(const PupilGrid& grid, int k) {
  return make_basis(grid, k, default_spread(grid, k));
}

RMat defocus_phase(const PupilGrid& grid, double coeff) {
  if (!std::isfinite(coeff)) throw InvalidArgument("defocus must be finite");
  const double r2 = grid.aperture_radius * grid.aperture_radius;
  RMat rho2 = (grid.x.array().square() + grid.y.array().square()) / r2;
  RMat phi = coeff * (2.0 * rho2.array() - 1.0);
  return grid.mask.select(phi, 0.0);
}

DiversitySet make_defocus_diversities(const PupilGrid& grid,
                                      const std::vector<double>& coeffs) {
  if (coeffs.empty()) throw InvalidArgument("need at least one diversity");
  DiversitySet d;
  for (double c : coeffs) {
    d.phases.push_back(defocus_phase(grid, c));
    d.labels.push_back(c);
  }
  return d;
}

std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 1) throw InvalidArgument("linspace needs n >= 1");
  if (n == 1) return {lo};
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = lo + (hi - lo) * i / (n - 1);
  return out;
}

// ---------------------------------------------------------------------------

struct PropagationMatrix::DenseCache {
  std::once_flag once;
  CMat value;
};

PropagationMatrix PropagationMatrix::from_dense(CMat u, Form form) {
  if (u.rows() == 0 || u.cols() == 0)
    throw InvalidArgument("propagation matrix must be non-empty");
  PropagationMatrix p;
  p.form_ = form;
  p.n_y_ = u.rows();
  p.n_a_ = u.cols();
  p.dense_ = std::make_shared<DenseCache>();
  std::call_once(p.dense_->once, [&] { p.dense_->value = std::move(u); });
  return p;
}

PropagationMatrix PropagationMatrix::zonal(int m, std::vector<CVec> diagonals) {
  if (m < 2) throw InvalidArgument("grid side must be at least 2");
  if (diagonals.empty()) throw InvalidArgument("need at least one diversity");
  const Eigen::Index n = static_cast<Eigen::Index>(m) * m;
  for (const auto& d : diagonals)
    if (d.size() != n) throw DimensionMismatch("diversity diagonal length");
  PropagationMatrix p;
  p.form_ = Form::zonal;
  p.m_ = m;
  p.n_a_ = n;
  p.n_y_ = n * static_cast<Eigen::Index>(diagonals.size());
  p.diagonals_ = std::move(diagonals);
  p.fft_ = std::make_shared<const Fft2>(m);
  p.dense_ = std::make_shared<DenseCache>();
  return p;
}

CVec PropagationMatrix::apply(const CVec& a) const {
  if (a.size() != n_a_) throw DimensionMismatch("apply: length of a != n_a");
  if (!is_factored()) return dense_->value * a;

  const int m = m_;
  const Eigen::Index n = n_a_;
  const double scale = 1.0 / m;
  CVec out(n_y_);
  CVec work(n);
  for (std::size_t d = 0; d < diagonals_.size(); ++d) {
    work = diagonals_[d].cwiseProduct(a);
    fft_->forward(work.data());
    auto block = out.segment(static_cast<Eigen::Index>(d) * n, n);
    for (int c = 0; c < m; ++c)
      for (int r = 0; r < m; ++r)
        block(shifted(r, m) + static_cast<Eigen::Index>(shifted(c, m)) * m) =
            scale * work(r + static_cast<Eigen::Index>(c) * m);
  }
  return out;
}

CVec PropagationMatrix::apply_adjoint(const CVec& p) const {
  if (p.size() != n_y_)
    throw DimensionMismatch("apply_adjoint: length of p != n_y");
  if (!is_factored()) return dense_->value.adjoint() * p;

  const int m = m_;
  const Eigen::Index n = n_a_;
  const double scale = 1.0 / m;
  CVec out = CVec::Zero(n);
  CVec work(n);
  for (std::size_t d = 0; d < diagonals_.size(); ++d) {
    auto block = p.segment(static_cast<Eigen::Index>(d) * n, n);
    for (int c = 0; c < m; ++c)
      for (int r = 0; r < m; ++r)
        work(r + static_cast<Eigen::Index>(c) * m) =
            block(shifted(r, m) + static_cast<Eigen::Index>(shifted(c, m)) * m);
    fft_->backward(work.data());
    out += scale * diagonals_[d].conjugate().cwiseProduct(work);
  }
  return out;
}

const CMat& PropagationMatrix::dense() const {
  std::call_once(dense_->once, [this] {
    CMat u(n_y_, n_a_);
    CVec e = CVec::Zero(n_a_);
    for (Eigen::Index j = 0; j < n_a_; ++j) {
      e(j) = 1.0;
      u.col(j) = apply(e);
      e(j) = 0.0;
    }
    dense_->value = std::move(u);
  });
  return dense_->value;
}

CMat centered_dft2(const CMat& field) {
  if (field.rows() != field.cols() || field.rows() < 1)
    throw InvalidArgument("centered_dft2 expects a square field");
  const int m = static_cast<int>(field.rows());
  Fft2 fft(m);
  CMat work = field;
  fft.forward(work.data());
  CMat out(m, m);
  for (int c = 0; c < m; ++c)
    for (int r = 0; r < m; ++r)
      out(shifted(r, m), shifted(c, m)) = work(r, c) / static_cast<double>(m);
  return out;
}

namespace {

// Rows of the unitary DFT matrix for the retained (shifted) output indices.
CMat cropped_dft_rows(int m, int w) {
  const int lo = m / 2 - w / 2;
  CMat W(w, m);
  const double norm = 1.0 / std::sqrt(static_cast<double>(m));
  for (int s = 0; s < w; ++s) {
    const int k = ((lo + s - m / 2) % m + m) % m;
    for (int n = 0; n < m; ++n) {
      const long long kn = static_cast<long long>(k) * n % m;
      W(s, n) = std::polar(norm, -2.0 * kPi * static_cast<double>(kn) / m);
    }
  }
  return W;
}

}  // namespace

PropagationMatrix build_modal_U(const BasisSet& basis,
                                const DiversitySet& diversities,
                                std::optional<CropWindow> crop) {
  const int m = basis.grid.m;
  if (basis.size() == 0) throw InvalidArgument("empty basis");
  if (diversities.size() == 0) throw InvalidArgument("need at least one diversity");
  for (const auto& phi : diversities.phases)
    if (phi.rows() != m || phi.cols() != m)
      throw DimensionMismatch("diversity phase does not match the basis grid");
  const int w = crop ? crop->size : m;
  if (w < 1 || w > m) throw InvalidArgument("crop window must lie in [1, m]");

  const CMat W = cropped_dft_rows(m, w);
  const Eigen::Index per = static_cast<Eigen::Index>(w) * w;
  const int n_a = basis.size();
  CMat U(per * diversities.size(), n_a);
  for (int d = 0; d < diversities.size(); ++d) {
    const CMat phase = diversities.phases[d].unaryExpr(
        [](double p) { return std::polar(1.0, p); });
    for (int i = 0; i < n_a; ++i) {
      const CMat field = basis.functions[i].cast<cplx>().cwiseProduct(phase);
      const CMat F = W * field * W.transpose();
      U.block(per * d, i, per, 1) = Eigen::Map<const CVec>(F.data(), per);
    }
  }
  return PropagationMatrix::from_dense(std::move(U), Form::modal);
}

PropagationMatrix build_zonal_U(const PupilGrid& grid,
                                const DiversitySet& diversities) {
  std::vector<CVec> diagonals;
  for (const auto& phi : diversities.phases) {
    if (phi.rows() != grid.m || phi.cols() != grid.m)
      throw DimensionMismatch("diversity phase does not match the grid");
    CVec d(phi.size());
    for (Eigen::Index k = 0; k < phi.size(); ++k)
      d(k) = std::polar(1.0, phi.data()[k]);
    diagonals.push_back(std::move(d));
  }
  return PropagationMatrix::zonal(grid.m, std::move(diagonals));
}

RVec intensities(const PropagationMatrix& U, const CVec& a) {
  return U.apply(a).cwiseAbs2();
}

Measurements normalize(Measurements y) {
  const double peak = y.y.size() > 0 ? y.y.maxCoeff() : 0.0;
  if (!(peak > 0.0) || !std::isfinite(peak))
    throw NormalizationError("cannot normalize: intensities are all zero");
  y.y /= peak;
  y.normalization *= peak;
  return y;
}

Measurements simulate_measurements(const PropagationMatrix& U, const CVec& a) {
  return normalize(Measurements{intensities(U, a), 1.0});
}

Measurements add_noise(const Measurements& y, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw InvalidArgument("noise sigma must be >= 0");
  Measurements out = y;
  if (sigma == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> eps(0.0, sigma);
  for (Eigen::Index i = 0; i < out.y.size(); ++i)
    out.y(i) = std::max(0.0, out.y(i) + eps(rng));
  return out;
}

MirrorModel make_mirror(const PupilGrid& grid, int n_actuators, double stroke) {
  if (n_actuators < 1) throw InvalidArgument("mirror needs at least one actuator");
  const double r = grid.aperture_radius;

  // Smallest square layout with enough actuators inside the aperture; keep
  // the n nearest to the optical axis (stable order breaks ties).
  int side = 1;
  std::vector<Eigen::Vector2d> pts;
  double pitch = 0.0;
  for (;; ++side) {
    pitch = 2.0 * r / side;
    pts.clear();
    for (int j = 0; j < side; ++j)
      for (int i = 0; i < side; ++i)
        pts.emplace_back(-r + (i + 0.5) * pitch, -r + (j + 0.5) * pitch);
    const auto inside = std::count_if(pts.begin(), pts.end(), [&](const auto& p) {
      return p.norm() <= r + 1e-12;
    });
    if (inside >= n_actuators) break;
  }
  std::vector<int> order(pts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return pts[a].norm() < pts[b].norm() - 1e-12;
  });
  order.resize(n_actuators);
  std::sort(order.begin(), order.end());

  MirrorModel mm;
  mm.m = grid.m;
  mm.pitch = pitch;
  const double width = 1.5 * pitch;
  mm.H.resize(static_cast<Eigen::Index>(grid.m) * grid.m, n_actuators);
  for (int j = 0; j < n_actuators; ++j) {
    const auto& c = pts[order[j]];
    mm.actuators.push_back(c);
    const RMat d2 = (grid.x.array() - c.x()).square() +
                    (grid.y.array() - c.y()).square();
    RMat infl = stroke * (-d2.array() / (width * width)).exp();
    infl = grid.mask.select(infl, 0.0);
    mm.H.col(j) = Eigen::Map<const RVec>(infl.data(), infl.size());
  }
  return mm;
}

RMat mirror_phase(const MirrorModel& mirror, const RVec& u) {
  if (u.size() != mirror.H.cols())
    throw DimensionMismatch("actuator vector length != n_u");
  const RVec phi = mirror.H * u;
  return unvec(phi, mirror.m);
}

CVec fit_field(const BasisSet& basis, const CMat& field) {
  const int m = basis.grid.m;
  if (field.rows() != m || field.cols() != m)
    throw DimensionMismatch("field does not match the basis grid");
  const RMat G = basis.as_matrix();
  const CVec f = Eigen::Map<const CVec>(field.data(), field.size());
  const auto qr = G.colPivHouseholderQr();
  const RVec re = qr.solve(f.real());
  const RVec im = qr.solve(f.imag());
  CVec a(G.cols());
  a.real() = re;
  a.imag() = im;
  return a;
}

CVec flat_pupil_coefficients(const BasisSet& basis) {
  const CMat chi = basis.grid.mask.cast<double>().cast<cplx>();
  return fit_field(basis, chi);
}

}  // namespace copr
