#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "copr/types.hpp"

namespace copr {

/// Square pupil-plane sampling grid with a circular aperture.
///
/// Pixel (r, c) has normalized coordinates x = (c - (m-1)/2) / (m/2) and
/// y = (r - (m-1)/2) / (m/2), so the grid spans [-1, 1]^2. The aperture
/// radius is expressed in the same normalized units.
struct PupilGrid {
  int m = 0;
  double aperture_radius = 0.0;
  Mask mask;
  RMat x;
  RMat y;

  std::int64_t aperture_pixels() const;
};

PupilGrid make_pupil_grid(int m, double aperture_radius);

/// Real radial basis functions G_i = chi * exp(-spread_i * |r - c_i|^2).
struct BasisSet {
  PupilGrid grid;
  std::vector<Eigen::Vector2d> centers;
  std::vector<double> spread;
  std::vector<RMat> functions;

  int size() const { return static_cast<int>(functions.size()); }
  /// m^2 x n_a matrix whose columns are vec(G_i).
  RMat as_matrix() const;
};

/// Spread for which neighbouring functions on a k x k layout meet at 0.5
/// halfway between their centers.
double default_spread(const PupilGrid& grid, int k);

/// k x k centers laid cell-centered over the aperture bounding box.
BasisSet make_basis(const PupilGrid& grid, int k, double spread);
BasisSet make_basis(const PupilGrid& grid, int k);

/// Unnormalized Zernike defocus 2 rho^2 - 1, rho = r / aperture_radius.
RMat defocus_phase(const PupilGrid& grid, double coeff);

struct DiversitySet {
  std::vector<RMat> phases;
  std::vector<double> labels;

  int size() const { return static_cast<int>(phases.size()); }
};

DiversitySet make_defocus_diversities(const PupilGrid& grid,
                                      const std::vector<double>& coeffs);

/// `n` coefficients uniformly spaced on [lo, hi] (inclusive).
std::vector<double> linspace(double lo, double hi, int n);

/// Centered square window on the fftshifted image plane.
struct CropWindow {
  int size = 0;
};

enum class Form : std::uint8_t { zonal = 1, modal = 2 };

class Fft2;

/// The linear map U from coefficients to stacked image-plane fields.
///
/// Modal operators hold a dense n_y x n_a matrix. Zonal operators are
/// stored factored as one diag(exp(j phi_d)) per diversity followed by a
/// unitary, fftshifted 2-D DFT; `dense()` materializes them on request.
class PropagationMatrix {
 public:
  static PropagationMatrix from_dense(CMat u, Form form = Form::modal);
  static PropagationMatrix zonal(int m, std::vector<CVec> diagonals);

  Form form() const { return form_; }
  Eigen::Index rows() const { return n_y_; }
  Eigen::Index cols() const { return n_a_; }
  bool is_factored() const { return !diagonals_.empty(); }

  CVec apply(const CVec& a) const;
  CVec apply_adjoint(const CVec& p) const;

  /// Dense matrix; computed and cached for factored operators.
  const CMat& dense() const;

  /// Number of diversity blocks (zonal form only; 1 for dense operators).
  int blocks() const { return static_cast<int>(diagonals_.size()); }
  /// Side length of the zonal grid (0 for dense operators).
  int grid_side() const { return m_; }

 private:
  Form form_ = Form::modal;
  Eigen::Index n_y_ = 0;
  Eigen::Index n_a_ = 0;
  int m_ = 0;
  std::vector<CVec> diagonals_;
  std::shared_ptr<const Fft2> fft_;
  struct DenseCache;
  std::shared_ptr<DenseCache> dense_;
};

/// Unitary, centered 2-D DFT of an m x m field (column-major vec order).
CMat centered_dft2(const CMat& field);

PropagationMatrix build_modal_U(const BasisSet& basis,
                                const DiversitySet& diversities,
                                std::optional<CropWindow> crop = std::nullopt);

PropagationMatrix build_zonal_U(const PupilGrid& grid,
                                const DiversitySet& diversities);

struct Measurements {
  RVec y;
  /// Factor that was divided out of |Ua|^2 so that max(y) = 1.
  double normalization = 1.0;
};

/// Raw intensities |Ua|^2.
RVec intensities(const PropagationMatrix& U, const CVec& a);

/// |Ua|^2 scaled so its maximum is one.
Measurements simulate_measurements(const PropagationMatrix& U, const CVec& a);

/// Rescale `y` so its maximum is one, composing with any previous scale.
Measurements normalize(Measurements y);

/// max(0, y + eps), eps ~ N(0, sigma^2) i.i.d., reproducible by seed.
Measurements add_noise(const Measurements& y, double sigma, std::uint64_t seed);

/// Synthetic deformable mirror: Gaussian influence functions on a square
/// actuator layout spanning the aperture.
struct MirrorModel {
  RMat H;  // m^2 x n_u
  int m = 0;
  std::vector<Eigen::Vector2d> actuators;
  double pitch = 0.0;

  int actuator_count() const { return static_cast<int>(H.cols()); }
};

/// `stroke` is the peak phase (radians) of a single influence function.
MirrorModel make_mirror(const PupilGrid& grid, int n_actuators,
                        double stroke = 1.0);

RMat mirror_phase(const MirrorModel& mirror, const RVec& u);

/// Least-squares coefficients of the field chi * exp(j phi) in `basis`.
CVec fit_field(const BasisSet& basis, const CMat& field);

/// Coefficients of the unaberrated pupil chi in `basis`.
CVec flat_pupil_coefficients(const BasisSet& basis);

/// vec^{-1}: m*m vector to m x m matrix (column-major).
template <typename Vec>
auto unvec(const Vec& v, int m) {
  using Scalar = typename Vec::Scalar;
  return Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>(
             v.data(), m, m)
      .eval();
}

}  // namespace copr
