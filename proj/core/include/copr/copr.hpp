#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "copr/admm.hpp"
#include "copr/forward_model.hpp"
#include "copr/types.hpp"

namespace copr {

struct CoprOptions {
  /// Stop once misfit(U, a, y) <= tau.
  double tau = 1e-8;
  int max_outer = 100;
  /// Options for each inner nn_admm call. inner.tol is the loosest inner
  /// tolerance; it is tightened as the misfit falls.
  AdmmOptions inner{};
  /// l1 weight; overrides inner.lambda.
  double lambda = 0.0;
  /// Initial guess for b. Defaults to minus the least-norm solution of
  /// U a = sqrt(y).
  std::optional<CVec> b0;
  /// Stop (unconverged) once an outer step lowers the misfit by less than
  /// this fraction; 0 disables.
  double min_progress = 0.0;
  /// Extra stopping test evaluated on every outer iterate.
  std::function<bool(const CVec&)> stop_when;
};

struct OuterRow {
  int outer = 0;
  double misfit = 0.0;
  double nuclear_norm = 0.0;
  int inner_iters = 0;
  bool inner_converged = false;
};

struct CoprResult {
  CVec a;
  std::vector<OuterRow> outer_trace;
  bool converged = false;
  int total_inner = 0;
  int inner_stalls = 0;
};

/// Thrown when an inner solve fails; carries the outer iterations that
/// completed before the failure.
class CoprFailure : public NumericalFailure {
 public:
  CoprFailure(const std::string& what, CoprResult partial)
      : NumericalFailure(what), partial_(std::move(partial)) {}
  const CoprResult& partial() const noexcept { return partial_; }

 private:
  CoprResult partial_;
};

/// ||y - |U a|^2||_1.
double misfit(const PropagationMatrix& U, const CVec& a, const RVec& y);

/// argmin ||U a - sqrt(y)||_2 with least norm.
CVec magnitude_least_squares(const PropagationMatrix& U, const RVec& y);

/// Outer loop: a+ = nn_admm(U, b, y); b <- -a+ until the misfit is below
/// tau. The normal matrix is rebuilt for every b.
CoprResult copr(const PropagationMatrix& U, const RVec& y,
                const CoprOptions& opts = {});

/// CSV with header outer,misfit,nuclear_norm,inner_iters,inner_converged.
void write_outer_csv(std::ostream& os, const CoprResult& r);

}  // namespace copr
