#pragma once

#include "solitonlab/waveform.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace solitonlab {

/// Convention constant linking |b| to the generalized position:
/// |b| = exp(kPositionGamma * eta * t). Pinned by the calibration tests against
/// soliton_waveform(eta = 1, t0 in {-3, 0, 3}).
inline constexpr double kPositionGamma = 1.0;

/// One bound state of the Zakharov-Shabat problem.
struct DiscreteMode
{
  cdouble zeta;    ///< eigenvalue, Im > 0
  cdouble b;       ///< Phi(T; zeta) = b Psi(T; zeta)
  cdouble c;       ///< norming constant b / a'(zeta)
  double t_pos = 0.0;

  double eta() const { return 2.0 * zeta.imag(); }
  double kappa() const { return 2.0 * zeta.real(); }
};

/// Nonlinear spectrum: bound states (sorted by descending Im zeta) plus the
/// reflection coefficient sampled on a real grid.
struct ScatteringData
{
  std::vector<DiscreteMode> modes;
  std::vector<double> xi;
  std::vector<cdouble> reflection;
};

struct ScatteringCoefficients
{
  cdouble a;
  cdouble b;
};

/// Rectangle in the upper half plane scanned for zeros of a(zeta).
struct SearchRegion
{
  double re_min = -2.0;
  double re_max = 2.0;
  double im_min = 0.01;
  double im_max = 1.5;
  int coarse_n = 80;
};

/// Jost-solution integrator for the focusing Zakharov-Shabat system
///   v_T = [[-i zeta, i q], [i q*, i zeta]] v
/// (the eigenproblem of L = [[i d/dT, q], [-q*, -i d/dT]]).
///
/// Each sample contributes one closed-form 2x2 exponential. The exponent is the
/// sample's piecewise-constant generator plus the fourth-order Magnus
/// correction built from central differences of q, which keeps the per-cell
/// matrix unitary on the real axis and makes eigenvalues accurate to O(dt^4).
/// The propagated column is renormalised as it grows, with the log-scale carried
/// separately, so wide windows and large Im(zeta) do not overflow.
class ZakharovShabat
{
public:
  explicit ZakharovShabat(const ComplexWaveform& w);

  ScatteringCoefficients coefficients(cdouble zeta) const;
  /// a alone; defined even where b overflows (large Im zeta on a wide window).
  cdouble a(cdouble zeta) const;

  /// Central difference with h = 1e-6 * max(1, |zeta|).
  cdouble a_derivative(cdouble zeta) const;
  cdouble a_derivative(cdouble zeta, double h) const;

  /// Newton iteration on a / a'. Returns nullopt when the iteration diverges,
  /// leaves the upper half plane, or does not reach |a| < tol in max_iters.
  std::optional<cdouble> refine(cdouble guess, double tol = 1e-9, int max_iters = 50) const;

  /// b of a bound state from Phi integrated rightwards and Psi leftwards to the
  /// sample nearest split_t (clamped to the window): Phi(split) = b Psi(split).
  cdouble bound_state_b(cdouble zeta, double split_t) const;

  double left_edge() const { return left_; }
  double right_edge() const { return right_; }

private:
  struct Cell
  {
    cdouble u;    // off-diagonal part independent of zeta
    cdouble v;    // coefficient of zeta in the upper off-diagonal
    cdouble c11;  // zeta-independent diagonal correction
  };
  struct Step
  {
    cdouble w11, w12, w21;  // per-cell exponent
    cdouble ch, shk;        // cosh(k), sinh(k)/k
  };
  Step step(std::size_t i, cdouble zeta) const;
  /// Phi e^{i zeta L} at the right edge as a renormalised column and its log-scale.
  void integrate(cdouble zeta, cdouble& v1, cdouble& v2, double& log_scale) const;

  std::vector<Cell> cells_;
  double dt_ = 0.0;
  double left_ = 0.0;
  double right_ = 0.0;
};

ScatteringCoefficients scattering_coefficients(const ComplexWaveform& w, cdouble zeta);
cdouble a_derivative(const ComplexWaveform& w, cdouble zeta);

struct EigenvalueSearch
{
  std::vector<cdouble> eigenvalues;
  std::vector<std::string> diagnostics;
};

/// Coarse scan of |a| for local minima followed by Newton refinement and deflation
/// (duplicates within 1e-6 collapse to the candidate with the smaller |a|).
/// A grid that is too coarse can miss closely spaced eigenvalues.
EigenvalueSearch search_discrete_eigenvalues(const ComplexWaveform& w, const SearchRegion& region = {});
std::vector<cdouble> find_discrete_eigenvalues(const ComplexWaveform& w, const SearchRegion& region = {});

/// Newton refinement from a known starting point (no scan).
std::optional<cdouble> refine_eigenvalue(const ComplexWaveform& w, cdouble guess);

/// b_n, C_n = b_n / a'(zeta_n), and t_n. b_n starts from the right-edge value and
/// is re-evaluated twice with ZakharovShabat::bound_state_b split at the current t_n.
/// Throws NumericalError for |a'| < 1e-8 (non-simple zero).
std::vector<DiscreteMode> norming_constants(const ComplexWaveform& w, std::span<const cdouble> zetas);
std::vector<DiscreteMode> norming_constants(const ZakharovShabat& zs, std::span<const cdouble> zetas);

/// r(xi) = b(xi) / a(xi) for real xi.
std::vector<cdouble> reflection_coefficient(const ComplexWaveform& w, std::span<const double> xi);

/// t_n = ln|b_n| / (kPositionGamma * eta_n). Throws std::domain_error for b_n = 0.
std::vector<double> generalized_positions(std::span<const DiscreteMode> modes);
double generalized_position(cdouble zeta, cdouble b);

/// Full direct transform: eigenvalue search, norming constants and r(xi).
ScatteringData direct_scattering(const ComplexWaveform& w, const SearchRegion& region,
                                 std::span<const double> xi_grid);

std::vector<double> linspace(double lo, double hi, std::size_t n);

std::string to_json(const ScatteringData& sd, int indent = 2);
ScatteringData scattering_from_json(const std::string& text);

} // namespace solitonlab
