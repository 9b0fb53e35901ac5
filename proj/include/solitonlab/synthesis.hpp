#pragma once

#include "solitonlab/scattering.hpp"
#include "solitonlab/waveform.hpp"

#include <span>
#include <vector>

namespace solitonlab {

/// A bound state to place in a reflectionless waveform.
///
/// `t` is the generalized position and `phase` the carrier phase the mode would
/// have in isolation (for N = 1 the result is exactly
/// soliton_waveform(eta, kappa, t, phase)).
struct ModeSpec
{
  cdouble zeta;
  double t = 0.0;
  double phase = 0.0;
};

/// Single soliton with eigenvalue (kappa + i eta) / 2 centred at t0.
ComplexWaveform synthesize_single(const GridSpec& grid, double eta, double kappa, double t0, double sigma0);

/// b coefficient for a mode at generalized position t with carrier phase `phase`:
/// |b| = exp(kPositionGamma * eta * t), arg b = pi/2 - phase.
cdouble norming_from_position(cdouble zeta, double t, double phase = 0.0);

/// Reflectionless N-soliton by iterated Darboux transformation of the zero
/// potential. Modes are added in order of decreasing Im(zeta); every mode's b
/// coefficient in the result equals norming_from_position(zeta, t, phase).
///
/// Throws std::invalid_argument for Im(zeta) <= 0, eigenvalues closer than 1e-3,
/// or a generalized position outside the window.
ComplexWaveform synthesize_reflectionless(const GridSpec& grid, std::span<const ModeSpec> modes);

/// Same construction driven directly by (zeta, b) pairs.
ComplexWaveform synthesize_from_modes(const GridSpec& grid, std::span<const DiscreteMode> modes);

/// Exact distance evolution of the scattering data under the noiseless channel:
/// zeta fixed, b and C rotate by exp(2 i zeta^2 Z), r(xi) by exp(2 i xi^2 Z).
/// Generalized positions are recomputed from the evolved b.
ScatteringData evolve_scattering_data(const ScatteringData& sd, double Z);

/// Exact ScatteringData for the reflectionless waveform built from `modes`:
/// b, C = b / a'(zeta) and t_pos in closed form, no continuous spectrum.
ScatteringData modes_to_scattering_data(std::span<const ModeSpec> modes);

} // namespace solitonlab
