#pragma once

#include "solitonlab/waveform.hpp"

#include <cstdint>
#include <memory>

namespace solitonlab {

/// Stochastic channel i q_Z + q_TT/2 + |q|^2 q = eps R over a distance Z.
struct ChannelSpec
{
  double Z = 1.0;
  double eps = 0.0;
  int n_steps = 1;
  std::uint64_t seed = 0;
};

void validate(const ChannelSpec& spec);

/// Largest allowed value of dz * max|q|^2 for a split step.
inline constexpr double kMaxNonlinearPhasePerStep = 0.1;

/// Step count giving dz * max|q|^2 <= 0.1 with a safety factor of 4; never below 16.
int suggest_steps(const ComplexWaveform& w, double Z);

/// Noiseless symmetric split-step integration to distance Z.
/// Throws std::invalid_argument (message carries a suggested n_steps) when the
/// step is too coarse for the input peak power.
ComplexWaveform propagate(const ComplexWaveform& w, double Z, int n_steps);

/// Split-step integration with distributed additive white Gaussian noise.
/// After the dispersion stage of every step, each sample receives an independent
/// circular complex Gaussian of variance eps^2 dz / dt. The noise of step k depends
/// only on (seed, k), so results are reproducible and a run to Z can be continued.
ComplexWaveform propagate_noisy(const ComplexWaveform& w, const ChannelSpec& spec);

/// Stateful integrator used for checkpointed runs (e.g. several Z values in one
/// Monte-Carlo trial). Step k always draws the same noise for a given seed.
class SplitStepPropagator
{
public:
  SplitStepPropagator(const ComplexWaveform& initial, double dz, double eps, std::uint64_t seed);
  ~SplitStepPropagator();
  SplitStepPropagator(SplitStepPropagator&&) noexcept;
  SplitStepPropagator& operator=(SplitStepPropagator&&) noexcept;
  SplitStepPropagator(const SplitStepPropagator&) = delete;
  SplitStepPropagator& operator=(const SplitStepPropagator&) = delete;

  void advance(int n_steps);
  ComplexWaveform state() const;
  double distance() const;
  std::int64_t steps_taken() const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Derives an independent 64-bit stream key from a parent seed and an index.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

} // namespace solitonlab
