#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace solitonlab {

using cdouble = std::complex<double>;

/// Uniform sampling of the normalized time axis. n_samples is a power of two.
struct GridSpec
{
  std::size_t n_samples = 0;
  double t_span = 0.0;

  double dt() const { return t_span / static_cast<double>(n_samples); }
};

/// Validating constructor for GridSpec.
/// Throws std::invalid_argument for a non-power-of-two sample count or a
/// non-positive span.
GridSpec make_grid(std::size_t n_samples, double t_span);

/// Complex envelope q(T) sampled on a finite window.
///
/// Sample i sits at the centre of the cell
/// [t0_offset + i*dt, t0_offset + (i+1)*dt], so the window covers
/// [t0_offset, t0_offset + t_span] exactly. Instances are immutable.
class ComplexWaveform
{
public:
  ComplexWaveform() = default;

  /// Zero waveform on a window centred at T = 0.
  explicit ComplexWaveform(GridSpec grid);
  ComplexWaveform(GridSpec grid, std::vector<cdouble> samples);
  ComplexWaveform(GridSpec grid, std::vector<cdouble> samples, double t0_offset);

  const GridSpec& grid() const { return grid_; }
  const std::vector<cdouble>& samples() const { return samples_; }
  double t0_offset() const { return t0_offset_; }
  std::size_t size() const { return samples_.size(); }
  double dt() const { return grid_.dt(); }

  double time(std::size_t i) const
  {
    return t0_offset_ + (static_cast<double>(i) + 0.5) * grid_.dt();
  }
  double left_edge() const { return t0_offset_; }
  double right_edge() const { return t0_offset_ + grid_.t_span; }

  double peak_amplitude() const;

  /// Same grid and offset, new samples.
  ComplexWaveform with_samples(std::vector<cdouble> samples) const;

private:
  GridSpec grid_{};
  std::vector<cdouble> samples_;
  double t0_offset_ = 0.0;
};

/// Soliton parameters in the closed form
/// q = eta sech[eta (T + kappa Z - t0)] exp(-i kappa T + i (eta^2 - kappa^2) Z / 2 + i sigma0).
struct SolitonParams
{
  double eta = 1.0;
  double kappa = 0.0;
  double t0 = 0.0;
  double sigma0 = 0.0;
};

/// Samples the single-soliton solution at distance Z on a window centred at 0.
/// Throws std::domain_error when the soliton peak falls outside the window.
ComplexWaveform soliton_waveform(const GridSpec& grid, const SolitonParams& p, double Z = 0.0);

/// Riemann sum of |q|^2 dt.
double energy(const ComplexWaveform& w);

/// Max |a_i - b_i| over samples; the grids must match.
double linf_distance(const ComplexWaveform& a, const ComplexWaveform& b);

// CSV with header `t,re,im`, one row per sample.
void write_waveform_csv(std::ostream& os, const ComplexWaveform& w);
void write_waveform_csv(const std::string& path, const ComplexWaveform& w);
ComplexWaveform read_waveform_csv(std::istream& is);
ComplexWaveform read_waveform_csv(const std::string& path);

} // namespace solitonlab
