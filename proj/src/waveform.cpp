#include "solitonlab/waveform.hpp"
#include "solitonlab/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace solitonlab {

GridSpec make_grid(std::size_t n_samples, double t_span)
{
  if (n_samples < 2 || !std::has_single_bit(n_samples)) {
    throw std::invalid_argument("make_grid: n_samples must be a power of two >= 2, got " +
                                std::to_string(n_samples));
  }
  if (!(t_span > 0.0) || !std::isfinite(t_span)) {
    throw std::invalid_argument("make_grid: t_span must be positive");
  }
  return GridSpec{n_samples, t_span};
}

ComplexWaveform::ComplexWaveform(GridSpec grid)
  : ComplexWaveform(grid, std::vector<cdouble>(grid.n_samples))
{
}

ComplexWaveform::ComplexWaveform(GridSpec grid, std::vector<cdouble> samples)
  : ComplexWaveform(grid, std::move(samples), -0.5 * grid.t_span)
{
}

ComplexWaveform::ComplexWaveform(GridSpec grid, std::vector<cdouble> samples, double t0_offset)
  : grid_(make_grid(grid.n_samples, grid.t_span)), samples_(std::move(samples)), t0_offset_(t0_offset)
{
  if (samples_.size() != grid_.n_samples) {
    throw std::invalid_argument("ComplexWaveform: sample count does not match grid");
  }
  for (const auto& s : samples_) {
    if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) {
      throw NumericalError("ComplexWaveform: non-finite sample");
    }
  }
}

double ComplexWaveform::peak_amplitude() const
{
  double peak = 0.0;
  for (const auto& s : samples_) peak = std::max(peak, std::abs(s));
  return peak;
}

ComplexWaveform ComplexWaveform::with_samples(std::vector<cdouble> samples) const
{
  return ComplexWaveform(grid_, std::move(samples), t0_offset_);
}

ComplexWaveform soliton_waveform(const GridSpec& grid, const SolitonParams& p, double Z)
{
  if (!(p.eta > 0.0)) throw std::invalid_argument("soliton_waveform: eta must be positive");
  if (Z < 0.0) throw std::invalid_argument("soliton_waveform: Z must be non-negative");

  const double half = 0.5 * grid.t_span;
  const double centre = p.t0 - p.kappa * Z;
  if (centre <= -half || centre >= half) {
    throw std::domain_error("soliton_waveform: peak at T=" + std::to_string(centre) +
                            " lies outside the window");
  }

  ComplexWaveform base(make_grid(grid.n_samples, grid.t_span));
  std::vector<cdouble> q(grid.n_samples);
  const double phase_z = 0.5 * (p.eta * p.eta - p.kappa * p.kappa) * Z + p.sigma0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double t = base.time(i);
    const double amp = p.eta / std::cosh(p.eta * (t - centre));
    q[i] = std::polar(amp, -p.kappa * t + phase_z);
  }
  return base.with_samples(std::move(q));
}

double energy(const ComplexWaveform& w)
{
  double sum = 0.0;
  for (const auto& s : w.samples()) sum += std::norm(s);
  return sum * w.dt();
}

double linf_distance(const ComplexWaveform& a, const ComplexWaveform& b)
{
  if (a.size() != b.size()) throw std::invalid_argument("linf_distance: grid mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a.samples()[i] - b.samples()[i]));
  return d;
}

void write_waveform_csv(std::ostream& os, const ComplexWaveform& w)
{
  os << "t,re,im\n" << std::setprecision(17);
  for (std::size_t i = 0; i < w.size(); ++i) {
    os << w.time(i) << ',' << w.samples()[i].real() << ',' << w.samples()[i].imag() << '\n';
  }
}

void write_waveform_csv(const std::string& path, const ComplexWaveform& w)
{
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  write_waveform_csv(os, w);
  if (!os) throw IoError("write failed for '" + path + "'");
}

ComplexWaveform read_waveform_csv(std::istream& is)
{
  std::string line;
  if (!std::getline(is, line)) throw FormatError("waveform CSV: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,re,im") throw FormatError("waveform CSV: expected header 't,re,im', got '" + line + "'");

  std::vector<double> times;
  std::vector<cdouble> samples;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double t = 0, re = 0, im = 0;
    if (!(row >> t >> re >> im)) {
      throw FormatError("waveform CSV: malformed row at line " + std::to_string(lineno));
    }
    times.push_back(t);
    samples.emplace_back(re, im);
  }
  if (samples.size() < 2) throw FormatError("waveform CSV: need at least two samples");

  const auto n = samples.size();
  const double dt = (times.back() - times.front()) / static_cast<double>(n - 1);
  if (!(dt > 0.0)) throw FormatError("waveform CSV: time column must be increasing");
  for (std::size_t i = 1; i < n; ++i) {
    if (std::abs(times[i] - times[i - 1] - dt) > 1e-6 * dt) {
      throw FormatError("waveform CSV: non-uniform sampling near line " + std::to_string(i + 2));
    }
  }
  GridSpec grid;
  try {
    grid = make_grid(n, dt * static_cast<double>(n));
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("waveform CSV: ") + e.what());
  }
  return ComplexWaveform(grid, std::move(samples), times.front() - 0.5 * dt);
}

ComplexWaveform read_waveform_csv(const std::string& path)
{
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path + "' for reading");
  return read_waveform_csv(is);
}

} // namespace solitonlab
