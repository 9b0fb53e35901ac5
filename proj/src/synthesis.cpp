#include "solitonlab/synthesis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace solitonlab {

using namespace std::complex_literals;

namespace {

constexpr double kMinSeparation = 1e-3;

using Vec2 = std::array<cdouble, 2>;

void normalise(Vec2& f)
{
  const double m = std::max(std::abs(f[0]), std::abs(f[1]));
  if (m > 0.0) {
    f[0] /= m;
    f[1] /= m;
  }
}

// Seed (e^{-i l x}, -b e^{i l x}) of the zero potential, scaled so its larger entry is O(1).
Vec2 seed(cdouble lambda, cdouble b, double x)
{
  const cdouble l1 = -1i * lambda * x;
  const cdouble l2 = std::log(-b) + 1i * lambda * x;
  const double shift = std::max(l1.real(), l2.real());
  return {std::exp(l1 - shift), std::exp(l2 - shift)};
}

// Projector data S = H diag(l, l*) H^{-1} built from an eigenfunction f at l.
struct Dressing
{
  cdouble lambda;
  Vec2 f;

  Vec2 apply(cdouble mu, const Vec2& g) const
  {
    // (mu - S) g
    const double n1 = std::norm(f[0]);
    const double n2 = std::norm(f[1]);
    const double del = n1 + n2;
    const cdouble lc = std::conj(lambda);
    const cdouble s11 = (lambda * n1 + lc * n2) / del;
    const cdouble s22 = (lambda * n2 + lc * n1) / del;
    const cdouble s12 = (lambda - lc) * f[0] * std::conj(f[1]) / del;
    const cdouble s21 = (lambda - lc) * f[1] * std::conj(f[0]) / del;
    return {(mu - s11) * g[0] - s12 * g[1], -s21 * g[0] + (mu - s22) * g[1]};
  }
};

void check_modes(const GridSpec& grid, std::span<const DiscreteMode> modes)
{
  for (std::size_t i = 0; i < modes.size(); ++i) {
    if (!(modes[i].zeta.imag() > 0.0)) {
      throw std::invalid_argument("synthesis: eigenvalues must lie in the upper half plane");
    }
    if (modes[i].b == 0.0) throw std::invalid_argument("synthesis: b must be nonzero");
    const double t = generalized_position(modes[i].zeta, modes[i].b);
    if (std::abs(t) >= 0.5 * grid.t_span) {
      throw std::invalid_argument("synthesis: generalized position " + std::to_string(t) + " outside window");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (std::abs(modes[i].zeta - modes[j].zeta) < kMinSeparation) {
        throw std::invalid_argument("synthesis: coincident eigenvalues are not supported");
      }
    }
  }
}

} // namespace

ComplexWaveform synthesize_single(const GridSpec& grid, double eta, double kappa, double t0, double sigma0)
{
  return soliton_waveform(grid, SolitonParams{eta, kappa, t0, sigma0}, 0.0);
}

cdouble norming_from_position(cdouble zeta, double t, double phase)
{
  if (!(zeta.imag() > 0.0)) throw std::invalid_argument("norming_from_position: Im(zeta) must be positive");
  const double eta = 2.0 * zeta.imag();
  return std::polar(std::exp(kPositionGamma * eta * t), 0.5 * std::numbers::pi - phase);
}

ComplexWaveform synthesize_from_modes(const GridSpec& grid, std::span<const DiscreteMode> modes_in)
{
  check_modes(grid, modes_in);
  std::vector<DiscreteMode> modes(modes_in.begin(), modes_in.end());
  std::stable_sort(modes.begin(), modes.end(),
                   [](const auto& x, const auto& y) { return x.zeta.imag() > y.zeta.imag(); });

  ComplexWaveform base(make_grid(grid.n_samples, grid.t_span));
  std::vector<cdouble> q(grid.n_samples);
  std::vector<Dressing> chain;
  chain.reserve(modes.size());

  for (std::size_t i = 0; i < q.size(); ++i) {
    const double x = base.time(i);
    chain.clear();
    cdouble p = 0.0;  // potential of v1' = -i l v1 + p v2, p = i q
    for (const auto& m : modes) {
      Vec2 f = seed(m.zeta, m.b, x);
      for (const auto& d : chain) {
        f = d.apply(m.zeta, f);
        normalise(f);
      }
      const double del = std::norm(f[0]) + std::norm(f[1]);
      p += -2i * (m.zeta - std::conj(m.zeta)) * f[0] * std::conj(f[1]) / del;
      chain.push_back({m.zeta, f});
    }
    q[i] = -1i * p;
  }
  return base.with_samples(std::move(q));
}

ComplexWaveform synthesize_reflectionless(const GridSpec& grid, std::span<const ModeSpec> specs)
{
  std::vector<DiscreteMode> modes;
  modes.reserve(specs.size());
  for (const auto& s : specs) {
    if (!(s.zeta.imag() > 0.0)) {
      throw std::invalid_argument("synthesis: eigenvalues must lie in the upper half plane");
    }
    DiscreteMode m;
    m.zeta = s.zeta;
    m.b = norming_from_position(s.zeta, s.t, s.phase);
    m.t_pos = s.t;
    modes.push_back(m);
  }
  return synthesize_from_modes(grid, modes);
}

ScatteringData modes_to_scattering_data(std::span<const ModeSpec> specs)
{
  ScatteringData sd;
  for (const auto& s : specs) {
    DiscreteMode m;
    m.zeta = s.zeta;
    m.b = norming_from_position(s.zeta, s.t, s.phase);
    m.t_pos = s.t;
    sd.modes.push_back(m);
  }
  // a(zeta) = prod (zeta - z_k) / (zeta - conj z_k) for a reflectionless potential
  for (auto& m : sd.modes) {
    cdouble ad = 1.0 / (m.zeta - std::conj(m.zeta));
    for (const auto& o : sd.modes) {
      if (&o == &m) continue;
      ad *= (m.zeta - o.zeta) / (m.zeta - std::conj(o.zeta));
    }
    m.c = m.b / ad;
  }
  std::stable_sort(sd.modes.begin(), sd.modes.end(),
                   [](const auto& x, const auto& y) { return x.zeta.imag() > y.zeta.imag(); });
  return sd;
}

ScatteringData evolve_scattering_data(const ScatteringData& sd, double Z)
{
  ScatteringData out = sd;
  for (auto& m : out.modes) {
    const cdouble rot = std::exp(2i * m.zeta * m.zeta * Z);
    m.b *= rot;
    m.c *= rot;
    m.t_pos = generalized_position(m.zeta, m.b);
  }
  for (std::size_t i = 0; i < out.xi.size(); ++i) {
    out.reflection[i] *= std::exp(2i * out.xi[i] * out.xi[i] * Z);
  }
  return out;
}

} // namespace solitonlab
