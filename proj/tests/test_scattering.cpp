#include "solitonlab/errors.hpp"
#include "solitonlab/propagator.hpp"
#include "solitonlab/scattering.hpp"
#include "solitonlab/synthesis.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace solitonlab;
using namespace std::complex_literals;

namespace {

const GridSpec kGrid = make_grid(1024, 40.0);

ComplexWaveform sech(double amp = 1.0, double t0 = 0.0, double phase = 0.0)
{
  ComplexWaveform w(kGrid);
  std::vector<cdouble> s(kGrid.n_samples);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = amp * std::polar(1.0 / std::cosh(w.time(i) - t0), phase);
  return w.with_samples(s);
}

ComplexWaveform gaussian(double amp, double width)
{
  ComplexWaveform w(kGrid);
  std::vector<cdouble> s(kGrid.n_samples);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = amp * std::exp(-0.5 * std::pow(w.time(i) / width, 2));
  return w.with_samples(s);
}

} // namespace

TEST_CASE("vacuum potential")
{
  const ComplexWaveform zero(kGrid);
  for (double xi : {-3.0, 0.0, 0.7, 5.0}) {
    const auto c = scattering_coefficients(zero, xi);
    CHECK(std::abs(c.a - 1.0) < 1e-12);
    CHECK(std::abs(c.b) < 1e-14);
  }
  CHECK(std::abs(a_derivative(zero, 0.3i)) < 1e-8);
  CHECK(find_discrete_eigenvalues(zero).empty());
  for (const auto& r : reflection_coefficient(zero, linspace(-5, 5, 11))) CHECK(std::abs(r) < 1e-14);
}

TEST_CASE("sech has a bound state at 0.5i")
{
  const auto w = sech();
  CHECK(std::abs(scattering_coefficients(w, 0.5i).a) < 1e-6);
  const auto zs = find_discrete_eigenvalues(w);
  REQUIRE(zs.size() == 1);
  CHECK(std::abs(zs[0] - 0.5i) < 1e-6);
}

TEST_CASE("sub-threshold sech has no bound state")
{
  // oracle: dense scan of |a| on a fine upper-half-plane grid stays well away from zero
  const auto w = sech(0.4);
  const ZakharovShabat zs(w);
  double min_a = 1e300;
  for (double re = -2.0; re <= 2.0; re += 0.02) {
    for (double im = 0.01; im <= 1.5; im += 0.01) min_a = std::min(min_a, std::abs(zs.a({re, im})));
  }
  CHECK(min_a > 0.1);
  CHECK(find_discrete_eigenvalues(w).empty());
}

TEST_CASE("a' at a simple zero with Richardson self-check")
{
  const auto w = sech();
  const ZakharovShabat zs(w);
  const cdouble d1 = zs.a_derivative(0.5i, 1e-4);
  const cdouble d2 = zs.a_derivative(0.5i, 5e-5);
  const cdouble rich = (4.0 * d2 - d1) / 3.0;
  const cdouble d = zs.a_derivative(0.5i);
  CHECK(std::abs(d) > 1e-3);
  CHECK(std::abs(d - rich) / std::abs(rich) < 1e-4);
  CHECK(std::abs(zs.a_derivative(0.5i, 1e-6) - zs.a_derivative(0.5i, 2e-6)) / std::abs(d) < 1e-4);
  // exact for sech: a = (zeta - i/2) / (zeta + i/2), a'(i/2) = 1 / i = -i
  CHECK(std::abs(d - (-1.0i)) < 1e-6);
}

TEST_CASE("position calibration")
{
  for (double t0 : {-3.0, 0.0, 3.0}) {
    const auto w = soliton_waveform(kGrid, {1.0, 0.0, t0, 0.0});
    const auto modes = norming_constants(w, std::vector<cdouble>{0.5i});
    CHECK(std::abs(modes[0].t_pos - t0) < (t0 == 0.0 ? 1e-4 : 1e-3));
  }
}

TEST_CASE("phase rotation changes only arg b")
{
  const cdouble z0 = 0.5i;
  const auto m0 = norming_constants(sech(1.0, 0.0, 0.0), std::vector<cdouble>{z0})[0];
  const auto m1 = norming_constants(sech(1.0, 0.0, std::numbers::pi / 2), std::vector<cdouble>{z0})[0];
  CHECK(std::abs(m0.b) == doctest::Approx(std::abs(m1.b)).epsilon(1e-8));
  CHECK(m0.t_pos == doctest::Approx(m1.t_pos).epsilon(1e-8));
  // b = exp(eta t) e^{i (pi/2 - phase)}: rotating q by theta turns b by -theta
  CHECK(std::abs(m1.b / m0.b - std::polar(1.0, -std::numbers::pi / 2)) < 1e-8);
}

TEST_CASE("degenerate a' is reported")
{
  CHECK_THROWS_AS(norming_constants(ComplexWaveform(kGrid), std::vector<cdouble>{0.5i}), NumericalError);
  CHECK_THROWS_AS(generalized_position(0.5i, 0.0), std::domain_error);
}

TEST_CASE("reflection coefficient")
{
  const auto xi = linspace(-10.0, 10.0, 201);
  double rmax = 0.0;
  for (const auto& r : reflection_coefficient(soliton_waveform(kGrid, {1.0, 0.0, 0.0, 0.0}), xi)) {
    rmax = std::max(rmax, std::abs(r));
  }
  CHECK(rmax < 1e-3);

  // oracle: first Born approximation r(xi) ~ i int q*(s) e^{-2 i xi s} ds
  //       = i A w sqrt(2 pi) exp(-2 xi^2 w^2) for a real Gaussian
  const double A = 0.01, width = 1.0;
  const auto rs = reflection_coefficient(gaussian(A, width), linspace(-1.0, 1.0, 11));
  const auto grid = linspace(-1.0, 1.0, 11);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const cdouble born = 1i * A * width * std::sqrt(2 * std::numbers::pi) * std::exp(-2 * grid[k] * grid[k] * width * width);
    CHECK(std::abs(rs[k] - born) < 0.1 * std::abs(born));
  }
}

TEST_CASE("unitarity on the real axis")
{
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 0.2);
  std::vector<cdouble> noise(kGrid.n_samples);
  for (auto& x : noise) x = {n(rng), n(rng)};
  const ModeSpec two[] = {{1.0i, 0.0, 0.0}, {0.5i, 0.0, 0.0}};
  const ComplexWaveform waves[] = {sech(), synthesize_reflectionless(kGrid, two), ComplexWaveform(kGrid).with_samples(noise)};
  for (const auto& w : waves) {
    const ZakharovShabat zs(w);
    for (double xi : linspace(-8.0, 8.0, 161)) {
      const auto c = zs.coefficients(xi);
      CHECK(std::abs(std::norm(c.a) + std::norm(c.b) - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("concentric two-soliton eigenvalues")
{
  const ModeSpec two[] = {{1.0i, 0.0, 0.0}, {0.5i, 0.0, 0.0}};
  const auto w = synthesize_reflectionless(make_grid(2048, 40.0), two);
  const auto zs = find_discrete_eigenvalues(w);
  REQUIRE(zs.size() == 2);
  CHECK(std::abs(zs[0] - 1.0i) < 1e-5);
  CHECK(std::abs(zs[1] - 0.5i) < 1e-5);
}

TEST_CASE("large Im(zeta) over a wide window does not overflow")
{
  const auto g = make_grid(2048, 200.0);
  const auto w = soliton_waveform(g, {3.0, 0.0, 0.0, 0.0});
  const auto c = ZakharovShabat(w).coefficients(1.5i);
  CHECK(std::abs(c.a) < 1e-4);
  CHECK(std::isfinite(std::abs(c.b)));
}

TEST_CASE("a tends to 1 far up the imaginary axis")
{
  // exact for sech: a = (zeta - i/2) / (zeta + i/2), so |a(50i) - 1| = 1 / 50.5
  CHECK(std::abs(ZakharovShabat(sech()).a(50.0i) - 49.5 / 50.5) < 1e-6);
  // |a - 1| ~ energy / (2 |zeta|), below 1e-3 once the energy is small
  CHECK(std::abs(ZakharovShabat(sech(0.1)).a(50.0i) - 1.0) < 1e-3);
  // b itself grows like exp(2 Im(zeta) R) on a truncated window
  CHECK_THROWS_AS(scattering_coefficients(sech(), 50.0i), NumericalError);
}

TEST_CASE("translation covariance")
{
  const auto g = make_grid(2048, 40.0);
  const auto m0 = direct_scattering(soliton_waveform(g, {1.2, 0.3, -1.0, 0.4}), SearchRegion{}, {});
  const auto m1 = direct_scattering(soliton_waveform(g, {1.2, 0.3, 1.3, 0.4}), SearchRegion{}, {});
  REQUIRE(m0.modes.size() == 1);
  REQUIRE(m1.modes.size() == 1);
  CHECK(std::abs(m1.modes[0].zeta - m0.modes[0].zeta) < 1e-6);
  CHECK(std::abs(m1.modes[0].t_pos - m0.modes[0].t_pos - 2.3) < 1e-4);
}

TEST_CASE("search rectangle must be valid")
{
  CHECK_THROWS_AS(find_discrete_eigenvalues(sech(), SearchRegion{-1, 1, 0.0, 1, 40}), std::invalid_argument);
  CHECK_THROWS_AS(find_discrete_eigenvalues(sech(), SearchRegion{1, -1, 0.1, 1, 40}), std::invalid_argument);
}

TEST_CASE("bidirectional b agrees with the edge value on clean data")
{
  const auto w = soliton_waveform(kGrid, {1.0, 0.4, 2.0, 0.3});
  const ZakharovShabat zs(w);
  const auto z = zs.refine(cdouble(0.2, 0.5));
  REQUIRE(z);
  const cdouble edge = zs.coefficients(*z).b;
  for (double split : {-5.0, 0.0, 2.0, 6.0}) CHECK(std::abs(zs.bound_state_b(*z, split) / edge - 1.0) < 1e-6);
}

TEST_CASE("JSON round trip")
{
  const ModeSpec two[] = {{1.0i, 0.0, 0.0}, {cdouble(0.1, 0.5), 3.0, 0.4}};
  const auto w = synthesize_reflectionless(kGrid, two);
  const auto xi = linspace(-2.0, 2.0, 5);
  const auto sd = direct_scattering(w, SearchRegion{}, xi);
  const auto back = scattering_from_json(to_json(sd));
  REQUIRE(back.modes.size() == sd.modes.size());
  for (std::size_t i = 0; i < sd.modes.size(); ++i) {
    CHECK(back.modes[i].zeta == sd.modes[i].zeta);
    CHECK(back.modes[i].b == sd.modes[i].b);
    CHECK(back.modes[i].c == sd.modes[i].c);
    CHECK(back.modes[i].t_pos == sd.modes[i].t_pos);
  }
  CHECK(back.reflection == sd.reflection);
  CHECK_THROWS_AS(scattering_from_json("{\"modes\": 3}"), FormatError);
}
