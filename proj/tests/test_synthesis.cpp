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

const GridSpec kGrid = make_grid(2048, 40.0);

cdouble zeta_of(double eta, double kappa) { return {0.5 * kappa, 0.5 * eta}; }

} // namespace

TEST_CASE("synthesize_single places a sech")
{
  const auto w = synthesize_single(kGrid, 1.0, 0.0, 0.0, 0.0);
  const auto shifted = synthesize_single(kGrid, 1.0, 0.0, 5.0, 0.0);
  for (std::size_t i = 0; i < w.size(); i += 31) {
    CHECK(std::abs(w.samples()[i] - 1.0 / std::cosh(w.time(i))) < 1e-15);
    CHECK(std::abs(shifted.samples()[i] - 1.0 / std::cosh(w.time(i) - 5.0)) < 1e-15);
  }
  const auto sd = direct_scattering(shifted, SearchRegion{}, {});
  REQUIRE(sd.modes.size() == 1);
  CHECK(std::abs(sd.modes[0].zeta - 0.5i) < 1e-6);
  CHECK(std::abs(sd.modes[0].t_pos - 5.0) < 1e-3);
}

TEST_CASE("one-mode Darboux equals the closed form")
{
  for (const auto& [eta, kappa, t, phase] : {std::tuple{1.0, 0.0, 0.0, 0.0}, std::tuple{1.5, 0.4, -2.0, 0.7}}) {
    const ModeSpec m{zeta_of(eta, kappa), t, phase};
    const auto w = synthesize_reflectionless(kGrid, std::span(&m, 1));
    CHECK(linf_distance(w, synthesize_single(kGrid, eta, kappa, t, phase)) < 1e-10);
  }
}

TEST_CASE("norming_from_position")
{
  CHECK(std::abs(norming_from_position(0.5i, 0.0)) == doctest::Approx(1.0));
  for (double t : {-2.0, 0.0, 1.5}) {
    const cdouble z = zeta_of(1.3, 0.2);
    CHECK(generalized_position(z, norming_from_position(z, t, 0.4)) == doctest::Approx(t).epsilon(1e-12));
  }
  CHECK_THROWS_AS(norming_from_position(0.5, 0.0), std::invalid_argument);

  const ModeSpec m{0.5i, 2.0, 0.0};
  const auto sd = direct_scattering(synthesize_reflectionless(kGrid, std::span(&m, 1)), SearchRegion{}, {});
  REQUIRE(sd.modes.size() == 1);
  CHECK(std::abs(sd.modes[0].t_pos - 2.0) < 1e-3);
}

TEST_CASE("concentric two-soliton round trip")
{
  const ModeSpec modes[] = {{1.0i, 0.0, 0.0}, {0.5i, 0.0, 0.0}};
  const auto w = synthesize_reflectionless(kGrid, modes);
  const auto sd = direct_scattering(w, SearchRegion{}, {});
  REQUIRE(sd.modes.size() == 2);
  CHECK(std::abs(sd.modes[0].zeta - 1.0i) < 1e-5);
  CHECK(std::abs(sd.modes[1].zeta - 0.5i) < 1e-5);
  CHECK(std::abs(sd.modes[0].t_pos) < 1e-3);
  CHECK(std::abs(sd.modes[1].t_pos) < 1e-3);
  CHECK(energy(w) == doctest::Approx(6.0).epsilon(1e-4));
}

TEST_CASE("well-separated modes look like two solitons")
{
  // oracle: superposition of closed-form solitons displaced by the asymptotic
  // interaction shift ln|(z1 - conj z2) / (z1 - z2)| / eta_n = ln 3 / eta_n
  // (the residual decays like exp(-2 sep / 3); 8e-3 at sep 8, 4e-5 at sep 16)
  const auto g = make_grid(4096, 60.0);
  const ModeSpec modes[] = {{1.0i, 0.0, 0.0}, {0.5i, 16.0, 0.0}};
  const auto w = synthesize_reflectionless(g, modes);
  const double shift = std::log(3.0);
  const auto a = synthesize_single(g, 2.0, 0.0, -shift / 2.0, 0.0);
  const auto b = synthesize_single(g, 1.0, 0.0, 16.0 + shift, 0.0);
  double err = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    err = std::max(err, std::abs(std::abs(w.samples()[i]) - std::abs(a.samples()[i] + b.samples()[i])));
  }
  CHECK(err < 1e-4);
}

TEST_CASE("modes at t = {0, 8} equal the unshifted superposition within 1e-3" * doctest::may_fail())
{
  // Literal example. The interaction displaces each soliton by ln 3 / eta_n, so the
  // unshifted sum is off by O(1); see the shifted oracle above.
  const ModeSpec modes[] = {{1.0i, 0.0, 0.0}, {0.5i, 8.0, 0.0}};
  const auto w = synthesize_reflectionless(kGrid, modes);
  const auto a = synthesize_single(kGrid, 2.0, 0.0, 0.0, 0.0);
  const auto b = synthesize_single(kGrid, 1.0, 0.0, 8.0, 0.0);
  double err = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    err = std::max(err, std::abs(std::abs(w.samples()[i]) - std::abs(a.samples()[i] + b.samples()[i])));
  }
  CHECK(err < 1e-3);
}

TEST_CASE("randomised round trip for up to four modes")
{
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> eta(0.5, 3.0), pos(-5.0, 5.0), ph(0.0, 2 * std::numbers::pi);
  const auto g = make_grid(8192, 80.0);
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 1 + trial % 4;
    std::vector<ModeSpec> modes;
    for (int k = 0; k < n; ++k) {
      // distinct amplitudes at least 0.15 apart
      double e;
      bool ok;
      do {
        e = eta(rng);
        ok = true;
        for (const auto& m : modes) ok = ok && std::abs(2 * m.zeta.imag() - e) > 0.15;
      } while (!ok);
      modes.push_back({zeta_of(e, 0.0), pos(rng), ph(rng)});
    }
    const auto w = synthesize_reflectionless(g, modes);
    const auto sd = direct_scattering(w, SearchRegion{-1.0, 1.0, 0.05, 1.6, 80}, {});
    REQUIRE(sd.modes.size() == modes.size());
    for (const auto& m : modes) {
      const auto it = std::min_element(sd.modes.begin(), sd.modes.end(), [&](const auto& x, const auto& y) {
        return std::abs(x.zeta - m.zeta) < std::abs(y.zeta - m.zeta);
      });
      CHECK(std::abs(it->zeta - m.zeta) < 1e-5);
      CHECK(std::abs(it->t_pos - m.t) < 1e-3);
    }
    double energy_expected = 0.0;
    for (const auto& m : modes) energy_expected += 4.0 * m.zeta.imag();
    CHECK(energy(w) == doctest::Approx(energy_expected).epsilon(1e-4));
    double rmax = 0.0;
    for (const auto& r : reflection_coefficient(w, linspace(-5.0, 5.0, 41))) rmax = std::max(rmax, std::abs(r));
    CHECK(rmax < 1e-3);
  }
}

TEST_CASE("invalid mode sets")
{
  const ModeSpec below[] = {{-0.5i, 0.0, 0.0}};
  CHECK_THROWS_AS(synthesize_reflectionless(kGrid, below), std::invalid_argument);
  const ModeSpec coincident[] = {{0.5i, 0.0, 0.0}, {0.5i + 1e-4, 1.0, 0.0}};
  CHECK_THROWS_AS(synthesize_reflectionless(kGrid, coincident), std::invalid_argument);
  const ModeSpec outside[] = {{0.5i, 25.0, 0.0}};
  CHECK_THROWS_AS(synthesize_reflectionless(kGrid, outside), std::invalid_argument);
}

TEST_CASE("analytic norming constants match direct scattering")
{
  const ModeSpec modes[] = {{1.0i, 0.0, 0.3}, {cdouble(0.1, 0.5), 2.0, 1.1}};
  const auto sd_exact = modes_to_scattering_data(modes);
  const auto sd_num = direct_scattering(synthesize_reflectionless(kGrid, modes), SearchRegion{}, {});
  REQUIRE(sd_num.modes.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(std::abs(sd_num.modes[i].zeta - sd_exact.modes[i].zeta) < 1e-6);
    CHECK(std::abs(sd_num.modes[i].b / sd_exact.modes[i].b - 1.0) < 1e-5);
    CHECK(std::abs(sd_num.modes[i].c / sd_exact.modes[i].c - 1.0) < 1e-5);
  }
}

TEST_CASE("evolution of scattering data")
{
  const ModeSpec modes[] = {{1.0i, 1.0, 0.0}, {cdouble(0.25, 0.5), -1.0, 0.0}};
  const auto sd = modes_to_scattering_data(modes);
  const auto same = evolve_scattering_data(sd, 0.0);
  for (std::size_t i = 0; i < 2; ++i) CHECK(same.modes[i].b == sd.modes[i].b);

  // purely imaginary zeta: exp(2 i zeta^2 Z) = exp(-i eta^2 Z / 2), a pure rotation
  const auto later = evolve_scattering_data(sd, 3.0);
  CHECK(std::abs(later.modes[0].c) == doctest::Approx(std::abs(sd.modes[0].c)).epsilon(1e-12));
  CHECK(later.modes[0].t_pos == doctest::Approx(1.0).epsilon(1e-12));

  // kappa = 0.5: position moves with slope -kappa
  const auto z1 = evolve_scattering_data(sd, 1.0);
  const auto z2 = evolve_scattering_data(sd, 2.0);
  CHECK(z2.modes[1].t_pos - z1.modes[1].t_pos == doctest::Approx(-0.5).epsilon(1e-12));

  ScatteringData cont;
  cont.xi = {0.0, 1.0};
  cont.reflection = {0.1, 0.2i};
  const auto ce = evolve_scattering_data(cont, 0.5);
  CHECK(std::abs(ce.reflection[1] - 0.2i * std::exp(1.0i)) < 1e-15);
}

TEST_CASE("propagation commutes with synthesis for a moving soliton")
{
  const ModeSpec m{zeta_of(1.0, 0.5), 0.0, 0.0};
  const auto w = synthesize_reflectionless(kGrid, std::span(&m, 1));
  const auto out = propagate(w, 2.0, 4000);
  const auto sd = evolve_scattering_data(modes_to_scattering_data(std::span(&m, 1)), 2.0);
  std::vector<DiscreteMode> evolved = sd.modes;
  const auto expected = synthesize_from_modes(kGrid, evolved);
  CHECK(linf_distance(out, expected) < 1e-4);
  CHECK(sd.modes[0].t_pos == doctest::Approx(-1.0).epsilon(1e-12));
}
