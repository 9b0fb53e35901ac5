#include "solitonlab/scattering.hpp"
#include "solitonlab/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace solitonlab {

using namespace std::complex_literals;

namespace {

constexpr double kRenormAbove = 1e150;
constexpr double kMaxLogMagnitude = 700.0;
constexpr double kDeflationTol = 1e-6;

cdouble scaled_exp(cdouble value, double log_scale, cdouble exponent)
{
  if (value == 0.0) return 0.0;
  const cdouble e = std::log(value) + log_scale + exponent;
  if (e.real() > kMaxLogMagnitude) {
    throw NumericalError("scattering: coefficient overflows double precision");
  }
  return std::exp(e);
}

} // namespace

ZakharovShabat::ZakharovShabat(const ComplexWaveform& w)
  : dt_(w.dt()), left_(w.left_edge()), right_(w.right_edge())
{
  const auto& q = w.samples();
  const auto n = q.size();
  const double h = dt_;
  const double h3 = h * h * h;
  cells_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const cdouble qm = q[i];
    const cdouble ql = i > 0 ? q[i - 1] : 0.0;
    const cdouble qr = i + 1 < n ? q[i + 1] : 0.0;
    const cdouble d1 = (qr - ql) / (2.0 * h);
    const cdouble d2 = (qr - 2.0 * qm + ql) / (h * h);
    // Omega = h A(mid) + h^3/24 A'' + h^3/12 [A', A]
    cells_[i].u = 1i * (qm * h + d2 * (h3 / 24.0));
    cells_[i].v = -d1 * (h3 / 6.0);
    cells_[i].c11 = -1i * (h3 / 6.0) * (d1 * std::conj(qm)).imag();
  }
}

ZakharovShabat::Step ZakharovShabat::step(std::size_t i, cdouble zeta) const
{
  const auto& cell = cells_[i];
  Step s;
  s.w11 = -1i * zeta * dt_ + cell.c11;
  s.w12 = cell.u + zeta * cell.v;
  s.w21 = -std::conj(cell.u) - zeta * std::conj(cell.v);
  const cdouble k2 = s.w11 * s.w11 + s.w12 * s.w21;
  if (std::norm(k2) < 1e-4) {
    // |k| < 1e-2: Taylor series of cosh(k) and sinh(k)/k
    s.ch = 1.0 + k2 * (0.5 + k2 * (1.0 / 24.0 + k2 / 720.0));
    s.shk = 1.0 + k2 * (1.0 / 6.0 + k2 * (1.0 / 120.0 + k2 / 5040.0));
  } else {
    const cdouble k = std::sqrt(k2);
    const cdouble e = std::exp(k);
    const cdouble ei = 1.0 / e;
    s.ch = 0.5 * (e + ei);
    s.shk = 0.5 * (e - ei) / k;
  }
  return s;
}

namespace {

void renormalise(cdouble& v1, cdouble& v2, double& log_scale)
{
  const double mag = std::max(std::abs(v1.real()) + std::abs(v1.imag()), std::abs(v2.real()) + std::abs(v2.imag()));
  if (mag > kRenormAbove) {
    v1 /= mag;
    v2 /= mag;
    log_scale += std::log(mag);
  }
}

void check_finite(cdouble v1, cdouble v2)
{
  if (!std::isfinite(v1.real()) || !std::isfinite(v1.imag()) || !std::isfinite(v2.real()) ||
      !std::isfinite(v2.imag())) {
    throw NumericalError("scattering: non-finite Jost solution");
  }
}

} // namespace

void ZakharovShabat::integrate(cdouble zeta, cdouble& v1, cdouble& v2, double& log_scale) const
{
  v1 = 1.0;
  v2 = 0.0;
  log_scale = 0.0;
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    const Step s = step(i, zeta);
    const cdouble n1 = (s.ch + s.shk * s.w11) * v1 + s.shk * s.w12 * v2;
    const cdouble n2 = s.shk * s.w21 * v1 + (s.ch - s.shk * s.w11) * v2;
    v1 = n1;
    v2 = n2;
    renormalise(v1, v2, log_scale);
  }
  check_finite(v1, v2);
}

cdouble ZakharovShabat::a(cdouble zeta) const
{
  cdouble v1, v2;
  double log_scale;
  integrate(zeta, v1, v2, log_scale);
  return scaled_exp(v1, log_scale, 1i * zeta * (right_ - left_));
}

ScatteringCoefficients ZakharovShabat::coefficients(cdouble zeta) const
{
  cdouble v1, v2;
  double log_scale;
  integrate(zeta, v1, v2, log_scale);

  // Phi(L) = (e^{-i zeta L}, 0); a = Phi_1(R) e^{i zeta R}; b = Phi_2(R) e^{-i zeta R}
  ScatteringCoefficients out;
  out.a = scaled_exp(v1, log_scale, 1i * zeta * (right_ - left_));
  out.b = scaled_exp(v2, log_scale, -1i * zeta * (right_ + left_));
  return out;
}

cdouble ZakharovShabat::bound_state_b(cdouble zeta, double split_t) const
{
  const auto n = cells_.size();
  const double f = std::round((split_t - left_) / dt_);
  const auto m = static_cast<std::size_t>(std::clamp(f, 1.0, static_cast<double>(n - 1)));

  // Phi from the left edge up to the split point
  cdouble p1 = 1.0, p2 = 0.0;
  double ls_p = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const Step s = step(i, zeta);
    const cdouble n1 = (s.ch + s.shk * s.w11) * p1 + s.shk * s.w12 * p2;
    const cdouble n2 = s.shk * s.w21 * p1 + (s.ch - s.shk * s.w11) * p2;
    p1 = n1;
    p2 = n2;
    renormalise(p1, p2, ls_p);
  }
  // Psi from the right edge, Psi(R) = (0, e^{i zeta R}), back to the split point
  cdouble s1 = 0.0, s2 = 1.0;
  double ls_s = 0.0;
  for (std::size_t i = n; i-- > m;) {
    const Step s = step(i, zeta);
    const cdouble n1 = (s.ch - s.shk * s.w11) * s1 - s.shk * s.w12 * s2;
    const cdouble n2 = -s.shk * s.w21 * s1 + (s.ch + s.shk * s.w11) * s2;
    s1 = n1;
    s2 = n2;
    renormalise(s1, s2, ls_s);
  }
  check_finite(p1, p2);
  check_finite(s1, s2);
  const double den = std::norm(s1) + std::norm(s2);
  if (den == 0.0) throw NumericalError("scattering: vanishing Jost solution at the split point");
  const cdouble ratio = (std::conj(s1) * p1 + std::conj(s2) * p2) / den;
  return scaled_exp(ratio, ls_p - ls_s, -1i * zeta * (left_ + right_));
}

cdouble ZakharovShabat::a_derivative(cdouble zeta, double h) const
{
  return (a(zeta + h) - a(zeta - h)) / (2.0 * h);
}

cdouble ZakharovShabat::a_derivative(cdouble zeta) const
{
  return a_derivative(zeta, 1e-6 * std::max(1.0, std::abs(zeta)));
}

std::optional<cdouble> ZakharovShabat::refine(cdouble guess, double tol, int max_iters) const
{
  constexpr double kMaxStep = 0.5;
  cdouble zeta = guess;
  std::optional<cdouble> last_deriv;
  for (int it = 0; it <= max_iters; ++it) {
    if (!(zeta.imag() > 0.0)) return std::nullopt;
    const cdouble av = a(zeta);
    if (std::abs(av) < tol) {
      // one free polishing step with the previous derivative
      if (last_deriv) zeta -= av / *last_deriv;
      return zeta;
    }
    const cdouble ad = a_derivative(zeta);
    if (std::abs(ad) < 1e-14) return std::nullopt;
    cdouble step = av / ad;
    if (std::abs(step) > kMaxStep) step *= kMaxStep / std::abs(step);
    zeta -= step;
    last_deriv = ad;
  }
  return std::nullopt;
}

ScatteringCoefficients scattering_coefficients(const ComplexWaveform& w, cdouble zeta)
{
  return ZakharovShabat(w).coefficients(zeta);
}

cdouble a_derivative(const ComplexWaveform& w, cdouble zeta)
{
  return ZakharovShabat(w).a_derivative(zeta);
}

std::vector<double> linspace(double lo, double hi, std::size_t n)
{
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return out;
}

EigenvalueSearch search_discrete_eigenvalues(const ComplexWaveform& w, const SearchRegion& region)
{
  if (!(region.im_min > 0.0) || !(region.im_max > region.im_min) || !(region.re_max > region.re_min) ||
      region.coarse_n < 3) {
    throw std::invalid_argument("search region must be a non-degenerate rectangle with Im > 0");
  }
  const ZakharovShabat zs(w);
  const auto n = static_cast<std::size_t>(region.coarse_n);
  const auto re = linspace(region.re_min, region.re_max, n);
  const auto im = linspace(region.im_min, region.im_max, n);

  std::vector<double> mag(n * n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) mag[j * n + i] = std::abs(zs.a(cdouble(re[i], im[j])));
  }

  // |a| -> 1 away from bound states; only clear dips are worth refining
  constexpr double kCandidateBelow = 0.9;
  struct Candidate
  {
    double mag;
    cdouble zeta;
  };
  std::vector<Candidate> candidates;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const double m = mag[j * n + i];
      if (m >= kCandidateBelow) continue;
      bool is_min = true;
      for (int dj = -1; dj <= 1 && is_min; ++dj) {
        for (int di = -1; di <= 1; ++di) {
          if (di == 0 && dj == 0) continue;
          const auto ii = static_cast<std::ptrdiff_t>(i) + di;
          const auto jj = static_cast<std::ptrdiff_t>(j) + dj;
          if (ii < 0 || jj < 0 || ii >= static_cast<std::ptrdiff_t>(n) || jj >= static_cast<std::ptrdiff_t>(n)) {
            continue;
          }
          if (mag[static_cast<std::size_t>(jj) * n + static_cast<std::size_t>(ii)] < m) {
            is_min = false;
            break;
          }
        }
      }
      if (is_min) candidates.push_back({m, cdouble(re[i], im[j])});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const auto& x, const auto& y) { return x.mag < y.mag; });

  EigenvalueSearch result;
  struct Root
  {
    cdouble zeta;
    double residual;
  };
  std::vector<Root> roots;
  const double im_floor = 0.5 * region.im_min;
  for (const auto& cand : candidates) {
    const auto root = zs.refine(cand.zeta);
    if (!root) {
      result.diagnostics.push_back("Newton did not converge from (" + std::to_string(cand.zeta.real()) + ", " +
                                   std::to_string(cand.zeta.imag()) + ")");
      continue;
    }
    if (root->imag() < im_floor) {
      result.diagnostics.push_back("root too close to the real axis dropped");
      continue;
    }
    const double residual = std::abs(zs.a(*root));
    auto dup = std::find_if(roots.begin(), roots.end(),
                            [&](const Root& r) { return std::abs(r.zeta - *root) < kDeflationTol; });
    if (dup == roots.end()) {
      roots.push_back({*root, residual});
    } else if (residual < dup->residual) {
      *dup = {*root, residual};
    }
  }
  std::sort(roots.begin(), roots.end(), [](const Root& x, const Root& y) { return x.zeta.imag() > y.zeta.imag(); });
  for (const auto& r : roots) result.eigenvalues.push_back(r.zeta);
  return result;
}

std::vector<cdouble> find_discrete_eigenvalues(const ComplexWaveform& w, const SearchRegion& region)
{
  return search_discrete_eigenvalues(w, region).eigenvalues;
}

std::optional<cdouble> refine_eigenvalue(const ComplexWaveform& w, cdouble guess)
{
  return ZakharovShabat(w).refine(guess);
}

double generalized_position(cdouble zeta, cdouble b)
{
  if (b == 0.0) throw std::domain_error("generalized position undefined for b = 0");
  const double eta = 2.0 * zeta.imag();
  if (!(eta > 0.0)) throw std::domain_error("generalized position needs Im(zeta) > 0");
  return std::log(std::abs(b)) / (kPositionGamma * eta);
}

std::vector<double> generalized_positions(std::span<const DiscreteMode> modes)
{
  std::vector<double> out;
  out.reserve(modes.size());
  for (const auto& m : modes) out.push_back(generalized_position(m.zeta, m.b));
  return out;
}

std::vector<DiscreteMode> norming_constants(const ZakharovShabat& zs, std::span<const cdouble> zetas)
{
  std::vector<DiscreteMode> modes;
  modes.reserve(zetas.size());
  for (const auto& z : zetas) {
    const cdouble ad = zs.a_derivative(z);
    if (std::abs(ad) < 1e-8) {
      throw NumericalError("norming_constants: |a'| < 1e-8 at a candidate eigenvalue (degenerate zero)");
    }
    DiscreteMode m;
    m.zeta = z;
    // The edge value seeds the split point; b is then taken where Phi and Psi
    // are both well conditioned, which keeps far-field noise out of t_n.
    m.b = zs.coefficients(z).b;
    for (int pass = 0; pass < 2; ++pass) m.b = zs.bound_state_b(z, generalized_position(z, m.b));
    m.c = m.b / ad;
    m.t_pos = generalized_position(z, m.b);
    modes.push_back(m);
  }
  return modes;
}

std::vector<DiscreteMode> norming_constants(const ComplexWaveform& w, std::span<const cdouble> zetas)
{
  return norming_constants(ZakharovShabat(w), zetas);
}

std::vector<cdouble> reflection_coefficient(const ComplexWaveform& w, std::span<const double> xi)
{
  const ZakharovShabat zs(w);
  std::vector<cdouble> r;
  r.reserve(xi.size());
  for (double x : xi) {
    const auto c = zs.coefficients(x);
    r.push_back(c.b / c.a);
  }
  return r;
}

ScatteringData direct_scattering(const ComplexWaveform& w, const SearchRegion& region,
                                 std::span<const double> xi_grid)
{
  ScatteringData sd;
  const auto zetas = find_discrete_eigenvalues(w, region);
  sd.modes = norming_constants(w, zetas);
  sd.xi.assign(xi_grid.begin(), xi_grid.end());
  sd.reflection = reflection_coefficient(w, xi_grid);
  return sd;
}

std::string to_json(const ScatteringData& sd, int indent)
{
  nlohmann::json j;
  j["modes"] = nlohmann::json::array();
  for (const auto& m : sd.modes) {
    j["modes"].push_back({{"zeta_re", m.zeta.real()},
                          {"zeta_im", m.zeta.imag()},
                          {"b_re", m.b.real()},
                          {"b_im", m.b.imag()},
                          {"c_re", m.c.real()},
                          {"c_im", m.c.imag()},
                          {"t_pos", m.t_pos}});
  }
  j["xi"] = sd.xi;
  std::vector<double> rr, ri;
  for (const auto& r : sd.reflection) {
    rr.push_back(r.real());
    ri.push_back(r.imag());
  }
  j["r_re"] = rr;
  j["r_im"] = ri;
  return j.dump(indent);
}

ScatteringData scattering_from_json(const std::string& text)
{
  try {
    const auto j = nlohmann::json::parse(text);
    ScatteringData sd;
    for (const auto& m : j.at("modes")) {
      DiscreteMode d;
      d.zeta = {m.at("zeta_re").get<double>(), m.at("zeta_im").get<double>()};
      d.b = {m.at("b_re").get<double>(), m.at("b_im").get<double>()};
      d.c = {m.at("c_re").get<double>(), m.at("c_im").get<double>()};
      d.t_pos = m.at("t_pos").get<double>();
      sd.modes.push_back(d);
    }
    sd.xi = j.at("xi").get<std::vector<double>>();
    const auto rr = j.at("r_re").get<std::vector<double>>();
    const auto ri = j.at("r_im").get<std::vector<double>>();
    if (rr.size() != sd.xi.size() || ri.size() != sd.xi.size()) {
      throw FormatError("scattering JSON: reflection arrays do not match xi");
    }
    for (std::size_t i = 0; i < rr.size(); ++i) sd.reflection.emplace_back(rr[i], ri[i]);
    return sd;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("scattering JSON: ") + e.what());
  }
}

} // namespace solitonlab
