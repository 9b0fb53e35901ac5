#include "solitonlab/perturbation_lab.hpp"
#include "solitonlab/propagator.hpp"
#include "solitonlab/errors.hpp"
#include "solitonlab/scattering.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <random>
#include <stdexcept>
#include <thread>

namespace solitonlab {

namespace {

constexpr double kLostFractionFlag = 0.05;

template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn)
{
  unsigned workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// Newton from each transmitted eigenvalue; a trial is lost when a root is not
// found or is closer to another transmitted eigenvalue than to its own.
TrialRecord recover_modes(const ComplexWaveform& w, std::span<const cdouble> transmitted)
{
  const ZakharovShabat zs(w);
  TrialRecord rec;
  std::vector<cdouble> roots;
  for (const auto& z0 : transmitted) {
    const auto root = zs.refine(z0);
    if (!root) {
      rec.lost = true;
      return rec;
    }
    roots.push_back(*root);
  }
  for (std::size_t i = 0; i < roots.size(); ++i) {
    for (std::size_t j = 0; j < transmitted.size(); ++j) {
      if (j != i && std::abs(roots[i] - transmitted[j]) < std::abs(roots[i] - transmitted[i])) {
        rec.lost = true;
        return rec;
      }
    }
  }
  try {
    for (const auto& m : norming_constants(zs, roots)) rec.modes.push_back({m.eta(), m.kappa(), m.t_pos});
  } catch (const std::exception&) {
    rec.lost = true;
    rec.modes.clear();
  }
  return rec;
}

void summarise(MCStats& s, std::size_t n_modes)
{
  s.lost_trials = static_cast<std::size_t>(
      std::count_if(s.per_trial.begin(), s.per_trial.end(), [](const auto& r) { return r.lost; }));
  for (std::size_t m = 0; m < n_modes; ++m) {
    s.eta.push_back(sample_moments(s.values(m, &ModeEstimate::eta)));
    s.kappa.push_back(sample_moments(s.values(m, &ModeEstimate::kappa)));
    s.t.push_back(sample_moments(s.values(m, &ModeEstimate::t)));
  }
  if (s.lost_fraction() > kLostFractionFlag) {
    s.flagged = true;
    s.warnings.push_back("eigenvalue detection failed in more than 5% of trials");
  }
}

double fitted_slope(std::span<const double> x, std::span<const double> y)
{
  const auto n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

} // namespace

double analytic_amp_var(double eta, double eps, double Z) { return eps * eps * eta * Z; }
double analytic_vel_var(double eta, double eps, double Z) { return eps * eps * eta * Z / 3.0; }
double analytic_timing_var(double eta, double eps, double Z) { return eps * eps * eta * Z * Z * Z / 9.0; }

Moments sample_moments(std::span<const double> x)
{
  Moments m;
  m.n = x.size();
  if (x.empty()) return m;
  double sum = 0.0;
  for (double v : x) sum += v;
  m.mean = sum / static_cast<double>(x.size());
  if (x.size() < 2) return m;
  double ss = 0.0;
  for (double v : x) ss += (v - m.mean) * (v - m.mean);
  m.var = ss / static_cast<double>(x.size() - 1);
  m.std_error = m.var * std::sqrt(2.0 / static_cast<double>(x.size() - 1));
  return m;
}

double correlation(std::span<const double> x, std::span<const double> y)
{
  if (x.size() != y.size() || x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const auto mx = sample_moments(x);
  const auto my = sample_moments(y);
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx.mean) * (y[i] - my.mean);
  sxy /= static_cast<double>(x.size() - 1);
  const double den = std::sqrt(mx.var * my.var);
  return den > 0.0 ? sxy / den : std::numeric_limits<double>::quiet_NaN();
}

std::vector<double> MCStats::values(std::size_t mode, double ModeEstimate::*field) const
{
  std::vector<double> out;
  out.reserve(per_trial.size());
  for (const auto& r : per_trial) {
    if (!r.lost && mode < r.modes.size()) out.push_back(r.modes[mode].*field);
  }
  return out;
}

std::vector<MCStats> run_mode_trials(std::span<const ModeSpec> modes, double eps, std::span<const double> z_list,
                                     const MCConfig& cfg)
{
  if (modes.empty()) throw std::invalid_argument("run_mode_trials: no modes");
  if (z_list.empty()) throw std::invalid_argument("run_mode_trials: empty distance list");
  if (!std::is_sorted(z_list.begin(), z_list.end()) || !(z_list.front() > 0.0)) {
    throw std::invalid_argument("run_mode_trials: distances must be positive and ascending");
  }
  if (!(eps >= 0.0)) throw std::invalid_argument("run_mode_trials: eps must be non-negative");

  const auto w0 = synthesize_reflectionless(cfg.grid, modes);
  std::vector<cdouble> transmitted;
  for (const auto& m : modes) transmitted.push_back(m.zeta);

  const double z_max = z_list.back();
  const int per_unit = cfg.steps_per_unit_z > 0
                           ? cfg.steps_per_unit_z
                           : static_cast<int>(std::ceil(suggest_steps(w0, z_max) / z_max));
  const double dz = 1.0 / per_unit;
  std::vector<std::int64_t> checkpoints;
  for (double z : z_list) checkpoints.push_back(std::max<std::int64_t>(1, std::llround(z * per_unit)));

  std::vector<MCStats> out(z_list.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k].n_trials = cfg.n_trials;
    out[k].z = static_cast<double>(checkpoints[k]) * dz;
    out[k].per_trial.resize(cfg.n_trials);
  }

  parallel_for(cfg.n_trials, cfg.threads, [&](std::size_t trial) {
    SplitStepPropagator prop(w0, dz, eps, derive_seed(cfg.seed, trial));
    for (std::size_t k = 0; k < checkpoints.size(); ++k) {
      prop.advance(static_cast<int>(checkpoints[k] - prop.steps_taken()));
      out[k].per_trial[trial] = recover_modes(prop.state(), transmitted);
    }
  });

  double eta_min = std::numeric_limits<double>::infinity();
  for (const auto& m : modes) eta_min = std::min(eta_min, 2.0 * m.zeta.imag());
  for (auto& s : out) {
    summarise(s, modes.size());
    if (eps * eps * s.z > 0.05 * eta_min) {
      s.warnings.push_back("outside the perturbative regime (eps^2 Z > 0.05 eta)");
    }
  }
  return out;
}

MCStats mc_eigenvalue_fluctuations(double eta, double eps, double Z, const MCConfig& cfg)
{
  const ModeSpec mode{cdouble(0.0, 0.5 * eta), 0.0, 0.0};
  const double zs[] = {Z};
  return run_mode_trials(std::span(&mode, 1), eps, zs, cfg).front();
}

JitterResult mc_timing_jitter(double eta, double eps, std::span<const double> z_list, const MCConfig& cfg)
{
  const ModeSpec mode{cdouble(0.0, 0.5 * eta), 0.0, 0.0};
  JitterResult res;
  res.per_z = run_mode_trials(std::span(&mode, 1), eps, z_list, cfg);
  std::vector<double> lx, ly;
  for (const auto& s : res.per_z) {
    if (s.t[0].var > 0.0) {
      lx.push_back(std::log(s.z));
      ly.push_back(std::log(s.t[0].var));
    }
  }
  res.slope = lx.size() >= 2 ? fitted_slope(lx, ly) : std::numeric_limits<double>::quiet_NaN();
  return res;
}

std::vector<GainRow> mc_variance_gain(double eta1, double eta2, std::span<const double> separations, double eps,
                                      double Z, const MCConfig& cfg)
{
  if (eta1 == eta2) throw std::invalid_argument("mc_variance_gain: eta1 and eta2 must differ");
  std::vector<GainRow> rows;
  for (std::size_t i = 0; i < separations.size(); ++i) {
    const double sep = separations[i];
    const ModeSpec modes[] = {{cdouble(0.0, 0.5 * eta1), 0.0, 0.0}, {cdouble(0.0, 0.5 * eta2), sep, 0.0}};
    MCConfig c = cfg;
    c.seed = derive_seed(cfg.seed, 1000 + i);
    const double zs[] = {Z};
    const auto s = run_mode_trials(modes, eps, zs, c).front();

    // run_mode_trials reports modes in the order given
    GainRow row;
    row.separation = sep;
    const double ref1 = analytic_amp_var(eta1, eps, s.z);
    const double ref2 = analytic_amp_var(eta2, eps, s.z);
    row.gain_eta1 = s.eta[0].var / ref1;
    row.gain_eta2 = s.eta[1].var / ref2;
    row.se_eta1 = s.eta[0].std_error / ref1;
    row.se_eta2 = s.eta[1].std_error / ref2;
    row.corr = correlation(s.values(0, &ModeEstimate::eta), s.values(1, &ModeEstimate::eta));
    row.lost = s.lost_trials;
    row.flagged = s.flagged;
    rows.push_back(row);
  }
  return rows;
}

LinkResult mc_link_experiment(double eta_min, double eta_max, double eps, double Z, const MCConfig& cfg)
{
  if (!(eta_min > 0.0) || !(eta_max > eta_min)) {
    throw std::invalid_argument("mc_link_experiment: need 0 < eta_min < eta_max");
  }
  if (!(Z > 0.0)) throw std::invalid_argument("mc_link_experiment: Z must be positive");
  const std::size_t n = cfg.n_trials;
  std::vector<double> in(n), out(n);
  std::vector<char> lost(n, 0);

  parallel_for(n, cfg.threads, [&](std::size_t i) {
    std::mt19937_64 rng(derive_seed(cfg.seed, 2 * i));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    // stratified draw: one symbol per equal-probability stratum
    const double eta = eta_min + (eta_max - eta_min) * (static_cast<double>(i) + u(rng)) / static_cast<double>(n);
    in[i] = eta;
    const auto w = synthesize_single(cfg.grid, eta, 0.0, 0.0, 0.0);
    const int steps = cfg.steps_per_unit_z > 0 ? static_cast<int>(std::ceil(cfg.steps_per_unit_z * Z))
                                               : suggest_steps(w, Z);
    const auto rx = propagate_noisy(w, ChannelSpec{Z, eps, steps, derive_seed(cfg.seed, 2 * i + 1)});
    const cdouble z0(0.0, 0.5 * eta);
    const auto rec = recover_modes(rx, std::span(&z0, 1));
    if (rec.lost) {
      lost[i] = 1;
    } else {
      out[i] = rec.modes[0].eta;
    }
  });

  LinkResult res;
  for (std::size_t i = 0; i < n; ++i) {
    if (lost[i]) {
      ++res.lost;
      continue;
    }
    res.eta_in.push_back(in[i]);
    res.eta_out.push_back(out[i]);
  }
  res.mi_bits = binned_mutual_information(res.eta_in, res.eta_out, eta_min, eta_max, &res.bins);
  return res;
}

double binned_mutual_information(std::span<const double> x, std::span<const double> y, double x_min, double x_max,
                                 std::size_t* bins_used)
{
  if (x.size() != y.size()) throw std::invalid_argument("binned_mutual_information: size mismatch");
  if (x.empty()) return 0.0;
  const auto bins = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(x.size()))));
  if (bins_used) *bins_used = bins;
  double y_min = x_min, y_max = x_max;
  for (double v : y) {
    y_min = std::min(y_min, v);
    y_max = std::max(y_max, v);
  }
  auto index = [bins](double v, double lo, double hi) {
    const double f = (v - lo) / (hi - lo) * static_cast<double>(bins);
    return std::min(bins - 1, static_cast<std::size_t>(std::max(0.0, std::floor(f))));
  };
  std::vector<double> joint(bins * bins, 0.0), px(bins, 0.0), py(bins, 0.0);
  const double inc = 1.0 / static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto ix = index(x[i], x_min, x_max);
    const auto iy = index(y[i], y_min, y_max);
    joint[ix * bins + iy] += inc;
    px[ix] += inc;
    py[iy] += inc;
  }
  double mi = 0.0;
  for (std::size_t ix = 0; ix < bins; ++ix) {
    for (std::size_t iy = 0; iy < bins; ++iy) {
      const double p = joint[ix * bins + iy];
      if (p > 0.0) mi += p * std::log2(p / (px[ix] * py[iy]));
    }
  }
  return mi;
}

Moments conditional_noise_moments(const LinkResult& link, double eta0, double half_width)
{
  std::vector<double> d;
  for (std::size_t i = 0; i < link.eta_in.size(); ++i) {
    if (std::abs(link.eta_in[i] - eta0) <= half_width) d.push_back(link.eta_out[i] - link.eta_in[i]);
  }
  return sample_moments(d);
}

} // namespace solitonlab
