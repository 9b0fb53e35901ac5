#include "solitonlab/capacity.hpp"
#include "solitonlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace solitonlab {

namespace {

constexpr double kTails = 6.0;

double gaussian_density(double y, double mean, double var)
{
  const double d = y - mean;
  return std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

double xlog2x(double p) { return p > 0.0 ? p * std::log2(p) : 0.0; }

// eta_min grid strictly inside (0, eta_max)
double eta_at(const ModulationConfig& cfg, std::size_t k, std::size_t n)
{
  return cfg.eta_max * static_cast<double>(k + 1) / static_cast<double>(n + 1);
}

// max over the p grid of H_b(p) + p L, with its argmax
std::pair<double, double> best_p(double L)
{
  if (std::isinf(L) && L > 0.0) return {L, 1.0};
  double best = -std::numeric_limits<double>::infinity();
  double arg = 0.0;
  for (std::size_t k = 0; k < kGainGridPoints; ++k) {
    const double p = static_cast<double>(k) / static_cast<double>(kGainGridPoints - 1);
    const double v = binary_entropy(p) + p * L;
    if (v > best) {
      best = v;
      arg = p;
    }
  }
  return {best, arg};
}

template <class Objective>
GainResult maximise_over_eta(const ModulationConfig& cfg, Objective&& f)
{
  cfg.validate();
  GainResult best{0.0, 0.0, 0.0};
  bool any = false;
  for (std::size_t k = 0; k < kGainGridPoints; ++k) {
    const double eta_min = eta_at(cfg, k, kGainGridPoints);
    const auto [value, p] = f(eta_min);
    if (!any || value > best.gain) {
      best = {value, eta_min, p};
      any = true;
    }
  }
  best.gain = std::max(0.0, best.gain);
  return best;
}

double log_term(const ModulationConfig& cfg, double eta_min)
{
  const double s = sigma_eff(cfg.eta_max, cfg.eps, cfg.Z);
  if (s == 0.0) return std::numeric_limits<double>::infinity();
  return std::log2((cfg.eta_max - eta_min) / s);
}

double mixup_at(ModulationConfig cfg, double eta_min)
{
  cfg.eta_min = eta_min;
  return mixup_probability(cfg);
}

} // namespace

double sigma_eff(double eta_max, double eps, double Z)
{
  return std::sqrt(std::numbers::pi * std::numbers::e * eta_max * eps * eps * Z);
}

double spectral_efficiency_bound(double delta_eta, double eta_max, double eps, double Z)
{
  return std::log2(delta_eta / sigma_eff(eta_max, eps, Z));
}

void DiscreteChannelModel::validate() const
{
  if (x.empty() || y.empty() || W.size() != x.size() * y.size()) {
    throw std::invalid_argument("channel: matrix size does not match the grids");
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < y.size(); ++j) {
      const double w = at(i, j);
      if (!(w >= 0.0)) throw std::invalid_argument("channel: negative or NaN transition probability");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw std::invalid_argument("channel: row " + std::to_string(i) + " does not sum to 1");
    }
  }
}

DiscreteChannelModel build_sqrt_mult_channel(double eta_min, double eta_max, double sigma, std::size_t n_x,
                                             std::size_t n_y, bool include_zero_atom,
                                             std::optional<std::pair<double, double>> y_range)
{
  if (!(sigma > 0.0)) throw std::invalid_argument("channel: sigma must be positive");
  if (!(eta_min > 0.0) || !(eta_max > eta_min)) throw std::invalid_argument("channel: need 0 < eta_min < eta_max");
  if (n_x < 50 || n_y < 50) throw std::invalid_argument("channel: grids need at least 50 points");

  const double zero_var = sigma * sigma * eta_min / 100.0;
  double need_lo = eta_min - kTails * sigma * std::sqrt(eta_max);
  const double need_hi = eta_max + kTails * sigma * std::sqrt(eta_max);
  if (include_zero_atom) need_lo = std::min(need_lo, -kTails * std::sqrt(zero_var));

  const auto [lo, hi] = y_range.value_or(std::pair{need_lo, need_hi});
  if (lo > need_lo || hi < need_hi) {
    throw std::invalid_argument("channel: output grid does not cover the 6-sigma tails");
  }

  DiscreteChannelModel ch;
  if (include_zero_atom) ch.x.push_back(0.0);
  for (std::size_t i = 0; i < n_x; ++i) {
    ch.x.push_back(eta_min + (eta_max - eta_min) * static_cast<double>(i) / static_cast<double>(n_x - 1));
  }
  ch.y.resize(n_y);
  for (std::size_t j = 0; j < n_y; ++j) {
    ch.y[j] = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(n_y - 1);
  }
  ch.W.resize(ch.x.size() * n_y);
  for (std::size_t i = 0; i < ch.x.size(); ++i) {
    const double var = ch.x[i] == 0.0 ? zero_var : sigma * sigma * ch.x[i];
    double sum = 0.0;
    for (std::size_t j = 0; j < n_y; ++j) {
      const double w = gaussian_density(ch.y[j], ch.x[i], var);
      ch.W[i * n_y + j] = w;
      sum += w;
    }
    for (std::size_t j = 0; j < n_y; ++j) ch.W[i * n_y + j] /= sum;
  }
  return ch;
}

BAResult blahut_arimoto(const DiscreteChannelModel& ch, double tol, int max_iters)
{
  ch.validate();
  const std::size_t nx = ch.x.size();
  const std::size_t ny = ch.y.size();
  BAResult res;
  res.prior.assign(nx, 1.0 / static_cast<double>(nx));
  std::vector<double> q(ny), d(nx);
  double previous = -1.0;

  for (int it = 1; it <= max_iters; ++it) {
    std::fill(q.begin(), q.end(), 0.0);
    for (std::size_t i = 0; i < nx; ++i) {
      for (std::size_t j = 0; j < ny; ++j) q[j] += res.prior[i] * ch.at(i, j);
    }
    // d[i] = D(W(.|x_i) || q) in nats
    for (std::size_t i = 0; i < nx; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < ny; ++j) {
        const double w = ch.at(i, j);
        if (w > 0.0) s += w * std::log(w / q[j]);
      }
      d[i] = s;
    }
    double z = 0.0;
    double dmax = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < nx; ++i) {
      z += res.prior[i] * std::exp(d[i]);
      dmax = std::max(dmax, d[i]);
    }
    const double lower = std::log(z) / std::numbers::ln2;
    res.capacity_bits = lower;
    res.upper_bound_bits = dmax / std::numbers::ln2;
    res.iterations = it;
    for (std::size_t i = 0; i < nx; ++i) res.prior[i] *= std::exp(d[i]) / z;
    if (std::abs(lower - previous) < tol) {
      res.output = q;
      return res;
    }
    previous = lower;
  }
  throw NumericalError("blahut_arimoto: no convergence after " + std::to_string(max_iters) +
                       " iterations (last estimate " + std::to_string(res.capacity_bits) + " bits)");
}

double binary_entropy(double p)
{
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("binary_entropy: p must lie in [0, 1]");
  return -xlog2x(p) - xlog2x(1.0 - p);
}

double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

void ModulationConfig::validate() const
{
  if (!(eta_min > 0.0) || !(eta_max > eta_min)) {
    throw std::invalid_argument("modulation config: need 0 < eta_min < eta_max");
  }
  if (!(eps >= 0.0)) throw std::invalid_argument("modulation config: eps must be non-negative");
  if (!(Z > 0.0)) throw std::invalid_argument("modulation config: Z must be positive");
  if (!(C_spacing > 0.0) || !(alpha > 0.0)) {
    throw std::invalid_argument("modulation config: C_spacing and alpha must be positive");
  }
}

ModulationConfig config_for_sigma_eff(ModulationConfig cfg, double sigma)
{
  if (!(sigma >= 0.0)) throw std::invalid_argument("sigma_eff must be non-negative");
  cfg.eps = sigma / std::sqrt(std::numbers::pi * std::numbers::e * cfg.eta_max * cfg.Z);
  return cfg;
}

double sigma_jitter(const ModulationConfig& cfg)
{
  const double var = cfg.eps * cfg.eps * cfg.eta_max * cfg.Z * cfg.Z * cfg.Z / 9.0;
  return std::sqrt(cfg.two_jitters ? 2.0 * var : var);
}

double mixup_probability(const ModulationConfig& cfg)
{
  cfg.validate();
  const double s = sigma_jitter(cfg);
  if (s == 0.0) return 0.0;
  return q_function((cfg.alpha / cfg.eta_min) / s);
}

double gordon_haus_eta_max(double spacing, double eps, double Z, double p_sync)
{
  if (!(p_sync > 0.0 && p_sync < 0.5)) throw std::domain_error("gordon_haus_eta_max: p_sync must lie in (0, 0.5)");
  if (!(spacing > 0.0) || !(Z > 0.0) || !(eps >= 0.0)) {
    throw std::invalid_argument("gordon_haus_eta_max: need spacing > 0, Z > 0, eps >= 0");
  }
  if (eps == 0.0) return std::numeric_limits<double>::infinity();
  auto outage = [&](double eta) { return q_function(spacing / std::sqrt(eps * eps * eta * Z * Z * Z / 9.0)); };
  double lo = 1.0, hi = 1.0;
  while (outage(lo) > p_sync) {
    lo *= 0.5;
    if (lo < 1e-300) throw std::domain_error("gordon_haus_eta_max: no feasible eta_max");
  }
  while (outage(hi) <= p_sync) {
    hi *= 2.0;
    if (hi > 1e300) return std::numeric_limits<double>::infinity();
  }
  while (hi - lo > 1e-7 * lo) {
    const double mid = 0.5 * (lo + hi);
    (outage(mid) <= p_sync ? lo : hi) = mid;
  }
  return lo;
}

GainResult modulation_gain_single(const ModulationConfig& cfg)
{
  return maximise_over_eta(cfg, [&](double eta_min) {
    return std::pair{eta_min / cfg.eta_max * log_term(cfg, eta_min), 1.0};
  });
}

GainResult modulation_gain_single_with_off(const ModulationConfig& cfg)
{
  return maximise_over_eta(cfg, [&](double eta_min) {
    const auto [v, p] = best_p(log_term(cfg, eta_min));
    return std::pair{eta_min / cfg.eta_max * v, p};
  });
}

GainResult modulation_gain_2bound(const ModulationConfig& cfg)
{
  const double rate = 2.0 * cfg.C_spacing / (cfg.C_spacing + cfg.alpha);
  return maximise_over_eta(cfg, [&](double eta_min) {
    const auto [v, p] = best_p(log_term(cfg, eta_min));
    const double penalty = 0.5 * binary_entropy(mixup_at(cfg, eta_min));
    return std::pair{rate * eta_min / cfg.eta_max * (v - penalty), p};
  });
}

GainResult modulation_gain_ntrain(const ModulationConfig& cfg, bool exact_penalty)
{
  return maximise_over_eta(cfg, [&](double eta_min) {
    const auto [v, p] = best_p(log_term(cfg, eta_min));
    const double pm = mixup_at(cfg, eta_min);
    const double penalty = exact_penalty ? permutation_penalty_ntrain(pm) : permutation_penalty_ntrain_approx(pm);
    return std::pair{eta_min / cfg.eta_max * (v - penalty), p};
  });
}

std::vector<GainCurvePoint> modulation_gain_curves(const ModulationConfig& cfg, std::size_t n_points,
                                                   bool exact_penalty)
{
  cfg.validate();
  if (n_points < 2) throw std::invalid_argument("modulation_gain_curves: need at least 2 points");
  const double rate = 2.0 * cfg.C_spacing / (cfg.C_spacing + cfg.alpha);
  std::vector<GainCurvePoint> out;
  out.reserve(n_points);
  for (std::size_t k = 0; k < n_points; ++k) {
    GainCurvePoint pt;
    pt.eta_min = eta_at(cfg, k, n_points);
    const double r = pt.eta_min / cfg.eta_max;
    const double L = log_term(cfg, pt.eta_min);
    const double v = best_p(L).first;
    const double pm = mixup_at(cfg, pt.eta_min);
    const double pen = exact_penalty ? permutation_penalty_ntrain(pm) : permutation_penalty_ntrain_approx(pm);
    pt.single = std::max(0.0, r * L);
    pt.with_off = std::max(0.0, r * v);
    pt.two_bound = std::max(0.0, rate * r * (v - 0.5 * binary_entropy(pm)));
    pt.ntrain = std::max(0.0, r * (v - pen));
    out.push_back(pt);
  }
  return out;
}

double permutation_penalty_ntrain(double p)
{
  if (!(p >= 0.0 && p < 0.5)) throw std::domain_error("permutation penalty: p must lie in [0, 0.5)");
  return -0.5 * (2.0 * xlog2x(p) + xlog2x(1.0 - 2.0 * p));
}

double permutation_penalty_ntrain_approx(double p)
{
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("permutation penalty: p must lie in [0, 1]");
  return -xlog2x(p);
}

double permutation_loss_bound_2(double p) { return binary_entropy(p); }

} // namespace solitonlab
