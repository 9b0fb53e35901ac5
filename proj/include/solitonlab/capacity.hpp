#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

namespace solitonlab {

/// sqrt(pi e eta_max eps^2 Z).
double sigma_eff(double eta_max, double eps, double Z);

/// log2(delta_eta / sigma_eff) bits per soliton; negative values are returned as-is.
double spectral_efficiency_bound(double delta_eta, double eta_max, double eps, double Z);

/// Discrete memoryless channel; W is row-major, W[i * y.size() + j] = P(y_j | x_i).
struct DiscreteChannelModel
{
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> W;

  double at(std::size_t i, std::size_t j) const { return W[i * y.size() + j]; }
  /// Throws std::invalid_argument unless sizes agree, entries are >= 0 and rows sum to 1 within 1e-12.
  void validate() const;
};

/// Y = eta + sqrt(eta) N with N ~ N(0, sigma^2) and eta uniform on [eta_min, eta_max].
/// The default y grid spans [eta_min - 6 sigma sqrt(eta_max), eta_max + 6 sigma sqrt(eta_max)],
/// extended down to the zero atom's 6-sigma tail when include_zero_atom is set. The
/// zero atom is a Gaussian at 0 with variance sigma^2 eta_min / 100.
/// Throws std::invalid_argument for sigma <= 0, grids below 50 points, or an explicit
/// y_range that does not cover every row's 6-sigma tails.
DiscreteChannelModel build_sqrt_mult_channel(double eta_min, double eta_max, double sigma, std::size_t n_x,
                                             std::size_t n_y, bool include_zero_atom,
                                             std::optional<std::pair<double, double>> y_range = std::nullopt);

struct BAResult
{
  double capacity_bits = 0.0;
  double upper_bound_bits = 0.0;  ///< max_x D(W(.|x) || q) at the final prior
  std::vector<double> prior;
  std::vector<double> output;  ///< induced output distribution
  int iterations = 0;
};

/// Blahut-Arimoto. Stops when the capacity estimate changes by less than tol bits
/// in one iteration; throws NumericalError after max_iters.
BAResult blahut_arimoto(const DiscreteChannelModel& ch, double tol = 1e-6, int max_iters = 100000);

/// Bits; throws std::domain_error outside [0, 1].
double binary_entropy(double p);

/// Gaussian upper tail probability.
double q_function(double x);

struct ModulationConfig
{
  double eta_min = 1.0;
  double eta_max = 2.0;
  double eps = 0.01;
  double Z = 1.0;
  double C_spacing = 10.0;  ///< symbol spacing C / eta_min
  double alpha = 1.0;       ///< spacing alpha / eta_min between solitons of one symbol
  double p_sync = 1e-9;
  bool two_jitters = false;  ///< use the variance of a difference of two independent jitters

  double delta_eta() const { return eta_max - eta_min; }
  /// Throws std::invalid_argument unless 0 < eta_min < eta_max, eps >= 0, Z > 0, C_spacing > 0, alpha > 0.
  void validate() const;
};

/// Config whose sigma_eff equals `sigma` (eps solved for the given eta_max and Z).
ModulationConfig config_for_sigma_eff(ModulationConfig cfg, double sigma);

/// Jitter standard deviation sqrt(eps^2 eta_max Z^3 / 9), doubled in variance with two_jitters.
double sigma_jitter(const ModulationConfig& cfg);

/// Q((alpha / eta_min) / sigma_jitter); 0 when eps = 0.
double mixup_probability(const ModulationConfig& cfg);

/// Largest eta_max with Q(spacing / sqrt(eps^2 eta_max Z^3 / 9)) <= p_sync, by bisection
/// to relative 1e-6. Returns +inf for eps = 0. Throws std::domain_error for p_sync outside (0, 0.5).
double gordon_haus_eta_max(double spacing, double eps, double Z, double p_sync);

/// Points of the dense grid search used by every gain optimiser.
inline constexpr std::size_t kGainGridPoints = 2000;

struct GainResult
{
  double gain = 0.0;
  double eta_min = 0.0;  ///< maximising eta_min
  double p = 1.0;        ///< maximising probability of sending a soliton
};

/// max over eta_min of (eta_min / eta_max) log2(delta_eta / sigma_eff), clamped at 0.
GainResult modulation_gain_single(const ModulationConfig& cfg);
/// Adds an empty-symbol hypothesis sent with probability 1 - p.
GainResult modulation_gain_single_with_off(const ModulationConfig& cfg);
/// Two-soliton symbols: 2 C / (C + alpha) rate factor and H_b(p_mix) / 2 penalty.
GainResult modulation_gain_2bound(const ModulationConfig& cfg);
/// Long trains at spacing alpha / eta_min with the consecutive-swap penalty;
/// `exact_penalty` false selects the p log2(1/p) approximation.
GainResult modulation_gain_ntrain(const ModulationConfig& cfg, bool exact_penalty = true);

/// Objective at a single eta_min (maximised over p where applicable); the rows of
/// the modulation-gain figures.
struct GainCurvePoint
{
  double eta_min = 0.0;
  double single = 0.0;
  double with_off = 0.0;
  double two_bound = 0.0;
  double ntrain = 0.0;
};

std::vector<GainCurvePoint> modulation_gain_curves(const ModulationConfig& cfg, std::size_t n_points = kGainGridPoints,
                                                   bool exact_penalty = true);

/// (1/2) H(p, 1 - 2p, p) in bits; throws std::domain_error outside [0, 0.5).
double permutation_penalty_ntrain(double p_mix);
/// p log2(1/p).
double permutation_penalty_ntrain_approx(double p_mix);
/// H_b(p_mix) bits per two-soliton symbol.
double permutation_loss_bound_2(double p_mix);

} // namespace solitonlab
