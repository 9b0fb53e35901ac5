#pragma once

#include "solitonlab/synthesis.hpp"
#include "solitonlab/waveform.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace solitonlab {

// First-order perturbation laws for a soliton of amplitude eta under noise eps.
double analytic_amp_var(double eta, double eps, double Z);     ///< eps^2 eta Z
double analytic_vel_var(double eta, double eps, double Z);     ///< eps^2 eta Z / 3
double analytic_timing_var(double eta, double eps, double Z);  ///< eps^2 eta Z^3 / 9

struct ModeEstimate
{
  double eta = 0.0;
  double kappa = 0.0;
  double t = 0.0;
};

struct TrialRecord
{
  bool lost = false;
  std::vector<ModeEstimate> modes;
};

/// Sample moments. std_error is the standard error of `var` under a Gaussian
/// approximation: var * sqrt(2 / (n - 1)).
struct Moments
{
  std::size_t n = 0;
  double mean = 0.0;
  double var = 0.0;
  double std_error = 0.0;
};

Moments sample_moments(std::span<const double> x);

/// Pearson correlation; NaN when either sample is constant.
double correlation(std::span<const double> x, std::span<const double> y);

/// Monte-Carlo summary. Lost trials (missing or ambiguous eigenvalues) are
/// counted and excluded from the per-mode moments.
struct MCStats
{
  std::size_t n_trials = 0;
  std::size_t lost_trials = 0;
  double z = 0.0;  ///< distance actually simulated (a whole number of steps)
  std::vector<TrialRecord> per_trial;
  std::vector<Moments> eta;
  std::vector<Moments> kappa;
  std::vector<Moments> t;
  bool flagged = false;
  std::vector<std::string> warnings;

  double lost_fraction() const
  {
    return n_trials ? static_cast<double>(lost_trials) / static_cast<double>(n_trials) : 0.0;
  }
  /// Values of one quantity for one mode over the retained trials.
  std::vector<double> values(std::size_t mode, double ModeEstimate::*field) const;
};

/// Shared harness knobs.
struct MCConfig
{
  std::size_t n_trials = 2000;
  std::uint64_t seed = 1;
  GridSpec grid{2048, 40.0};
  unsigned threads = 0;  ///< 0: hardware concurrency
  int steps_per_unit_z = 0;  ///< 0: derived from suggest_steps
};

/// Runs n_trials independent noisy propagations of the waveform synthesized from
/// `modes`, recording the scattering data at each distance in `z_list`
/// (ascending). Trial k's noise depends only on (seed, k).
std::vector<MCStats> run_mode_trials(std::span<const ModeSpec> modes, double eps, std::span<const double> z_list,
                                     const MCConfig& cfg);

MCStats mc_eigenvalue_fluctuations(double eta, double eps, double Z, const MCConfig& cfg);

struct JitterResult
{
  std::vector<MCStats> per_z;
  double slope = 0.0;  ///< least-squares slope of log var(t) against log Z
};

JitterResult mc_timing_jitter(double eta, double eps, std::span<const double> z_list, const MCConfig& cfg);

struct GainRow
{
  double separation = 0.0;
  double gain_eta1 = 0.0;
  double gain_eta2 = 0.0;
  double se_eta1 = 0.0;  ///< standard error of the gain
  double se_eta2 = 0.0;
  double corr = 0.0;     ///< correlation of the eta1, eta2 fluctuations
  std::size_t lost = 0;
  bool flagged = false;
};

/// Two-mode bound state (mode 1 at t = 0, mode 2 at t = separation); gains are
/// var(eta_i) / analytic_amp_var(eta_i).
std::vector<GainRow> mc_variance_gain(double eta1, double eta2, std::span<const double> separations, double eps,
                                      double Z, const MCConfig& cfg);

struct LinkResult
{
  std::vector<double> eta_in;
  std::vector<double> eta_out;
  std::size_t lost = 0;
  std::size_t bins = 0;
  double mi_bits = 0.0;
};

/// End-to-end amplitude link: eta drawn uniformly (stratified) on
/// [eta_min, eta_max], synthesized, noisily propagated and recovered.
LinkResult mc_link_experiment(double eta_min, double eta_max, double eps, double Z, const MCConfig& cfg);

/// Plug-in mutual information (bits) with ceil(sqrt(n)) equal-width bins per axis.
/// The output axis spans the union of the input range and the observed outputs.
double binned_mutual_information(std::span<const double> x, std::span<const double> y, double x_min,
                                 double x_max, std::size_t* bins_used = nullptr);

/// Sample variance of (out - in) over pairs with |in - eta0| <= half_width.
Moments conditional_noise_moments(const LinkResult& link, double eta0, double half_width);

} // namespace solitonlab
