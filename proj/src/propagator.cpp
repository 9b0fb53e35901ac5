#include "solitonlab/propagator.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace solitonlab {

namespace {

// FFTW's planner is not thread-safe; plan execution on distinct buffers is.
std::mutex& planner_mutex()
{
  static std::mutex m;
  return m;
}

class FftBuffer
{
public:
  explicit FftBuffer(std::size_t n) : n_(n)
  {
    data_ = fftw_alloc_complex(n);
    if (!data_) throw std::bad_alloc();
    std::lock_guard lock(planner_mutex());
    forward_ = fftw_plan_dft_1d(static_cast<int>(n), data_, data_, FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_1d(static_cast<int>(n), data_, data_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~FftBuffer()
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    fftw_free(data_);
  }
  FftBuffer(const FftBuffer&) = delete;
  FftBuffer& operator=(const FftBuffer&) = delete;

  cdouble* data() { return reinterpret_cast<cdouble*>(data_); }
  const cdouble* data() const { return reinterpret_cast<const cdouble*>(data_); }
  std::size_t size() const { return n_; }
  void forward() { fftw_execute(forward_); }
  void backward() { fftw_execute(backward_); }

private:
  std::size_t n_;
  fftw_complex* data_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

void check_step(double dz, double peak, double Z, const ComplexWaveform& w)
{
  if (dz * peak * peak >= kMaxNonlinearPhasePerStep) {
    throw std::invalid_argument("propagate: step too coarse (dz*max|q|^2 = " +
                                std::to_string(dz * peak * peak) + "); use n_steps >= " +
                                std::to_string(suggest_steps(w, Z)));
  }
}

} // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index)
{
  // splitmix64 finalizer over a combined key
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void validate(const ChannelSpec& spec)
{
  if (!(spec.Z > 0.0)) throw std::invalid_argument("ChannelSpec: Z must be positive");
  if (!(spec.eps >= 0.0)) throw std::invalid_argument("ChannelSpec: eps must be non-negative");
  if (spec.n_steps < 1) throw std::invalid_argument("ChannelSpec: n_steps must be >= 1");
}

int suggest_steps(const ComplexWaveform& w, double Z)
{
  constexpr int kFloor = 16;
  constexpr double kSafety = 4.0;
  const double peak = w.peak_amplitude();
  const double n = std::ceil(kSafety * std::abs(Z) * peak * peak / kMaxNonlinearPhasePerStep);
  return std::max(kFloor, static_cast<int>(n));
}

struct SplitStepPropagator::Impl
{
  Impl(const ComplexWaveform& initial, double dz_, double eps_, std::uint64_t seed_)
    : shape(initial), fft(initial.size()), dz(dz_), eps(eps_), seed(seed_), dispersion(initial.size())
  {
    const auto n = initial.size();
    const double dt = initial.dt();
    const double dw = 2.0 * std::numbers::pi / (static_cast<double>(n) * dt);
    for (std::size_t k = 0; k < n; ++k) {
      const double kk = k < n / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n);
      const double w = kk * dw;
      // exact linear step for i q_Z + q_TT / 2 = 0, FFT normalisation folded in
      dispersion[k] = std::polar(1.0 / static_cast<double>(n), -0.5 * w * w * dz);
    }
    std::copy(initial.samples().begin(), initial.samples().end(), fft.data());
    noise_sd = eps * std::sqrt(dz / (2.0 * dt));
  }

  void nonlinear(double h)
  {
    cdouble* q = fft.data();
    for (std::size_t i = 0; i < fft.size(); ++i) q[i] *= std::polar(1.0, std::norm(q[i]) * h);
  }

  void step()
  {
    nonlinear(0.5 * dz);
    fft.forward();
    cdouble* q = fft.data();
    for (std::size_t k = 0; k < fft.size(); ++k) q[k] *= dispersion[k];
    fft.backward();
    if (eps > 0.0) {
      std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(steps)));
      std::normal_distribution<double> gauss(0.0, noise_sd);
      for (std::size_t i = 0; i < fft.size(); ++i) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        q[i] += cdouble(re, im);
      }
    }
    nonlinear(0.5 * dz);
    ++steps;
  }

  ComplexWaveform shape;
  FftBuffer fft;
  double dz;
  double eps;
  std::uint64_t seed;
  std::vector<cdouble> dispersion;
  double noise_sd = 0.0;
  std::int64_t steps = 0;
};

SplitStepPropagator::SplitStepPropagator(const ComplexWaveform& initial, double dz, double eps,
                                         std::uint64_t seed)
{
  if (!(dz > 0.0)) throw std::invalid_argument("SplitStepPropagator: dz must be positive");
  if (!(eps >= 0.0)) throw std::invalid_argument("SplitStepPropagator: eps must be non-negative");
  impl_ = std::make_unique<Impl>(initial, dz, eps, seed);
}

SplitStepPropagator::~SplitStepPropagator() = default;
SplitStepPropagator::SplitStepPropagator(SplitStepPropagator&&) noexcept = default;
SplitStepPropagator& SplitStepPropagator::operator=(SplitStepPropagator&&) noexcept = default;

void SplitStepPropagator::advance(int n_steps)
{
  for (int i = 0; i < n_steps; ++i) impl_->step();
}

ComplexWaveform SplitStepPropagator::state() const
{
  const cdouble* q = impl_->fft.data();
  return impl_->shape.with_samples(std::vector<cdouble>(q, q + impl_->fft.size()));
}

double SplitStepPropagator::distance() const
{
  return impl_->dz * static_cast<double>(impl_->steps);
}

std::int64_t SplitStepPropagator::steps_taken() const { return impl_->steps; }

ComplexWaveform propagate(const ComplexWaveform& w, double Z, int n_steps)
{
  return propagate_noisy(w, ChannelSpec{Z, 0.0, n_steps, 0});
}

ComplexWaveform propagate_noisy(const ComplexWaveform& w, const ChannelSpec& spec)
{
  validate(spec);
  const double dz = spec.Z / spec.n_steps;
  check_step(dz, w.peak_amplitude(), spec.Z, w);
  SplitStepPropagator prop(w, dz, spec.eps, spec.seed);
  prop.advance(spec.n_steps);
  return prop.state();
}

} // namespace solitonlab
