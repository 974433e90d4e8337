#pragma once

// Noise and signal distributions with exact characteristic functions.
//
// Fourier convention throughout the library: u*(t) = ∫ e^{itx} u(x) dx.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace deconv {

using Complex = std::complex<double>;
using Rng = std::mt19937_64;

/// Parameters of the noise assumption
///   k0 (t²+1)^{-γ/2} e^{-b|t|^s} <= |f_eps*(t)| <= k1 (t²+1)^{-γ/2} e^{-b|t|^s}.
struct NoiseSmoothness
{
  double s = 0.0;
  double b = 0.0;
  double gamma = 0.0;
  double k0 = 1.0;
  double k1 = 1.0;
};

/// Parameters of the signal class
///   ∫ |g*(t)|² (t²+1)^δ e^{2a|t|^r} dt <= L.
struct SignalSmoothness
{
  double delta = 0.0;
  double r = 0.0;
  double a = 0.0;
  double L = 1.0;
};

struct Interval
{
  double lo = 0.0;
  double hi = 0.0;
};

struct NoiseModel
{
  std::string name;
  double scale = 1.0;
  NoiseSmoothness smoothness;
  std::function<Complex(double)> cf;
  //! log|cf(t)|, exact, finite where cf underflows.
  std::function<double(double)> log_abs_cf;
  std::function<double(Rng&)> draw;
  std::optional<std::function<double(double)>> density;
  //! Degenerate model admitted for testing only (identity noise).
  bool test_only = false;
};

struct SignalModel
{
  std::string name;
  double scale = 1.0;
  SignalSmoothness smoothness;
  std::function<Complex(double)> cf;
  std::function<double(double)> log_abs_cf;
  std::function<double(double)> density;
  std::function<double(Rng&)> draw;
  //! Interval holding all but at most 1e-6 of the mass.
  Interval support_hint;
};

inline void validate(const NoiseSmoothness& p, bool test_only = false)
{
  if (!(p.s >= 0.0) || !(p.b >= 0.0))
    throw std::invalid_argument("noise smoothness: s and b must be >= 0");
  if (p.s == 0.0 && !(p.gamma > 0.0) && !test_only)
    throw std::invalid_argument("noise smoothness: gamma must be > 0 when s = 0");
  if (!(p.k0 > 0.0) || !(p.k0 <= p.k1))
    throw std::invalid_argument("noise smoothness: need 0 < k0 <= k1");
}

inline void validate(const SignalSmoothness& p)
{
  if (!(p.r >= 0.0) || !(p.a >= 0.0))
    throw std::invalid_argument("signal smoothness: r and a must be >= 0");
  if (p.r == 0.0 && !(p.delta > 0.5))
    throw std::invalid_argument("signal smoothness: delta must be > 1/2 when r = 0");
  if (!(p.L > 0.0))
    throw std::invalid_argument("signal smoothness: L must be > 0");
}

namespace detail {

inline double laplace_draw(Rng& rng, double scale)
{
  std::uniform_real_distribution<double> unif(-0.5, 0.5);
  const double u = unif(rng);
  const double mag = -scale * std::log1p(-2.0 * std::abs(u));
  return u < 0.0 ? -mag : mag;
}

inline double normal_pdf(double x, double mean, double sd)
{
  const double z = (x - mean) / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

inline void require_positive_scale(double scale)
{
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw std::invalid_argument("model scale must be a positive finite number");
}

// Class integrand in log space: 2 log|g*| + δ log(t²+1) + 2a|t|^r.
inline double log_class_integrand(const SignalModel& m, const SignalSmoothness& p, double t)
{
  const double at = std::abs(t);
  const double expo = p.r == 0.0 ? 1.0 : std::pow(at, p.r);
  return 2.0 * m.log_abs_cf(t) + p.delta * std::log1p(t * t) + 2.0 * p.a * expo;
}

} // namespace detail

/// Noise catalog: gaussian, laplace, cauchy, identity. `scale` is ignored for
/// identity.
inline NoiseModel builtin_noise(const std::string& name, double scale = 1.0)
{
  NoiseModel m;
  m.name = name;
  if (name == "identity") {
    m.scale = 1.0;
    m.smoothness = {0.0, 0.0, 0.0, 1.0, 1.0};
    m.cf = [](double) { return Complex(1.0, 0.0); };
    m.log_abs_cf = [](double) { return 0.0; };
    m.draw = [](Rng&) { return 0.0; };
    m.test_only = true;
    return m;
  }
  detail::require_positive_scale(scale);
  m.scale = scale;
  const double sig = scale;
  if (name == "gaussian") {
    m.smoothness = {2.0, 0.5 * sig * sig, 0.0, 1.0, 1.0};
    m.cf = [sig](double t) { return Complex(std::exp(-0.5 * sig * sig * t * t), 0.0); };
    m.log_abs_cf = [sig](double t) { return -0.5 * sig * sig * t * t; };
    m.draw = [sig](Rng& rng) { return std::normal_distribution<double>(0.0, sig)(rng); };
    m.density = [sig](double x) { return detail::normal_pdf(x, 0.0, sig); };
  } else if (name == "laplace") {
    // |cf| / (t²+1)^{-1} = (1+t²)/(1+σ²t²) lies between 1 and 1/σ².
    const double inv = 1.0 / (sig * sig);
    m.smoothness = {0.0, 0.0, 2.0, std::min(1.0, inv), std::max(1.0, inv)};
    m.cf = [sig](double t) { return Complex(1.0 / (1.0 + sig * sig * t * t), 0.0); };
    m.log_abs_cf = [sig](double t) { return -std::log1p(sig * sig * t * t); };
    m.draw = [sig](Rng& rng) { return detail::laplace_draw(rng, sig); };
    m.density = [sig](double x) { return std::exp(-std::abs(x) / sig) / (2.0 * sig); };
  } else if (name == "cauchy") {
    m.smoothness = {1.0, sig, 0.0, 1.0, 1.0};
    m.cf = [sig](double t) { return Complex(std::exp(-sig * std::abs(t)), 0.0); };
    m.log_abs_cf = [sig](double t) { return -sig * std::abs(t); };
    m.draw = [sig](Rng& rng) { return std::cauchy_distribution<double>(0.0, sig)(rng); };
    m.density = [sig](double x) { return sig / (std::numbers::pi * (sig * sig + x * x)); };
  } else {
    throw std::invalid_argument("unknown noise model: " + name);
  }
  return m;
}

/// Trapezoid estimate of the class integral ∫|g*|²(t²+1)^δ e^{2a|t|^r} over
/// an arbitrary sorted grid.
inline double class_integral(const SignalModel& model, std::span<const double> tgrid,
                             const SignalSmoothness& p)
{
  double total = 0.0;
  for (std::size_t i = 1; i < tgrid.size(); ++i) {
    const double f0 = std::exp(detail::log_class_integrand(model, p, tgrid[i - 1]));
    const double f1 = std::exp(detail::log_class_integrand(model, p, tgrid[i]));
    total += 0.5 * (f0 + f1) * (tgrid[i] - tgrid[i - 1]);
  }
  return total;
}

/// Symmetric grid covering the region where |g*| > 1e-12: uniform with step
/// 0.01 up to |t| = 10, geometric (ratio 1.01) beyond.
inline std::vector<double> membership_grid(const SignalModel& model)
{
  const double log_floor = std::log(1e-12);
  double t_cut = 1.0;
  while (model.log_abs_cf(t_cut) > log_floor && t_cut < 1e8)
    t_cut *= 2.0;
  double lo = t_cut / 2.0, hi = t_cut;
  for (int it = 0; it < 100 && hi - lo > 1e-9 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (model.log_abs_cf(mid) > log_floor ? lo : hi) = mid;
  }
  t_cut = hi;

  std::vector<double> positive;
  const double knee = std::min(t_cut, 10.0);
  const auto n_uniform = static_cast<std::size_t>(std::ceil(knee / 0.01));
  for (std::size_t i = 0; i <= n_uniform; ++i)
    positive.push_back(knee * static_cast<double>(i) / static_cast<double>(n_uniform));
  for (double t = knee * 1.01; t < t_cut; t *= 1.01)
    positive.push_back(t);
  if (positive.back() < t_cut)
    positive.push_back(t_cut);

  std::vector<double> grid;
  grid.reserve(2 * positive.size() - 1);
  for (auto it = positive.rbegin(); it != positive.rend(); ++it)
    grid.push_back(-*it);
  grid.insert(grid.end(), positive.begin() + 1, positive.end());
  return grid;
}

/// Signal catalog: gaussian, cauchy, laplace, gaussian_mixture. L is set to
/// ten times the class integral on membership_grid().
inline SignalModel builtin_signal(const std::string& name, double scale = 1.0)
{
  detail::require_positive_scale(scale);
  SignalModel m;
  m.name = name;
  m.scale = scale;
  const double sig = scale;
  if (name == "gaussian") {
    m.smoothness = {0.0, 2.0, 0.5 * sig * sig, 1.0};
    m.cf = [sig](double t) { return Complex(std::exp(-0.5 * sig * sig * t * t), 0.0); };
    m.log_abs_cf = [sig](double t) { return -0.5 * sig * sig * t * t; };
    m.density = [sig](double x) { return detail::normal_pdf(x, 0.0, sig); };
    m.draw = [sig](Rng& rng) { return std::normal_distribution<double>(0.0, sig)(rng); };
    m.support_hint = {-5.0 * sig, 5.0 * sig};
  } else if (name == "cauchy") {
    m.smoothness = {0.0, 1.0, sig, 1.0};
    m.cf = [sig](double t) { return Complex(std::exp(-sig * std::abs(t)), 0.0); };
    m.log_abs_cf = [sig](double t) { return -sig * std::abs(t); };
    m.density = [sig](double x) { return sig / (std::numbers::pi * (sig * sig + x * x)); };
    m.draw = [sig](Rng& rng) { return std::cauchy_distribution<double>(0.0, sig)(rng); };
    // P(|X| > c) = 1 - (2/π) atan(c/σ) = 1e-6
    const double c = sig / std::tan(0.5 * std::numbers::pi * 1e-6);
    m.support_hint = {-c, c};
  } else if (name == "laplace") {
    // Class membership needs δ < 3/2; 0.01 below the open boundary.
    m.smoothness = {1.49, 0.0, 0.0, 1.0};
    m.cf = [sig](double t) { return Complex(1.0 / (1.0 + sig * sig * t * t), 0.0); };
    m.log_abs_cf = [sig](double t) { return -std::log1p(sig * sig * t * t); };
    m.density = [sig](double x) { return std::exp(-std::abs(x) / sig) / (2.0 * sig); };
    m.draw = [sig](Rng& rng) { return detail::laplace_draw(rng, sig); };
    m.support_hint = {-14.0 * sig, 14.0 * sig};
  } else if (name == "gaussian_mixture") {
    // 0.5 N(-σ, σ²) + 0.5 N(σ, (σ/2)²). The narrow component has the widest
    // characteristic function and fixes a.
    const double mu = sig, s1 = sig, s2 = 0.5 * sig;
    m.smoothness = {0.0, 2.0, 0.5 * s2 * s2, 1.0};
    m.cf = [mu, s1, s2](double t) {
      const Complex left = std::polar(std::exp(-0.5 * s1 * s1 * t * t), -mu * t);
      const Complex right = std::polar(std::exp(-0.5 * s2 * s2 * t * t), mu * t);
      return 0.5 * (left + right);
    };
    m.log_abs_cf = [mu, s1, s2](double t) {
      const double rel = std::exp(-0.5 * (s1 * s1 - s2 * s2) * t * t);
      const Complex inner = std::polar(rel, -2.0 * mu * t) + 1.0;
      return std::log(0.5) - 0.5 * s2 * s2 * t * t + std::log(std::abs(inner));
    };
    m.density = [mu, s1, s2](double x) {
      return 0.5 * detail::normal_pdf(x, -mu, s1) + 0.5 * detail::normal_pdf(x, mu, s2);
    };
    m.draw = [mu, s1, s2](Rng& rng) {
      const bool left = std::bernoulli_distribution(0.5)(rng);
      return left ? std::normal_distribution<double>(-mu, s1)(rng)
                  : std::normal_distribution<double>(mu, s2)(rng);
    };
    m.support_hint = {-6.5 * sig, 6.5 * sig};
  } else {
    throw std::invalid_argument("unknown signal model: " + name);
  }
  const auto grid = membership_grid(m);
  m.smoothness.L = 10.0 * class_integral(m, grid, m.smoothness);
  return m;
}

struct N1Report
{
  bool ok = false;
  double worst_ratio_low = 0.0;
  double worst_ratio_high = 0.0;
};

/// Checks the N1 sandwich on every node; ratios are |cf| / envelope.
inline N1Report check_n1_membership(const NoiseModel& model, std::span<const double> tgrid)
{
  const auto& p = model.smoothness;
  N1Report rep;
  rep.worst_ratio_low = std::numeric_limits<double>::infinity();
  rep.worst_ratio_high = 0.0;
  for (const double t : tgrid) {
    const double log_env =
      -0.5 * p.gamma * std::log1p(t * t) - p.b * (p.s == 0.0 ? 1.0 : std::pow(std::abs(t), p.s));
    const double ratio = std::exp(model.log_abs_cf(t) - log_env);
    rep.worst_ratio_low = std::min(rep.worst_ratio_low, ratio);
    rep.worst_ratio_high = std::max(rep.worst_ratio_high, ratio);
  }
  constexpr double slack = 1e-12;
  rep.ok = !tgrid.empty() && rep.worst_ratio_low >= p.k0 * (1.0 - slack) &&
           rep.worst_ratio_high <= p.k1 * (1.0 + slack);
  return rep;
}

struct ClassReport
{
  double integral_estimate = 0.0;
  bool ok = false;
};

inline ClassReport check_class_membership(const SignalModel& model, std::span<const double> tgrid)
{
  ClassReport rep;
  rep.integral_estimate = class_integral(model, tgrid, model.smoothness);
  rep.ok = std::isfinite(rep.integral_estimate) && rep.integral_estimate <= model.smoothness.L;
  return rep;
}

/// Derives an independent generator for one named stream of one seed.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t salt = 0)
{
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(salt),
                    static_cast<std::uint32_t>(salt >> 32)};
  return Rng(seq);
}

struct SamplePair
{
  std::vector<double> X;
  std::vector<double> eps;
  std::vector<double> Y;
};

/// Y = X + eps with X and eps drawn from separate sub-streams of `seed`;
/// growing n keeps earlier draws unchanged.
inline SamplePair sample_pair(const SignalModel& signal, const NoiseModel& noise, std::size_t n,
                              std::uint64_t seed)
{
  if (n == 0)
    throw std::invalid_argument("sample_pair: n must be >= 1");
  Rng x_rng = make_stream(seed, 1);
  Rng e_rng = make_stream(seed, 2);
  SamplePair out;
  out.X.resize(n);
  out.eps.resize(n);
  out.Y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.X[i] = signal.draw(x_rng);
    out.eps[i] = noise.draw(e_rng);
    out.Y[i] = out.X[i] + out.eps[i];
  }
  return out;
}

} // namespace deconv
