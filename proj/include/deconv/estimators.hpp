#pragma once

// Fourier-cutoff kernel deconvolution estimator and the sinc projection
// estimator.

#include "deconv/model_catalog.hpp"
#include "deconv/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace deconv {

enum class EstimatorKind
{
  kernel,
  projection
};

inline std::string to_string(EstimatorKind k)
{
  return k == EstimatorKind::kernel ? "kernel" : "projection";
}

struct KernelConfig
{
  double h = 1.0;
  //! 0 selects FreqGrid::for_extent.
  std::size_t n_points = 0;
};

struct ProjectionConfig
{
  double L_m = 1.0;
  std::size_t K_n = 1;
  std::size_t n_points = 0;
};

struct EstimateMeta
{
  EstimatorKind kind = EstimatorKind::kernel;
  double h = 0.0;
  double L_m = 0.0;
  std::size_t K_n = 0;
  std::size_t n = 0;
  std::string noise;
};

struct DensityEstimate
{
  std::vector<double> x;
  std::vector<double> values;
  EstimateMeta meta;
  //! Largest imaginary part dropped by the inverse transform.
  double imag_residue = 0.0;
};

inline std::vector<double> uniform_grid(double lo, double hi, std::size_t count)
{
  if (count < 2 || !(hi > lo))
    throw std::invalid_argument("uniform_grid: need count >= 2 and hi > lo");
  std::vector<double> g(count);
  const double step = (hi - lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i)
    g[i] = lo + step * static_cast<double>(i);
  g.back() = hi;
  return g;
}

/// Default evaluation grid: `points` nodes over [lo - spill, hi + spill]
/// where spill is 4h (kernel) or 4/(πL_m) (projection).
inline std::vector<double> default_xgrid(Interval support, double spill, std::size_t points = 1024)
{
  return uniform_grid(support.lo - spill, support.hi + spill, points);
}

/// K_n = ceil(c n) with c = 1.
inline std::size_t default_truncation(std::size_t n)
{
  return std::max<std::size_t>(1, n);
}

inline double max_abs_x(std::span<const double> xgrid)
{
  double m = 0.0;
  for (const double x : xgrid)
    m = std::max(m, std::abs(x));
  return m;
}

/// Fourier transform of the kernel estimate: ecf_Y(t) / f_eps*(t) on
/// |t| <= 1/h.
inline SpectrumValues kernel_spectrum(std::span<const double> Y, double h, const NoiseModel& noise,
                                      const FreqGrid& grid)
{
  require_overflow_guard(noise, grid.t_max(), h);
  SpectrumValues spec = ecf(Y, grid);
  for (std::size_t k = 0; k < grid.size(); ++k)
    spec.values[k] /= noise.cf(grid.node(k));
  return spec;
}

inline FreqGrid kernel_grid(const KernelConfig& cfg, std::span<const double> xgrid)
{
  const double t_max = 1.0 / cfg.h;
  return cfg.n_points ? FreqGrid(t_max, cfg.n_points) : FreqGrid::for_extent(t_max, max_abs_x(xgrid));
}

/// ĝ_n(x) = (1/nh) Σ K((x - Y_i)/h), evaluated in the Fourier domain.
inline DensityEstimate kernel_deconv(std::span<const double> Y, const KernelConfig& cfg,
                                     const NoiseModel& noise, std::span<const double> xgrid)
{
  if (Y.empty())
    throw std::invalid_argument("kernel_deconv: empty sample");
  if (!(cfg.h > 0.0))
    throw std::invalid_argument("kernel_deconv: h must be > 0");
  require_overflow_guard(noise, 1.0 / cfg.h, cfg.h);
  const FreqGrid grid = kernel_grid(cfg, xgrid);
  const auto spec = kernel_spectrum(Y, cfg.h, noise, grid);
  auto inv = inverse_fourier_real(spec, xgrid);

  DensityEstimate est;
  est.x.assign(xgrid.begin(), xgrid.end());
  est.values = std::move(inv.values);
  est.imag_residue = inv.imag_residue;
  est.meta = {EstimatorKind::kernel, cfg.h, 0.0, 0, Y.size(), noise.name};
  return est;
}

/// φ(x) = sin(πx)/(πx).
inline double sinc_pi(double x)
{
  if (std::abs(x) < 1e-8)
    return 1.0 - (std::numbers::pi * x) * (std::numbers::pi * x) / 6.0;
  return std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
}

/// φ_{m,j}(x) = √L_m φ(L_m x - j).
inline double sinc_basis(double L_m, long j, double x)
{
  return std::sqrt(L_m) * sinc_pi(L_m * x - static_cast<double>(j));
}

struct ProjectionCoefficients
{
  double L_m = 1.0;
  std::size_t K_n = 0;
  //! â_{m,j} for j = -K_n..K_n, stored at index j + K_n.
  std::vector<double> values;
  double imag_residue = 0.0;

  double at(long j) const { return values.at(static_cast<std::size_t>(j + static_cast<long>(K_n))); }
};

/// â_{m,j} = (1/n) Σ_i u*_{φ_{m,j}}(Y_i) with
///   u*_{φ_{m,j}}(y) = (1/2π) ∫_{|x|<=πL_m} e^{ixy} φ_{m,j}*(-x) / f_eps*(x) dx,
///   φ_{m,j}*(x) = L_m^{-1/2} e^{ijx/L_m}.
/// Averaging over the sample first turns the integrand into
/// ecf_Y(x) e^{-ijx/L_m} / (√L_m f_eps*(x)), evaluated by trapezoid
/// quadrature for every |j| <= K_n at once.
inline ProjectionCoefficients projection_coefficients(std::span<const double> Y, double L_m,
                                                      std::size_t K_n, const NoiseModel& noise,
                                                      std::size_t n_points = 0)
{
  if (Y.empty())
    throw std::invalid_argument("projection: empty sample");
  if (!(L_m > 0.0))
    throw std::invalid_argument("projection: L_m must be > 0");
  const double cutoff = std::numbers::pi * L_m;
  require_overflow_guard(noise, cutoff, 1.0 / cutoff);

  std::vector<double> shifts(2 * K_n + 1);
  for (std::size_t i = 0; i < shifts.size(); ++i)
    shifts[i] = (static_cast<double>(i) - static_cast<double>(K_n)) / L_m;
  const double extent = std::max(1.0, static_cast<double>(K_n) / L_m);
  const FreqGrid grid = n_points ? FreqGrid(cutoff, n_points) : FreqGrid::for_extent(cutoff, extent);

  SpectrumValues spec = ecf(Y, grid);
  for (std::size_t k = 0; k < grid.size(); ++k)
    spec.values[k] /= noise.cf(grid.node(k));
  check_hermitian(spec);
  const auto raw = inverse_fourier_grid_complex(spec, shifts);

  ProjectionCoefficients out;
  out.L_m = L_m;
  out.K_n = K_n;
  out.values.resize(raw.size());
  const double norm = 1.0 / std::sqrt(L_m);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out.values[i] = raw[i].real() * norm;
    out.imag_residue = std::max(out.imag_residue, std::abs(raw[i].imag()) * norm);
  }
  return out;
}

inline double projection_coefficient(std::span<const double> Y, double L_m, long j,
                                     const NoiseModel& noise, std::size_t n_points = 0)
{
  if (Y.empty())
    throw std::invalid_argument("projection: empty sample");
  if (!(L_m > 0.0))
    throw std::invalid_argument("projection: L_m must be > 0");
  const double cutoff = std::numbers::pi * L_m;
  require_overflow_guard(noise, cutoff, 1.0 / cutoff);
  const double shift = static_cast<double>(j) / L_m;
  const FreqGrid grid = n_points ? FreqGrid(cutoff, n_points)
                                 : FreqGrid::for_extent(cutoff, std::max(1.0, std::abs(shift)));
  SpectrumValues spec = ecf(Y, grid);
  for (std::size_t k = 0; k < grid.size(); ++k)
    spec.values[k] /= noise.cf(grid.node(k));
  const double x[] = {shift};
  return inverse_fourier_grid_complex(spec, x)[0].real() / std::sqrt(L_m);
}

/// Σ_{|j|<=K_n} â_j φ_{m,j}(x) on xgrid.
inline std::vector<double> synthesize_projection(const ProjectionCoefficients& coef,
                                                 std::span<const double> xgrid)
{
  std::vector<double> out(xgrid.size(), 0.0);
  const long K = static_cast<long>(coef.K_n);
  const double root = std::sqrt(coef.L_m);
  for (std::size_t i = 0; i < xgrid.size(); ++i) {
    const double u = coef.L_m * xgrid[i];
    // sin(π(u - j)) = (-1)^j sin(πu)
    const double s = std::sin(std::numbers::pi * u);
    double sum = 0.0;
    for (long j = -K; j <= K; ++j) {
      const double a = coef.values[static_cast<std::size_t>(j + K)];
      if (a == 0.0)
        continue;
      const double d = u - static_cast<double>(j);
      double phi;
      if (std::abs(d) < 1e-8)
        phi = sinc_pi(d);
      else
        phi = ((j & 1) ? -s : s) / (std::numbers::pi * d);
      sum += a * phi;
    }
    out[i] = root * sum;
  }
  return out;
}

/// ĝ_m(x) = Σ_{|j|<=K_n} â_{m,j} φ_{m,j}(x).
inline DensityEstimate projection_deconv(std::span<const double> Y, const ProjectionConfig& cfg,
                                         const NoiseModel& noise, std::span<const double> xgrid)
{
  if (cfg.K_n < 1)
    throw std::invalid_argument("projection: K_n must be >= 1");
  const auto coef = projection_coefficients(Y, cfg.L_m, cfg.K_n, noise, cfg.n_points);
  DensityEstimate est;
  est.x.assign(xgrid.begin(), xgrid.end());
  est.values = synthesize_projection(coef, xgrid);
  est.imag_residue = coef.imag_residue;
  est.meta = {EstimatorKind::projection, 0.0, cfg.L_m, cfg.K_n, Y.size(), noise.name};
  return est;
}

} // namespace deconv
