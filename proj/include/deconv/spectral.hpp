#pragma once

// Grid Fourier machinery: empirical characteristic functions, trapezoid
// inverse transforms and the deconvolution kernel.

#include "deconv/error.hpp"
#include "deconv/model_catalog.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace deconv {

/// Largest admissible value of 1/|f_eps*| on a frequency cutoff.
inline constexpr double kOverflowGuard = 1e280;

/// Uniform grid on [-t_max, t_max] with a power-of-two node count. Node k
/// sits at (2k - (n-1)) Δt / 2, so node k and node n-1-k are exact negatives.
class FreqGrid
{
public:
  FreqGrid(double t_max, std::size_t n_points)
    : t_max_(t_max)
    , n_(n_points)
  {
    if (!(t_max > 0.0) || !std::isfinite(t_max))
      throw std::invalid_argument("FreqGrid: t_max must be positive and finite");
    if (n_points < 256 || !std::has_single_bit(n_points))
      throw std::invalid_argument("FreqGrid: n_points must be a power of two >= 256");
    dt_ = 2.0 * t_max / static_cast<double>(n_points - 1);
  }

  /// Smallest power of two >= min_points with Δt <= π / (8 max|x|).
  static FreqGrid for_extent(double t_max, double x_extent, std::size_t min_points = 4096)
  {
    std::size_t n = std::bit_ceil(std::max<std::size_t>(min_points, 256));
    const double target = std::numbers::pi / (8.0 * std::max(x_extent, 1e-12));
    while (2.0 * t_max / static_cast<double>(n - 1) > target && n < (std::size_t{1} << 26))
      n *= 2;
    return FreqGrid(t_max, n);
  }

  double t_max() const noexcept { return t_max_; }
  std::size_t size() const noexcept { return n_; }
  double spacing() const noexcept { return dt_; }

  double node(std::size_t k) const noexcept
  {
    return (2.0 * static_cast<double>(k) - static_cast<double>(n_ - 1)) * 0.5 * dt_;
  }

  /// Trapezoid weight of node k.
  double weight(std::size_t k) const noexcept { return (k == 0 || k + 1 == n_) ? 0.5 * dt_ : dt_; }

  std::vector<double> nodes() const
  {
    std::vector<double> out(n_);
    for (std::size_t k = 0; k < n_; ++k)
      out[k] = node(k);
    return out;
  }

private:
  double t_max_;
  std::size_t n_;
  double dt_;
};

struct SpectrumValues
{
  FreqGrid grid;
  std::vector<Complex> values;
};

namespace detail {

// Phase recurrences are re-anchored with an exact polar() every this many
// steps, bounding the accumulated rounding drift.
inline constexpr std::size_t kReanchor = 32;

inline double max_abs(std::span<const Complex> v)
{
  double m = 0.0;
  for (const auto& z : v)
    m = std::max(m, std::abs(z));
  return m;
}

} // namespace detail

/// Empirical characteristic function (1/n) Σ_j e^{itY_j} by direct summation.
/// Only the t > 0 half is summed; the other half is its conjugate, so the
/// result is exactly Hermitian.
inline SpectrumValues ecf(std::span<const double> sample, const FreqGrid& grid)
{
  if (sample.empty())
    throw std::invalid_argument("ecf: empty sample");
  const std::size_t n = grid.size();
  const std::size_t half = n / 2;
  const double dt = grid.spacing();
  std::vector<Complex> acc(half, Complex(0.0, 0.0));
  for (const double y : sample) {
    const Complex step = std::polar(1.0, y * dt);
    Complex z;
    for (std::size_t m = 0; m < half; ++m) {
      if (m % detail::kReanchor == 0)
        z = std::polar(1.0, y * grid.node(half + m));
      else
        z *= step;
      acc[m] += z;
    }
  }
  const double inv_n = 1.0 / static_cast<double>(sample.size());
  SpectrumValues out{grid, std::vector<Complex>(n)};
  for (std::size_t m = 0; m < half; ++m) {
    out.values[half + m] = acc[m] * inv_n;
    out.values[half - 1 - m] = std::conj(out.values[half + m]);
  }
  return out;
}

/// Throws SymmetryViolation unless values(-t) = conj(values(t)) within
/// `rel_tol` of the largest magnitude.
inline void check_hermitian(const SpectrumValues& spec, double rel_tol = 1e-8)
{
  const std::size_t n = spec.values.size();
  if (n != spec.grid.size())
    throw std::invalid_argument("spectrum size does not match its grid");
  const double scale = std::max(detail::max_abs(spec.values), 1e-300);
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double gap = std::abs(spec.values[k] - std::conj(spec.values[n - 1 - k]));
    if (gap > rel_tol * scale)
      throw SymmetryViolation("spectrum is not Hermitian at t=" +
                              std::to_string(spec.grid.node(k)));
  }
}

/// (1/2π) Σ_k w_k S(t_k) e^{-ixt_k}: trapezoid inverse transform, complex
/// result, no symmetry assumptions.
inline std::vector<Complex> inverse_fourier_grid_complex(const SpectrumValues& spec,
                                                         std::span<const double> xgrid)
{
  const auto& grid = spec.grid;
  const std::size_t n = grid.size();
  if (spec.values.size() != n)
    throw std::invalid_argument("spectrum size does not match its grid");
  std::vector<Complex> weighted(n);
  for (std::size_t k = 0; k < n; ++k)
    weighted[k] = spec.values[k] * grid.weight(k);

  std::vector<Complex> out(xgrid.size());
  const double dt = grid.spacing();
  for (std::size_t i = 0; i < xgrid.size(); ++i) {
    const double x = xgrid[i];
    const Complex step = std::polar(1.0, -x * dt);
    Complex z;
    Complex sum(0.0, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      if (k % detail::kReanchor == 0)
        z = std::polar(1.0, -x * grid.node(k));
      else
        z *= step;
      sum += weighted[k] * z;
    }
    out[i] = sum / (2.0 * std::numbers::pi);
  }
  return out;
}

struct RealTransform
{
  std::vector<double> values;
  double imag_residue = 0.0;
};

/// Inverse transform of a Hermitian spectrum. Asserts symmetry on input and
/// an imaginary residue <= 1e-8 (1 + max|result|) on output before dropping
/// it.
inline RealTransform inverse_fourier_real(const SpectrumValues& spec, std::span<const double> xgrid)
{
  check_hermitian(spec);
  const auto full = inverse_fourier_grid_complex(spec, xgrid);
  RealTransform out;
  out.values.resize(full.size());
  double max_re = 0.0;
  for (std::size_t i = 0; i < full.size(); ++i) {
    out.values[i] = full[i].real();
    max_re = std::max(max_re, std::abs(full[i].real()));
    out.imag_residue = std::max(out.imag_residue, std::abs(full[i].imag()));
  }
  if (out.imag_residue > 1e-8 * (1.0 + max_re))
    throw SymmetryViolation("inverse transform left an imaginary residue of " +
                            std::to_string(out.imag_residue));
  return out;
}

inline std::vector<double> inverse_fourier_grid(const SpectrumValues& spec,
                                                std::span<const double> xgrid)
{
  return inverse_fourier_real(spec, xgrid).values;
}

/// Δx Σ_m g(x_m) e^{itx_m} on a uniform x grid. On a grid with
/// Δx Δt = 2π / M, with M the number of x nodes, this is the exact discrete inverse of
/// inverse_fourier_grid_complex up to the trapezoid weights.
inline std::vector<Complex> forward_fourier_grid(std::span<const double> xgrid,
                                                 std::span<const double> values,
                                                 std::span<const double> tnodes)
{
  if (xgrid.size() != values.size() || xgrid.size() < 2)
    throw std::invalid_argument("forward_fourier_grid: mismatched or tiny grid");
  const double dx = (xgrid.back() - xgrid.front()) / static_cast<double>(xgrid.size() - 1);
  std::vector<Complex> out(tnodes.size());
  for (std::size_t k = 0; k < tnodes.size(); ++k) {
    const double t = tnodes[k];
    const Complex step = std::polar(1.0, t * dx);
    Complex z;
    Complex sum(0.0, 0.0);
    for (std::size_t m = 0; m < xgrid.size(); ++m) {
      if (m % detail::kReanchor == 0)
        z = std::polar(1.0, t * xgrid[m]);
      else
        z *= step;
      sum += values[m] * z;
    }
    out[k] = sum * dx;
  }
  return out;
}

/// max over |t| <= t_max of -log|f_eps*(t)|, sampled on 1025 points of
/// [0, t_max] (every catalog cf is even in modulus).
inline double max_log_inverse_cf(const NoiseModel& noise, double t_max)
{
  double worst = -noise.log_abs_cf(0.0);
  constexpr int kProbe = 1024;
  for (int i = 1; i <= kProbe; ++i)
    worst = std::max(worst, -noise.log_abs_cf(t_max * i / kProbe));
  return worst;
}

inline bool passes_overflow_guard(const NoiseModel& noise, double t_max)
{
  return max_log_inverse_cf(noise, t_max) < std::log(kOverflowGuard);
}

/// Smallest h whose cutoff 1/h passes the overflow guard (bisection in
/// log h); 0 when every cutoff up to 1e12 passes.
inline double min_feasible_bandwidth(const NoiseModel& noise)
{
  double lo = 1e-12, hi = 1e3; // h range
  if (passes_overflow_guard(noise, 1.0 / lo))
    return 0.0;
  for (int it = 0; it < 200 && hi / lo > 1.0 + 1e-10; ++it) {
    const double mid = std::sqrt(lo * hi);
    (passes_overflow_guard(noise, 1.0 / mid) ? hi : lo) = mid;
  }
  return hi;
}

/// Throws BandwidthTooSmall if 1/|f_eps*| overflows the guard on
/// [-t_max, t_max]. `h` is the bandwidth reported in the error.
inline void require_overflow_guard(const NoiseModel& noise, double t_max, double h)
{
  if (!passes_overflow_guard(noise, t_max))
    throw BandwidthTooSmall(h, min_feasible_bandwidth(noise));
}

/// The deconvolution kernel K(u) = (1/2π) ∫_{-1}^{1} e^{-iuv} / f_eps*(v/h) dv.
inline std::vector<double> kernel_K(double h, const NoiseModel& noise,
                                    std::span<const double> ugrid, std::size_t n_points = 0)
{
  if (!(h > 0.0))
    throw std::invalid_argument("kernel_K: h must be > 0");
  require_overflow_guard(noise, 1.0 / h, h);
  double u_extent = 1.0;
  for (const double u : ugrid)
    u_extent = std::max(u_extent, std::abs(u));
  const FreqGrid grid = n_points ? FreqGrid(1.0, n_points) : FreqGrid::for_extent(1.0, u_extent);
  SpectrumValues spec{grid, std::vector<Complex>(grid.size())};
  for (std::size_t k = 0; k < grid.size(); ++k)
    spec.values[k] = 1.0 / noise.cf(grid.node(k) / h);
  return inverse_fourier_grid(spec, ugrid);
}

} // namespace deconv
