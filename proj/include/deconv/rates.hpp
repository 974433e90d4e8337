#pragma once

// Risk orders, rate regimes, the b_i / d_i coefficient recursions, optimal
// bandwidths and theoretical convergence rates.
//
// The risk orders are
//   MISE: h^{2δ} e^{-2a/h^r} + h^{s-1-2γ} e^{2b/h^s} / n
//   MSE : h^{2δ+r-1} e^{-2a/h^r} + min(1, h^{s-1}) h^{s-1-2γ} e^{2b/h^s} / n
// and the first-order condition for their minimum is
//   exp(2b/h^s + 2a/h^r) h^α ≍ n.
// Every implicit constant is taken to be 1.

#include "deconv/golden_section.hpp"
#include "deconv/model_catalog.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace deconv {

enum class RiskKind
{
  mise,
  mse
};

inline std::string to_string(RiskKind k)
{
  return k == RiskKind::mise ? "mise" : "mse";
}

struct ProblemParams
{
  SignalSmoothness signal;
  NoiseSmoothness noise;
  RiskKind risk = RiskKind::mise;
};

inline ProblemParams problem_params(const SignalModel& signal, const NoiseModel& noise,
                                    RiskKind risk = RiskKind::mise)
{
  return {signal.smoothness, noise.smoothness, risk};
}

enum class Cell
{
  OrdOrd,
  OrdSuper,
  SuperOrd,
  Equal,
  BiasDominant,
  VarianceDominant
};

inline std::string to_string(Cell c)
{
  switch (c) {
    case Cell::OrdOrd: return "OrdOrd";
    case Cell::OrdSuper: return "OrdSuper";
    case Cell::SuperOrd: return "SuperOrd";
    case Cell::Equal: return "Equal";
    case Cell::BiasDominant: return "BiasDominant";
    case Cell::VarianceDominant: return "VarianceDominant";
  }
  return "unknown";
}

struct Regime
{
  Cell cell = Cell::OrdOrd;
  //! Interval index, BiasDominant / VarianceDominant only.
  int k = 0;
  //! λ = r/s (BiasDominant) or μ = s/r (VarianceDominant).
  double lambda_or_mu = 0.0;
  //! Equal only.
  double xi = 0.0;
  //! b_0..b_k or d_0..d_k.
  std::vector<double> coeffs;
};

inline double positive_part(double v)
{
  return v > 0.0 ? v : 0.0;
}

inline double alpha(const ProblemParams& p)
{
  const auto& g = p.signal;
  const auto& f = p.noise;
  if (p.risk == RiskKind::mise)
    return g.r - 2.0 * g.delta - 2.0 * f.gamma - 1.0;
  return -2.0 * g.delta - 2.0 * f.gamma + positive_part(f.s - 1.0);
}

namespace detail {

inline double log_add(double x, double y)
{
  if (x == -std::numeric_limits<double>::infinity())
    return y;
  if (y == -std::numeric_limits<double>::infinity())
    return x;
  const double m = std::max(x, y);
  if (m == std::numeric_limits<double>::infinity())
    return m;
  return m + std::log1p(std::exp(-std::abs(x - y)));
}

// h^{-p} with the convention h^0 = 1.
inline double inv_pow(double h, double p)
{
  return p == 0.0 ? 1.0 : std::pow(h, -p);
}

// Exponents with a zero scale carry no information and collapse to the
// ordinary-smooth side before a cell is chosen.
inline double effective_r(const ProblemParams& p)
{
  return p.signal.a > 0.0 ? p.signal.r : 0.0;
}

inline double effective_s(const ProblemParams& p)
{
  return p.noise.b > 0.0 ? p.noise.s : 0.0;
}

} // namespace detail

/// log of the risk order; stays finite where the exponentials overflow.
inline double log_risk_bound(double h, double n, const ProblemParams& p)
{
  if (!(h > 0.0))
    throw std::invalid_argument("risk_bound: h must be > 0");
  if (!(n >= 1.0))
    throw std::invalid_argument("risk_bound: n must be >= 1");
  const auto& g = p.signal;
  const auto& f = p.noise;
  const double lh = std::log(h);
  const double bias_pow = p.risk == RiskKind::mise ? 2.0 * g.delta : 2.0 * g.delta + g.r - 1.0;
  const double log_bias = bias_pow * lh - 2.0 * g.a * detail::inv_pow(h, g.r);
  double log_var = (f.s - 1.0 - 2.0 * f.gamma) * lh - std::log(n) + 2.0 * f.b * detail::inv_pow(h, f.s);
  if (p.risk == RiskKind::mse)
    log_var += std::min(0.0, (f.s - 1.0) * lh);
  return detail::log_add(log_bias, log_var);
}

inline double risk_bound(double h, double n, const ProblemParams& p)
{
  return std::exp(log_risk_bound(h, n, p));
}

/// The k >= 0 with k/(k+1) < ratio <= (k+1)/(k+2), for 0 < ratio < 1.
/// Computed from q = ratio/(1 - ratio) as k = ceil(q) - 1, snapping q to an
/// integer within 1e-12 relative so exact boundaries stay half-open.
inline int interval_index_from_q(double q)
{
  const double nearest = std::round(q);
  if (std::abs(q - nearest) <= 1e-12 * std::max(1.0, std::abs(q)))
    q = nearest;
  return std::max(0, static_cast<int>(std::ceil(q)) - 1);
}

inline int interval_index(double ratio)
{
  if (!(ratio > 0.0 && ratio < 1.0))
    throw std::invalid_argument("interval_index: ratio must lie in (0, 1)");
  return interval_index_from_q(ratio / (1.0 - ratio));
}

namespace detail {

// Solves M_0 = ... = M_k = 0 for
//   M_0 = b_0 + c,
//   M_i = b_i + c Σ_{j=1}^{i} [λ(λ-1)..(λ-j+1)/j!] Σ_{p_1+..+p_j=i} b_{p_1-1}..b_{p_j-1}.
// compositions[j][i] holds the inner sum over ordered compositions of i into
// j positive parts; it only involves b_0..b_{i-1}.
inline std::vector<double> solve_recursion(double lambda, double c, int k)
{
  std::vector<double> b(static_cast<std::size_t>(k) + 1, 0.0);
  b[0] = -c;
  const auto K = static_cast<std::size_t>(k);
  std::vector<std::vector<double>> compositions(K + 1, std::vector<double>(K + 1, 0.0));
  for (std::size_t i = 1; i <= K; ++i) {
    compositions[1][i] = b[i - 1];
    for (std::size_t j = 2; j <= i; ++j) {
      double sum = 0.0;
      for (std::size_t p = 1; p + (j - 1) <= i; ++p)
        sum += b[p - 1] * compositions[j - 1][i - p];
      compositions[j][i] = sum;
    }
    double falling = 1.0;
    double acc = 0.0;
    for (std::size_t j = 1; j <= i; ++j) {
      falling *= (lambda - static_cast<double>(j - 1)) / static_cast<double>(j);
      acc += falling * compositions[j][i];
    }
    b[i] = -c * acc;
  }
  return b;
}

inline void require_unit_ratio(double v, const char* what)
{
  if (!(v > 0.0 && v < 1.0))
    throw std::invalid_argument(std::string(what) + " must lie in (0, 1)");
}

} // namespace detail

/// b_0..b_k for r < s, λ = r/s; b_0 = -2a/(2b)^λ. Any truncation order k >= 0
/// is accepted.
inline std::vector<double> coeffs_bias_dominant(double lambda, double a, double b, int k)
{
  detail::require_unit_ratio(lambda, "lambda");
  if (!(a >= 0.0) || !(b > 0.0) || k < 0)
    throw std::invalid_argument("coeffs_bias_dominant: need a >= 0, b > 0, k >= 0");
  return detail::solve_recursion(lambda, 2.0 * a / std::pow(2.0 * b, lambda), k);
}

/// d_0..d_k for r > s, μ = s/r: the same recursion with (a, r) and (b, s)
/// exchanged, so d_0 = -2b/(2a)^μ.
inline std::vector<double> coeffs_variance_dominant(double mu, double a, double b, int k)
{
  detail::require_unit_ratio(mu, "mu");
  if (!(b >= 0.0) || !(a > 0.0) || k < 0)
    throw std::invalid_argument("coeffs_variance_dominant: need b >= 0, a > 0, k >= 0");
  return detail::solve_recursion(mu, 2.0 * b / std::pow(2.0 * a, mu), k);
}

/// Cell, k and ξ for p. The coefficient vector costs O(k³) and k grows
/// without bound as λ or μ approaches 1; pass with_coeffs = false when only
/// the cell is needed.
inline Regime classify_regime(const ProblemParams& p, bool with_coeffs = true)
{
  const double r = detail::effective_r(p);
  const double s = detail::effective_s(p);
  const double a = p.signal.a;
  const double b = p.noise.b;
  Regime reg;
  if (r == 0.0 && s == 0.0) {
    reg.cell = Cell::OrdOrd;
  } else if (r == 0.0) {
    reg.cell = Cell::OrdSuper;
  } else if (s == 0.0) {
    reg.cell = Cell::SuperOrd;
  } else if (r == s) {
    reg.cell = Cell::Equal;
    reg.xi = (2.0 * p.signal.delta * b + (s - 2.0 * p.noise.gamma - 1.0) * a) / ((a + b) * s);
  } else if (r < s) {
    reg.cell = Cell::BiasDominant;
    reg.lambda_or_mu = r / s;
    reg.k = interval_index_from_q(r / (s - r));
    if (with_coeffs)
      reg.coeffs = coeffs_bias_dominant(reg.lambda_or_mu, a, b, reg.k);
  } else {
    reg.cell = Cell::VarianceDominant;
    reg.lambda_or_mu = s / r;
    reg.k = interval_index_from_q(s / (r - s));
    if (with_coeffs)
      reg.coeffs = coeffs_variance_dominant(reg.lambda_or_mu, a, b, reg.k);
  }
  return reg;
}

/// ln[exp(2b/h^s + 2a/h^r) h^α] - ln n.
inline double verify_equation_residual(double h, double n, const ProblemParams& p)
{
  if (!(h > 0.0))
    throw std::invalid_argument("verify_equation_residual: h must be > 0");
  return 2.0 * p.noise.b * detail::inv_pow(h, p.noise.s) +
         2.0 * p.signal.a * detail::inv_pow(h, p.signal.r) + alpha(p) * std::log(h) - std::log(n);
}

enum class BandwidthKind
{
  numeric,
  asymptotic
};

inline std::string to_string(BandwidthKind k)
{
  return k == BandwidthKind::numeric ? "numeric" : "asymptotic";
}

struct BandwidthResult
{
  double h = std::numeric_limits<double>::quiet_NaN();
  //! The asymptotic formula was unavailable and the numeric minimizer was
  //! used instead.
  bool numeric_fallback = false;
};

/// Argmin of the risk order: scan of 2000 log-spaced h values, then
/// golden-section refinement between the neighbours of the best node. The
/// bracket is widened tenfold and the scan repeated once when the best node
/// sits on an edge.
inline double numeric_bandwidth(double n, const ProblemParams& p)
{
  const double s = detail::effective_s(p);
  double h_lo = s > 0.0 ? std::pow(2.0 * p.noise.b / std::log(n), 1.0 / s) / 10.0 : 1.0 / n;
  double h_hi = 10.0;
  constexpr int kScan = 2000;
  for (int attempt = 0; attempt < 2; ++attempt) {
    const double llo = std::log(h_lo), lhi = std::log(h_hi);
    auto objective = [&](double lh) { return log_risk_bound(std::exp(lh), n, p); };
    int best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (int i = 0; i < kScan; ++i) {
      const double v = objective(llo + (lhi - llo) * i / (kScan - 1));
      if (v < best_val) {
        best_val = v;
        best = i;
      }
    }
    const bool on_edge = best == 0 || best == kScan - 1;
    if (on_edge && attempt == 0) {
      h_lo /= 10.0;
      h_hi *= 10.0;
      continue;
    }
    const int i0 = std::max(best - 1, 0), i1 = std::min(best + 1, kScan - 1);
    const auto m = golden_section_minimize(objective, llo + (lhi - llo) * i0 / (kScan - 1),
                                           llo + (lhi - llo) * i1 / (kScan - 1), 1e-14);
    return std::exp(m.x);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

/// Closed-form bandwidth of `reg` (whose coefficient vector may be
/// truncated). NaN when the cell has no usable formula at this n.
inline double asymptotic_bandwidth(double n, const ProblemParams& p, const Regime& reg)
{
  const double L = std::log(n);
  const double LL = std::log(L);
  const double al = alpha(p);
  const double a = p.signal.a, b = p.noise.b;
  const double r = p.signal.r, s = p.noise.s;
  auto power_sum = [&](double ratio) {
    double acc = 0.0;
    for (std::size_t i = 0; i < reg.coeffs.size(); ++i) {
      const double e = static_cast<double>(i + 1) * ratio - static_cast<double>(i);
      acc += reg.coeffs[i] * std::pow(L, e);
    }
    return acc;
  };
  double h = std::numeric_limits<double>::quiet_NaN();
  switch (reg.cell) {
    case Cell::OrdOrd:
      break; // no closed form; callers fall back to the numeric solver

    case Cell::OrdSuper:
      h = std::pow(2.0 * b, 1.0 / s) * std::pow(L + al / s * LL, -1.0 / s);
      break;
    case Cell::SuperOrd:
      h = std::pow(2.0 * a, 1.0 / r) * std::pow(L + al / r * LL, -1.0 / r);
      break;
    case Cell::Equal:
      h = std::pow(2.0 * a + 2.0 * b, 1.0 / s) * std::pow(L + al / s * LL, -1.0 / s);
      break;
    case Cell::BiasDominant:
      h = std::pow(2.0 * b, 1.0 / s) *
          std::pow(L + al / s * LL + power_sum(reg.lambda_or_mu), -1.0 / s);
      break;
    case Cell::VarianceDominant:
      h = std::pow(2.0 * a, 1.0 / r) *
          std::pow(L + al / r * LL + power_sum(reg.lambda_or_mu), -1.0 / r);
      break;
  }
  return (std::isfinite(h) && h > 0.0) ? h : std::numeric_limits<double>::quiet_NaN();
}

inline BandwidthResult optimal_bandwidth_detail(double n, const ProblemParams& p, BandwidthKind kind)
{
  if (!(n >= 3.0))
    throw std::invalid_argument("optimal_bandwidth: n must be >= 3");
  if (kind == BandwidthKind::numeric)
    return {numeric_bandwidth(n, p), false};
  const double h = asymptotic_bandwidth(n, p, classify_regime(p));
  if (std::isnan(h))
    return {numeric_bandwidth(n, p), true};
  return {h, false};
}

inline double optimal_bandwidth(double n, const ProblemParams& p, BandwidthKind kind)
{
  return optimal_bandwidth_detail(n, p, kind).h;
}

struct BandwidthRule
{
  BandwidthKind kind = BandwidthKind::numeric;
  std::function<double(double)> h_star;
  std::string description;
};

inline BandwidthRule make_bandwidth_rule(const ProblemParams& p, BandwidthKind kind)
{
  return {kind, [p, kind](double n) { return optimal_bandwidth(n, p, kind); },
          to_string(kind) + " optimal bandwidth (" + to_string(classify_regime(p, false).cell) + ", " +
            to_string(p.risk) + ")"};
}

/// Split of a rate into n^{exponent} times a logarithmic/subexponential factor.
struct RateShape
{
  double n_exponent = 0.0;
  double log_factor = 1.0;
};

/// log of the rate with implicit constant 1.
inline double log_theoretical_rate(double n, const ProblemParams& p)
{
  if (!(n >= 3.0))
    throw std::invalid_argument("theoretical_rate: n must be >= 3");
  const auto reg = classify_regime(p);
  const double ln_n = std::log(n);
  const double LL = std::log(ln_n);
  const double d = p.signal.delta, g = p.noise.gamma;
  const double r = p.signal.r, s = p.noise.s;
  const double a = p.signal.a, b = p.noise.b;
  const bool mise = p.risk == RiskKind::mise;
  auto exp_sum = [&] {
    double acc = 0.0;
    for (std::size_t i = 0; i < reg.coeffs.size(); ++i)
      acc += reg.coeffs[i] *
             std::pow(ln_n, static_cast<double>(i + 1) * reg.lambda_or_mu - static_cast<double>(i));
    return acc;
  };
  switch (reg.cell) {
    case Cell::OrdOrd:
      return mise ? -2.0 * d / (2.0 * d + 2.0 * g + 1.0) * ln_n
                  : (1.0 - 2.0 * d) / (2.0 * d + 2.0 * g) * ln_n;
    case Cell::OrdSuper:
      return (mise ? -2.0 * d / s : (1.0 - 2.0 * d) / s) * LL;
    case Cell::SuperOrd:
      return (2.0 * g + 1.0) / r * LL - ln_n;
    case Cell::Equal: {
      double log_exp = -reg.xi;
      if (!mise)
        log_exp += positive_part(1.0 - s) * b / ((a + b) * s);
      return -a / (a + b) * ln_n + log_exp * LL;
    }
    case Cell::BiasDominant:
      return (mise ? -2.0 * d / s : (-2.0 * d - r + 1.0) / s) * LL + exp_sum();
    case Cell::VarianceDominant: {
      const double num = mise ? 1.0 + 2.0 * g - s : 1.0 + 2.0 * g - s - positive_part(s - 1.0);
      return num / r * LL - ln_n - exp_sum();
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

inline double theoretical_rate(double n, const ProblemParams& p)
{
  return std::exp(log_theoretical_rate(n, p));
}

/// Power of n carried by the rate of the regime.
inline double rate_exponent(const ProblemParams& p)
{
  const auto reg = classify_regime(p, false);
  const double d = p.signal.delta, g = p.noise.gamma;
  switch (reg.cell) {
    case Cell::OrdOrd:
      return p.risk == RiskKind::mise ? -2.0 * d / (2.0 * d + 2.0 * g + 1.0)
                                      : (1.0 - 2.0 * d) / (2.0 * d + 2.0 * g);
    case Cell::OrdSuper:
    case Cell::BiasDominant:
      return 0.0;
    case Cell::SuperOrd:
    case Cell::VarianceDominant:
      return -1.0;
    case Cell::Equal:
      return -p.signal.a / (p.signal.a + p.noise.b);
  }
  return 0.0;
}

inline RateShape rate_shape(double n, const ProblemParams& p)
{
  const double e = rate_exponent(p);
  return {e, std::exp(log_theoretical_rate(n, p) - e * std::log(n))};
}

} // namespace deconv
