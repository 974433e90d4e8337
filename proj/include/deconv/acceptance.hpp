#pragma once

// Executable acceptance criteria. Each criterion returns a pass flag plus
// one detail line per individual check; `verify` in the CLI and the
// acceptance test binary both run these.

#include "deconv/estimators.hpp"
#include "deconv/model_catalog.hpp"
#include "deconv/rates.hpp"
#include "deconv/risk_lab.hpp"
#include "deconv/spectral.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace deconv::acceptance {

struct CriterionResult
{
  int id = 0;
  std::string name;
  bool pass = false;
  double seconds = 0.0;
  double limit_seconds = 0.0;
  std::vector<std::string> details;
};

namespace detail {

inline std::string fmt(const char* pattern, auto... args)
{
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

inline std::string mark(bool ok)
{
  return ok ? "PASS" : "FAIL";
}

template <typename Body>
CriterionResult timed(int id, std::string name, double limit, Body&& body)
{
  CriterionResult res;
  res.id = id;
  res.name = std::move(name);
  res.limit_seconds = limit;
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = false;
  try {
    ok = body(res.details);
  } catch (const std::exception& e) {
    res.details.push_back(std::string("exception: ") + e.what());
    ok = false;
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = res.seconds < limit;
  if (!in_time)
    res.details.push_back(fmt("runtime %.2fs exceeds limit %.0fs", res.seconds, limit));
  res.pass = ok && in_time;
  return res;
}

struct RecursionCase
{
  double ratio, a, b;
  int k;
};

inline ProblemParams bias_params(const RecursionCase& c)
{
  ProblemParams p;
  p.noise = {2.0, c.b, 0.0, 1.0, 1.0};
  p.signal = {0.0, 2.0 * c.ratio, c.a, 1.0};
  return p;
}

inline ProblemParams variance_params(const RecursionCase& c)
{
  ProblemParams p;
  p.signal = {0.0, 2.0, c.a, 1.0};
  p.noise = {2.0 * c.ratio, c.b, 0.0, 1.0, 1.0};
  return p;
}

// Shared body of the two recursion criteria.
inline bool check_recursion(const std::vector<RecursionCase>& cases, bool variance,
                            std::vector<std::string>& out)
{
  bool all = true;
  for (const auto& c : cases) {
    const ProblemParams p = variance ? variance_params(c) : bias_params(c);
    Regime full;
    full.cell = variance ? Cell::VarianceDominant : Cell::BiasDominant;
    full.k = c.k;
    full.lambda_or_mu = c.ratio;
    full.coeffs = variance ? coeffs_variance_dominant(c.ratio, c.a, c.b, c.k)
                           : coeffs_bias_dominant(c.ratio, c.a, c.b, c.k);
    Regime truncated = full;
    truncated.coeffs.pop_back();

    const double anchor = variance ? -2.0 * c.b / std::pow(2.0 * c.a, c.ratio)
                                   : -2.0 * c.a / std::pow(2.0 * c.b, c.ratio);
    const bool anchor_ok = full.coeffs[0] == anchor;
    all = all && anchor_ok;
    out.push_back(fmt("[%s] %s=%.3g a=%.3g b=%.3g k=%d: %s_0 = %.15g (anchor %.15g)",
                      mark(anchor_ok).c_str(), variance ? "mu" : "lambda", c.ratio, c.a, c.b, c.k,
                      variance ? "d" : "b", full.coeffs[0], anchor));
    const double order = (c.k + 2) * c.ratio - (c.k + 1);
    for (const double n : {1e6, 1e9, 1e12}) {
      const double L = std::log(n);
      const double bound = 10.0 * std::pow(L, order);
      const double r_full = verify_equation_residual(asymptotic_bandwidth(n, p, full), n, p);
      const double r_trunc = verify_equation_residual(asymptotic_bandwidth(n, p, truncated), n, p);
      bool ok = std::abs(r_full) <= bound;
      if (n == 1e12)
        ok = ok && std::abs(r_full) < std::abs(r_trunc);
      all = all && ok;
      out.push_back(fmt("[%s]   n=%.0e |residual|=%.4g bound=%.4g truncated=%.4g%s", mark(ok).c_str(),
                        n, std::abs(r_full), bound, std::abs(r_trunc),
                        n == 1e12 ? " (full must beat truncated)" : ""));
    }
  }
  return all;
}

} // namespace detail

/// b_i recursion against the bandwidth-equation residual.
inline CriterionResult recursion_bias()
{
  return detail::timed(1, "b_i recursion and residual cancellation", 1.0, [](auto& out) {
    return detail::check_recursion({{0.4, 1.0, 1.0, 0}, {0.6, 0.5, 1.0, 1}, {0.75, 1.0, 0.5, 2}},
                                   false, out);
  });
}

/// Mirrored d_i recursion.
inline CriterionResult recursion_variance()
{
  return detail::timed(2, "d_i mirrored recursion and residual cancellation", 1.0, [](auto& out) {
    return detail::check_recursion({{0.5, 1.0, 1.0, 0}, {0.7, 1.0, 1.0, 1}}, true, out);
  });
}

inline CriterionResult kernel_projection_equivalence()
{
  return detail::timed(3, "kernel/projection equivalence", 30.0, [](auto& out) {
    const auto signal = builtin_signal("gaussian", 1.0);
    const double L_m = 2.0;
    const double h = 1.0 / (std::numbers::pi * L_m);
    const auto xgrid = uniform_grid(-5.0, 5.0, 201);
    bool all = true;
    for (const auto& noise : {builtin_noise("identity"), builtin_noise("laplace", 1.0)}) {
      const auto draw = sample_pair(signal, noise, 2000, 20240611);
      const auto kern = kernel_deconv(draw.Y, {h}, noise, xgrid);
      const auto proj = projection_deconv(draw.Y, {L_m, 4096}, noise, xgrid);
      double sup = 0.0;
      for (std::size_t i = 0; i < xgrid.size(); ++i)
        sup = std::max(sup, std::abs(kern.values[i] - proj.values[i]));
      const bool ok = sup <= 1e-3;
      all = all && ok;
      out.push_back(detail::fmt("[%s] noise=%s sup|kernel-projection| on |x|<=5 = %.3e (tol 1e-3)",
                                detail::mark(ok).c_str(), noise.name.c_str(), sup));
    }
    return all;
  });
}

/// The forward grid transform of the kernel estimate, taken on the x grid
/// dual to the frequency grid (Δx Δt = π/N, 2N nodes), recovers
/// ecf/f_eps* on the cutoff nodes and 0 on out-of-band nodes.
inline CriterionResult fourier_identity()
{
  return detail::timed(4, "Fourier identity of the kernel estimate", 10.0, [](auto& out) {
    const auto signal = builtin_signal("gaussian", 1.0);
    const auto noise = builtin_noise("gaussian", 0.5);
    const double h = 0.5;
    const std::size_t N = 256;
    const FreqGrid grid(1.0 / h, N);
    const double dt = grid.spacing();
    const double dx = std::numbers::pi / (static_cast<double>(N) * dt);
    std::vector<double> xgrid(2 * N);
    for (std::size_t m = 0; m < 2 * N; ++m)
      xgrid[m] = (static_cast<double>(m) - static_cast<double>(N)) * dx;
    // In-band nodes are k = 0..N-1; the extension k = -N/2..3N/2-1 adds
    // out-of-band nodes on the same lattice.
    std::vector<double> tnodes;
    std::vector<long> index;
    for (long k = -static_cast<long>(N / 2); k < static_cast<long>(3 * N / 2); ++k) {
      tnodes.push_back((2.0 * static_cast<double>(k) - static_cast<double>(N - 1)) * 0.5 * dt);
      index.push_back(k);
    }
    bool all = true;
    for (std::uint64_t seed : {11u, 22u, 33u, 44u, 55u}) {
      const auto draw = sample_pair(signal, noise, 500, seed);
      const auto est = kernel_deconv(draw.Y, {h, N}, noise, xgrid);
      const auto fwd = forward_fourier_grid(xgrid, est.values, tnodes);
      double scale = 0.0, err_in = 0.0, err_out = 0.0;
      std::vector<Complex> expected(tnodes.size());
      for (std::size_t i = 0; i < tnodes.size(); ++i) {
        const long k = index[i];
        if (k < 0 || k >= static_cast<long>(N))
          continue;
        Complex e(0.0, 0.0);
        for (const double y : draw.Y)
          e += std::polar(1.0, tnodes[i] * y);
        expected[i] = e / static_cast<double>(draw.Y.size()) / noise.cf(tnodes[i]);
        scale = std::max(scale, std::abs(expected[i]));
      }
      for (std::size_t i = 0; i < tnodes.size(); ++i) {
        const long k = index[i];
        if (k < 0 || k >= static_cast<long>(N)) {
          err_out = std::max(err_out, std::abs(fwd[i]));
        } else {
          const Complex got = fwd[i] * dt / grid.weight(static_cast<std::size_t>(k));
          err_in = std::max(err_in, std::abs(got - expected[i]));
        }
      }
      const bool ok = err_in <= 1e-8 * scale && err_out <= 1e-8 * scale;
      all = all && ok;
      out.push_back(detail::fmt("[%s] seed=%llu in-band err=%.3e out-of-band=%.3e (tol 1e-8 x %.3g)",
                                detail::mark(ok).c_str(), static_cast<unsigned long long>(seed),
                                err_in, err_out, scale));
    }
    return all;
  });
}

struct RateExperiment
{
  RiskReport report;
  double target = 0.0;
};

inline ExperimentConfig ordinary_rate_config()
{
  ExperimentConfig cfg;
  cfg.signal = builtin_signal("laplace", 1.0);
  cfg.noise = builtin_noise("laplace", 1.0);
  cfg.bandwidth_rule = make_bandwidth_rule(problem_params(cfg.signal, cfg.noise), BandwidthKind::numeric);
  cfg.n_grid = {250, 500, 1000, 2000, 4000};
  cfg.reps = 100;
  cfg.seed = 5;
  return cfg;
}

inline ExperimentConfig equal_rate_config()
{
  ExperimentConfig cfg;
  cfg.signal = builtin_signal("gaussian", 1.0);
  cfg.noise = builtin_noise("gaussian", 1.0);
  cfg.bandwidth_rule = make_bandwidth_rule(problem_params(cfg.signal, cfg.noise), BandwidthKind::numeric);
  cfg.n_grid = {500, 1000, 2000, 4000, 8000};
  cfg.reps = 100;
  cfg.seed = 6;
  return cfg;
}

namespace detail {

inline bool check_rate(const ExperimentConfig& cfg, double tol, std::vector<std::string>& out)
{
  const auto rep = run_experiment(cfg);
  for (const auto& r : rep.rows)
    out.push_back(fmt("       n=%zu h=%.4f MISE=%.5e +- %.2e rate=%.4e", r.n, r.h_used, r.risk_mean,
                      r.risk_stderr, r.theoretical_rate));
  const double target = rep.expected_exponent;
  const bool ok = std::abs(rep.power_fit.slope - target) <= tol;
  out.push_back(fmt("[%s] fitted slope %.4f vs %.4f (tol %.2f), r^2=%.4f, regime %s", mark(ok).c_str(),
                    rep.power_fit.slope, target, tol, rep.power_fit.r_squared, rep.regime.c_str()));
  return ok;
}

} // namespace detail

inline CriterionResult ordinary_rate()
{
  return detail::timed(5, "ordinary-smooth MISE rate reproduction", 600.0, [](auto& out) {
    return detail::check_rate(ordinary_rate_config(), 0.15, out);
  });
}

inline CriterionResult equal_rate()
{
  return detail::timed(6, "supersmooth/supersmooth MISE rate reproduction", 900.0, [](auto& out) {
    return detail::check_rate(equal_rate_config(), 0.2, out);
  });
}

inline CriterionResult regime_partition()
{
  return detail::timed(7, "regime partition", 1.0, [](auto& out) {
    auto make = [](double r, double s) {
      ProblemParams p;
      p.signal = {1.0, r, 1.0, 1.0};
      p.noise = {s, 1.0, 1.0, 1.0, 1.0};
      return p;
    };
    // Each predicate is written independently of classify_regime.
    auto matches = [](Cell c, double r, double s) {
      switch (c) {
        case Cell::OrdOrd: return r == 0.0 && s == 0.0;
        case Cell::OrdSuper: return r == 0.0 && s > 0.0;
        case Cell::SuperOrd: return r > 0.0 && s == 0.0;
        case Cell::Equal: return r > 0.0 && r == s;
        case Cell::BiasDominant: return r > 0.0 && r < s;
        case Cell::VarianceDominant: return s > 0.0 && r > s;
      }
      return false;
    };
    const Cell cells[] = {Cell::OrdOrd, Cell::OrdSuper, Cell::SuperOrd,
                          Cell::Equal, Cell::BiasDominant, Cell::VarianceDominant};
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unif(0.0, 5.0);
    std::uniform_int_distribution<int> grid_pick(0, 100);
    int failures = 0;
    for (int i = 0; i < 10000; ++i) {
      double r, s;
      if (i % 2 == 0) {
        r = 5.0 - unif(rng); // (0, 5]
        s = 5.0 - unif(rng);
      } else {
        r = grid_pick(rng) * 0.05; // rational grid with zeros and ties
        s = grid_pick(rng) * 0.05;
      }
      const auto reg = classify_regime(make(r, s), false);
      int hits = 0;
      for (const Cell c : cells)
        hits += matches(c, r, s) ? 1 : 0;
      bool ok = hits == 1 && matches(reg.cell, r, s);
      if (reg.cell == Cell::BiasDominant || reg.cell == Cell::VarianceDominant) {
        const double ratio = reg.lambda_or_mu;
        const double k = reg.k;
        ok = ok && (k / (k + 1.0) < ratio + 1e-12) && (ratio <= (k + 1.0) / (k + 2.0) + 1e-12);
      }
      failures += ok ? 0 : 1;
    }
    out.push_back(detail::fmt("[%s] 10000 (r, s) pairs, %d misclassified", detail::mark(failures == 0).c_str(),
                              failures));
    bool all = failures == 0;
    const double boundary[][3] = {{1.0, 2.0, 0}, {2.0, 3.0, 1}, {3.0, 4.0, 2}};
    for (const auto& b : boundary) {
      const auto bias = classify_regime(make(b[0], b[1]), false);
      const auto var = classify_regime(make(b[1], b[0]), false);
      const auto above = classify_regime(make(b[0] + 1e-9, b[1]), false);
      const bool ok = bias.k == static_cast<int>(b[2]) && var.k == static_cast<int>(b[2]) &&
                      above.k == static_cast<int>(b[2]) + 1;
      all = all && ok;
      out.push_back(detail::fmt("[%s] lambda=mu=%.0f/%.0f -> k=%d (variance side k=%d, just above k=%d)",
                                detail::mark(ok).c_str(), b[0], b[1], bias.k, var.k, above.k));
    }
    return all;
  });
}

inline CriterionResult estimator_sanity()
{
  return detail::timed(8, "estimator sanity invariants", 60.0, [](auto& out) {
    const std::vector<NoiseModel> noises = {builtin_noise("identity"), builtin_noise("gaussian", 0.5),
                                            builtin_noise("laplace", 0.5), builtin_noise("cauchy", 0.5)};
    const std::vector<SignalModel> signals = {builtin_signal("gaussian", 1.0), builtin_signal("laplace", 1.0),
                                              builtin_signal("gaussian_mixture", 1.0)};
    const double h = 0.4;
    const double c = 1.7;
    const auto wide = uniform_grid(-60.0, 60.0, 4096);
    const auto local = uniform_grid(-8.0, 8.0, 257);
    std::vector<double> shifted(local.size());
    for (std::size_t i = 0; i < local.size(); ++i)
      shifted[i] = local[i] + c;
    bool all = true;
    std::uint64_t seed = 800;
    for (const auto& noise : noises) {
      for (const auto& signal : signals) {
        const auto Y = sample_pair(signal, noise, 500, ++seed).Y;
        const auto est = kernel_deconv(Y, {h}, noise, wide);
        const double mass = estimate_mass(est);

        std::vector<double> Yc(Y);
        for (auto& y : Yc)
          y += c;
        const auto base = kernel_deconv(Y, {h}, noise, local);
        const auto moved = kernel_deconv(Yc, {h}, noise, shifted);
        double shift_err = 0.0;
        for (std::size_t i = 0; i < local.size(); ++i)
          shift_err = std::max(shift_err, std::abs(base.values[i] - moved.values[i]));

        const std::span<const double> A(Y.data(), 200), B(Y.data() + 200, 300);
        const auto est_a = kernel_deconv(A, {h}, noise, local);
        const auto est_b = kernel_deconv(B, {h}, noise, local);
        double lin_err = 0.0;
        for (std::size_t i = 0; i < local.size(); ++i)
          lin_err = std::max(lin_err, std::abs(base.values[i] - (200.0 * est_a.values[i] + 300.0 * est_b.values[i]) / 500.0));

        const double imag = std::max({est.imag_residue, base.imag_residue, moved.imag_residue});
        const bool ok = mass >= 0.98 && mass <= 1.02 && imag <= 1e-8 && shift_err <= 1e-8 && lin_err <= 1e-10;
        all = all && ok;
        out.push_back(detail::fmt("[%s] %-9s x %-16s mass=%.5f imag=%.1e shift=%.1e linear=%.1e",
                                  detail::mark(ok).c_str(), noise.name.c_str(), signal.name.c_str(), mass,
                                  imag, shift_err, lin_err));
      }
    }
    // Projection estimator: linearity and imaginary residue.
    for (const auto& noise : noises) {
      const auto Y = sample_pair(signals[0], noise, 500, ++seed).Y;
      const ProjectionConfig pc{1.0 / (std::numbers::pi * h), 200};
      const auto whole = projection_deconv(Y, pc, noise, local);
      const std::span<const double> A(Y.data(), 200), B(Y.data() + 200, 300);
      const auto pa = projection_deconv(A, pc, noise, local);
      const auto pb = projection_deconv(B, pc, noise, local);
      double lin_err = 0.0;
      for (std::size_t i = 0; i < local.size(); ++i)
        lin_err = std::max(lin_err, std::abs(whole.values[i] - (200.0 * pa.values[i] + 300.0 * pb.values[i]) / 500.0));
      const bool ok = lin_err <= 1e-10 && whole.imag_residue <= 1e-8;
      all = all && ok;
      out.push_back(detail::fmt("[%s] projection %-9s imag=%.1e linear=%.1e", detail::mark(ok).c_str(),
                                noise.name.c_str(), whole.imag_residue, lin_err));
    }
    return all;
  });
}

/// Equal-regime parameter sets used by the coherence criterion.
inline std::vector<ProblemParams> equal_acceptance_sets()
{
  ProblemParams mise;
  mise.signal = {0.0, 2.0, 0.5, 1.0};
  mise.noise = {2.0, 0.5, 0.0, 1.0, 1.0};
  ProblemParams mse = mise;
  mse.risk = RiskKind::mse;
  return {mise, mse};
}

inline CriterionResult bandwidth_coherence()
{
  return detail::timed(9, "numeric/asymptotic bandwidth coherence", 10.0, [](auto& out) {
    bool all = true;
    for (const auto& p : equal_acceptance_sets()) {
      const double n = 1e8;
      const double hn = optimal_bandwidth(n, p, BandwidthKind::numeric);
      const double ha = optimal_bandwidth(n, p, BandwidthKind::asymptotic);
      const bool ok = hn / ha >= 0.8 && hn / ha <= 1.25;
      all = all && ok;
      out.push_back(detail::fmt("[%s] %s n=1e8 h_numeric=%.6f h_asymptotic=%.6f ratio=%.4f",
                                detail::mark(ok).c_str(), to_string(p.risk).c_str(), hn, ha, hn / ha));
    }
    // Exhaustive scan: 1e5 log-spaced h over [1e-3, 10].
    ProblemParams ordinary;
    ordinary.signal = {1.49, 0.0, 0.0, 1.0};
    ordinary.noise = {0.0, 0.0, 2.0, 1.0, 1.0};
    auto sets = equal_acceptance_sets();
    sets.push_back(ordinary);
    for (const auto& p : sets) {
      for (const double n : {1e3, 1e5, 1e8}) {
        const double hn = optimal_bandwidth(n, p, BandwidthKind::numeric);
        double best_h = 0.0, best = std::numeric_limits<double>::infinity();
        constexpr int kScan = 100000;
        for (int i = 0; i < kScan; ++i) {
          const double h = std::exp(std::log(1e-3) + (std::log(10.0) - std::log(1e-3)) * i / (kScan - 1));
          const double v = log_risk_bound(h, n, p);
          if (v < best) {
            best = v;
            best_h = h;
          }
        }
        const bool ok = std::abs(hn / best_h - 1.0) <= 0.01;
        all = all && ok;
        out.push_back(detail::fmt("[%s] %s %s n=%.0e numeric=%.6f scan=%.6f", detail::mark(ok).c_str(),
                                  to_string(classify_regime(p, false).cell).c_str(), to_string(p.risk).c_str(), n,
                                  hn, best_h));
      }
    }
    return all;
  });
}

struct Suite
{
  std::string name;
  std::vector<int> ids;
};

inline const std::vector<Suite>& suites()
{
  static const std::vector<Suite> all = {
    {"recursion", {1}},   {"mirrored", {2}},  {"equivalence", {3}}, {"fourier", {4}},
    {"ordinary-rate", {5}}, {"equal-rate", {6}}, {"partition", {7}},   {"sanity", {8}},
    {"coherence", {9}},   {"fast", {1, 2, 3, 4, 7, 8, 9}},           {"all", {1, 2, 3, 4, 5, 6, 7, 8, 9}},
  };
  return all;
}

inline CriterionResult run_criterion(int id)
{
  switch (id) {
    case 1: return recursion_bias();
    case 2: return recursion_variance();
    case 3: return kernel_projection_equivalence();
    case 4: return fourier_identity();
    case 5: return ordinary_rate();
    case 6: return equal_rate();
    case 7: return regime_partition();
    case 8: return estimator_sanity();
    case 9: return bandwidth_coherence();
  }
  throw std::invalid_argument("unknown acceptance criterion " + std::to_string(id));
}

inline std::vector<int> suite_ids(const std::string& name)
{
  for (const auto& s : suites())
    if (s.name == name)
      return s.ids;
  if (!name.empty() && std::all_of(name.begin(), name.end(), [](char ch) { return ch >= '1' && ch <= '9'; }) &&
      name.size() == 1)
    return {name[0] - '0'};
  throw std::invalid_argument("unknown acceptance suite: " + name);
}

inline void print_result(std::ostream& os, const CriterionResult& r)
{
  os << detail::fmt("%s  criterion %d: %s (%.2fs, limit %.0fs)\n", r.pass ? "PASS" : "FAIL", r.id,
                    r.name.c_str(), r.seconds, r.limit_seconds);
  for (const auto& d : r.details)
    os << "      " << d << '\n';
}

} // namespace deconv::acceptance
