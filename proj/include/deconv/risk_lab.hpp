#pragma once

// Monte Carlo MISE / MSE over n-sweeps and log-log rate regression.

#include "deconv/estimators.hpp"
#include "deconv/model_catalog.hpp"
#include "deconv/rates.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace deconv {

/// Trapezoid ∫ (ĝ - g)² over the estimate's own grid.
inline double ise(const DensityEstimate& est, const SignalModel& truth)
{
  if (est.x.size() < 2 || est.x.size() != est.values.size())
    throw std::invalid_argument("ise: malformed estimate");
  if (est.x.front() > truth.support_hint.lo || est.x.back() < truth.support_hint.hi)
    throw std::invalid_argument("ise: estimate grid does not cover the signal support");
  double total = 0.0;
  double prev = est.values[0] - truth.density(est.x[0]);
  prev *= prev;
  for (std::size_t i = 1; i < est.x.size(); ++i) {
    double cur = est.values[i] - truth.density(est.x[i]);
    cur *= cur;
    total += 0.5 * (prev + cur) * (est.x[i] - est.x[i - 1]);
    prev = cur;
  }
  return total;
}

/// Trapezoid ∫ ĝ over the estimate grid.
inline double estimate_mass(const DensityEstimate& est)
{
  double total = 0.0;
  for (std::size_t i = 1; i < est.x.size(); ++i)
    total += 0.5 * (est.values[i] + est.values[i - 1]) * (est.x[i] - est.x[i - 1]);
  return total;
}

struct LogLogFit
{
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares of ln y on ln x.
inline LogLogFit fit_loglog(std::span<const double> xs, std::span<const double> ys)
{
  if (xs.size() != ys.size() || xs.size() < 3)
    throw std::invalid_argument("fit_loglog: need at least 3 paired points");
  const std::size_t m = xs.size();
  std::vector<double> lx(m), ly(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
      throw std::invalid_argument("fit_loglog: entries must be positive");
    lx[i] = std::log(xs[i]);
    ly[i] = std::log(ys[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx == 0.0)
    throw std::invalid_argument("fit_loglog: x values are all equal");
  LogLogFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double e = ly[i] - (fit.intercept + fit.slope * lx[i]);
    ss_res += e * e;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

/// Worker count: `requested` if positive, else hardware concurrency capped by
/// the DECONV_THREADS environment variable.
inline unsigned worker_count(unsigned requested = 0)
{
  if (requested > 0)
    return requested;
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("DECONV_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap > 0)
      n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return n;
}

/// Seed of replication `rep` at sample size `n`; independent of scheduling.
inline std::uint64_t replication_seed(std::uint64_t seed, std::size_t n, std::size_t rep)
{
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(rep)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

struct XGridSpec
{
  double lo = 0.0;
  double hi = 0.0;
  std::size_t points = 1024;
};

struct ExperimentConfig
{
  SignalModel signal;
  NoiseModel noise;
  EstimatorKind estimator = EstimatorKind::kernel;
  BandwidthRule bandwidth_rule;
  std::vector<std::size_t> n_grid;
  std::size_t reps = 2;
  std::uint64_t seed = 0;
  RiskKind risk = RiskKind::mise;
  double mse_point = 0.0;
  //! Defaults to the signal support widened by 4 h(n_grid.front()).
  std::optional<XGridSpec> xgrid;
  //! Frequency nodes per estimate; 0 selects the default rule.
  std::size_t n_points = 0;
  //! Projection truncation; 0 selects default_truncation(n).
  std::size_t K_n = 0;
  unsigned threads = 0;
};

struct RiskRow
{
  std::size_t n = 0;
  double h_used = 0.0;
  double risk_mean = 0.0;
  double risk_stderr = 0.0;
  double theoretical_rate = 0.0;
};

struct RiskReport
{
  std::vector<RiskRow> rows;
  //! ln(risk_mean) on ln(theoretical_rate).
  LogLogFit fit;
  //! ln(risk_mean / log_factor) on ln(n): the power part of the rate after
  //! dividing out its logarithmic factor.
  LogLogFit power_fit;
  double expected_exponent = 0.0;
  std::string regime;
};

namespace detail {

inline double single_risk(const ExperimentConfig& cfg, std::span<const double> Y, double h,
                          std::span<const double> xgrid)
{
  if (cfg.risk == RiskKind::mse) {
    const double x0[] = {cfg.mse_point};
    DensityEstimate est;
    if (cfg.estimator == EstimatorKind::kernel) {
      est = kernel_deconv(Y, {h, cfg.n_points}, cfg.noise, x0);
    } else {
      const std::size_t K = cfg.K_n ? cfg.K_n : default_truncation(Y.size());
      est = projection_deconv(Y, {1.0 / (std::numbers::pi * h), K, cfg.n_points}, cfg.noise, x0);
    }
    const double e = est.values[0] - cfg.signal.density(cfg.mse_point);
    return e * e;
  }
  DensityEstimate est;
  if (cfg.estimator == EstimatorKind::kernel) {
    est = kernel_deconv(Y, {h, cfg.n_points}, cfg.noise, xgrid);
  } else {
    const std::size_t K = cfg.K_n ? cfg.K_n : default_truncation(Y.size());
    est = projection_deconv(Y, {1.0 / (std::numbers::pi * h), K, cfg.n_points}, cfg.noise, xgrid);
  }
  return ise(est, cfg.signal);
}

} // namespace detail

/// Runs reps replications per n. Replications may run concurrently; the
/// report depends only on the config.
inline RiskReport run_experiment(const ExperimentConfig& cfg)
{
  if (cfg.reps < 2)
    throw std::invalid_argument("run_experiment: reps must be >= 2");
  if (cfg.n_grid.empty())
    throw std::invalid_argument("run_experiment: empty n_grid");
  for (std::size_t i = 1; i < cfg.n_grid.size(); ++i)
    if (cfg.n_grid[i] <= cfg.n_grid[i - 1])
      throw std::invalid_argument("run_experiment: n_grid must be strictly increasing");
  if (!cfg.bandwidth_rule.h_star)
    throw std::invalid_argument("run_experiment: missing bandwidth rule");

  const std::size_t m = cfg.n_grid.size();
  std::vector<double> hs(m);
  for (std::size_t i = 0; i < m; ++i) {
    hs[i] = cfg.bandwidth_rule.h_star(static_cast<double>(cfg.n_grid[i]));
    if (!(hs[i] > 0.0) || !std::isfinite(hs[i]))
      throw std::invalid_argument("run_experiment: bandwidth rule returned a non-positive h");
    // Both estimators cut off at 1/h (projection: πL_m = 1/h).
    require_overflow_guard(cfg.noise, 1.0 / hs[i], hs[i]);
  }

  XGridSpec gs;
  if (cfg.xgrid) {
    gs = *cfg.xgrid;
  } else {
    const double spill = 4.0 * hs.front();
    gs = {cfg.signal.support_hint.lo - spill, cfg.signal.support_hint.hi + spill, 1024};
  }
  const auto xgrid = uniform_grid(gs.lo, gs.hi, gs.points);

  const std::size_t total = m * cfg.reps;
  std::vector<double> risks(total, 0.0);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t job = next.fetch_add(1);
      if (job >= total)
        return;
      const std::size_t i = job / cfg.reps, rep = job % cfg.reps;
      try {
        const auto seed = replication_seed(cfg.seed, cfg.n_grid[i], rep);
        const auto draw = sample_pair(cfg.signal, cfg.noise, cfg.n_grid[i], seed);
        risks[job] = detail::single_risk(cfg, draw.Y, hs[i], xgrid);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure)
          failure = std::current_exception();
        next.store(total);
        return;
      }
    }
  };
  const unsigned n_workers = std::min<unsigned>(worker_count(cfg.threads), static_cast<unsigned>(total));
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 1; w < n_workers; ++w)
      pool.emplace_back(worker);
    worker();
  }
  if (failure)
    std::rethrow_exception(failure);

  const ProblemParams params = problem_params(cfg.signal, cfg.noise, cfg.risk);
  RiskReport report;
  report.regime = to_string(classify_regime(params, false).cell);
  report.expected_exponent = rate_exponent(params);
  std::vector<double> ns, means, rates, powered;
  for (std::size_t i = 0; i < m; ++i) {
    double mean = 0.0;
    for (std::size_t r = 0; r < cfg.reps; ++r)
      mean += risks[i * cfg.reps + r];
    mean /= static_cast<double>(cfg.reps);
    double var = 0.0;
    for (std::size_t r = 0; r < cfg.reps; ++r) {
      const double d = risks[i * cfg.reps + r] - mean;
      var += d * d;
    }
    var /= static_cast<double>(cfg.reps - 1);
    const double n = static_cast<double>(cfg.n_grid[i]);
    RiskRow row{cfg.n_grid[i], hs[i], mean, std::sqrt(var / static_cast<double>(cfg.reps)),
                n >= 3.0 ? theoretical_rate(n, params) : std::numeric_limits<double>::quiet_NaN()};
    report.rows.push_back(row);
    ns.push_back(n);
    means.push_back(mean);
    rates.push_back(row.theoretical_rate);
    powered.push_back(n >= 3.0 ? mean / rate_shape(n, params).log_factor : mean);
  }
  if (m >= 3) {
    report.fit = fit_loglog(rates, means);
    report.power_fit = fit_loglog(ns, powered);
  }
  return report;
}

} // namespace deconv
