#pragma once

// JSON model descriptors and the CSV/JSON artifacts written by the CLI.

#include "deconv/estimators.hpp"
#include "deconv/model_catalog.hpp"
#include "deconv/rates.hpp"
#include "deconv/risk_lab.hpp"
#include "deconv/spectral.hpp"

#include <json.hpp>

#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace deconv {

using json = nlohmann::json;

/// 17 significant digits, round-trippable.
inline std::string format_real(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct ModelSpec
{
  std::string name;
  double scale = 1.0;
};

/// Parses `name` or `name:scale`.
inline ModelSpec parse_model_spec(const std::string& text)
{
  ModelSpec spec;
  const auto colon = text.find(':');
  spec.name = text.substr(0, colon);
  if (colon != std::string::npos) {
    const std::string tail = text.substr(colon + 1);
    std::size_t used = 0;
    try {
      spec.scale = std::stod(tail, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad model scale in '" + text + "'");
    }
    if (used != tail.size())
      throw std::invalid_argument("bad model scale in '" + text + "'");
  }
  if (spec.name.empty())
    throw std::invalid_argument("empty model name in '" + text + "'");
  return spec;
}

inline json to_json(const NoiseModel& m)
{
  const auto& p = m.smoothness;
  return {{"name", m.name},
          {"scale", m.scale},
          {"smoothness", {{"gamma", p.gamma}, {"s", p.s}, {"b", p.b}, {"k0", p.k0}, {"k1", p.k1}}}};
}

inline json to_json(const SignalModel& m)
{
  const auto& p = m.smoothness;
  return {{"name", m.name},
          {"scale", m.scale},
          {"smoothness", {{"delta", p.delta}, {"r", p.r}, {"a", p.a}, {"L", p.L}}}};
}

/// Builds the catalog model named in the descriptor; smoothness fields that
/// are present override the catalog values.
inline NoiseModel noise_from_json(const json& j)
{
  NoiseModel m = builtin_noise(j.at("name").get<std::string>(), j.value("scale", 1.0));
  if (j.contains("smoothness")) {
    const auto& s = j.at("smoothness");
    auto& p = m.smoothness;
    p.gamma = s.value("gamma", p.gamma);
    p.s = s.value("s", p.s);
    p.b = s.value("b", p.b);
    p.k0 = s.value("k0", p.k0);
    p.k1 = s.value("k1", p.k1);
  }
  return m;
}

inline SignalModel signal_from_json(const json& j)
{
  SignalModel m = builtin_signal(j.at("name").get<std::string>(), j.value("scale", 1.0));
  if (j.contains("smoothness")) {
    const auto& s = j.at("smoothness");
    auto& p = m.smoothness;
    p.delta = s.value("delta", p.delta);
    p.r = s.value("r", p.r);
    p.a = s.value("a", p.a);
    p.L = s.value("L", p.L);
  }
  return m;
}

inline void write_estimate_csv(std::ostream& os, const DensityEstimate& est)
{
  os << "x,ghat\n";
  for (std::size_t i = 0; i < est.x.size(); ++i)
    os << format_real(est.x[i]) << ',' << format_real(est.values[i]) << '\n';
}

inline void write_spectrum_csv(std::ostream& os, const SpectrumValues& spec)
{
  os << "t,re,im\n";
  for (std::size_t k = 0; k < spec.values.size(); ++k)
    os << format_real(spec.grid.node(k)) << ',' << format_real(spec.values[k].real()) << ','
       << format_real(spec.values[k].imag()) << '\n';
}

/// Two-column plot data: x and y separated by a space, no header.
inline void write_plot_data(std::ostream& os, std::span<const double> xs, std::span<const double> ys)
{
  for (std::size_t i = 0; i < xs.size(); ++i)
    os << format_real(xs[i]) << ' ' << format_real(ys[i]) << '\n';
}

inline void write_risk_csv(std::ostream& os, const RiskReport& rep)
{
  os << "n,h_used,risk_mean,risk_stderr,theoretical_rate\n";
  for (const auto& r : rep.rows)
    os << r.n << ',' << format_real(r.h_used) << ',' << format_real(r.risk_mean) << ','
       << format_real(r.risk_stderr) << ',' << format_real(r.theoretical_rate) << '\n';
}

inline json risk_summary_json(const RiskReport& rep)
{
  return {{"slope", rep.fit.slope},
          {"intercept", rep.fit.intercept},
          {"r_squared", rep.fit.r_squared},
          {"regime", rep.regime},
          {"power_slope", rep.power_fit.slope},
          {"power_r_squared", rep.power_fit.r_squared},
          {"expected_power_slope", rep.expected_exponent}};
}

struct RateRow
{
  double n = 0.0;
  double h_numeric = 0.0;
  double h_asymptotic = 0.0;
  double rate_mise = 0.0;
  double rate_mse = 0.0;
  std::string regime;
  int k = 0;
  std::vector<double> coeffs;
};

/// One tabulation row. Bandwidths use `p.risk`; both rates are reported.
inline RateRow make_rate_row(double n, const ProblemParams& p)
{
  RateRow row;
  row.n = n;
  row.h_numeric = optimal_bandwidth(n, p, BandwidthKind::numeric);
  const auto reg = classify_regime(p);
  row.h_asymptotic = asymptotic_bandwidth(n, p, reg);
  ProblemParams q = p;
  q.risk = RiskKind::mise;
  row.rate_mise = theoretical_rate(n, q);
  q.risk = RiskKind::mse;
  row.rate_mse = theoretical_rate(n, q);
  row.regime = to_string(reg.cell);
  row.k = reg.k;
  row.coeffs = reg.coeffs;
  return row;
}

inline void write_rate_csv(std::ostream& os, const std::vector<RateRow>& rows)
{
  std::size_t n_coeffs = 0;
  for (const auto& r : rows)
    n_coeffs = std::max(n_coeffs, r.coeffs.size());
  os << "n,h_numeric,h_asymptotic,rate_mise,rate_mse,regime,k";
  for (std::size_t i = 0; i < n_coeffs; ++i)
    os << ",coeff_" << i;
  os << '\n';
  for (const auto& r : rows) {
    os << format_real(r.n) << ',' << format_real(r.h_numeric) << ',' << format_real(r.h_asymptotic)
       << ',' << format_real(r.rate_mise) << ',' << format_real(r.rate_mse) << ',' << r.regime << ','
       << r.k;
    for (std::size_t i = 0; i < n_coeffs; ++i)
      os << ',' << (i < r.coeffs.size() ? format_real(r.coeffs[i]) : std::string());
    os << '\n';
  }
}

} // namespace deconv
