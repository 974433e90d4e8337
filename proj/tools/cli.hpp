#pragma once

// deconv command-line driver. run_cli() is the whole program; main() only
// forwards to it so tests can drive it in-process.

#include "deconv/acceptance.hpp"
#include "deconv/deconv.hpp"
#include "deconv/serialization.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace deconv::cli {

enum ExitCode : int
{
  kOk = 0,
  kAcceptanceFailure = 1,
  kUsage = 2,
  kInfeasible = 3,
};

/// Malformed input or an invalid flag combination (exit 2).
struct UsageError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

namespace detail {

inline json load_config(const std::string& path)
{
  if (path.empty())
    return json::object();
  std::ifstream in(path);
  if (!in)
    throw UsageError("cannot open config file " + path);
  try {
    json doc = json::parse(in);
    if (!doc.is_object())
      throw UsageError("config file must hold a JSON object");
    return doc;
  } catch (const json::exception& e) {
    throw UsageError("config file " + path + ": " + e.what());
  }
}

/// Looks a setting up in precedence order: inline flag, config file, default.
struct Settings
{
  const json& config;

  bool from_flag(const CLI::Option* opt) const { return opt && opt->count() > 0; }

  template <typename T>
  T get(const CLI::Option* opt, const T& flag_value, const std::string& key, const T& fallback) const
  {
    if (from_flag(opt))
      return flag_value;
    if (config.contains(key)) {
      try {
        const auto& v = config.at(key);
        if constexpr (std::is_same_v<T, std::string>) {
          if (v.is_number())
            return format_real(v.get<double>());
        }
        return v.get<T>();
      } catch (const json::exception& e) {
        throw UsageError("config field '" + key + "': " + e.what());
      }
    }
    return fallback;
  }

  bool has(const CLI::Option* opt, const std::string& key) const
  {
    return from_flag(opt) || config.contains(key);
  }
};

inline double parse_real(const std::string& text, const std::string& what)
{
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw UsageError("bad " + what + ": '" + text + "'");
  }
  if (used != text.size() || !std::isfinite(v))
    throw UsageError("bad " + what + ": '" + text + "'");
  return v;
}

/// Sample sizes accept scientific notation ("1e5").
inline std::vector<double> parse_n_list(const std::vector<std::string>& items)
{
  std::vector<double> out;
  for (const auto& item : items) {
    std::stringstream ss(item);
    std::string piece;
    while (std::getline(ss, piece, ',')) {
      if (piece.empty())
        continue;
      const double n = parse_real(piece, "sample size");
      if (!(n >= 1.0) || n != std::floor(n))
        throw UsageError("sample size must be a positive integer: '" + piece + "'");
      out.push_back(n);
    }
  }
  if (out.empty())
    throw UsageError("no sample sizes given");
  return out;
}

inline std::vector<std::string> n_items_from(const json& v)
{
  std::vector<std::string> items;
  auto one = [&](const json& e) {
    if (e.is_string())
      items.push_back(e.get<std::string>());
    else if (e.is_number())
      items.push_back(format_real(e.get<double>()));
    else
      throw UsageError("config field 'n' must hold numbers or strings");
  };
  if (v.is_array())
    for (const auto& e : v)
      one(e);
  else
    one(v);
  return items;
}

inline NoiseModel noise_setting(const Settings& s, const CLI::Option* opt, const std::string& flag)
{
  if (s.from_flag(opt)) {
    const auto spec = parse_model_spec(flag);
    return builtin_noise(spec.name, spec.scale);
  }
  if (s.config.contains("noise")) {
    const auto& j = s.config.at("noise");
    if (j.is_string()) {
      const auto spec = parse_model_spec(j.get<std::string>());
      return builtin_noise(spec.name, spec.scale);
    }
    return noise_from_json(j);
  }
  throw UsageError("a noise model is required (--noise name[:scale])");
}

inline std::optional<SignalModel> signal_setting(const Settings& s, const CLI::Option* opt,
                                                 const std::string& flag)
{
  if (s.from_flag(opt)) {
    const auto spec = parse_model_spec(flag);
    return builtin_signal(spec.name, spec.scale);
  }
  if (s.config.contains("signal")) {
    const auto& j = s.config.at("signal");
    if (j.is_string()) {
      const auto spec = parse_model_spec(j.get<std::string>());
      return builtin_signal(spec.name, spec.scale);
    }
    return signal_from_json(j);
  }
  return std::nullopt;
}

inline RiskKind parse_risk(const std::string& v)
{
  if (v == "mise")
    return RiskKind::mise;
  if (v == "mse")
    return RiskKind::mse;
  throw UsageError("risk must be mise or mse");
}

inline EstimatorKind parse_estimator(const std::string& v)
{
  if (v == "kernel")
    return EstimatorKind::kernel;
  if (v == "projection")
    return EstimatorKind::projection;
  throw UsageError("estimator must be kernel or projection");
}

inline std::vector<double> read_sample(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw UsageError("cannot open input file " + path);
  std::vector<double> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos)
      continue;
    const auto last = line.find_last_not_of(" \t\r");
    const std::string item = line.substr(first, last - first + 1);
    try {
      out.push_back(parse_real(item, "value"));
    } catch (const UsageError&) {
      throw UsageError(path + ":" + std::to_string(line_no) + ": not a real number: '" + item + "'");
    }
  }
  if (out.empty())
    throw UsageError("input file " + path + " holds no values");
  return out;
}

/// Opens --output or falls back to `fallback`.
class Sink
{
public:
  Sink(const std::string& path, std::ostream& fallback)
    : os_(&fallback)
  {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_)
        throw UsageError("cannot write " + path);
      os_ = file_.get();
    }
  }
  std::ostream& stream() { return *os_; }

private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* os_;
};

inline void write_file(const std::string& path, const std::string& text)
{
  std::ofstream out(path);
  if (!out)
    throw UsageError("cannot write " + path);
  out << text;
}

/// Smoothness flags shared by rate and bandwidth.
struct ParamFlags
{
  double delta = 0, r = 0, a = 0, gamma = 0, b = 0, s = 0;
  CLI::Option *o_delta = nullptr, *o_r = nullptr, *o_a = nullptr, *o_gamma = nullptr, *o_b = nullptr,
              *o_s = nullptr;
  std::string signal, noise;
  CLI::Option *o_signal = nullptr, *o_noise = nullptr;
  std::string risk = "mise";
  CLI::Option* o_risk = nullptr;
  std::vector<std::string> n;
  CLI::Option* o_n = nullptr;

  void attach(CLI::App* app)
  {
    o_delta = app->add_option("--delta", delta, "signal polynomial exponent delta");
    o_r = app->add_option("--r", r, "signal exponential exponent r");
    o_a = app->add_option("--a", a, "signal exponential constant a");
    o_gamma = app->add_option("--gamma", gamma, "noise polynomial exponent gamma");
    o_b = app->add_option("--b", b, "noise exponential constant b");
    o_s = app->add_option("--s", s, "noise exponential exponent s");
    o_signal = app->add_option("--signal", signal, "take signal smoothness from a catalog model name[:scale]");
    o_noise = app->add_option("--noise", noise, "take noise smoothness from a catalog model name[:scale]");
    o_risk = app->add_option("--risk", risk, "mise or mse");
    o_n = app->add_option("--n", n, "sample sizes (repeatable or comma separated, 1e5 accepted)");
  }

  ProblemParams resolve(const Settings& st) const
  {
    ProblemParams p;
    if (auto sig = signal_setting(st, o_signal, signal))
      p.signal = sig->smoothness;
    if (st.from_flag(o_noise) || st.config.contains("noise"))
      p.noise = noise_setting(st, o_noise, noise).smoothness;
    p.signal.delta = st.get(o_delta, delta, "delta", p.signal.delta);
    p.signal.r = st.get(o_r, r, "r", p.signal.r);
    p.signal.a = st.get(o_a, a, "a", p.signal.a);
    p.noise.gamma = st.get(o_gamma, gamma, "gamma", p.noise.gamma);
    p.noise.b = st.get(o_b, b, "b", p.noise.b);
    p.noise.s = st.get(o_s, s, "s", p.noise.s);
    p.risk = parse_risk(st.get(o_risk, risk, "risk", std::string("mise")));
    try {
      validate(p.signal);
      if (p.noise.s < 0.0 || p.noise.b < 0.0 || p.noise.gamma < 0.0)
        throw std::invalid_argument("noise smoothness: s, b and gamma must be >= 0");
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    return p;
  }

  std::vector<double> sizes(const Settings& st) const
  {
    std::vector<std::string> items = n;
    if (!st.from_flag(o_n)) {
      if (!st.config.contains("n"))
        throw UsageError("--n is required");
      items = n_items_from(st.config.at("n"));
    }
    const auto out = parse_n_list(items);
    for (const double v : out)
      if (v < 3.0)
        throw UsageError("sample sizes must be >= 3 for rate tabulation");
    return out;
  }
};

inline json rate_row_json(const RateRow& r)
{
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  return {{"n", r.n},
          {"h_numeric", num(r.h_numeric)},
          {"h_asymptotic", num(r.h_asymptotic)},
          {"rate_mise", num(r.rate_mise)},
          {"rate_mse", num(r.rate_mse)},
          {"regime", r.regime},
          {"k", r.k},
          {"coeffs", r.coeffs}};
}

} // namespace detail

/// Runs the CLI with the given arguments; returns the process exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
  CLI::App app{"Density deconvolution: estimators, bandwidth theory and Monte Carlo rate checks", "deconv"};
  app.require_subcommand(1, 1);
  app.set_help_flag("--help", "print help and exit"); // -h would clash with --h

  std::string config_path, output_path, format = "csv";
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config; inline flags take precedence")->check(CLI::ExistingFile);
    sub->add_option("-o,--output", output_path, "output path (default stdout)");
    sub->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  };

  // models
  auto* models = app.add_subcommand("models", "list catalog models and their smoothness parameters");
  double models_scale = 1.0;
  models->add_option("--scale", models_scale, "scale used for every listed model");
  add_common(models);

  // estimate
  auto* estimate = app.add_subcommand("estimate", "single deconvolution estimate");
  add_common(estimate);
  std::string est_input, est_signal, est_noise, est_h = "auto", est_kind = "numeric", est_estimator = "kernel";
  std::string est_sidecar, est_spectrum, est_plot;
  std::size_t est_n = 1000, est_points = 1024, est_K = 0, est_freq_points = 0;
  std::uint64_t est_seed = 0;
  double est_L = 0.0, est_xmin = 0.0, est_xmax = 0.0;
  bool est_simulate = false, est_clip = false;
  auto* o_input = estimate->add_option("--input", est_input, "sample file, one real per line");
  auto* o_simulate = estimate->add_flag("--simulate", est_simulate, "draw Y from --signal and --noise");
  auto* o_est_signal = estimate->add_option("--signal", est_signal, "signal model name[:scale]");
  auto* o_est_noise = estimate->add_option("--noise", est_noise, "noise model name[:scale]");
  auto* o_est_n = estimate->add_option("--n", est_n, "sample size for --simulate");
  auto* o_est_seed = estimate->add_option("--seed", est_seed, "seed for --simulate");
  auto* o_est_h = estimate->add_option("--h", est_h, "bandwidth value or 'auto'");
  auto* o_est_kind = estimate->add_option("--kind", est_kind, "bandwidth rule for --h auto: numeric or asymptotic");
  auto* o_est_estimator = estimate->add_option("--estimator", est_estimator, "kernel or projection");
  auto* o_est_L = estimate->add_option("--L", est_L, "projection resolution L_m (default 1/(pi h))");
  auto* o_est_K = estimate->add_option("--K", est_K, "projection truncation K_n (default n)");
  auto* o_est_points = estimate->add_option("--points", est_points, "evaluation grid size");
  auto* o_est_freq = estimate->add_option("--freq-points", est_freq_points, "frequency nodes (power of two)");
  auto* o_est_xmin = estimate->add_option("--xmin", est_xmin, "evaluation grid lower end");
  auto* o_est_xmax = estimate->add_option("--xmax", est_xmax, "evaluation grid upper end");
  estimate->add_flag("--clip-nonnegative", est_clip, "clip negative density values to 0 after estimation");
  estimate->add_option("--sidecar", est_sidecar, "JSON sidecar path (default <output>.json)");
  estimate->add_option("--dump-spectrum", est_spectrum, "write the kernel spectrum as t,re,im CSV");
  estimate->add_option("--emit-plot-data", est_plot, "write x ghat two-column plot data");

  // bandwidth / rate
  auto* bandwidth = app.add_subcommand("bandwidth", "optimal bandwidth table");
  add_common(bandwidth);
  detail::ParamFlags bw_flags;
  bw_flags.attach(bandwidth);
  std::string bw_kind = "both";
  auto* o_bw_kind = bandwidth->add_option("--kind", bw_kind, "numeric, asymptotic or both");

  auto* rate = app.add_subcommand("rate", "theoretical rate table");
  add_common(rate);
  detail::ParamFlags rate_flags;
  rate_flags.attach(rate);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo risk experiment over an n grid");
  add_common(simulate);
  std::string sim_signal, sim_noise, sim_estimator = "kernel", sim_kind = "numeric", sim_risk = "mise";
  std::string sim_h, sim_summary, sim_plot;
  std::vector<std::string> sim_n;
  std::size_t sim_reps = 20, sim_points = 1024, sim_K = 0, sim_freq_points = 0;
  std::uint64_t sim_seed = 0;
  unsigned sim_threads = 0;
  double sim_x0 = 0.0, sim_xmin = 0.0, sim_xmax = 0.0;
  auto* o_sim_signal = simulate->add_option("--signal", sim_signal, "signal model name[:scale]");
  auto* o_sim_noise = simulate->add_option("--noise", sim_noise, "noise model name[:scale]");
  auto* o_sim_estimator = simulate->add_option("--estimator", sim_estimator, "kernel or projection");
  auto* o_sim_kind = simulate->add_option("--kind", sim_kind, "bandwidth rule: numeric or asymptotic");
  auto* o_sim_h = simulate->add_option("--h", sim_h, "fixed bandwidth for every n (overrides --kind)");
  auto* o_sim_n = simulate->add_option("--n", sim_n, "sample sizes (repeatable or comma separated)");
  auto* o_sim_reps = simulate->add_option("--reps", sim_reps, "replications per n");
  auto* o_sim_seed = simulate->add_option("--seed", sim_seed, "master seed");
  auto* o_sim_risk = simulate->add_option("--risk", sim_risk, "mise or mse");
  auto* o_sim_x0 = simulate->add_option("--x0", sim_x0, "evaluation point for mse");
  auto* o_sim_points = simulate->add_option("--points", sim_points, "ISE grid size");
  auto* o_sim_xmin = simulate->add_option("--xmin", sim_xmin, "ISE grid lower end");
  auto* o_sim_xmax = simulate->add_option("--xmax", sim_xmax, "ISE grid upper end");
  auto* o_sim_K = simulate->add_option("--K", sim_K, "projection truncation K_n");
  auto* o_sim_freq = simulate->add_option("--freq-points", sim_freq_points, "frequency nodes (power of two)");
  auto* o_sim_threads = simulate->add_option("--threads", sim_threads, "worker threads (0: automatic)");
  simulate->add_option("--summary", sim_summary, "JSON summary path (default <output>.summary.json)");
  simulate->add_option("--emit-plot-data", sim_plot, "write ln n, ln risk two-column plot data");

  // verify
  auto* verify = app.add_subcommand("verify", "run acceptance criteria");
  std::string suite = "fast";
  verify->add_option("--suite", suite, "recursion, mirrored, equivalence, fourier, ordinary-rate, equal-rate, "
                                       "partition, sanity, coherence, fast, all, or a criterion number");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    const json config = detail::load_config(config_path);
    const detail::Settings st{config};
    const std::string fmt = format;

    if (*models) {
      json doc = {{"noise", json::array()}, {"signal", json::array()}};
      for (const char* name : {"gaussian", "laplace", "cauchy", "identity"})
        doc["noise"].push_back(to_json(builtin_noise(name, models_scale)));
      for (const char* name : {"gaussian", "laplace", "cauchy", "gaussian_mixture"})
        doc["signal"].push_back(to_json(builtin_signal(name, models_scale)));
      detail::Sink sink(output_path, out);
      if (fmt == "json") {
        sink.stream() << doc.dump(2) << '\n';
      } else {
        sink.stream() << "kind,name,scale,delta,r,a,L,gamma,s,b,k0,k1\n";
        for (const auto& m : doc["signal"]) {
          const auto& p = m["smoothness"];
          sink.stream() << "signal," << m["name"].get<std::string>() << ',' << format_real(m["scale"]) << ','
                        << format_real(p["delta"]) << ',' << format_real(p["r"]) << ','
                        << format_real(p["a"]) << ',' << format_real(p["L"]) << ",,,,,\n";
        }
        for (const auto& m : doc["noise"]) {
          const auto& p = m["smoothness"];
          sink.stream() << "noise," << m["name"].get<std::string>() << ',' << format_real(m["scale"])
                        << ",,,,," << format_real(p["gamma"]) << ',' << format_real(p["s"]) << ','
                        << format_real(p["b"]) << ',' << format_real(p["k0"]) << ',' << format_real(p["k1"])
                        << '\n';
        }
      }
      return kOk;
    }

    if (*estimate) {
      const NoiseModel noise = detail::noise_setting(st, o_est_noise, est_noise);
      const auto signal = detail::signal_setting(st, o_est_signal, est_signal);
      const bool simulate_mode = st.get(o_simulate, est_simulate, "simulate", false);
      const std::string input = st.get(o_input, est_input, "input", std::string());
      if (simulate_mode == !input.empty())
        throw UsageError("give exactly one of --input and --simulate");
      const std::size_t n = st.get(o_est_n, est_n, "n", std::size_t{1000});
      const std::uint64_t seed = st.get(o_est_seed, est_seed, "seed", std::uint64_t{0});
      std::vector<double> Y;
      if (simulate_mode) {
        if (!signal)
          throw UsageError("--simulate needs --signal");
        if (n < 1)
          throw UsageError("--n must be >= 1");
        Y = sample_pair(*signal, noise, n, seed).Y;
      } else {
        Y = detail::read_sample(input);
      }

      const auto kind = detail::parse_estimator(st.get(o_est_estimator, est_estimator, "estimator", std::string("kernel")));
      const std::string h_text = st.get(o_est_h, est_h, "h", std::string("auto"));
      const bool have_L = st.has(o_est_L, "L");
      double h = 0.0;
      bool h_auto = false;
      std::string rule_kind;
      if (kind == EstimatorKind::projection && have_L && !st.has(o_est_h, "h")) {
        h = 1.0 / (std::numbers::pi * st.get(o_est_L, est_L, "L", 1.0));
      } else if (h_text == "auto") {
        if (!signal)
          throw UsageError("--h auto needs --signal for the smoothness class");
        rule_kind = st.get(o_est_kind, est_kind, "kind", std::string("numeric"));
        if (rule_kind != "numeric" && rule_kind != "asymptotic")
          throw UsageError("--kind must be numeric or asymptotic");
        const auto params = problem_params(*signal, noise);
        try {
          validate(params.signal);
        } catch (const std::invalid_argument& e) {
          throw UsageError(e.what());
        }
        h = optimal_bandwidth(static_cast<double>(Y.size()), params,
                              rule_kind == "numeric" ? BandwidthKind::numeric : BandwidthKind::asymptotic);
        h_auto = true;
      } else {
        h = detail::parse_real(h_text, "bandwidth");
      }
      if (!(h > 0.0))
        throw UsageError("bandwidth must be > 0");

      const std::size_t points = st.get(o_est_points, est_points, "points", std::size_t{1024});
      const std::size_t freq_points = st.get(o_est_freq, est_freq_points, "freq_points", std::size_t{0});
      Interval range;
      if (signal) {
        range = signal->support_hint;
      } else {
        range = {*std::min_element(Y.begin(), Y.end()), *std::max_element(Y.begin(), Y.end())};
      }
      range.lo = st.get(o_est_xmin, est_xmin, "xmin", range.lo - 4.0 * h);
      range.hi = st.get(o_est_xmax, est_xmax, "xmax", range.hi + 4.0 * h);
      if (!(range.hi > range.lo) || points < 2)
        throw UsageError("evaluation grid needs xmax > xmin and at least 2 points");
      const auto xgrid = uniform_grid(range.lo, range.hi, points);

      DensityEstimate est;
      double L_m = 0.0;
      std::size_t K_n = 0;
      if (kind == EstimatorKind::kernel) {
        est = kernel_deconv(Y, {h, freq_points}, noise, xgrid);
      } else {
        L_m = have_L ? st.get(o_est_L, est_L, "L", 1.0) : 1.0 / (std::numbers::pi * h);
        K_n = st.get(o_est_K, est_K, "K", std::size_t{0});
        if (K_n == 0)
          K_n = default_truncation(Y.size());
        est = projection_deconv(Y, {L_m, K_n, freq_points}, noise, xgrid);
      }
      if (est_clip || config.value("clip_nonnegative", false))
        for (auto& v : est.values)
          v = std::max(v, 0.0);

      {
        detail::Sink sink(output_path, out);
        write_estimate_csv(sink.stream(), est);
      }
      if (!est_spectrum.empty()) {
        const FreqGrid grid = kernel_grid({h, freq_points}, xgrid);
        std::ofstream f(est_spectrum);
        if (!f)
          throw UsageError("cannot write " + est_spectrum);
        write_spectrum_csv(f, kernel_spectrum(Y, h, noise, grid));
      }
      if (!est_plot.empty()) {
        std::ofstream f(est_plot);
        if (!f)
          throw UsageError("cannot write " + est_plot);
        write_plot_data(f, est.x, est.values);
      }
      json side = {{"estimator", to_string(kind)},
                   {"h", h},
                   {"h_auto", h_auto},
                   {"n", Y.size()},
                   {"noise", to_json(noise)},
                   {"imag_residue", est.imag_residue}};
      if (h_auto)
        side["bandwidth_kind"] = rule_kind;
      if (signal)
        side["signal"] = to_json(*signal);
      if (simulate_mode)
        side["seed"] = seed;
      if (kind == EstimatorKind::projection) {
        side["L"] = L_m;
        side["K"] = K_n;
      }
      const std::string sidecar = !est_sidecar.empty() ? est_sidecar
                                  : !output_path.empty() ? output_path + ".json"
                                                         : std::string();
      if (!sidecar.empty())
        detail::write_file(sidecar, side.dump(2) + "\n");
      else if (h_auto)
        err << side.dump() << '\n';
      return kOk;
    }

    if (*bandwidth || *rate) {
      const bool is_bw = bandwidth->parsed();
      const auto& flags = is_bw ? bw_flags : rate_flags;
      const ProblemParams p = flags.resolve(st);
      const auto ns = flags.sizes(st);
      std::string which = "both";
      if (is_bw) {
        which = st.get(o_bw_kind, bw_kind, "kind", std::string("both"));
        if (which != "numeric" && which != "asymptotic" && which != "both")
          throw UsageError("--kind must be numeric, asymptotic or both");
      }
      std::vector<RateRow> rows;
      for (const double n : ns) {
        RateRow row = make_rate_row(n, p);
        if (which == "numeric")
          row.h_asymptotic = std::numeric_limits<double>::quiet_NaN();
        if (which == "asymptotic")
          row.h_numeric = std::numeric_limits<double>::quiet_NaN();
        rows.push_back(row);
      }
      detail::Sink sink(output_path, out);
      if (fmt == "json") {
        json arr = json::array();
        for (const auto& r : rows)
          arr.push_back(detail::rate_row_json(r));
        sink.stream() << arr.dump(2) << '\n';
      } else {
        write_rate_csv(sink.stream(), rows);
      }
      return kOk;
    }

    if (*simulate) {
      ExperimentConfig cfg;
      cfg.noise = detail::noise_setting(st, o_sim_noise, sim_noise);
      const auto signal = detail::signal_setting(st, o_sim_signal, sim_signal);
      if (!signal)
        throw UsageError("simulate needs --signal");
      cfg.signal = *signal;
      cfg.estimator = detail::parse_estimator(st.get(o_sim_estimator, sim_estimator, "estimator", std::string("kernel")));
      cfg.risk = detail::parse_risk(st.get(o_sim_risk, sim_risk, "risk", std::string("mise")));
      cfg.mse_point = st.get(o_sim_x0, sim_x0, "x0", 0.0);
      cfg.reps = st.get(o_sim_reps, sim_reps, "reps", std::size_t{20});
      cfg.seed = st.get(o_sim_seed, sim_seed, "seed", std::uint64_t{0});
      cfg.K_n = st.get(o_sim_K, sim_K, "K", std::size_t{0});
      cfg.n_points = st.get(o_sim_freq, sim_freq_points, "freq_points", std::size_t{0});
      cfg.threads = st.get(o_sim_threads, sim_threads, "threads", 0u);
      if (cfg.reps < 2)
        throw UsageError("--reps must be >= 2");
      std::vector<std::string> n_items = sim_n;
      if (!st.from_flag(o_sim_n)) {
        if (!config.contains("n"))
          throw UsageError("--n is required");
        n_items = detail::n_items_from(config.at("n"));
      }
      for (const double n : detail::parse_n_list(n_items))
        cfg.n_grid.push_back(static_cast<std::size_t>(n));
      for (std::size_t i = 1; i < cfg.n_grid.size(); ++i)
        if (cfg.n_grid[i] <= cfg.n_grid[i - 1])
          throw UsageError("--n values must be strictly increasing");

      const ProblemParams params = problem_params(cfg.signal, cfg.noise, cfg.risk);
      try {
        validate(params.signal);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      if (st.has(o_sim_h, "h")) {
        const double h = st.from_flag(o_sim_h) ? detail::parse_real(sim_h, "bandwidth")
                                               : st.get<double>(nullptr, 0.0, "h", 0.0);
        if (!(h > 0.0))
          throw UsageError("bandwidth must be > 0");
        cfg.bandwidth_rule = {BandwidthKind::numeric, [h](double) { return h; }, "fixed h=" + format_real(h)};
      } else {
        const std::string k = st.get(o_sim_kind, sim_kind, "kind", std::string("numeric"));
        if (k != "numeric" && k != "asymptotic")
          throw UsageError("--kind must be numeric or asymptotic");
        if (cfg.n_grid.front() < 3)
          throw UsageError("bandwidth rules need n >= 3");
        cfg.bandwidth_rule =
          make_bandwidth_rule(params, k == "numeric" ? BandwidthKind::numeric : BandwidthKind::asymptotic);
      }
      if (st.has(o_sim_xmin, "xmin") || st.has(o_sim_xmax, "xmax") || st.has(o_sim_points, "points")) {
        const double spill = 4.0 * cfg.bandwidth_rule.h_star(static_cast<double>(cfg.n_grid.front()));
        XGridSpec gs;
        gs.lo = st.get(o_sim_xmin, sim_xmin, "xmin", cfg.signal.support_hint.lo - spill);
        gs.hi = st.get(o_sim_xmax, sim_xmax, "xmax", cfg.signal.support_hint.hi + spill);
        gs.points = st.get(o_sim_points, sim_points, "points", std::size_t{1024});
        cfg.xgrid = gs;
      }

      const RiskReport rep = run_experiment(cfg);
      json summary = risk_summary_json(rep);
      summary["signal"] = to_json(cfg.signal);
      summary["noise"] = to_json(cfg.noise);
      summary["estimator"] = to_string(cfg.estimator);
      summary["risk"] = to_string(cfg.risk);
      summary["bandwidth_rule"] = cfg.bandwidth_rule.description;
      summary["reps"] = cfg.reps;
      summary["seed"] = cfg.seed;
      {
        detail::Sink sink(output_path, out);
        if (fmt == "json") {
          json doc = summary;
          doc["rows"] = json::array();
          for (const auto& r : rep.rows)
            doc["rows"].push_back({{"n", r.n},
                                   {"h_used", r.h_used},
                                   {"risk_mean", r.risk_mean},
                                   {"risk_stderr", r.risk_stderr},
                                   {"theoretical_rate", r.theoretical_rate}});
          sink.stream() << doc.dump(2) << '\n';
        } else {
          write_risk_csv(sink.stream(), rep);
        }
      }
      const std::string summary_path = !sim_summary.empty() ? sim_summary
                                       : !output_path.empty() ? output_path + ".summary.json"
                                                              : std::string();
      if (!summary_path.empty())
        detail::write_file(summary_path, summary.dump(2) + "\n");
      if (!sim_plot.empty()) {
        std::vector<double> lx, ly;
        for (const auto& r : rep.rows) {
          lx.push_back(std::log(static_cast<double>(r.n)));
          ly.push_back(std::log(r.risk_mean));
        }
        std::ofstream f(sim_plot);
        if (!f)
          throw UsageError("cannot write " + sim_plot);
        write_plot_data(f, lx, ly);
      }
      return kOk;
    }

    if (*verify) {
      std::vector<int> ids;
      try {
        ids = acceptance::suite_ids(suite);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      bool all = true;
      for (const int id : ids) {
        const auto res = acceptance::run_criterion(id);
        acceptance::print_result(out, res);
        out.flush();
        all = all && res.pass;
      }
      out << (all ? "ALL PASS" : "SOME CRITERIA FAILED") << '\n';
      return all ? kOk : kAcceptanceFailure;
    }
  } catch (const BandwidthTooSmall& e) {
    err << "error: " << e.what() << '\n';
    return kInfeasible;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

} // namespace deconv::cli
