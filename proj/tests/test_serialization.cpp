#include "deconv/serialization.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace deconv;

namespace {

std::vector<std::vector<std::string>> read_csv(const std::string& text)
{
  std::vector<std::vector<std::string>> rows;
  std::stringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ','))
      cells.push_back(cell);
    if (!line.empty() && line.back() == ',')
      cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

} // namespace

TEST(FormatReal, RoundTrips)
{
  for (const double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
    EXPECT_EQ(std::stod(format_real(v)), v);
  }
}

TEST(ModelSpec, Parsing)
{
  auto s = parse_model_spec("gaussian:0.5");
  EXPECT_EQ(s.name, "gaussian");
  EXPECT_EQ(s.scale, 0.5);
  s = parse_model_spec("identity");
  EXPECT_EQ(s.name, "identity");
  EXPECT_EQ(s.scale, 1.0);
  EXPECT_THROW(parse_model_spec("gaussian:abc"), std::invalid_argument);
  EXPECT_THROW(parse_model_spec("gaussian:1x"), std::invalid_argument);
  EXPECT_THROW(parse_model_spec(":1"), std::invalid_argument);
}

TEST(Descriptors, FieldNames)
{
  const json n = to_json(builtin_noise("laplace", 2.0));
  EXPECT_EQ(n["name"], "laplace");
  EXPECT_EQ(n["scale"], 2.0);
  for (const char* key : {"gamma", "s", "b", "k0", "k1"})
    EXPECT_TRUE(n["smoothness"].contains(key)) << key;
  const json g = to_json(builtin_signal("gaussian", 1.0));
  for (const char* key : {"delta", "r", "a", "L"})
    EXPECT_TRUE(g["smoothness"].contains(key)) << key;
}

TEST(Descriptors, RoundTrip)
{
  for (const char* name : {"gaussian", "laplace", "cauchy", "identity"}) {
    const auto m = builtin_noise(name, 0.7);
    const auto back = noise_from_json(json::parse(to_json(m).dump()));
    EXPECT_EQ(to_json(back), to_json(m)) << name;
  }
  for (const char* name : {"gaussian", "laplace", "cauchy", "gaussian_mixture"}) {
    const auto m = builtin_signal(name, 1.3);
    const auto back = signal_from_json(json::parse(to_json(m).dump()));
    EXPECT_EQ(to_json(back), to_json(m)) << name;
  }
}

TEST(Descriptors, OverridesApply)
{
  const json j = {{"name", "laplace"}, {"scale", 1.0}, {"smoothness", {{"delta", 1.2}}}};
  const auto m = signal_from_json(j);
  EXPECT_EQ(m.smoothness.delta, 1.2);
  EXPECT_EQ(m.smoothness.r, 0.0);
  EXPECT_THROW(signal_from_json(json{{"scale", 1.0}}), json::exception);
}

TEST(Csv, EstimateRoundTrip)
{
  const auto Y = sample_pair(builtin_signal("gaussian", 1.0), builtin_noise("identity"), 50, 1).Y;
  const auto est = kernel_deconv(Y, {0.5}, builtin_noise("identity"), uniform_grid(-3.0, 3.0, 31));
  std::ostringstream os;
  write_estimate_csv(os, est);
  const auto rows = read_csv(os.str());
  ASSERT_EQ(rows.size(), 32u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"x", "ghat"}));
  for (std::size_t i = 0; i < est.x.size(); ++i) {
    EXPECT_EQ(std::stod(rows[i + 1][0]), est.x[i]);
    EXPECT_EQ(std::stod(rows[i + 1][1]), est.values[i]);
  }
}

TEST(Csv, SpectrumRoundTrip)
{
  const std::vector<double> Y = {0.3, -1.2, 2.0};
  const FreqGrid g(2.0, 256);
  const auto spec = ecf(Y, g);
  std::ostringstream os;
  write_spectrum_csv(os, spec);
  const auto rows = read_csv(os.str());
  ASSERT_EQ(rows.size(), 257u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"t", "re", "im"}));
  EXPECT_EQ(std::stod(rows[10][0]), g.node(9));
  EXPECT_EQ(std::stod(rows[10][1]), spec.values[9].real());
  EXPECT_EQ(std::stod(rows[10][2]), spec.values[9].imag());
}

TEST(Csv, RateTable)
{
  ProblemParams p;
  p.signal = {0.0, 1.6, 1.0, 1.0};
  p.noise = {2.0, 1.0, 0.0, 1.0, 1.0};
  std::vector<RateRow> rows = {make_rate_row(1e6, p), make_rate_row(1e9, p)};
  std::ostringstream os;
  write_rate_csv(os, rows);
  const auto cells = read_csv(os.str());
  ASSERT_EQ(cells.size(), 3u);
  EXPECT_EQ(cells[0][0], "n");
  EXPECT_EQ(cells[0][6], "k");
  EXPECT_EQ(cells[0].size(), 7u + rows[0].coeffs.size());
  EXPECT_EQ(cells[1][5], "BiasDominant");
  EXPECT_EQ(std::stod(cells[1][1]), rows[0].h_numeric);
  EXPECT_EQ(std::stod(cells[2][4]), rows[1].rate_mse);
  EXPECT_EQ(std::stod(cells[1][7]), rows[0].coeffs[0]);
}

TEST(Csv, RiskReport)
{
  RiskReport rep;
  rep.rows = {{100, 0.5, 0.01, 0.001, 0.1}, {200, 0.4, 0.006, 0.0005, 0.07}};
  rep.regime = "OrdOrd";
  std::ostringstream os;
  write_risk_csv(os, rep);
  const auto cells = read_csv(os.str());
  EXPECT_EQ(cells[0], (std::vector<std::string>{"n", "h_used", "risk_mean", "risk_stderr", "theoretical_rate"}));
  EXPECT_EQ(std::stoul(cells[2][0]), 200u);
  EXPECT_EQ(std::stod(cells[2][2]), 0.006);
  const auto summary = json::parse(risk_summary_json(rep).dump());
  for (const char* key : {"slope", "intercept", "r_squared", "regime"})
    EXPECT_TRUE(summary.contains(key)) << key;
}

TEST(PlotData, TwoColumns)
{
  const std::vector<double> xs = {1, 2}, ys = {0.5, 0.25};
  std::ostringstream os;
  write_plot_data(os, xs, ys);
  EXPECT_EQ(os.str(), "1 0.5\n2 0.25\n");
}
