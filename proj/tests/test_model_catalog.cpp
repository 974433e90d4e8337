#include "deconv/model_catalog.hpp"
#include "deconv/estimators.hpp"

#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace deconv;

namespace {

std::vector<double> symmetric_grid(double t_max, std::size_t count)
{
  return uniform_grid(-t_max, t_max, count);
}

// cf by quadrature of the density: ∫ e^{itx} g(x) dx, folded onto the half
// line and handed to Ooura's oscillatory rules.
Complex cf_by_quadrature(const SignalModel& m, double t)
{
  if (t == 0.0) {
    boost::math::quadrature::tanh_sinh<double> integrator;
    const double inf = std::numeric_limits<double>::infinity();
    return {integrator.integrate([&](double x) { return m.density(x); }, -inf, inf), 0.0};
  }
  boost::math::quadrature::ooura_fourier_cos<double> cos_rule;
  boost::math::quadrature::ooura_fourier_sin<double> sin_rule;
  const auto even = [&](double x) { return m.density(x) + m.density(-x); };
  const auto odd = [&](double x) { return m.density(x) - m.density(-x); };
  return {cos_rule.integrate(even, t).first, sin_rule.integrate(odd, t).first};
}

} // namespace

TEST(Catalog, SignalSmoothnessValues)
{
  const auto g = builtin_signal("gaussian", 1.0);
  EXPECT_DOUBLE_EQ(g.smoothness.r, 2.0);
  EXPECT_DOUBLE_EQ(g.smoothness.a, 0.5);
  EXPECT_DOUBLE_EQ(g.smoothness.delta, 0.0);
  const auto g2 = builtin_signal("gaussian", 2.0);
  EXPECT_DOUBLE_EQ(g2.smoothness.a, 2.0);

  const auto c = builtin_signal("cauchy", 1.0);
  EXPECT_DOUBLE_EQ(c.smoothness.r, 1.0);
  EXPECT_DOUBLE_EQ(c.smoothness.a, 1.0);

  const auto l = builtin_signal("laplace", 1.0);
  EXPECT_DOUBLE_EQ(l.smoothness.r, 0.0);
  EXPECT_DOUBLE_EQ(l.smoothness.a, 0.0);
  EXPECT_DOUBLE_EQ(l.smoothness.delta, 1.49);

  const auto mix = builtin_signal("gaussian_mixture", 1.0);
  EXPECT_DOUBLE_EQ(mix.smoothness.r, 2.0);
}

TEST(Catalog, AnalyticValues)
{
  EXPECT_NEAR(builtin_signal("cauchy", 1.0).cf(2.0).real(), std::exp(-2.0), 1e-15);
  EXPECT_DOUBLE_EQ(builtin_signal("laplace", 1.0).density(0.0), 0.5);
  EXPECT_NEAR(builtin_signal("gaussian", 1.0).density(0.0), 1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-15);
}

TEST(Catalog, NoiseSmoothnessValues)
{
  const auto g = builtin_noise("gaussian", 0.5);
  EXPECT_DOUBLE_EQ(g.smoothness.s, 2.0);
  EXPECT_DOUBLE_EQ(g.smoothness.b, 0.125);
  const auto l = builtin_noise("laplace", 1.0);
  EXPECT_DOUBLE_EQ(l.smoothness.s, 0.0);
  EXPECT_DOUBLE_EQ(l.smoothness.gamma, 2.0);
  const auto c = builtin_noise("cauchy", 0.5);
  EXPECT_DOUBLE_EQ(c.smoothness.s, 1.0);
  EXPECT_DOUBLE_EQ(c.smoothness.b, 0.5);
  const auto id = builtin_noise("identity");
  EXPECT_TRUE(id.test_only);
  EXPECT_FALSE(id.density.has_value());
  EXPECT_DOUBLE_EQ(id.smoothness.s, 0.0);
  EXPECT_DOUBLE_EQ(id.smoothness.gamma, 0.0);
}

TEST(Catalog, RejectsBadInput)
{
  EXPECT_THROW(builtin_noise("uniform"), std::invalid_argument);
  EXPECT_THROW(builtin_signal("uniform"), std::invalid_argument);
  EXPECT_THROW(builtin_noise("gaussian", 0.0), std::invalid_argument);
  EXPECT_THROW(builtin_signal("laplace", -1.0), std::invalid_argument);
  EXPECT_THROW(validate(SignalSmoothness{0.5, 0.0, 0.0, 1.0}), std::invalid_argument);
  EXPECT_NO_THROW(validate(SignalSmoothness{0.51, 0.0, 0.0, 1.0}));
  EXPECT_THROW(validate(NoiseSmoothness{0.0, 0.0, 0.0, 1.0, 1.0}), std::invalid_argument);
  EXPECT_NO_THROW(validate(NoiseSmoothness{0.0, 0.0, 0.0, 1.0, 1.0}, true));
  EXPECT_THROW(validate(NoiseSmoothness{2.0, 1.0, 0.0, 2.0, 1.0}), std::invalid_argument);
}

class NoiseMatrix : public ::testing::TestWithParam<std::pair<const char*, double>>
{};

TEST_P(NoiseMatrix, CharacteristicFunctionBasics)
{
  const auto m = builtin_noise(GetParam().first, GetParam().second);
  EXPECT_EQ(m.cf(0.0), Complex(1.0, 0.0));
  for (double t = -20.0; t <= 20.0; t += 0.37) {
    const Complex a = m.cf(t), b = m.cf(-t);
    EXPECT_NEAR(a.real(), b.real(), 1e-15);
    EXPECT_NEAR(a.imag(), -b.imag(), 1e-15);
    EXPECT_LE(std::abs(a), 1.0 + 1e-15);
    if (std::abs(a) > 1e-300) {
      EXPECT_NEAR(m.log_abs_cf(t), std::log(std::abs(a)), 1e-12);
    }
  }
}

TEST_P(NoiseMatrix, N1HoldsOnWideGrid)
{
  const auto m = builtin_noise(GetParam().first, GetParam().second);
  const auto rep = check_n1_membership(m, symmetric_grid(50.0, 4001));
  EXPECT_TRUE(rep.ok) << rep.worst_ratio_low << " " << rep.worst_ratio_high;
}

TEST_P(NoiseMatrix, SampleMomentsMatchCf)
{
  // Monte Carlo oracle: the empirical cf of the draws tracks cf within
  // four standard errors (each component has variance <= 1/n).
  const auto m = builtin_noise(GetParam().first, GetParam().second);
  Rng rng = make_stream(99, 2);
  const std::size_t n = 100000;
  std::vector<double> draws(n);
  for (auto& d : draws)
    d = m.draw(rng);
  for (const double t : {0.3, 1.0, 2.5}) {
    Complex acc(0.0, 0.0);
    for (const double d : draws)
      acc += std::polar(1.0, t * d);
    acc /= static_cast<double>(n);
    EXPECT_NEAR(acc.real(), m.cf(t).real(), 4.0 / std::sqrt(static_cast<double>(n))) << "t=" << t;
    EXPECT_NEAR(acc.imag(), m.cf(t).imag(), 4.0 / std::sqrt(static_cast<double>(n))) << "t=" << t;
  }
}

INSTANTIATE_TEST_SUITE_P(Catalog, NoiseMatrix,
                         ::testing::Values(std::make_pair("gaussian", 1.0), std::make_pair("gaussian", 0.5),
                                           std::make_pair("laplace", 1.0), std::make_pair("laplace", 0.5),
                                           std::make_pair("laplace", 2.0), std::make_pair("cauchy", 0.5),
                                           std::make_pair("identity", 1.0)));

TEST(Catalog, N1ExamplesAndMismatch)
{
  const auto g = builtin_noise("gaussian", 1.0);
  const auto rep = check_n1_membership(g, symmetric_grid(10.0, 1001));
  EXPECT_TRUE(rep.ok);
  EXPECT_NEAR(rep.worst_ratio_low, 1.0, 1e-12);
  EXPECT_NEAR(rep.worst_ratio_high, 1.0, 1e-12);

  auto wrong = builtin_noise("laplace", 1.0);
  wrong.smoothness.gamma = 1.0;
  EXPECT_FALSE(check_n1_membership(wrong, symmetric_grid(50.0, 1001)).ok);
}

TEST(Catalog, NoiseDensitiesIntegrateToOne)
{
  boost::math::quadrature::tanh_sinh<double> integrator;
  for (const auto& [name, scale] : {std::pair{"gaussian", 0.7}, {"laplace", 1.3}, {"cauchy", 0.5}}) {
    const auto m = builtin_noise(name, scale);
    ASSERT_TRUE(m.density.has_value());
    const auto& f = *m.density;
    const double mass = integrator.integrate([&](double x) { return f(x); }, -std::numeric_limits<double>::infinity(),
                                             std::numeric_limits<double>::infinity());
    EXPECT_NEAR(mass, 1.0, 1e-8) << name;
  }
}

class SignalMatrix : public ::testing::TestWithParam<std::pair<const char*, double>>
{};

TEST_P(SignalMatrix, CfMatchesDensityQuadrature)
{
  const auto m = builtin_signal(GetParam().first, GetParam().second);
  for (const double t : {0.0, 0.4, 1.3, 3.0}) {
    const Complex q = cf_by_quadrature(m, t);
    EXPECT_NEAR(q.real(), m.cf(t).real(), 2e-6) << "t=" << t;
    EXPECT_NEAR(q.imag(), m.cf(t).imag(), 2e-6) << "t=" << t;
  }
}

TEST_P(SignalMatrix, ClassMembershipHoldsWithRecordedL)
{
  const auto m = builtin_signal(GetParam().first, GetParam().second);
  const auto rep = check_class_membership(m, membership_grid(m));
  EXPECT_TRUE(rep.ok) << rep.integral_estimate << " vs L=" << m.smoothness.L;
  EXPECT_GT(rep.integral_estimate, 0.0);
}

TEST_P(SignalMatrix, SupportHintHoldsMass)
{
  const auto m = builtin_signal(GetParam().first, GetParam().second);
  boost::math::quadrature::tanh_sinh<double> integrator;
  const double inside = integrator.integrate([&](double x) { return m.density(x); }, m.support_hint.lo,
                                             m.support_hint.hi);
  EXPECT_GE(inside, 1.0 - 1e-6);
}

INSTANTIATE_TEST_SUITE_P(Catalog, SignalMatrix,
                         ::testing::Values(std::make_pair("gaussian", 1.0), std::make_pair("gaussian", 0.5),
                                           std::make_pair("laplace", 1.0), std::make_pair("cauchy", 1.0),
                                           std::make_pair("gaussian_mixture", 1.0),
                                           std::make_pair("gaussian_mixture", 2.0)));

TEST(Catalog, ClassIntegralOracles)
{
  // gaussian(1) with a = 0.25: ∫ e^{-t²} e^{t²/2} dt = √(2π).
  const auto g = builtin_signal("gaussian", 1.0);
  SignalSmoothness p{0.0, 2.0, 0.25, 100.0};
  const auto grid = symmetric_grid(40.0, 40001);
  EXPECT_NEAR(class_integral(g, grid, p), std::sqrt(2.0 * std::numbers::pi), 1e-8);

  // laplace(1), δ = 1.49: ∫ (1+t²)^{-0.51} dt over the grid span, by tanh_sinh.
  const auto l = builtin_signal("laplace", 1.0);
  SignalSmoothness lp{1.49, 0.0, 0.0, 1e6};
  const auto fine = membership_grid(l);
  boost::math::quadrature::tanh_sinh<double> finite;
  const double exact =
      2.0 * finite.integrate([](double t) { return std::pow(1.0 + t * t, -0.51); }, 0.0, fine.back());
  const double est = class_integral(l, fine, lp);
  EXPECT_NEAR(est / exact, 1.0, 1e-3);
  auto capped = l;
  capped.smoothness.L = 100.0;
  EXPECT_TRUE(check_class_membership(capped, fine).ok);
}

TEST(Catalog, ClassMembershipFailsOffClass)
{
  // δ = 2 makes the laplace integrand ~ 1: the estimate grows with the grid.
  auto l = builtin_signal("laplace", 1.0);
  l.smoothness.delta = 2.0;
  const double small = class_integral(l, symmetric_grid(100.0, 20001), l.smoothness);
  const double large = class_integral(l, symmetric_grid(200.0, 40001), l.smoothness);
  EXPECT_GT(large, 1.9 * small);
  l.smoothness.L = 100.0;
  EXPECT_FALSE(check_class_membership(l, symmetric_grid(200.0, 40001)).ok);
}

TEST(Catalog, SamplePairContracts)
{
  const auto sig = builtin_signal("gaussian", 1.0);
  const auto id = builtin_noise("identity");
  const auto p = sample_pair(sig, id, 100, 3);
  EXPECT_EQ(p.Y, p.X);

  const auto noise = builtin_noise("laplace", 1.0);
  const auto a = sample_pair(sig, noise, 500, 17);
  const auto b = sample_pair(sig, noise, 500, 17);
  EXPECT_EQ(a.Y, b.Y);
  for (std::size_t i = 0; i < a.Y.size(); ++i)
    EXPECT_EQ(a.Y[i], a.X[i] + a.eps[i]);

  // Growing n keeps earlier draws.
  const auto longer = sample_pair(sig, noise, 800, 17);
  EXPECT_TRUE(std::equal(a.Y.begin(), a.Y.end(), longer.Y.begin()));
  EXPECT_NE(sample_pair(sig, noise, 500, 18).Y, a.Y);
  EXPECT_THROW(sample_pair(sig, noise, 0, 1), std::invalid_argument);
}

TEST(Catalog, SampleVarianceOfConvolution)
{
  const auto p = sample_pair(builtin_signal("gaussian", 1.0), builtin_noise("gaussian", 1.0), 100000, 5);
  double mean = 0.0;
  for (const double y : p.Y)
    mean += y;
  mean /= static_cast<double>(p.Y.size());
  double var = 0.0;
  for (const double y : p.Y)
    var += (y - mean) * (y - mean);
  var /= static_cast<double>(p.Y.size() - 1);
  // Var(Y) = 2; sd of the sample variance is about 2·√(2/n).
  EXPECT_NEAR(var, 2.0, 4.0 * 2.0 * std::sqrt(2.0 / 1e5));
  EXPECT_NEAR(mean, 0.0, 4.0 * std::sqrt(2.0 / 1e5));
}

TEST(Catalog, MixtureMoments)
{
  // 0.5 N(-1, 1) + 0.5 N(1, 1/4): mean 0, variance 1 + 5/8.
  const auto m = builtin_signal("gaussian_mixture", 1.0);
  Rng rng = make_stream(8, 1);
  const std::size_t n = 200000;
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = m.draw(rng);
    s1 += x;
    s2 += x * x;
  }
  const double mean = s1 / n, var = s2 / n - mean * mean;
  EXPECT_NEAR(mean, 0.0, 4.0 * std::sqrt(1.625 / n));
  EXPECT_NEAR(var, 1.625, 0.03);
}
