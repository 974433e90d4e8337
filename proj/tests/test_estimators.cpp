#include "deconv/estimators.hpp"
#include "deconv/risk_lab.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace deconv;

namespace {

// Convolution form (1/nh) Σ K((x - Y_i)/h) with the sinc kernel.
double sinc_kde(std::span<const double> Y, double h, double x)
{
  double sum = 0.0;
  for (const double y : Y) {
    const double u = (x - y) / h;
    sum += u == 0.0 ? 1.0 / std::numbers::pi : std::sin(u) / (std::numbers::pi * u);
  }
  return sum / (static_cast<double>(Y.size()) * h);
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b)
{
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

} // namespace

TEST(Kernel, SinglePointIdentity)
{
  const std::vector<double> Y = {0.0};
  const std::vector<double> x = {0.0};
  const auto est = kernel_deconv(Y, {1.0}, builtin_noise("identity"), x);
  EXPECT_NEAR(est.values[0], 1.0 / std::numbers::pi, 1e-9);
  EXPECT_EQ(est.meta.kind, EstimatorKind::kernel);
  EXPECT_EQ(est.meta.n, 1u);
}

TEST(Kernel, IdentityNoiseMatchesDirectSum)
{
  const auto Y = sample_pair(builtin_signal("laplace", 1.0), builtin_noise("identity"), 300, 9).Y;
  const auto xs = uniform_grid(-8.0, 8.0, 161);
  for (const double h : {0.2, 0.5}) {
    const auto est = kernel_deconv(Y, {h}, builtin_noise("identity"), xs);
    for (std::size_t i = 0; i < xs.size(); ++i)
      ASSERT_NEAR(est.values[i], sinc_kde(Y, h, xs[i]), 1e-6) << xs[i];
  }
}

TEST(Kernel, GaussianNoiseMatchesConvolutionForm)
{
  // (1/nh) Σ K((x - Y_i)/h) with K from Gauss-Kronrod quadrature of its
  // defining integral.
  const auto noise = builtin_noise("gaussian", 0.5);
  const auto Y = sample_pair(builtin_signal("gaussian", 1.0), noise, 40, 10).Y;
  const double h = 0.45;
  const std::vector<double> xs = {-2.0, -0.3, 0.0, 1.1, 2.7};
  const auto est = kernel_deconv(Y, {h}, noise, xs);
  const auto fine = kernel_deconv(Y, {h, 65536}, noise, xs);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double sum = 0.0;
    for (const double y : Y) {
      const double u = (xs[i] - y) / h;
      sum += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
               [&](double v) { return std::cos(u * v) / noise.cf(v / h).real(); }, -1.0, 1.0, 15, 1e-14) /
             (2.0 * std::numbers::pi);
    }
    EXPECT_NEAR(est.values[i], sum / (Y.size() * h), 1e-6);
    EXPECT_NEAR(fine.values[i], sum / (Y.size() * h), 1e-9);
  }
}

TEST(Kernel, MonteCarloSanity)
{
  const auto signal = builtin_signal("gaussian", 1.0);
  const auto noise = builtin_noise("gaussian", 0.5);
  const auto Y = sample_pair(signal, noise, 2000, 12).Y;
  const auto xs = default_xgrid(signal.support_hint, 4 * 0.45);
  const auto est = kernel_deconv(Y, {0.45}, noise, xs);
  EXPECT_LE(ise(est, signal), 0.05);
  const double mass = estimate_mass(est);
  EXPECT_GE(mass, 0.9);
  EXPECT_LE(mass, 1.1);
}

TEST(Kernel, Errors)
{
  const std::vector<double> empty;
  const std::vector<double> xs = {0.0, 1.0};
  EXPECT_THROW(kernel_deconv(empty, {1.0}, builtin_noise("identity"), xs), std::invalid_argument);
  const std::vector<double> Y = {0.1, 0.2};
  EXPECT_THROW(kernel_deconv(Y, {0.01}, builtin_noise("gaussian", 1.0), xs), BandwidthTooSmall);
  EXPECT_THROW(kernel_deconv(Y, {-1.0}, builtin_noise("identity"), xs), std::invalid_argument);
}

class Invariants : public ::testing::TestWithParam<std::uint64_t>
{};

TEST_P(Invariants, LinearityAndShift)
{
  const auto noise = builtin_noise("laplace", 0.5);
  auto Y = sample_pair(builtin_signal("gaussian_mixture", 1.0), noise, 350, GetParam()).Y;
  const double h = 0.35;
  const auto xs = uniform_grid(-6.0, 6.0, 121);
  const auto whole = kernel_deconv(Y, {h}, noise, xs);
  const std::span<const double> A(Y.data(), 150), B(Y.data() + 150, 200);
  const auto ea = kernel_deconv(A, {h}, noise, xs);
  const auto eb = kernel_deconv(B, {h}, noise, xs);
  for (std::size_t i = 0; i < xs.size(); ++i)
    ASSERT_NEAR(whole.values[i], (150.0 * ea.values[i] + 200.0 * eb.values[i]) / 350.0, 1e-10);

  const double c = -2.3;
  std::vector<double> xs_c(xs), Y_c(Y);
  for (auto& x : xs_c)
    x += c;
  for (auto& y : Y_c)
    y += c;
  const auto shifted = kernel_deconv(Y_c, {h}, noise, xs_c);
  EXPECT_LE(sup_diff(shifted.values, whole.values), 1e-8);
  EXPECT_LE(whole.imag_residue, 1e-8);
}

INSTANTIATE_TEST_SUITE_P(Seeds, Invariants, ::testing::Values(1u, 2u, 3u, 4u, 5u));

TEST(Sinc, BasisLattice)
{
  EXPECT_EQ(sinc_pi(0.0), 1.0);
  EXPECT_NEAR(sinc_pi(0.5), 2.0 / std::numbers::pi, 1e-15);
  const double L = 2.0;
  for (long j = -3; j <= 3; ++j)
    for (long m = -3; m <= 3; ++m)
      EXPECT_NEAR(sinc_basis(L, j, m / L), j == m ? std::sqrt(L) : 0.0, 1e-14);
}

TEST(Projection, SinglePointCoefficient)
{
  const std::vector<double> Y = {0.0};
  const auto id = builtin_noise("identity");
  EXPECT_NEAR(projection_coefficient(Y, 1.0, 0, id), 1.0, 1e-8);
}

TEST(Projection, IdentityCoefficientsAreBasisAverages)
{
  const auto id = builtin_noise("identity");
  const auto Y = sample_pair(builtin_signal("gaussian", 1.0), id, 200, 13).Y;
  const double L = 1.5;
  const auto coef = projection_coefficients(Y, L, 10, id);
  for (long j = -10; j <= 10; ++j) {
    double avg = 0.0;
    for (const double y : Y)
      avg += sinc_basis(L, j, y);
    avg /= static_cast<double>(Y.size());
    EXPECT_NEAR(coef.at(j), avg, 1e-6) << j;
    EXPECT_NEAR(projection_coefficient(Y, L, j, id), coef.at(j), 1e-10);
  }
  EXPECT_LE(coef.imag_residue, 1e-10);
}

TEST(Projection, ZeroCoefficientsGiveZero)
{
  ProjectionCoefficients coef;
  coef.L_m = 1.0;
  coef.K_n = 5;
  coef.values.assign(11, 0.0);
  for (const double v : synthesize_projection(coef, uniform_grid(-3.0, 3.0, 13)))
    EXPECT_EQ(v, 0.0);
}

TEST(Projection, MonteCarloSanity)
{
  const auto signal = builtin_signal("laplace", 1.0);
  const auto id = builtin_noise("identity");
  const auto Y = sample_pair(signal, id, 2000, 14).Y;
  const auto xs = default_xgrid(signal.support_hint, 4.0 / (std::numbers::pi * 2.0));
  const auto est = projection_deconv(Y, {2.0, 64}, id, xs);
  EXPECT_LE(ise(est, signal), 0.05);
}

TEST(Projection, TruncationDoublingIsStable)
{
  const auto noise = builtin_noise("laplace", 1.0);
  const auto Y = sample_pair(builtin_signal("gaussian", 1.0), noise, 2000, 15).Y;
  const auto xs = uniform_grid(-5.0, 5.0, 201);
  const auto a = projection_deconv(Y, {2.0, 4096}, noise, xs);
  const auto b = projection_deconv(Y, {2.0, 8192}, noise, xs);
  EXPECT_LE(sup_diff(a.values, b.values), 1e-4);
}

TEST(Projection, ApproachesKernelEstimate)
{
  const auto noise = builtin_noise("cauchy", 0.3);
  const auto Y = sample_pair(builtin_signal("gaussian_mixture", 1.0), noise, 500, 16).Y;
  const double L = 1.5;
  const auto xs = uniform_grid(-4.0, 4.0, 81);
  const auto kern = kernel_deconv(Y, {1.0 / (std::numbers::pi * L)}, noise, xs);
  const double coarse = sup_diff(projection_deconv(Y, {L, 64}, noise, xs).values, kern.values);
  const double fine = sup_diff(projection_deconv(Y, {L, 1024}, noise, xs).values, kern.values);
  EXPECT_LT(fine, coarse);
  EXPECT_LE(fine, 1e-3);
}

TEST(Projection, Errors)
{
  const std::vector<double> Y = {0.0, 1.0};
  const std::vector<double> xs = {0.0, 1.0};
  EXPECT_THROW(projection_deconv(Y, {1.0, 0}, builtin_noise("identity"), xs), std::invalid_argument);
  EXPECT_THROW(projection_deconv(Y, {0.0, 3}, builtin_noise("identity"), xs), std::invalid_argument);
  EXPECT_THROW(projection_deconv(Y, {100.0, 3}, builtin_noise("gaussian", 1.0), xs), BandwidthTooSmall);
}
