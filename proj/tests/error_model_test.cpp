#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

using namespace reshi;
using reshi::test::error_code_of;

namespace {

// E|X| for X ~ N(mu, sigma) by composite Simpson integration of |x| * pdf(x).
double mean_abs_normal(double mu, double sigma) {
  const double lo = mu - 12 * sigma, hi = mu + 12 * sigma;
  const int n = 200000;
  const double h = (hi - lo) / n;
  auto f = [&](double x) {
    const double z = (x - mu) / sigma;
    return std::abs(x) * std::exp(-0.5 * z * z) / (sigma * std::sqrt(2 * M_PI));
  };
  double acc = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) acc += f(lo + i * h) * (i % 2 ? 4 : 2);
  return acc * h / 3;
}

double mean_relative_error(ErrorDistribution d, double err, std::size_t samples, std::uint64_t seed) {
  Rng rng(seed);
  const PredictionErrorModel m{d, err, seed};
  double acc = 0;
  for (std::size_t i = 0; i < samples; ++i) acc += std::abs(inject_error(100.0, m, rng) - 100.0) / 100.0;
  return acc / static_cast<double>(samples);
}

}  // namespace

TEST(InjectError, FixedSampleExample) {
  EXPECT_DOUBLE_EQ(apply_error(100.0, 0.15, {1.0, +1}), 115.0);
  EXPECT_DOUBLE_EQ(apply_error(100.0, 0.15, {1.0, -1}), 85.0);
}

TEST(InjectError, ZeroErrorOrNoneIsIdentity) {
  Rng rng(1);
  for (auto d : {ErrorDistribution::None, ErrorDistribution::Normal, ErrorDistribution::Exponential})
    for (int i = 0; i < 1000; ++i) EXPECT_EQ(inject_error(37.25, {d, 0.0, 1}, rng), 37.25);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(inject_error(37.25, {ErrorDistribution::None, 0.5, 1}, rng), 37.25);
}

TEST(InjectError, FloorClamp) {
  EXPECT_DOUBLE_EQ(apply_error(100.0, 0.5, {3.0, -1}), 0.1);
  Rng rng(2);
  for (int i = 0; i < 100000; ++i) EXPECT_GE(inject_error(10.0, {ErrorDistribution::Exponential, 0.5, 2}, rng), 0.01);
}

TEST(InjectError, NonPositiveRuntime) {
  Rng rng(1);
  EXPECT_EQ(error_code_of([&] { inject_error(0.0, {ErrorDistribution::Normal, 0.1, 1}, rng); }), "NonPositiveRuntime");
  EXPECT_EQ(error_code_of([&] { apply_error(-1.0, 0.1, {1.0, 1}); }), "NonPositiveRuntime");
}

TEST(InjectError, SignIsFair) {
  Rng rng(3);
  int plus = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) plus += sample_error(ErrorDistribution::Exponential, rng).sign > 0;
  EXPECT_NEAR(plus / double(n), 0.5, 0.005);
}

TEST(InjectError, ExponentialMeanRelativeError) {
  EXPECT_NEAR(mean_relative_error(ErrorDistribution::Exponential, 0.15, 1000000, 4), 0.15, 0.002);
}

TEST(InjectError, NormalMeanRelativeErrorMatchesIntegral) {
  const double e_abs = mean_abs_normal(kNormalErrorMean, kNormalErrorStddev);
  // closed form cross-check: sigma*sqrt(2/pi)*exp(-mu^2/2sigma^2) + mu*(1 - 2*Phi(-mu/sigma))
  const double closed = 0.5 * std::sqrt(2 / M_PI) * std::exp(-2.0) + (1 - std::erfc(2 / std::sqrt(2.0)));
  EXPECT_NEAR(e_abs, closed, 1e-9);
  EXPECT_NEAR(mean_relative_error(ErrorDistribution::Normal, 0.15, 1000000, 5), 0.15 * e_abs, 0.002);
}

TEST(InjectError, NegativeErrorRejected) {
  PredictionErrorModel m{ErrorDistribution::Normal, -0.1, 0};
  EXPECT_EQ(error_code_of([&] { m.validate(); }), "InvalidArgument");
}

TEST(Seeds, DerivationIsDeterministicAndSpreads) {
  EXPECT_EQ(derive_seed(1, 2), derive_seed(1, 2));
  EXPECT_NE(derive_seed(1, 2), derive_seed(2, 1));
  EXPECT_NE(hash_string("chipseq"), hash_string("eager"));
  EXPECT_EQ(hash_string(""), 0xcbf29ce484222325ULL);
}

TEST(Distribution, ParseAndPrint) {
  for (auto d : {ErrorDistribution::None, ErrorDistribution::Normal, ErrorDistribution::Exponential})
    EXPECT_EQ(parse_distribution(to_string(d)), d);
  EXPECT_EQ(error_code_of([] { parse_distribution("uniform"); }), "InvalidArgument");
}
