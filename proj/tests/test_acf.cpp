#include <cmath>

#include <gtest/gtest.h>

#include "skyle/acf.hpp"
#include "skyle/errors.hpp"
#include "skyle/linalg.hpp"

using namespace skyle;

TEST(Acf, FamilyValues) {
  EXPECT_DOUBLE_EQ(AcfSpec::exponential(10.0)(0), 1.0);
  EXPECT_NEAR(AcfSpec::exponential(10.0, 2.0)(5), 2.0 * std::exp(-0.5), 1e-15);
  EXPECT_NEAR(AcfSpec::power_law(30.0, 3.0)(30), 0.125, 1e-15);
  EXPECT_NEAR(AcfSpec::damped_oscillation(40.0, 20.0)(0), 1.0, 1e-15);
  EXPECT_NEAR(AcfSpec::damped_oscillation(40.0, 20.0)(10), std::exp(-0.25) * std::cos(0.5), 1e-15);
  EXPECT_DOUBLE_EQ(AcfSpec::white(3.0)(0), 3.0);
  EXPECT_DOUBLE_EQ(AcfSpec::white(3.0)(1), 0.0);
}

TEST(Acf, EvenInLag) {
  const auto a = AcfSpec::power_law(30.0, 3.0, 2.0);
  for (long k : {1L, 7L, 100L}) EXPECT_DOUBLE_EQ(a(k), a(-k));
}

TEST(Acf, RejectsBadParameters) {
  EXPECT_THROW(AcfSpec::power_law(30.0, 1.0), DomainError);
  EXPECT_THROW(AcfSpec::exponential(-1.0), DomainError);
  EXPECT_THROW(AcfSpec::white(0.0), DomainError);
  EXPECT_THROW(AcfSpec::tabulated({}), DomainError);
}

TEST(Acf, TabulatedNormalizesAndTruncates) {
  const auto a = AcfSpec::tabulated({2.0, 1.0, 0.5});
  EXPECT_DOUBLE_EQ(a.variance(), 2.0);
  EXPECT_DOUBLE_EQ(a(1), 1.0);
  EXPECT_DOUBLE_EQ(a(3), 0.0);
}

TEST(Acf, MarkovAlpha) {
  EXPECT_NEAR(AcfSpec::exponential(20.0).markov_alpha(), std::exp(-1.0 / 20.0), 1e-15);
  EXPECT_DOUBLE_EQ(AcfSpec::white().markov_alpha(), 0.0);
  EXPECT_THROW(AcfSpec::power_law(30.0, 3.0).markov_alpha(), Error);
}

TEST(Toeplitz, WhiteIsScaledIdentity) {
  const auto m = toeplitz(AcfSpec::white(2.5), 3);
  EXPECT_TRUE(m.isApprox(2.5 * Eigen::MatrixXd::Identity(3, 3)));
}

TEST(Toeplitz, ExponentialTwoByTwo) {
  const double a = std::exp(-0.1);
  const auto m = toeplitz(AcfSpec::exponential(10.0, 2.0), 2);
  EXPECT_NEAR(m(0, 0), 2.0, 1e-15);
  EXPECT_NEAR(m(0, 1), 2.0 * a, 1e-15);
  EXPECT_NEAR(m(1, 0), 2.0 * a, 1e-15);
}

TEST(Toeplitz, PowerLawFactorsWithSmallJitter) {
  const auto m = toeplitz(AcfSpec::power_law(30.0, 3.0), 500);
  const auto c = cholesky_with_jitter(m, 1.0, "test");
  EXPECT_LE(c.jitter, 1e-10);
}
