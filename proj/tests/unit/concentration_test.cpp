#include <gtest/gtest.h>

#include <cmath>

#include "vab/concentration.hpp"
#include "vab/errors.hpp"

using namespace vab;

TEST(EmpiricalBernstein, Layers) {
  EXPECT_EQ(bernstein_layers(16), 2);
  EXPECT_EQ(bernstein_layers(4), 1);
  EXPECT_EQ(bernstein_layers(17), 3);
  EXPECT_EQ(bernstein_layers(65536), 4);
}

TEST(EmpiricalBernstein, Rhs) {
  EXPECT_NEAR(empirical_bernstein_rhs(0.0, 1.0, std::exp(-3.0), 16), 360.0, 1e-9);
  EXPECT_NEAR(empirical_bernstein_rhs(16.0, 1.0, 0.01, 16), 689.9622480010893, 1e-9);
  EXPECT_THROW(empirical_bernstein_rhs(1.0, 1.0, 0.5, 16), PreconditionError);
  EXPECT_THROW(empirical_bernstein_rhs(1.0, 1.0, 0.01, 3), PreconditionError);
  EXPECT_THROW(empirical_bernstein_rhs(-1.0, 1.0, 0.01, 16), PreconditionError);
}

TEST(EmpiricalBernstein, RademacherShortRunNeverFails) {
  const auto r = verify_empirical_bernstein(MartingaleSpec::rademacher(16), 0.01, 2000, 1);
  EXPECT_EQ(r.failures, 0);
  EXPECT_EQ(r.trials, 2000);
}

TEST(EmpiricalBernstein, VacuousBoundFlagged) {
  // 8 delta m log2 n with delta = .1, n = 16: 8 * .1 * 2 * 4 > 1
  const auto r = verify_empirical_bernstein(MartingaleSpec::rademacher(16), 0.1, 1000, 1);
  EXPECT_TRUE(r.bound_vacuous);
  EXPECT_TRUE(r.within_bound());
}

TEST(EmpiricalBernstein, LongRunWithinStatedBound) {
  const auto r = verify_empirical_bernstein(MartingaleSpec::rademacher(4096), 0.001, 10000, 7);
  EXPECT_FALSE(r.bound_vacuous);
  EXPECT_LE(r.failure_rate, r.stated_bound);
}

TEST(SecondMoment, TrivialCases) {
  EXPECT_EQ(verify_second_moment_bound(MartingaleSpec::zero(64), 0.05, 1000, 1).failures, 0);
  EXPECT_EQ(verify_second_moment_bound(MartingaleSpec::rademacher(64), 0.05, 1000, 1).failures, 0);
}

TEST(SecondMoment, BernoulliWithinStatedBound) {
  const auto r = verify_second_moment_bound(MartingaleSpec::centered_bernoulli(256, 0.05), 0.01, 10000, 3);
  EXPECT_LE(r.failure_rate, r.stated_bound);
  EXPECT_NEAR(r.stated_bound, (8 + 1) * 0.01, 1e-15);
}

TEST(UpperTail, TrivialCases) {
  EXPECT_EQ(verify_upper_tail(MartingaleSpec::zero(64), 1.0, 0.1, 1000, 1).failures, 0);
  EXPECT_EQ(verify_upper_tail(MartingaleSpec::constant(64, 0.7), 1.0, 0.1, 1000, 1).failures, 0);
}

TEST(UpperTail, BernoulliWithinDelta) {
  const auto r = verify_upper_tail(MartingaleSpec::bernoulli(512, 0.02), 1.0, 0.05, 10000, 5);
  EXPECT_LE(r.failure_rate, 0.05);
  EXPECT_DOUBLE_EQ(r.stated_bound, 0.05);
}

TEST(UpperTail, RejectsOutOfHypothesis) {
  EXPECT_THROW(verify_upper_tail(MartingaleSpec::rademacher(10), 1.0, 0.1, 1000, 1), PreconditionError);
  EXPECT_THROW(verify_upper_tail(MartingaleSpec::bernoulli(10, .5), 0.5, 0.1, 1000, 1), PreconditionError);
}

TEST(Freedman, StatedBound) {
  const auto r = verify_freedman(MartingaleSpec::rademacher(256), 0.01, 1.0, 10000, 2);
  EXPECT_NEAR(r.stated_bound, 0.18, 1e-15);
  EXPECT_LE(r.failure_rate, r.stated_bound);
  EXPECT_EQ(verify_freedman(MartingaleSpec::zero(64), 0.01, 1.0, 1000, 2).failures, 0);
}

TEST(Azuma, WithinDelta) {
  const auto r = verify_azuma(MartingaleSpec::rademacher(100), 0.05, 10000, 4);
  EXPECT_LE(r.failure_rate, 0.05);
}

TEST(Increments, ConditionalMomentsAreExact) {
  // Empirical mean of draws against the reported conditional mean.
  Rng rng(12);
  for (const auto& spec : {MartingaleSpec::centered_bernoulli(1, 0.3), MartingaleSpec::scaled_uniform(1, 0.5),
                           MartingaleSpec::bernoulli(1, 0.2), MartingaleSpec::sign_feedback(1)}) {
    double sum = 0.0, sq = 0.0, mean = 0.0, second = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const auto d = draw_increment(spec, 0.5, rng);
      sum += d.value;
      sq += d.value * d.value;
      mean = d.cond_mean;
      second = d.cond_second_moment;
    }
    EXPECT_NEAR(sum / n, mean, 5.0 / std::sqrt(n)) << spec.name();
    EXPECT_NEAR(sq / n, second, 5.0 / std::sqrt(n)) << spec.name();
  }
}

TEST(Increments, SpecProperties) {
  EXPECT_EQ(MartingaleSpec::zero(4).bound(), 1.0);
  EXPECT_TRUE(MartingaleSpec::sign_feedback(4).centered());
  EXPECT_FALSE(MartingaleSpec::bernoulli(4, .5).centered());
  EXPECT_TRUE(MartingaleSpec::bernoulli(4, .5).unit_interval());
  EXPECT_DOUBLE_EQ(MartingaleSpec::scaled_uniform(4, .25).bound(), .25);
}

TEST(VerifierReport, Tolerance) {
  VerifierReport r;
  r.trials = 10000;
  r.stated_bound = 0.01;
  r.failure_rate = 0.01 + 3.0 * std::sqrt(0.01 / 10000) - 1e-12;
  EXPECT_TRUE(r.within_bound());
  r.failure_rate = 0.0131;
  EXPECT_FALSE(r.within_bound());
}
