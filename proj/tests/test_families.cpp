#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "cgfbound/families.hpp"

using namespace cgfbound;

namespace {

// Interior means used for the per-family property sweeps.
std::vector<double> interior_means(const BoundingFamily& f) {
  switch (f.kind()) {
    case FamilyKind::bernoulli: return {0.05, 0.2, 0.5, 0.8, 0.95};
    case FamilyKind::gaussian:
    case FamilyKind::laplace: return {-2.0, -0.5, 0.0, 0.7, 3.0};
    default: return {0.1, 0.5, 1.0, 2.5, 6.0};
  }
}

double variance_of(const BoundingFamily& f, double p) {
  double v = f.nuisance();
  switch (f.kind()) {
    case FamilyKind::bernoulli: return p * (1 - p);
    case FamilyKind::gaussian: return v;
    case FamilyKind::poisson: return p;
    case FamilyKind::gamma: return p * p / v;
    case FamilyKind::laplace: return 2 * v * v;
    case FamilyKind::inverse_gaussian: return p * p * p / v;
    case FamilyKind::negative_binomial: return p + p * p / v;
  }
  return NAN;
}

}  // namespace

TEST(Cgf, ClosedFormValues) {
  EXPECT_DOUBLE_EQ(BoundingFamily::gaussian(1).cgf(0, 2), 2.0);
  EXPECT_EQ(BoundingFamily::bernoulli().cgf(0.5, 0), 0.0);
  EXPECT_NEAR(BoundingFamily::laplace(1).cgf(1, 0.5), 0.78768207245178092744, 1e-15);
  EXPECT_NEAR(BoundingFamily::poisson().cgf(2, 1), 2 * (std::exp(1.0) - 1), 1e-14);
  EXPECT_NEAR(BoundingFamily::gamma(5).cgf(1, 1), -5 * std::log(0.8), 1e-14);
}

TEST(Cgf, ZeroAtOriginForEveryFamily) {
  for (const auto& f : all_family_kinds_default())
    for (double p : interior_means(f)) EXPECT_EQ(f.cgf(p, 0.0), 0.0) << f.spec();
}

TEST(Cgf, InfiniteOutsideDomainAndRejectsBadMeans) {
  EXPECT_EQ(BoundingFamily::gamma(5).cgf(1, 5), INFINITY);
  EXPECT_EQ(BoundingFamily::laplace(1).cgf(0, -1), INFINITY);
  EXPECT_TRUE(std::isfinite(BoundingFamily::inverse_gaussian(1).cgf(1, 0.5)));  // closed endpoint
  EXPECT_EQ(BoundingFamily::inverse_gaussian(1).cgf(1, 0.5000001), INFINITY);
  EXPECT_EQ(BoundingFamily::negative_binomial(3).cgf(1, std::log(4.0)), INFINITY);
  EXPECT_THROW(BoundingFamily::poisson().cgf(-1, 0.1), Error);
  EXPECT_THROW(BoundingFamily::bernoulli().cgf(1.5, 0.1), Error);
  EXPECT_THROW(BoundingFamily::gamma(0), Error);
}

TEST(Cgf, BernoulliStableForExtremeArguments) {
  auto b = BoundingFamily::bernoulli();
  EXPECT_NEAR(b.cgf(1.0, -42.0), -42.0, 1e-12);
  EXPECT_NEAR(b.cgf(0.0, 42.0), 0.0, 1e-12);
  EXPECT_NEAR(b.cgf(0.3, 1e-9), 0.3e-9 + 0.5 * 0.21e-18, 1e-25);
}

TEST(Cgf, SlopeAtZeroIsTheMean) {
  const double h = 1e-5;
  for (const auto& f : all_family_kinds_default())
    for (double p : interior_means(f)) {
      double slope = (f.cgf(p, h) - f.cgf(p, -h)) / (2 * h);
      EXPECT_NEAR(slope, p, 1e-6) << f.spec() << " p=" << p;
    }
}

TEST(Cramer, VanishesAtTheMean) {
  for (const auto& f : all_family_kinds_default())
    for (double p : interior_means(f)) EXPECT_NEAR(f.cramer(p, p), 0.0, 1e-15) << f.spec();
}

TEST(Cramer, ReferenceValues) {
  EXPECT_DOUBLE_EQ(BoundingFamily::gaussian(1).cramer(0, 1), 0.5);
  EXPECT_NEAR(BoundingFamily::laplace(1).cramer(0, 3), 1.4293624018229565067, 1e-14);
  EXPECT_NEAR(BoundingFamily::bernoulli().cramer(0.7, 0.3), 0.33891914415488144548, 1e-15);
  EXPECT_NEAR(BoundingFamily::inverse_gaussian(1).cramer(3, 1), 0.66666666666666666667, 1e-15);
  EXPECT_NEAR(BoundingFamily::inverse_gaussian(1).cramer(0.5, 2), 0.5625, 1e-15);
  EXPECT_NEAR(BoundingFamily::negative_binomial(3).cramer(1, 2), 0.19942702469689371365, 1e-15);
  EXPECT_NEAR(BoundingFamily::gamma(5).cramer(2, 1), 1.5342640972002734529, 1e-14);
}

TEST(Cramer, ZeroTrainingLossConvention) {
  EXPECT_DOUBLE_EQ(BoundingFamily::poisson().cramer(0, 2.5), 2.5);
  auto nb = BoundingFamily::negative_binomial(3);
  EXPECT_NEAR(nb.cramer(0, 2), 3 * std::log(5.0 / 3.0), 1e-14);
  EXPECT_NEAR(BoundingFamily::bernoulli().cramer(0, 0.4), -std::log(0.6), 1e-15);
}

TEST(Cramer, LaplaceSmoothThroughTheMean) {
  auto f = BoundingFamily::laplace(2);
  // Leading term (q - p)^2 / (4 b^2).
  for (double d : {1e-3, 1e-6, 1e-9}) {
    double c = f.cramer(1 + d, 1);
    EXPECT_NEAR(c / (d * d / 16), 1.0, 1e-3) << d;
  }
}

TEST(Cramer, NondecreasingInPAboveQ) {
  for (const auto& f : all_family_kinds_default()) {
    auto ms = interior_means(f);
    for (double q : ms) {
      double prev = 0;
      for (int i = 0; i <= 50; ++i) {
        double p = q + (f.bounded_loss() ? (1 - q) * i / 50.0 : 0.2 * i);
        if (f.bounded_loss() && p >= 1) break;
        double c = f.cramer(q, p);
        EXPECT_GE(c, prev - 1e-14) << f.spec() << " q=" << q << " p=" << p;
        prev = c;
      }
    }
  }
}

TEST(Cramer, PinskerDominance) {
  auto b = BoundingFamily::bernoulli();
  for (int i = 1; i < 40; ++i)
    for (int j = 1; j < 40; ++j) {
      double q = i / 40.0, p = j / 40.0;
      EXPECT_GE(b.cramer(q, p), 2 * (q - p) * (q - p) - 1e-15);
    }
}

TEST(Sample, DegenerateBernoulli) {
  auto x = BoundingFamily::bernoulli().sample(1.0, 5, 42);
  EXPECT_EQ(x, std::vector<double>(5, 1.0));
}

TEST(Sample, PoissonMeanAndGammaVariance) {
  auto x = BoundingFamily::poisson().sample(2.0, 1'000'000, 3);
  double m = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  EXPECT_NEAR(m, 2.0, 0.01);

  auto g = BoundingFamily::gamma(5).sample(1.0, 1'000'000, 4);
  double gm = std::accumulate(g.begin(), g.end(), 0.0) / g.size();
  double ss = 0;
  for (double v : g) ss += (v - gm) * (v - gm);
  EXPECT_NEAR(ss / (g.size() - 1), 0.2, 0.2 * 0.02);
}

TEST(Sample, MomentsForEveryFamily) {
  const std::size_t count = 200'000;
  for (const auto& f : all_family_kinds_default()) {
    double p = interior_means(f)[2];
    auto x = f.sample(p, count, 11);
    double m = std::accumulate(x.begin(), x.end(), 0.0) / count;
    double var = variance_of(f, p);
    EXPECT_NEAR(m, p, 5 * std::sqrt(var / count)) << f.spec();
    double ss = 0;
    for (double v : x) ss += (v - m) * (v - m);
    EXPECT_NEAR(ss / (count - 1) / var, 1.0, 0.05) << f.spec();
  }
}

TEST(Sample, ReproducibleAndStreamKeyed) {
  auto f = BoundingFamily::inverse_gaussian(2);
  EXPECT_EQ(f.sample(1.5, 100, 9, 0), f.sample(1.5, 100, 9, 0));
  EXPECT_NE(f.sample(1.5, 100, 9, 0), f.sample(1.5, 100, 9, 1));
  EXPECT_NE(f.sample(1.5, 100, 9, 0), f.sample(1.5, 100, 10, 0));
}

TEST(Sample, SupportRespected) {
  for (double v : BoundingFamily::negative_binomial(3).sample(2.0, 10000, 5)) {
    EXPECT_GE(v, 0.0);
    EXPECT_EQ(v, std::floor(v));
  }
  for (double v : BoundingFamily::inverse_gaussian(1).sample(2.0, 10000, 5)) EXPECT_GT(v, 0.0);
}

TEST(Spec, ParseRoundTrip) {
  for (const auto& f : all_family_kinds_default()) EXPECT_EQ(BoundingFamily::parse(f.spec()), f);
  EXPECT_EQ(BoundingFamily::parse("gaussian:sigma2=0.25"), BoundingFamily::gaussian(0.25));
  EXPECT_EQ(BoundingFamily::parse("negbin:r=3"), BoundingFamily::negative_binomial(3));
}

TEST(Spec, RejectsMalformed) {
  for (const char* s : {"gauss", "gaussian", "gaussian:k=1", "gamma:k=abc", "poisson:x=1", "laplace:b=-1"})
    EXPECT_THROW(BoundingFamily::parse(s), Error) << s;
}

TEST(TDomainTest, OneSidedVariant) {
  auto d = BoundingFamily::gamma(5).t_domain(2.0, Sidedness::nonneg_only);
  EXPECT_EQ(d.lower, 0.0);
  EXPECT_DOUBLE_EQ(d.upper, 2.5);
  EXPECT_TRUE(d.contains(0.0));
  EXPECT_FALSE(d.contains(-0.1));
  EXPECT_FALSE(d.contains(2.5));
}
