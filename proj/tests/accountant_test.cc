// Copyright 2026 The dpvideo Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "dpvideo/accountant.h"

#include <cmath>
#include <limits>
#include <string>

#include "dpvideo/random.h"
#include "dpvideo/status.h"
#include "gtest/gtest.h"
#include "oracles.h"

namespace dpvideo {
namespace {

using ::dpvideo::testing::NumericRenyiDivergence;

TEST(RdpGaussianTest, ClosedFormValues) {
  EXPECT_DOUBLE_EQ(RdpGaussian(2, 1), 1.0);
  EXPECT_DOUBLE_EQ(RdpGaussian(3, 2), 0.375);
}

TEST(RdpGaussianTest, ClosedFormMatchesQuadrature) {
  EXPECT_NEAR(NumericRenyiDivergence(1.0, 1.0, 2), 1.0, 1e-9);
  EXPECT_NEAR(NumericRenyiDivergence(1.0, 2.0, 3), 0.375, 1e-9);
}

TEST(RdpGaussianTest, DecreasesInSigma) {
  double previous = RdpGaussian(4, 0.5);
  for (double sigma = 1.0; sigma < 1e4; sigma *= 2) {
    const double v = RdpGaussian(4, sigma);
    EXPECT_LT(v, previous);
    previous = v;
  }
  EXPECT_LT(previous, 1e-6);
}

TEST(RdpGaussianTest, RejectsBadDomain) {
  EXPECT_THROW(RdpGaussian(1.0, 1.0), InvalidArgumentError);
  EXPECT_THROW(RdpGaussian(2.0, 0.0), InvalidArgumentError);
}

TEST(SubsampledGaussianTest, FullSamplingIsPlainGaussian) {
  EXPECT_DOUBLE_EQ(RdpSubsampledGaussian(1.0, 1.0, 2), 1.0);
  for (int alpha : {2, 5, 17, 256}) {
    for (double sigma : {0.5, 1.3, 4.0}) {
      EXPECT_NEAR(RdpSubsampledGaussian(1.0, sigma, alpha),
                  alpha / (2 * sigma * sigma), 1e-9);
    }
  }
}

TEST(SubsampledGaussianTest, VanishesAsSamplingRateVanishes) {
  for (int alpha : {2, 8, 32}) {
    EXPECT_LT(RdpSubsampledGaussian(1e-12, 1.0, alpha), 1e-10);
  }
}

TEST(SubsampledGaussianTest, SmallRateMatchesQuadrature) {
  const double binomial = RdpSubsampledGaussian(0.01, 1.0, 2);
  const double numeric = NumericRenyiDivergence(0.01, 1.0, 2);
  EXPECT_GE(binomial, numeric - 1e-6);
  EXPECT_LE(std::abs(binomial - numeric), 0.05 * numeric);
}

TEST(SubsampledGaussianTest, UpperBoundsQuadratureOnRandomTriples) {
  PhiloxEngine rng(31, Stream::kTest);
  for (int trial = 0; trial < 100; ++trial) {
    const double q = 0.001 + 0.499 * rng.Uniform();
    const double sigma = 0.5 + 3.5 * rng.Uniform();
    const int alpha = 2 + static_cast<int>(rng.Below(31));
    const double binomial = RdpSubsampledGaussian(q, sigma, alpha);
    const double numeric = NumericRenyiDivergence(q, sigma, alpha);
    EXPECT_GE(binomial, numeric - 1e-9)
        << "q=" << q << " sigma=" << sigma << " alpha=" << alpha;
    if (q <= 0.05) {
      EXPECT_LE(std::abs(binomial - numeric), 0.05 * numeric)
          << "q=" << q << " sigma=" << sigma << " alpha=" << alpha;
    }
  }
}

TEST(SubsampledGaussianTest, PerStepCurveIsNonNegativeAndNonDecreasing) {
  for (double q : {0.001, 0.05, 0.3, 1.0}) {
    for (double sigma : {0.6, 1.0, 5.0}) {
      PrivacyAccountant acc(q, sigma);
      ASSERT_EQ(acc.orders().size(), 255u);
      EXPECT_EQ(acc.orders().front(), 2);
      EXPECT_EQ(acc.orders().back(), 256);
      double previous = 0.0;
      for (double v : acc.rdp_per_step()) {
        EXPECT_GE(v, previous);
        previous = v;
      }
      EXPECT_TRUE(std::isfinite(previous));
    }
  }
}

TEST(SubsampledGaussianTest, RejectsBadDomain) {
  EXPECT_THROW(RdpSubsampledGaussian(0.0, 1.0, 2), InvalidArgumentError);
  EXPECT_THROW(RdpSubsampledGaussian(1.5, 1.0, 2), InvalidArgumentError);
  EXPECT_THROW(RdpSubsampledGaussian(0.1, 1.0, 1), InvalidArgumentError);
}

TEST(EpsilonTest, ZeroStepsIsZero) {
  PrivacyAccountant acc(0.1, 1.0);
  EXPECT_EQ(acc.Epsilon(1e-5).epsilon, 0.0);
  EXPECT_EQ(ComputeEpsilon(0.5, 0.7, 0, 0.3).epsilon, 0.0);
}

TEST(EpsilonTest, MatchesGridMinimumOracle) {
  // min over integer alpha of alpha / 2 + ln(1e5) / (alpha - 1).
  double best = std::numeric_limits<double>::infinity();
  int best_alpha = 0;
  for (int alpha = 2; alpha <= 256; ++alpha) {
    const double v = alpha / 2.0 + std::log(1e5) / (alpha - 1);
    if (v < best) {
      best = v;
      best_alpha = alpha;
    }
  }
  EpsilonResult r = ComputeEpsilon(1.0, 1.0, 1, 1e-5);
  EXPECT_NEAR(r.epsilon, best, 1e-12);
  EXPECT_EQ(r.best_order, best_alpha);
  EXPECT_NEAR(r.epsilon, 5.302585092994046, 1e-12);
  EXPECT_EQ(r.best_order, 6);
}

TEST(EpsilonTest, DoublingStepsIncreasesEpsilon) {
  for (std::uint64_t steps = 1; steps < 100000; steps *= 2) {
    EXPECT_LT(ComputeEpsilon(0.05, 1.2, steps, 1e-5).epsilon,
              ComputeEpsilon(0.05, 1.2, 2 * steps, 1e-5).epsilon);
  }
}

TEST(EpsilonTest, MonotoneOnRandomGrid) {
  PhiloxEngine rng(5, Stream::kTest);
  for (int trial = 0; trial < 60; ++trial) {
    const double q = 0.001 + 0.5 * rng.Uniform();
    const double sigma = 0.5 + 4.0 * rng.Uniform();
    const std::uint64_t steps = 1 + rng.Below(2000);
    const double delta = std::pow(10.0, -3.0 - 5.0 * rng.Uniform());
    const double eps = ComputeEpsilon(q, sigma, steps, delta).epsilon;
    EXPECT_LE(eps, ComputeEpsilon(q, sigma, steps + 1 + rng.Below(500), delta)
                       .epsilon);
    EXPECT_LE(eps, ComputeEpsilon(std::min(1.0, q * 1.3), sigma, steps, delta)
                       .epsilon);
    EXPECT_GE(eps, ComputeEpsilon(q, sigma * 1.2, steps, delta).epsilon);
    EXPECT_GE(eps, ComputeEpsilon(q, sigma, steps, delta * 3).epsilon);
  }
}

TEST(EpsilonTest, CompositionIsAdditive) {
  PrivacyAccountant split(0.02, 0.9);
  PrivacyAccountant once(0.02, 0.9);
  split.Step(137);
  split.Step(263);
  once.Step(400);
  EXPECT_EQ(split.Epsilon(1e-5).epsilon, once.Epsilon(1e-5).epsilon);
  EXPECT_EQ(split.AccumulatedRdp(), once.AccumulatedRdp());
  for (std::size_t i = 0; i < once.orders().size(); ++i) {
    EXPECT_EQ(once.AccumulatedRdp()[i], 400.0 * once.rdp_per_step()[i]);
  }
}

TEST(EpsilonTest, RejectsBadDelta) {
  EXPECT_THROW(ComputeEpsilon(0.1, 1.0, 10, 0.0), InvalidArgumentError);
  EXPECT_THROW(ComputeEpsilon(0.1, 1.0, 10, 1.0), InvalidArgumentError);
}

TEST(CalibrateTest, ReAccountingHitsTarget) {
  for (double target : {0.5, 1.0, 2.0, 5.0, 8.0}) {
    const double sigma = CalibrateSigma(target, 1e-5, 0.05, 400);
    const double eps = ComputeEpsilon(0.05, sigma, 400, 1e-5).epsilon;
    EXPECT_LE(eps, target);
    EXPECT_LE((target - eps) / target, 1e-4);
  }
}

TEST(CalibrateTest, LargerTargetNeedsLessNoise) {
  double previous = std::numeric_limits<double>::infinity();
  for (double target : {0.5, 1.0, 2.0, 4.0, 8.0}) {
    const double sigma = CalibrateSigma(target, 1e-5, 0.01, 1000);
    EXPECT_LT(sigma, previous);
    previous = sigma;
  }
}

TEST(CalibrateTest, MatchesIndependentBisection) {
  auto eps_closed_form = [](double sigma) {
    double best = std::numeric_limits<double>::infinity();
    for (int alpha = 2; alpha <= 256; ++alpha) {
      best = std::min(best, alpha / (2 * sigma * sigma) +
                                std::log(1e5) / (alpha - 1));
    }
    return best;
  };
  double lo = 0.3, hi = 100.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (eps_closed_form(mid) > 5.0 ? lo : hi) = mid;
  }
  const double sigma = CalibrateSigma(5.0, 1e-5, 1.0, 1);
  EXPECT_NEAR(sigma, hi, 1e-3 * hi);
  EXPECT_LE(eps_closed_form(sigma), 5.0);
  EXPECT_GE(eps_closed_form(sigma), 5.0 * (1 - 1e-4));
}

TEST(CalibrateTest, InfeasibleTargetStatesRange) {
  try {
    CalibrateSigma(1e-4, 1e-5, 0.5, 100000);
    FAIL() << "expected InfeasibleError";
  } catch (const InfeasibleError& e) {
    EXPECT_NE(std::string(e.what()).find("achievable epsilon range"),
              std::string::npos);
  }
  EXPECT_THROW(CalibrateSigma(1e6, 1e-5, 0.01, 1), InfeasibleError);
  EXPECT_THROW(CalibrateSigma(0.0, 1e-5, 0.01, 10), InvalidArgumentError);
}

TEST(GroupPrivacyTest, SingletonIsUnchanged) {
  PrivacyBudget b = GroupPrivacy({0.7, 1e-5}, 1);
  EXPECT_EQ(b.epsilon, 0.7);
  EXPECT_EQ(b.delta, 1e-5);
}

TEST(GroupPrivacyTest, PairOfHalfEpsilon) {
  PrivacyBudget b = GroupPrivacy({0.5, 1e-6}, 2);
  EXPECT_DOUBLE_EQ(b.epsilon, 1.0);
  EXPECT_NEAR(b.delta, 3.297442541400256e-06, 1e-20);
}

TEST(GroupPrivacyTest, EpsilonIsLinearInGroupSize) {
  for (int k = 1; k <= 16; ++k) {
    EXPECT_DOUBLE_EQ(GroupPrivacy({0.3, 1e-5}, k).epsilon, 0.3 * k);
  }
  EXPECT_THROW(GroupPrivacy({0.3, 1e-5}, 0), InvalidArgumentError);
}

}  // namespace
}  // namespace dpvideo
