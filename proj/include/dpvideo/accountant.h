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

#ifndef DPVIDEO_ACCOUNTANT_H_
#define DPVIDEO_ACCOUNTANT_H_

#include <cstdint>
#include <span>
#include <vector>

namespace dpvideo {

// Integer Renyi orders tracked by the accountant, inclusive.
inline constexpr int kMinOrder = 2;
inline constexpr int kMaxOrder = 256;

// Bracket searched by CalibrateSigma.
inline constexpr double kMinCalibratedSigma = 0.3;
inline constexpr double kMaxCalibratedSigma = 100.0;

// RDP of order alpha of the Gaussian mechanism with sensitivity 1 and noise
// multiplier sigma: alpha / (2 sigma^2). Requires alpha > 1, sigma > 0.
double RdpGaussian(double alpha, double sigma);

// RDP of order alpha (integer >= 2) of the Poisson-subsampled Gaussian
// mechanism with sampling rate q:
//   1/(alpha-1) log sum_k C(alpha,k) (1-q)^(alpha-k) q^k e^{k(k-1)/(2 sigma^2)}
// evaluated with log-sum-exp. Requires 0 < q <= 1, sigma > 0.
double RdpSubsampledGaussian(double q, double sigma, int alpha);

struct EpsilonResult {
  double epsilon = 0.0;
  // Order achieving the minimum; 0 when no step has been taken.
  int best_order = 0;
};

// Running privacy ledger for repeated subsampled-Gaussian steps. The
// per-step RDP curve is computed once; composition multiplies it by the
// integer step count, so accounting s1 then s2 steps is exactly the same
// as accounting s1 + s2.
class PrivacyAccountant {
 public:
  PrivacyAccountant(double q, double sigma);

  void Step(std::uint64_t count = 1) { steps_ += count; }

  double q() const { return q_; }
  double sigma() const { return sigma_; }
  std::uint64_t steps() const { return steps_; }
  // rdp_per_step()[i] is the RDP of order orders()[i].
  std::span<const int> orders() const { return orders_; }
  std::span<const double> rdp_per_step() const { return rdp_per_step_; }
  std::vector<double> AccumulatedRdp() const;

  // min over orders of steps * rdp(alpha) + log(1/delta) / (alpha - 1);
  // exactly 0 when steps == 0. Requires 0 < delta < 1.
  EpsilonResult Epsilon(double delta) const { return EpsilonAt(steps_, delta); }
  EpsilonResult EpsilonAt(std::uint64_t steps, double delta) const;

 private:
  double q_;
  double sigma_;
  std::uint64_t steps_ = 0;
  std::vector<int> orders_;
  std::vector<double> rdp_per_step_;
};

EpsilonResult ComputeEpsilon(double q, double sigma, std::uint64_t steps,
                             double delta);

// Finds sigma in [kMinCalibratedSigma, kMaxCalibratedSigma] such that ComputeEpsilon(q, sigma, steps, delta) lies in
// [target_eps * (1 - 1e-4), target_eps], found by bisection. Throws
// InfeasibleError naming the achievable epsilon range when the target is
// outside it.
double CalibrateSigma(double target_eps, double delta, double q,
                      std::uint64_t steps);

struct PrivacyBudget {
  double epsilon = 0.0;
  double delta = 0.0;
};

// (epsilon, delta)-DP for single entries implies
// (k epsilon, k e^{(k-1) epsilon} delta)-DP for groups of k entries.
// The returned delta may reach or exceed 1, in which case the bound is
// vacuous.
PrivacyBudget GroupPrivacy(const PrivacyBudget& budget, int k);

}  // namespace dpvideo

#endif  // DPVIDEO_ACCOUNTANT_H_
