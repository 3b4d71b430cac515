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

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dpvideo/status.h"

namespace dpvideo {
namespace {

constexpr double kCalibrationRelTol = 1e-4;
constexpr int kMaxBisections = 200;

void CheckDelta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw InvalidArgumentError("delta must lie in (0, 1)");
  }
}

double LogBinomial(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace

double RdpGaussian(double alpha, double sigma) {
  if (!(alpha > 1.0)) throw InvalidArgumentError("RDP order must be > 1");
  if (!(sigma > 0.0)) throw InvalidArgumentError("sigma must be > 0");
  return alpha / (2.0 * sigma * sigma);
}

double RdpSubsampledGaussian(double q, double sigma, int alpha) {
  if (!(q > 0.0 && q <= 1.0)) {
    throw InvalidArgumentError("sampling rate q must lie in (0, 1]");
  }
  if (!(sigma > 0.0)) throw InvalidArgumentError("sigma must be > 0");
  if (alpha < 2) throw InvalidArgumentError("RDP order must be an integer >= 2");
  if (q == 1.0) return RdpGaussian(alpha, sigma);

  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);
  const double inv_2s2 = 1.0 / (2.0 * sigma * sigma);
  std::vector<double> terms(alpha + 1);
  double max_term = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= alpha; ++k) {
    terms[k] = LogBinomial(alpha, k) + (alpha - k) * log_1mq + k * log_q +
               static_cast<double>(k) * (k - 1) * inv_2s2;
    max_term = std::max(max_term, terms[k]);
  }
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - max_term);
  const double log_moment = max_term + std::log(sum);
  return std::max(0.0, log_moment / (alpha - 1));
}

PrivacyAccountant::PrivacyAccountant(double q, double sigma)
    : q_(q), sigma_(sigma) {
  for (int a = kMinOrder; a <= kMaxOrder; ++a) {
    orders_.push_back(a);
    rdp_per_step_.push_back(RdpSubsampledGaussian(q, sigma, a));
  }
}

std::vector<double> PrivacyAccountant::AccumulatedRdp() const {
  std::vector<double> out(rdp_per_step_.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<double>(steps_) * rdp_per_step_[i];
  }
  return out;
}

EpsilonResult PrivacyAccountant::EpsilonAt(std::uint64_t steps,
                                           double delta) const {
  CheckDelta(delta);
  if (steps == 0) return {0.0, 0};
  const double log_inv_delta = -std::log(delta);
  EpsilonResult best{std::numeric_limits<double>::infinity(), 0};
  for (std::size_t i = 0; i < orders_.size(); ++i) {
    const double eps = static_cast<double>(steps) * rdp_per_step_[i] +
                       log_inv_delta / (orders_[i] - 1);
    if (eps < best.epsilon) best = {eps, orders_[i]};
  }
  return best;
}

EpsilonResult ComputeEpsilon(double q, double sigma, std::uint64_t steps,
                             double delta) {
  CheckDelta(delta);
  if (steps == 0) return {0.0, 0};
  return PrivacyAccountant(q, sigma).EpsilonAt(steps, delta);
}

double CalibrateSigma(double target_eps, double delta, double q,
                      std::uint64_t steps) {
  if (!(target_eps > 0.0)) {
    throw InvalidArgumentError("target epsilon must be > 0");
  }
  CheckDelta(delta);
  if (steps == 0) {
    throw InvalidArgumentError("cannot calibrate noise for zero steps");
  }
  auto eps_at = [&](double sigma) {
    return ComputeEpsilon(q, sigma, steps, delta).epsilon;
  };
  const double floor = target_eps * (1.0 - kCalibrationRelTol);
  double lo = kMinCalibratedSigma, hi = kMaxCalibratedSigma;
  const double eps_lo = eps_at(lo), eps_hi = eps_at(hi);
  if (eps_hi > target_eps || eps_lo < floor) {
    std::ostringstream msg;
    msg << "target epsilon " << target_eps << " is not reachable with sigma in ["
        << kMinCalibratedSigma << ", " << kMaxCalibratedSigma
        << "]; achievable epsilon range is [" << eps_hi << ", " << eps_lo
        << "] for q=" << q << ", steps=" << steps << ", delta=" << delta;
    throw InfeasibleError(msg.str());
  }
  if (eps_lo <= target_eps) return lo;
  // Invariant: eps(lo) > target >= eps(hi).
  double eps_best = eps_hi;
  for (int i = 0; i < kMaxBisections && eps_best < floor; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double eps_mid = eps_at(mid);
    if (eps_mid > target_eps) {
      lo = mid;
    } else {
      hi = mid;
      eps_best = eps_mid;
    }
  }
  if (eps_best < floor) {
    throw InfeasibleError("sigma bisection did not converge for target " +
                          std::to_string(target_eps));
  }
  return hi;
}

PrivacyBudget GroupPrivacy(const PrivacyBudget& budget, int k) {
  if (k < 1) throw InvalidArgumentError("group size must be >= 1");
  const double kd = static_cast<double>(k);
  return {kd * budget.epsilon,
          kd * std::exp((kd - 1.0) * budget.epsilon) * budget.delta};
}

}  // namespace dpvideo
