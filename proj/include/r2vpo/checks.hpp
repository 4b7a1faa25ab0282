#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "r2vpo/divergence.hpp"

namespace r2vpo::checks {

// Second-order agreement of one sweep: rows with ratio_variance <=
// variance_limit must have relative_error <= tolerance. Chi-squared rows are
// held to 1e-10 at every variance.
struct AgreementCheck {
  std::size_t rows_checked = 0;
  double worst_relative_error = 0.0;
  double worst_ratio_variance = 0.0;
  bool passed = true;
};

inline constexpr double kAgreementVarianceLimit = 1e-2;
inline constexpr double kAgreementTolerance = 0.05;
inline constexpr double kChiSquaredTolerance = 1e-10;

AgreementCheck check_agreement(divergence::DivergenceGenerator gen, std::span<const divergence::SweepRow> rows,
                               double variance_limit = kAgreementVarianceLimit,
                               double tolerance = kAgreementTolerance);

// Mean shifts of the Gaussian sweep written by verify-divergence.
std::vector<double> gaussian_sweep_scales();

// Ratio variances at which each random discrete pair is evaluated.
std::vector<double> discrete_sweep_variances();

inline constexpr std::size_t kDiscreteSupport = 64;

struct DiscreteFamilyReport {
  divergence::Kind kind{};
  std::size_t pairs = 0;
  std::size_t failing_pairs = 0;
  double worst_relative_error = 0.0;
  double worst_ratio_variance = 0.0;
};

// `pairs` random perturbation pairs on `support` outcomes, one report per generator.
std::vector<DiscreteFamilyReport> discrete_family_check(std::uint64_t seed, std::size_t pairs,
                                                        std::size_t support = kDiscreteSupport);

// Analytic policy gradient of the variance-regularized objective against
// central differences on random small Gaussian policies.
// Parameters whose analytic gradient is below the floor are compared
// absolutely; the rest by |g - g_fd| / max(|g|, |g_fd|).
inline constexpr double kGradcheckAbsoluteFloor = 1e-8;

struct GradcheckReport {
  int nets = 0;
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;  // over parameters below the floor
  int worst_net = -1;

  bool passed(double relative_tolerance) const {
    return max_relative_error <= relative_tolerance && max_absolute_error <= kGradcheckAbsoluteFloor;
  }
};

GradcheckReport gradcheck_suite(std::uint64_t seed, int nets, double h = 1e-5);

// Randomized clip-error bound trials: log ratio ~ N(0, sigma^2) with sigma in
// [0.01, 0.5], advantages uniform in [-2, 2], eps in {0.1, 0.2, 0.3}.
struct BoundReport {
  int trials = 0;
  int violations = 0;
  double max_gap_over_bound = 0.0;
  std::string first_violation;  // CSV row of the first violating trial
};

BoundReport clip_bound_trials(std::uint64_t seed, int trials);

}  // namespace r2vpo::checks
