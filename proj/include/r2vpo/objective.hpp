#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "r2vpo/dual.hpp"

namespace r2vpo {

inline constexpr double kLogRatioClamp = 30.0;

// rho_t = pi_theta / pi_off for one batch.
struct RatioBatch {
  std::vector<double> log_ratio;  // after clamping to +-kLogRatioClamp
  std::vector<double> ratio;      // exp(log_ratio)
  std::vector<std::uint8_t> clamped;
  std::size_t clamp_events = 0;

  std::size_t size() const { return ratio.size(); }
};

RatioBatch compute_ratios(std::span<const double> logp_new, std::span<const double> logp_old);

struct ClipConfig {
  double eps_low = 0.2;
  double eps_high = 0.2;

  void validate() const;
};

// The objectives below are maximization targets averaged over the batch.
// When `d_ratio` is non-empty it receives dObjective/drho per sample.

// mean(rho A - lambda ((rho - 1)^2 - delta)). The +lambda*delta constant is kept.
double r2vpo_loss(const RatioBatch& ratios, std::span<const double> advantages, const DualState& dual,
                  std::span<double> d_ratio = {});

// mean(min(rho A, clip(rho, 1 - eps_low, 1 + eps_high) A)).
double clip_loss(const RatioBatch& ratios, std::span<const double> advantages, const ClipConfig& cfg,
                 std::span<double> d_ratio = {});

// mean(rho A).
double unclipped_loss(const RatioBatch& ratios, std::span<const double> advantages,
                      std::span<double> d_ratio = {});

// mean((rho - 1)^2).
double ratio_second_moment(const RatioBatch& ratios);
double ratio_second_moment(std::span<const double> ratio);

// Converts dObjective/drho into dObjective/dlog pi_theta (zero where clamped).
std::vector<double> ratio_to_log_prob_gradient(const RatioBatch& ratios, std::span<const double> d_ratio);

// Fraction of ratios outside the open interval (low, high).
double fraction_outside(std::span<const double> ratio, double low, double high);

struct ClipErrorReport {
  double j_unc = 0.0;
  double j_clip = 0.0;
  double abs_gap = 0.0;
  double a_max = 0.0;
  double eps = 0.0;
  double ratio_second_moment = 0.0;
  double bound_value = 0.0;  // a_max / eps * ratio_second_moment
  bool holds = false;        // abs_gap <= bound_value + 1e-12
};

ClipErrorReport check_clip_bound(const RatioBatch& ratios, std::span<const double> advantages, double eps);

inline constexpr std::string_view kClipReportCsvHeader = "j_unc,j_clip,gap,a_max,eps,second_moment,bound,holds";
std::string to_csv_row(const ClipErrorReport& report);

}  // namespace r2vpo
