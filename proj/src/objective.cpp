#include "r2vpo/objective.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "r2vpo/errors.hpp"

namespace r2vpo {

namespace {

void check_shapes(const RatioBatch& ratios, std::span<const double> advantages, std::span<double> d_ratio) {
  if (ratios.size() == 0) throw std::invalid_argument("empty batch");
  if (advantages.size() != ratios.size()) {
    throw std::invalid_argument("ratio and advantage batches differ in length");
  }
  if (!d_ratio.empty() && d_ratio.size() != ratios.size()) {
    throw std::invalid_argument("gradient buffer length mismatch");
  }
}

}  // namespace

RatioBatch compute_ratios(std::span<const double> logp_new, std::span<const double> logp_old) {
  if (logp_new.size() != logp_old.size()) throw std::invalid_argument("log-prob batches differ in length");
  RatioBatch out;
  const std::size_t n = logp_new.size();
  out.log_ratio.resize(n);
  out.ratio.resize(n);
  out.clamped.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    double lr = logp_new[i] - logp_old[i];
    if (!std::isfinite(logp_new[i]) || !std::isfinite(logp_old[i])) {
      throw NumericError("non-finite log-probability at sample " + std::to_string(i));
    }
    if (lr > kLogRatioClamp || lr < -kLogRatioClamp) {
      lr = std::clamp(lr, -kLogRatioClamp, kLogRatioClamp);
      out.clamped[i] = 1;
      ++out.clamp_events;
    }
    out.log_ratio[i] = lr;
    out.ratio[i] = std::exp(lr);
  }
  return out;
}

void ClipConfig::validate() const {
  if (!(eps_low > 0.0 && eps_low < 1.0)) throw ConfigError("clip_eps_low", "clip_eps_low must lie in (0, 1)");
  if (!(eps_high > 0.0)) throw ConfigError("clip_eps_high", "clip_eps_high must be positive");
}

double r2vpo_loss(const RatioBatch& ratios, std::span<const double> advantages, const DualState& dual,
                  std::span<double> d_ratio) {
  check_shapes(ratios, advantages, d_ratio);
  if (!(dual.lambda >= 0.0)) throw std::invalid_argument("lambda must be non-negative");
  const double n = static_cast<double>(ratios.size());
  const double lambda = dual.lambda;
  double total = 0.0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    const double rho = ratios.ratio[i];
    const double dev = rho - 1.0;
    total += rho * advantages[i] - lambda * (dev * dev - dual.delta);
    // Regularized advantage A - 2 lambda (rho - 1).
    if (!d_ratio.empty()) d_ratio[i] = (advantages[i] - 2.0 * lambda * dev) / n;
  }
  return total / n;
}

double clip_loss(const RatioBatch& ratios, std::span<const double> advantages, const ClipConfig& cfg,
                 std::span<double> d_ratio) {
  check_shapes(ratios, advantages, d_ratio);
  const double n = static_cast<double>(ratios.size());
  const double low = 1.0 - cfg.eps_low;
  const double high = 1.0 + cfg.eps_high;
  double total = 0.0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    const double rho = ratios.ratio[i];
    const double a = advantages[i];
    const double unclipped = rho * a;
    const double clipped = std::clamp(rho, low, high) * a;
    // The unclipped branch carries gradient; the clipped branch is constant in rho.
    const bool take_unclipped = unclipped <= clipped;
    total += take_unclipped ? unclipped : clipped;
    if (!d_ratio.empty()) d_ratio[i] = take_unclipped ? a / n : 0.0;
  }
  return total / n;
}

double unclipped_loss(const RatioBatch& ratios, std::span<const double> advantages, std::span<double> d_ratio) {
  check_shapes(ratios, advantages, d_ratio);
  const double n = static_cast<double>(ratios.size());
  double total = 0.0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    total += ratios.ratio[i] * advantages[i];
    if (!d_ratio.empty()) d_ratio[i] = advantages[i] / n;
  }
  return total / n;
}

double ratio_second_moment(std::span<const double> ratio) {
  if (ratio.empty()) throw std::invalid_argument("empty batch");
  double total = 0.0;
  for (double r : ratio) total += (r - 1.0) * (r - 1.0);
  return total / static_cast<double>(ratio.size());
}

double ratio_second_moment(const RatioBatch& ratios) { return ratio_second_moment(ratios.ratio); }

std::vector<double> ratio_to_log_prob_gradient(const RatioBatch& ratios, std::span<const double> d_ratio) {
  if (d_ratio.size() != ratios.size()) throw std::invalid_argument("gradient buffer length mismatch");
  std::vector<double> out(d_ratio.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ratios.clamped[i] ? 0.0 : d_ratio[i] * ratios.ratio[i];
  return out;
}

double fraction_outside(std::span<const double> ratio, double low, double high) {
  if (ratio.empty()) return 0.0;
  std::size_t outside = 0;
  for (double r : ratio) outside += (r <= low || r >= high) ? 1 : 0;
  return static_cast<double>(outside) / static_cast<double>(ratio.size());
}

ClipErrorReport check_clip_bound(const RatioBatch& ratios, std::span<const double> advantages, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("clip range must lie in (0, 1)");
  ClipErrorReport r;
  r.eps = eps;
  r.j_unc = unclipped_loss(ratios, advantages);
  r.j_clip = clip_loss(ratios, advantages, ClipConfig{eps, eps});
  r.abs_gap = std::abs(r.j_unc - r.j_clip);
  for (double a : advantages) r.a_max = std::max(r.a_max, std::abs(a));
  r.ratio_second_moment = ratio_second_moment(ratios);
  r.bound_value = r.a_max / eps * r.ratio_second_moment;
  r.holds = r.abs_gap <= r.bound_value + 1e-12;
  return r;
}

std::string to_csv_row(const ClipErrorReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << r.j_unc << ',' << r.j_clip << ',' << r.abs_gap << ',' << r.a_max << ',' << r.eps << ','
      << r.ratio_second_moment << ',' << r.bound_value << ',' << (r.holds ? 1 : 0);
  return out.str();
}

}  // namespace r2vpo
