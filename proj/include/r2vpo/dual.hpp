#pragma once

#include <string_view>
#include <vector>

namespace r2vpo {

enum class DualMode { kFixed, kAdaptive };

DualMode parse_dual_mode(std::string_view text);
std::string_view to_string(DualMode mode);

struct DualRecord {
  long iteration = 0;
  double lambda = 0.0;
  double measured_second_moment = 0.0;
};

// Lagrange multiplier for the ratio second-moment constraint E[(rho-1)^2] <= delta.
struct DualState {
  double lambda = 0.0;
  double delta = 0.0;
  double eta_lambda = 5e-3;
  DualMode mode = DualMode::kFixed;
  std::vector<DualRecord> history;  // lambda recorded after each update
};

DualState initial_state(DualMode mode, double lambda0, double delta, double eta);

// Adaptive: lambda <- max(0, lambda - eta * (delta - measured)). Fixed: lambda
// unchanged. The new lambda is appended to history in both modes.
DualState update_lambda(DualState state, double measured_second_moment, long iteration);

}  // namespace r2vpo
