#include "r2vpo/dual.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace r2vpo {

DualMode parse_dual_mode(std::string_view text) {
  if (text == "fixed") return DualMode::kFixed;
  if (text == "adaptive") return DualMode::kAdaptive;
  throw std::invalid_argument("unknown dual mode '" + std::string(text) + "' (expected fixed|adaptive)");
}

std::string_view to_string(DualMode mode) {
  return mode == DualMode::kFixed ? "fixed" : "adaptive";
}

DualState initial_state(DualMode mode, double lambda0, double delta, double eta) {
  if (mode != DualMode::kFixed && mode != DualMode::kAdaptive) throw std::invalid_argument("invalid dual mode");
  if (!(lambda0 >= 0.0) || !std::isfinite(lambda0)) throw std::invalid_argument("initial lambda must be >= 0");
  if (!(delta >= 0.0)) throw std::invalid_argument("delta must be >= 0");
  if (!(eta > 0.0)) throw std::invalid_argument("dual step must be positive");
  DualState state;
  state.lambda = lambda0;
  state.delta = delta;
  state.eta_lambda = eta;
  state.mode = mode;
  return state;
}

DualState update_lambda(DualState state, double measured_second_moment, long iteration) {
  if (!(measured_second_moment >= 0.0)) {
    throw std::invalid_argument("measured second moment must be non-negative");
  }
  if (state.mode == DualMode::kAdaptive) {
    state.lambda = std::max(0.0, state.lambda - state.eta_lambda * (state.delta - measured_second_moment));
  }
  state.history.push_back({iteration, state.lambda, measured_second_moment});
  return state;
}

}  // namespace r2vpo
