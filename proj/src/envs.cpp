#include "r2vpo/envs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "r2vpo/errors.hpp"
#include "r2vpo/rng.hpp"

namespace r2vpo::envs {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_angle(double theta) { return std::remainder(theta, kTwoPi); }

struct Transition {
  EnvState next;
  double reward = 0.0;
  bool done = false;
  bool clamped = false;
};

double clamp_dim(double a, const EnvConfig& cfg, std::size_t d, bool& clamped) {
  if (!std::isfinite(a)) throw NumericError("non-finite action in dimension " + std::to_string(d));
  const double c = std::clamp(a, cfg.action_low[d], cfg.action_high[d]);
  clamped = clamped || c != a;
  return c;
}

Transition advance(const EnvState& s, std::span<const double> action, const EnvConfig& cfg) {
  if (action.size() != static_cast<std::size_t>(cfg.act_dim())) {
    throw std::invalid_argument("action has " + std::to_string(action.size()) + " dims, env expects " +
                                std::to_string(cfg.act_dim()));
  }
  Transition t;
  t.next = s;
  auto& x = t.next.x;
  switch (cfg.kind) {
    case EnvKind::kPendulumSwingUp: {
      const double u = clamp_dim(action[0], cfg, 0, t.clamped);
      const double acc = pendulum_acceleration(x[0], x[1], u, cfg);
      x[1] = std::clamp(x[1] + acc * cfg.dt, -cfg.max_speed, cfg.max_speed);
      x[0] = wrap_angle(x[0] + x[1] * cfg.dt);
      t.reward = 0.5 * (1.0 + std::cos(x[0]));
      break;
    }
    case EnvKind::kCartpoleSwingUpSparse: {
      const double force = clamp_dim(action[0], cfg, 0, t.clamped);
      const double total = cfg.cart_mass + cfg.pole_mass;
      const double pml = cfg.pole_mass * cfg.pole_half_length;
      const double sin_t = std::sin(x[2]);
      const double cos_t = std::cos(x[2]);
      const double temp = (force + pml * x[3] * x[3] * sin_t) / total;
      const double theta_acc = (cfg.gravity * sin_t - cos_t * temp) /
                               (cfg.pole_half_length * (4.0 / 3.0 - cfg.pole_mass * cos_t * cos_t / total));
      const double x_acc = temp - pml * theta_acc * cos_t / total;
      x[1] += x_acc * cfg.dt;
      x[0] += x[1] * cfg.dt;
      x[3] += theta_acc * cfg.dt;
      x[2] = wrap_angle(x[2] + x[3] * cfg.dt);
      t.reward = (std::cos(x[2]) > 0.95 && std::abs(x[0]) < 1.0) ? 1.0 : 0.0;
      break;
    }
    case EnvKind::kPointReacherSparse: {
      for (std::size_t d = 0; d < 2; ++d) {
        const double f = clamp_dim(action[d], cfg, d, t.clamped);
        x[2 + d] += (f - cfg.velocity_damping * x[2 + d]) * cfg.dt;
        x[d] += x[2 + d] * cfg.dt;
      }
      const double dist = std::hypot(x[0] - x[4], x[1] - x[5]);
      t.reward = dist < cfg.goal_tolerance ? 1.0 : 0.0;
      break;
    }
  }
  t.next.step = s.step + 1;
  t.done = t.next.step >= cfg.episode_length;
  return t;
}

}  // namespace

EnvKind parse_env_kind(std::string_view name) {
  if (name == "pendulum") return EnvKind::kPendulumSwingUp;
  if (name == "cartpole-sparse") return EnvKind::kCartpoleSwingUpSparse;
  if (name == "reacher-sparse") return EnvKind::kPointReacherSparse;
  throw std::invalid_argument("unknown env '" + std::string(name) +
                              "' (expected pendulum|cartpole-sparse|reacher-sparse)");
}

std::string_view to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::kPendulumSwingUp: return "pendulum";
    case EnvKind::kCartpoleSwingUpSparse: return "cartpole-sparse";
    case EnvKind::kPointReacherSparse: return "reacher-sparse";
  }
  return "unknown";
}

EnvConfig EnvConfig::defaults(EnvKind kind) {
  EnvConfig cfg;
  cfg.kind = kind;
  switch (kind) {
    case EnvKind::kPendulumSwingUp:
      cfg.dt = 0.02;
      cfg.episode_length = 1000;
      cfg.action_low = {-2.0};
      cfg.action_high = {2.0};
      break;
    case EnvKind::kCartpoleSwingUpSparse:
      cfg.dt = 0.02;
      cfg.episode_length = 1000;
      cfg.action_low = {-10.0};
      cfg.action_high = {10.0};
      break;
    case EnvKind::kPointReacherSparse:
      cfg.dt = 0.05;
      cfg.episode_length = 400;
      cfg.action_low = {-1.0, -1.0};
      cfg.action_high = {1.0, 1.0};
      break;
  }
  return cfg;
}

int EnvConfig::obs_dim() const {
  switch (kind) {
    case EnvKind::kPendulumSwingUp: return 3;
    case EnvKind::kCartpoleSwingUpSparse: return 5;
    case EnvKind::kPointReacherSparse: return 6;
  }
  return 0;
}

int EnvConfig::act_dim() const { return kind == EnvKind::kPointReacherSparse ? 2 : 1; }

void EnvConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigError("dt", "dt must be positive");
  if (episode_length < 1) throw ConfigError("episode_length", "episode_length must be positive");
  if (action_low.size() != static_cast<std::size_t>(act_dim()) || action_high.size() != action_low.size()) {
    throw ConfigError("action_bounds", "action bounds do not match the action dimension");
  }
  for (std::size_t d = 0; d < action_low.size(); ++d) {
    if (!(action_low[d] < action_high[d])) throw ConfigError("action_bounds", "action bounds need low < high");
  }
}

ResetResult reset(const EnvConfig& cfg, std::uint64_t seed) {
  Rng rng(splitmix64(seed));
  EnvState s;
  s.seed = seed;
  switch (cfg.kind) {
    case EnvKind::kPendulumSwingUp:
      s.x[0] = uniform(rng, std::numbers::pi - 0.1, std::numbers::pi + 0.1);
      break;
    case EnvKind::kCartpoleSwingUpSparse:
      s.x[2] = std::numbers::pi + uniform(rng, -0.05, 0.05);
      break;
    case EnvKind::kPointReacherSparse: {
      const double angle = uniform(rng, 0.0, kTwoPi);
      s.x[4] = cfg.goal_radius * std::cos(angle);
      s.x[5] = cfg.goal_radius * std::sin(angle);
      break;
    }
  }
  return {s, observe(s, cfg)};
}

void observe(const EnvState& s, const EnvConfig& cfg, std::span<double> out) {
  if (out.size() != static_cast<std::size_t>(cfg.obs_dim())) throw std::invalid_argument("observation size mismatch");
  const auto& x = s.x;
  switch (cfg.kind) {
    case EnvKind::kPendulumSwingUp:
      out[0] = std::cos(x[0]);
      out[1] = std::sin(x[0]);
      out[2] = x[1];
      break;
    case EnvKind::kCartpoleSwingUpSparse:
      out[0] = x[0];
      out[1] = x[1];
      out[2] = std::cos(x[2]);
      out[3] = std::sin(x[2]);
      out[4] = x[3];
      break;
    case EnvKind::kPointReacherSparse:
      out[0] = x[0];
      out[1] = x[1];
      out[2] = x[2];
      out[3] = x[3];
      out[4] = x[4] - x[0];
      out[5] = x[5] - x[1];
      break;
  }
}

Eigen::VectorXd observe(const EnvState& state, const EnvConfig& cfg) {
  Eigen::VectorXd obs(cfg.obs_dim());
  observe(state, cfg, std::span<double>(obs.data(), static_cast<std::size_t>(obs.size())));
  return obs;
}

StepResult step(const EnvState& state, std::span<const double> action, const EnvConfig& cfg) {
  Transition t = advance(state, action, cfg);
  StepResult r;
  r.observation = observe(t.next, cfg);
  r.next = t.next;
  r.reward = t.reward;
  r.done = t.done;
  r.action_clamped = t.clamped;
  return r;
}

double pendulum_acceleration(double theta, double theta_dot, double u, const EnvConfig& cfg) {
  const double torque = std::clamp(u, cfg.action_low[0], cfg.action_high[0]);
  return 1.5 * cfg.gravity / cfg.length * std::sin(theta) +
         3.0 / (cfg.mass * cfg.length * cfg.length) * torque - cfg.damping * theta_dot;
}

double pendulum_energy(const EnvState& s, const EnvConfig& cfg) {
  const double inertia = cfg.mass * cfg.length * cfg.length / 3.0;
  return 0.5 * inertia * s.x[1] * s.x[1] + cfg.mass * cfg.gravity * 0.5 * cfg.length * std::cos(s.x[0]);
}

double pendulum_oracle_action(const EnvState& s, const EnvConfig& cfg) {
  const double theta = wrap_angle(s.x[0]);
  const double omega = s.x[1];
  const double u_max = cfg.action_high[0];
  double u = 0.0;
  if (std::abs(theta) < 0.35) {
    u = -(10.0 * theta + 2.0 * omega);
  } else {
    const double target = cfg.mass * cfg.gravity * 0.5 * cfg.length;
    const double push = omega >= 0.0 ? u_max : -u_max;
    u = pendulum_energy(s, cfg) < target ? push : -push;
  }
  return std::clamp(u, cfg.action_low[0], u_max);
}

namespace {

VectorStep prepare(std::span<const EnvState> states, const Eigen::MatrixXd& actions, const EnvConfig& cfg) {
  if (static_cast<std::size_t>(actions.cols()) != states.size() || actions.rows() != cfg.act_dim()) {
    throw std::invalid_argument("vectorized step: " + std::to_string(states.size()) + " states but actions are " +
                                std::to_string(actions.rows()) + "x" + std::to_string(actions.cols()));
  }
  VectorStep out;
  out.next.resize(states.size());
  out.observations.resize(cfg.obs_dim(), static_cast<Eigen::Index>(states.size()));
  out.rewards.resize(states.size());
  out.dones.resize(states.size());
  return out;
}

void step_one(std::span<const EnvState> states, const Eigen::MatrixXd& actions, const EnvConfig& cfg,
              VectorStep& out, std::size_t i, std::vector<std::uint8_t>& clamped) {
  const auto c = static_cast<Eigen::Index>(i);
  const Transition t = advance(states[i], {actions.col(c).data(), static_cast<std::size_t>(actions.rows())}, cfg);
  out.next[i] = t.next;
  out.rewards[i] = t.reward;
  out.dones[i] = t.done ? 1 : 0;
  clamped[i] = t.clamped ? 1 : 0;
  observe(t.next, cfg, {out.observations.col(c).data(), static_cast<std::size_t>(out.observations.rows())});
}

}  // namespace

VectorStep step_vectorized_serial(std::span<const EnvState> states, const Eigen::MatrixXd& actions,
                                  const EnvConfig& cfg) {
  VectorStep out = prepare(states, actions, cfg);
  std::vector<std::uint8_t> clamped(states.size(), 0);
  for (std::size_t i = 0; i < states.size(); ++i) step_one(states, actions, cfg, out, i, clamped);
  for (auto c : clamped) out.clamped_actions += c;
  return out;
}

VectorStep step_vectorized(std::span<const EnvState> states, const Eigen::MatrixXd& actions, const EnvConfig& cfg) {
  if (!actions.allFinite()) throw NumericError("non-finite action in vectorized step");
  VectorStep out = prepare(states, actions, cfg);
  std::vector<std::uint8_t> clamped(states.size(), 0);
  const auto n = static_cast<std::int64_t>(states.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) step_one(states, actions, cfg, out, static_cast<std::size_t>(i), clamped);
  for (auto c : clamped) out.clamped_actions += c;
  return out;
}

}  // namespace r2vpo::envs
