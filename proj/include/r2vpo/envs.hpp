#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace r2vpo::envs {

enum class EnvKind { kPendulumSwingUp, kCartpoleSwingUpSparse, kPointReacherSparse };

// "pendulum" | "cartpole-sparse" | "reacher-sparse"
EnvKind parse_env_kind(std::string_view name);
std::string_view to_string(EnvKind kind);

// Task definition. Every constant is frozen by defaults(); tests may switch
// damping off to check energy conservation.
struct EnvConfig {
  EnvKind kind = EnvKind::kPendulumSwingUp;
  double dt = 0.02;                // s
  int episode_length = 1000;       // steps
  std::vector<double> action_low;  // per action dim
  std::vector<double> action_high;

  // Pendulum: angle measured from upright.
  double gravity = 9.81;     // m/s^2
  double mass = 1.0;         // kg
  double length = 1.0;       // m
  double damping = 0.05;     // 1/s, on angular velocity
  double max_speed = 8.0;    // rad/s

  // Cart-pole.
  double cart_mass = 1.0;          // kg
  double pole_mass = 0.1;          // kg
  double pole_half_length = 0.5;   // m

  // Point reacher (unit mass double integrator).
  double velocity_damping = 0.1;   // 1/s
  double goal_radius = 1.0;        // m
  double goal_tolerance = 0.1;     // m

  static EnvConfig defaults(EnvKind kind);

  int obs_dim() const;
  int act_dim() const;
  void validate() const;
};

// Pendulum: x = (theta, theta_dot). Cart-pole: (x, x_dot, theta, theta_dot).
// Reacher: (px, py, vx, vy, gx, gy).
struct EnvState {
  std::array<double, 6> x{};
  int step = 0;
  std::uint64_t seed = 0;  // seed this episode was reset with

  bool operator==(const EnvState&) const = default;
};

struct ResetResult {
  EnvState state;
  Eigen::VectorXd observation;
};

struct StepResult {
  EnvState next;
  Eigen::VectorXd observation;
  double reward = 0.0;
  bool done = false;
  bool action_clamped = false;
};

ResetResult reset(const EnvConfig& cfg, std::uint64_t seed);

// Pendulum: (cos theta, sin theta, theta_dot). Cart-pole: (x, x_dot, cos, sin,
// theta_dot). Reacher: (pos, vel, goal - pos).
void observe(const EnvState& state, const EnvConfig& cfg, std::span<double> out);
Eigen::VectorXd observe(const EnvState& state, const EnvConfig& cfg);

// Out-of-bound actions are clamped and reported; non-finite actions throw.
// done is set when the step counter reaches episode_length.
StepResult step(const EnvState& state, std::span<const double> action, const EnvConfig& cfg);

// Angular acceleration of the pendulum for torque u (clamped) including damping.
double pendulum_acceleration(double theta, double theta_dot, double u, const EnvConfig& cfg);
// 1/2 I w^2 + m g (l/2) cos(theta), I = m l^2 / 3.
double pendulum_energy(const EnvState& state, const EnvConfig& cfg);

// Scripted swing-up controller used to certify the achievable return:
// bang-bang energy pumping toward the upright energy level, switching to a
// saturated PD hold once |theta| < 0.35 rad.
double pendulum_oracle_action(const EnvState& state, const EnvConfig& cfg);

struct VectorStep {
  std::vector<EnvState> next;
  Eigen::MatrixXd observations;  // obs_dim x n
  std::vector<double> rewards;
  std::vector<std::uint8_t> dones;
  std::size_t clamped_actions = 0;
};

// Loop reference: n independent step() calls.
VectorStep step_vectorized_serial(std::span<const EnvState> states, const Eigen::MatrixXd& actions,
                                  const EnvConfig& cfg);
// OpenMP over instances; elementwise identical to the serial loop.
VectorStep step_vectorized(std::span<const EnvState> states, const Eigen::MatrixXd& actions,
                           const EnvConfig& cfg);

}  // namespace r2vpo::envs
