#pragma once

#include <cmath>

#include "mnav/common.hpp"
#include "mnav/world.hpp"

namespace mnav {

struct Pose {
  Vec2 position;
  double heading = 0.0;  // (-pi, pi]
};

// Velocity command. linear in [0, v_max], angular in [-omega_max, omega_max].
struct Action {
  double linear = 0.0;
  double angular = 0.0;
};

// TurtleBot3 Burger class limits.
struct MotionLimits {
  double v_max = 0.22;
  double omega_max = 2.84;
};

// Unicycle integration over one control step. Straight-line motion below the
// angular threshold, exact circular arc otherwise.
inline Pose step_kinematics(const Pose& pose, const Action& action, double dt) {
  const double v = action.linear;
  const double w = action.angular;
  Pose next;
  if (std::abs(w) < 1e-6) {
    next.position = {pose.position.x + v * dt * std::cos(pose.heading),
                     pose.position.y + v * dt * std::sin(pose.heading)};
    next.heading = normalize_angle(pose.heading + w * dt);
  } else {
    const double theta = pose.heading;
    const double theta_next = theta + w * dt;
    const double radius = v / w;
    next.position = {pose.position.x + radius * (std::sin(theta_next) - std::sin(theta)),
                     pose.position.y + radius * (std::cos(theta) - std::cos(theta_next))};
    next.heading = normalize_angle(theta_next);
  }
  return next;
}

// Maps a tanh-squashed policy output in [-1, 1]^2 to velocity bounds:
// linear = v_max*(raw0+1)/2 (no reverse), angular = omega_max*raw1.
inline Action clamp_action(double raw_linear, double raw_angular,
                           const MotionLimits& limits = {}) {
  if (!(raw_linear >= -1.0 && raw_linear <= 1.0) ||
      !(raw_angular >= -1.0 && raw_angular <= 1.0)) {
    throw Error("unsquashed-action");
  }
  return {limits.v_max * (raw_linear + 1.0) * 0.5, limits.omega_max * raw_angular};
}

}  // namespace mnav
