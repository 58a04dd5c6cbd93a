#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mnav/common.hpp"
#include "mnav/robot.hpp"
#include "mnav/sensors.hpp"
#include "mnav/world.hpp"

namespace mnav {

// Goal position relative to the robot: distance and bearing from the heading.
struct PolarGoal {
  double distance = 0.0;
  double bearing = 0.0;  // (-pi, pi]
};

// s_t = [observation | goal distance, goal bearing | previous action].
struct State {
  Observation observation;
  PolarGoal goal;
  Action prev_action;

  // Network layout: ranges, then polar goal, then the previous velocities
  // normalized by the motion limits. Length n + 4.
  std::vector<double> flatten(const MotionLimits& limits = {}) const {
    std::vector<double> out;
    out.reserve(observation.ranges.size() + 4);
    out.insert(out.end(), observation.ranges.begin(), observation.ranges.end());
    out.push_back(goal.distance);
    out.push_back(goal.bearing);
    out.push_back(prev_action.linear / limits.v_max);
    out.push_back(prev_action.angular / limits.omega_max);
    return out;
  }
};

struct RewardConfig {
  double r_arrive = 150.0;
  double r_collision = -200.0;
  double c_r = 500.0;   // shaping gain per metre of progress
  double c_d = 0.3;     // arrival threshold, metres
};

enum class Cause { running, arrived, collided, timeout };

inline const char* to_string(Cause c) {
  switch (c) {
    case Cause::running: return "running";
    case Cause::arrived: return "arrived";
    case Cause::collided: return "collided";
    case Cause::timeout: return "timeout";
  }
  return "running";
}

inline Cause cause_from_string(const std::string& s) {
  if (s == "arrived") return Cause::arrived;
  if (s == "collided") return Cause::collided;
  if (s == "timeout") return Cause::timeout;
  if (s == "running") return Cause::running;
  throw Error("bad-trace", "unknown cause '" + s + "'");
}

struct StepOutcome {
  State next_state;
  double reward = 0.0;
  bool done = false;
  Cause cause = Cause::running;
};

// Arrival is checked before collision; otherwise the reward is the shaped
// progress term c_r * (d_prev - d_next).
inline std::pair<double, Cause> compute_reward(double d_prev, double d_next,
                                               bool collided, const RewardConfig& cfg) {
  if (d_next <= cfg.c_d) return {cfg.r_arrive, Cause::arrived};
  if (collided) return {cfg.r_collision, Cause::collided};
  return {cfg.c_r * (d_prev - d_next), Cause::running};
}

inline State assemble_state(Observation obs, const Pose& pose, const Vec2& goal,
                            const Action& prev_action) {
  const Vec2 to_goal = goal - pose.position;
  State s;
  s.observation = std::move(obs);
  s.goal.distance = to_goal.norm();
  s.goal.bearing = normalize_angle(std::atan2(to_goal.y, to_goal.x) - pose.heading);
  s.prev_action = prev_action;
  return s;
}

// Uniform sample in the spawn region, resampled while it lies within
// c_d + robot_radius of any obstacle or of the start position.
inline Vec2 spawn_goal(const World& world, Rng& rng, double c_d = 0.3,
                       double robot_radius = 0.105) {
  const double clearance = c_d + robot_radius;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const Vec2 g{rng.uniform(world.spawn_region.lo.x, world.spawn_region.hi.x),
                 rng.uniform(world.spawn_region.lo.y, world.spawn_region.hi.y)};
    if (distance_to_nearest(world, g) < clearance) continue;
    if ((g - world.start_position).norm() < clearance) continue;
    return g;
  }
  throw Error("spawn-exhausted");
}

enum class SensorMode { lidar, pseudo_lidar };

struct EpisodeConfig {
  RewardConfig reward;
  MotionLimits limits;
  double dt = 0.2;
  double robot_radius = 0.105;
  int max_episode_steps = 500;
  SensorMode sensor = SensorMode::lidar;
  int n_beams = 10;
  double lidar_fov = 1.047;  // matches the camera hfov
  double lidar_max_range = 3.5;
  CameraModel camera;
  SensorNoiseModel noise;
};

// One robot/goal episode. The owner decides what happens at termination
// (fresh goal in place on arrival, reset to start otherwise).
class Episode {
 public:
  Episode(const World& world, const EpisodeConfig& cfg, const Vec2& goal,
          std::uint64_t noise_seed = 0)
      : world_(&world), cfg_(cfg), noise_stream_(noise_seed) {
    reset({world.start_position, world.start_heading}, goal);
  }

  void reset(const Pose& pose, const Vec2& goal) {
    pose_ = pose;
    goal_ = goal;
    prev_action_ = {};
    step_count_ = 0;
    done_ = false;
    state_ = assemble_state(sense(pose_), pose_, goal_, prev_action_);
  }

  // Arrival during training: new goal, pose kept, step budget restarted.
  void set_goal(const Vec2& goal) {
    goal_ = goal;
    step_count_ = 0;
    done_ = false;
    state_ = assemble_state(state_.observation, pose_, goal_, prev_action_);
  }

  StepOutcome step(const Action& action) {
    if (done_) throw Error("episode-done");
    const double d_prev = (goal_ - pose_.position).norm();
    const Pose next_pose = step_kinematics(pose_, action, cfg_.dt);
    const bool collided = is_collided(*world_, next_pose.position, cfg_.robot_radius);
    const double d_next = (goal_ - next_pose.position).norm();
    auto [reward, cause] = compute_reward(d_prev, d_next, collided, cfg_.reward);
    ++step_count_;
    if (cause == Cause::running && step_count_ >= cfg_.max_episode_steps) {
      cause = Cause::timeout;
    }

    StepOutcome out;
    out.next_state = assemble_state(sense(next_pose), next_pose, goal_, action);
    out.reward = reward;
    out.cause = cause;
    out.done = cause != Cause::running;

    pose_ = next_pose;
    prev_action_ = action;
    state_ = out.next_state;
    done_ = out.done;
    return out;
  }

  const State& state() const { return state_; }
  const Pose& pose() const { return pose_; }
  const Vec2& goal() const { return goal_; }
  bool done() const { return done_; }
  int step_count() const { return step_count_; }
  const EpisodeConfig& config() const { return cfg_; }

 private:
  Observation sense(const Pose& pose) {
    if (cfg_.sensor == SensorMode::lidar) {
      return lidar_scan(*world_, pose, cfg_.n_beams, cfg_.lidar_fov, cfg_.lidar_max_range);
    }
    const DisparityRow row = render_disparity_row(*world_, pose, cfg_.camera);
    SensorNoiseModel step_noise = cfg_.noise;
    step_noise.seed = mix_seed(cfg_.noise.seed, noise_stream_++);
    return pseudo_lidar(row, cfg_.n_beams, cfg_.camera, step_noise);
  }

  const World* world_;
  EpisodeConfig cfg_;
  Pose pose_;
  Vec2 goal_;
  Action prev_action_;
  State state_;
  int step_count_ = 0;
  bool done_ = false;
  std::uint64_t noise_stream_ = 0;
};

}  // namespace mnav
