#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "mnav/agents.hpp"
#include "mnav/common.hpp"
#include "mnav/mdp.hpp"
#include "mnav/nn.hpp"
#include "mnav/robot.hpp"
#include "mnav/sensors.hpp"
#include "mnav/world.hpp"

namespace mnav {

enum class Algo { sac, ddpg };

inline const char* to_string(Algo a) { return a == Algo::sac ? "sac" : "ddpg"; }
inline const char* to_string(SensorMode m) {
  return m == SensorMode::lidar ? "lidar" : "pseudo-lidar";
}

// Every training/evaluation knob. Flat key space mirrors the config file.
struct RunConfig {
  std::string env = "env1";
  SensorMode sensor = SensorMode::lidar;
  Algo algo = Algo::sac;
  long total_steps = 200000;
  std::uint64_t seed = 1;

  RewardConfig reward;
  MotionLimits limits;
  double dt = 0.2;
  double robot_radius = 0.105;
  int max_episode_steps = 500;
  int n_beams = 10;
  double lidar_fov = 1.047;
  double max_range = 3.5;
  CameraModel camera;  // camera.max_range follows max_range
  SensorNoiseModel noise;

  std::vector<int> hidden = {256, 256};
  double gamma = 0.99;
  double rho = 0.995;
  double lr = 1e-4;
  double alpha_lr = 1e-4;
  double init_alpha = 0.2;
  bool alpha_autotune = true;
  double target_entropy = -2.0;
  double log_std_min = -20.0;
  double log_std_max = 2.0;
  double ddpg_noise_sigma = 0.1;

  long warmup_steps = 1000;
  int batch_size = 128;
  std::size_t buffer_capacity = 100000;
  long checkpoint_every = 10000;
  std::string out_dir = "runs/run";

  int state_dim() const { return n_beams + 4; }
};

namespace detail {

using json = nlohmann::json;

inline void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw Error("bad-config", key + " " + what);
}

}  // namespace detail

inline void validate_config(const RunConfig& c) {
  using detail::require;
  require(c.total_steps > 0, "total_steps", "must be positive");
  require(c.batch_size > 0, "batch_size", "must be positive");
  require(c.warmup_steps >= 0, "warmup_steps", "must be non-negative");
  require(c.buffer_capacity >= static_cast<std::size_t>(c.batch_size), "buffer_capacity",
          "must hold at least one batch");
  require(c.n_beams >= 2, "n_beams", "needs at least 2 beams");
  require(c.dt > 0.0, "dt", "must be positive");
  require(c.robot_radius > 0.0, "robot_radius", "must be positive");
  require(c.max_range > 0.0, "max_range", "must be positive");
  require(c.lidar_fov > 0.0 && c.lidar_fov <= 2.0 * kPi, "lidar_fov", "must be in (0, 2pi]");
  require(c.camera.hfov > 0.0 && c.camera.hfov < kPi, "camera_hfov", "must be in (0, pi)");
  require(c.camera.width >= c.n_beams, "camera_width", "must cover n_beams pixels");
  require(c.camera.z_min > 0.0 && c.camera.z_min < c.max_range, "camera_z_min",
          "must be in (0, max_range)");
  require(c.reward.r_arrive > 0.0, "r_arrive", "must be positive");
  require(c.reward.r_collision < 0.0, "r_collision", "must be negative");
  require(c.reward.c_r > 0.0, "c_r", "must be positive");
  require(c.reward.c_d > 0.0, "c_d", "must be positive");
  require(c.limits.v_max > 0.0, "v_max", "must be positive");
  require(c.limits.omega_max > 0.0, "omega_max", "must be positive");
  require(c.max_episode_steps > 0, "max_episode_steps", "must be positive");
  require(!c.hidden.empty(), "hidden", "needs at least one layer");
  for (int h : c.hidden) require(h > 0, "hidden", "layer widths must be positive");
  require(c.gamma > 0.0 && c.gamma < 1.0, "gamma", "must be in (0, 1)");
  require(c.rho >= 0.0 && c.rho <= 1.0, "rho", "must be in [0, 1]");
  require(c.lr > 0.0, "lr", "must be positive");
  require(c.init_alpha > 0.0, "init_alpha", "must be positive");
  require(c.noise.relative_sigma >= 0.0, "noise_relative_sigma", "must be non-negative");
  if (c.noise.quantization_levels)
    require(*c.noise.quantization_levels > 0, "noise_quantization_levels", "must be positive");
  require(c.checkpoint_every > 0, "checkpoint_every", "must be positive");
}

inline nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json j;
  j["env"] = c.env;
  j["sensor"] = to_string(c.sensor);
  j["algo"] = to_string(c.algo);
  j["total_steps"] = c.total_steps;
  j["seed"] = c.seed;
  j["r_arrive"] = c.reward.r_arrive;
  j["r_collision"] = c.reward.r_collision;
  j["c_r"] = c.reward.c_r;
  j["c_d"] = c.reward.c_d;
  j["v_max"] = c.limits.v_max;
  j["omega_max"] = c.limits.omega_max;
  j["dt"] = c.dt;
  j["robot_radius"] = c.robot_radius;
  j["max_episode_steps"] = c.max_episode_steps;
  j["n_beams"] = c.n_beams;
  j["lidar_fov"] = c.lidar_fov;
  j["max_range"] = c.max_range;
  j["camera_width"] = c.camera.width;
  j["camera_height"] = c.camera.height;
  j["camera_hfov"] = c.camera.hfov;
  j["camera_z_min"] = c.camera.z_min;
  j["camera_metric_scaling"] = c.camera.metric_scaling;
  j["noise_relative_sigma"] = c.noise.relative_sigma;
  j["noise_quantization_levels"] =
      c.noise.quantization_levels ? nlohmann::json(*c.noise.quantization_levels) : nlohmann::json();
  j["noise_seed"] = c.noise.seed;
  j["hidden"] = c.hidden;
  j["gamma"] = c.gamma;
  j["rho"] = c.rho;
  j["lr"] = c.lr;
  j["alpha_lr"] = c.alpha_lr;
  j["init_alpha"] = c.init_alpha;
  j["alpha_autotune"] = c.alpha_autotune;
  j["target_entropy"] = c.target_entropy;
  j["log_std_min"] = c.log_std_min;
  j["log_std_max"] = c.log_std_max;
  j["ddpg_noise_sigma"] = c.ddpg_noise_sigma;
  j["warmup_steps"] = c.warmup_steps;
  j["batch_size"] = c.batch_size;
  j["buffer_capacity"] = c.buffer_capacity;
  j["checkpoint_every"] = c.checkpoint_every;
  j["out_dir"] = c.out_dir;
  return j;
}

// Applies known keys onto `base`; unknown keys or bad values name the key.
inline RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {}) {
  RunConfig c = std::move(base);
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "env") c.env = value.get<std::string>();
      else if (key == "sensor") {
        const auto s = value.get<std::string>();
        if (s == "lidar") c.sensor = SensorMode::lidar;
        else if (s == "pseudo-lidar") c.sensor = SensorMode::pseudo_lidar;
        else throw Error("bad-config", "sensor must be lidar or pseudo-lidar");
      } else if (key == "algo") {
        const auto s = value.get<std::string>();
        if (s == "sac") c.algo = Algo::sac;
        else if (s == "ddpg") c.algo = Algo::ddpg;
        else throw Error("bad-config", "algo must be sac or ddpg");
      }
      else if (key == "total_steps") c.total_steps = value.get<long>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "r_arrive") c.reward.r_arrive = value.get<double>();
      else if (key == "r_collision") c.reward.r_collision = value.get<double>();
      else if (key == "c_r") c.reward.c_r = value.get<double>();
      else if (key == "c_d") c.reward.c_d = value.get<double>();
      else if (key == "v_max") c.limits.v_max = value.get<double>();
      else if (key == "omega_max") c.limits.omega_max = value.get<double>();
      else if (key == "dt") c.dt = value.get<double>();
      else if (key == "robot_radius") c.robot_radius = value.get<double>();
      else if (key == "max_episode_steps") c.max_episode_steps = value.get<int>();
      else if (key == "n_beams") c.n_beams = value.get<int>();
      else if (key == "lidar_fov") c.lidar_fov = value.get<double>();
      else if (key == "max_range") c.max_range = value.get<double>();
      else if (key == "camera_width") c.camera.width = value.get<int>();
      else if (key == "camera_height") c.camera.height = value.get<int>();
      else if (key == "camera_hfov") c.camera.hfov = value.get<double>();
      else if (key == "camera_z_min") c.camera.z_min = value.get<double>();
      else if (key == "camera_metric_scaling") c.camera.metric_scaling = value.get<bool>();
      else if (key == "noise_relative_sigma") c.noise.relative_sigma = value.get<double>();
      else if (key == "noise_quantization_levels") {
        if (value.is_null()) c.noise.quantization_levels.reset();
        else c.noise.quantization_levels = value.get<int>();
      }
      else if (key == "noise_seed") c.noise.seed = value.get<std::uint64_t>();
      else if (key == "hidden") c.hidden = value.get<std::vector<int>>();
      else if (key == "gamma") c.gamma = value.get<double>();
      else if (key == "rho") c.rho = value.get<double>();
      else if (key == "lr") c.lr = value.get<double>();
      else if (key == "alpha_lr") c.alpha_lr = value.get<double>();
      else if (key == "init_alpha") c.init_alpha = value.get<double>();
      else if (key == "alpha_autotune") c.alpha_autotune = value.get<bool>();
      else if (key == "target_entropy") c.target_entropy = value.get<double>();
      else if (key == "log_std_min") c.log_std_min = value.get<double>();
      else if (key == "log_std_max") c.log_std_max = value.get<double>();
      else if (key == "ddpg_noise_sigma") c.ddpg_noise_sigma = value.get<double>();
      else if (key == "warmup_steps") c.warmup_steps = value.get<long>();
      else if (key == "batch_size") c.batch_size = value.get<int>();
      else if (key == "buffer_capacity") c.buffer_capacity = value.get<std::size_t>();
      else if (key == "checkpoint_every") c.checkpoint_every = value.get<long>();
      else if (key == "out_dir") c.out_dir = value.get<std::string>();
      else throw Error("bad-config", "unknown key '" + key + "'");
    } catch (const nlohmann::json::exception&) {
      throw Error("bad-config", "bad value for key '" + key + "'");
    }
  }
  c.camera.max_range = c.max_range;
  return c;
}

inline RunConfig config_from_file(const std::string& path, RunConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw Error("bad-config", "cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("bad-config", e.what());
  }
  return config_from_json(j, std::move(base));
}

inline std::string config_hash(const RunConfig& c) {
  const std::string text = config_to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline EpisodeConfig episode_config(const RunConfig& c) {
  EpisodeConfig e;
  e.reward = c.reward;
  e.limits = c.limits;
  e.dt = c.dt;
  e.robot_radius = c.robot_radius;
  e.max_episode_steps = c.max_episode_steps;
  e.sensor = c.sensor;
  e.n_beams = c.n_beams;
  e.lidar_fov = c.lidar_fov;
  e.lidar_max_range = c.max_range;
  e.camera = c.camera;
  e.camera.max_range = c.max_range;
  e.noise = c.noise;
  return e;
}

// ---------------------------------------------------------------------------
// Episode traces

struct TraceStep {
  long step = 0;
  Pose pose;
  Action action;
  double reward = 0.0;
  Cause cause = Cause::running;
};

struct EpisodeTrace {
  std::vector<TraceStep> steps;
  std::string env;
  std::uint64_t seed = 0;
  std::string config_hash;

  double total_reward() const {
    double r = 0.0;
    for (const auto& s : steps) r += s.reward;
    return r;
  }
  Cause final_cause() const { return steps.empty() ? Cause::running : steps.back().cause; }
};

// Newline-delimited JSON. Per trace: one "step" record per step followed by
// a "run_summary" record; the file closes with one "export_summary" record.
inline void export_traces(const std::vector<EpisodeTrace>& traces, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot write '" + path + "'");
  long total_steps = 0;
  for (std::size_t run = 0; run < traces.size(); ++run) {
    const EpisodeTrace& tr = traces[run];
    for (const TraceStep& s : tr.steps) {
      nlohmann::json j{{"type", "step"},
                       {"run", run},
                       {"step", s.step},
                       {"x", s.pose.position.x},
                       {"y", s.pose.position.y},
                       {"heading", s.pose.heading},
                       {"linear", s.action.linear},
                       {"angular", s.action.angular},
                       {"reward", s.reward},
                       {"cause", to_string(s.cause)}};
      out << j.dump() << '\n';
    }
    nlohmann::json j{{"type", "run_summary"},
                     {"run", run},
                     {"env", tr.env},
                     {"seed", tr.seed},
                     {"config_hash", tr.config_hash},
                     {"steps", tr.steps.size()},
                     {"total_reward", tr.total_reward()},
                     {"final_cause", to_string(tr.final_cause())}};
    out << j.dump() << '\n';
    total_steps += static_cast<long>(tr.steps.size());
  }
  nlohmann::json tail{{"type", "export_summary"},
                      {"runs", traces.size()},
                      {"total_steps", total_steps}};
  out << tail.dump() << '\n';
  if (!out) throw Error("io", "write failed for '" + path + "'");
}

inline std::vector<EpisodeTrace> import_traces(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open '" + path + "'");
  std::vector<EpisodeTrace> traces;
  EpisodeTrace current;
  std::string line;
  bool saw_tail = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error("bad-trace", e.what());
    }
    const std::string type = j.value("type", "");
    if (type == "step") {
      TraceStep s;
      s.step = j.at("step").get<long>();
      s.pose.position = {j.at("x").get<double>(), j.at("y").get<double>()};
      s.pose.heading = j.at("heading").get<double>();
      s.action = {j.at("linear").get<double>(), j.at("angular").get<double>()};
      s.reward = j.at("reward").get<double>();
      s.cause = cause_from_string(j.at("cause").get<std::string>());
      current.steps.push_back(s);
    } else if (type == "run_summary") {
      current.env = j.at("env").get<std::string>();
      current.seed = j.at("seed").get<std::uint64_t>();
      current.config_hash = j.at("config_hash").get<std::string>();
      if (j.at("steps").get<std::size_t>() != current.steps.size())
        throw Error("bad-trace", "summary step count mismatch");
      traces.push_back(std::move(current));
      current = {};
    } else if (type == "export_summary") {
      if (j.at("runs").get<std::size_t>() != traces.size())
        throw Error("bad-trace", "summary run count mismatch");
      saw_tail = true;
    } else {
      throw Error("bad-trace", "unknown record type '" + type + "'");
    }
  }
  if (!saw_tail) throw Error("bad-trace", "missing export_summary");
  return traces;
}

// ---------------------------------------------------------------------------
// Training

namespace detail {

inline std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

struct LossRow {
  double q1 = 0.0, q2 = 0.0, policy = 0.0, alpha = 0.0, alpha_loss = 0.0;
};

inline LossRow do_update(SacAgent& a, const std::vector<Transition>& b, Rng& rng) {
  const auto l = a.update(b, rng);
  return {l.q1, l.q2, l.policy, a.alpha(), l.alpha_loss};
}

inline LossRow do_update(DdpgAgent& a, const std::vector<Transition>& b, Rng&) {
  const auto l = a.update(b);
  return {l.q, 0.0, l.policy, 0.0, 0.0};
}

}  // namespace detail

inline constexpr const char* kMetricsHeader =
    "step,episode,return,length,cause,success,q1_loss,q2_loss,policy_loss,alpha,alpha_loss";

struct TrainResult {
  std::string checkpoint_path;
  std::string metrics_path;
  long episodes = 0;
  long steps_run = 0;
};

// Called after each periodic checkpoint; return true to stop training early.
using CheckpointCallback = std::function<bool(long step, const std::string& checkpoint_path)>;

namespace detail {

template <typename AgentT>
TrainResult train_loop(const RunConfig& cfg, AgentT& agent, const CheckpointCallback& cb,
                       bool verbose) {
  const World world = build_env(cfg.env);
  Rng goal_rng(mix_seed(cfg.seed, 1));
  Rng action_rng(mix_seed(cfg.seed, 2));
  Rng buffer_rng(mix_seed(cfg.seed, 3));
  Rng warmup_rng(mix_seed(cfg.seed, 4));
  Rng update_rng(mix_seed(cfg.seed, 6));

  EpisodeConfig ecfg = episode_config(cfg);
  ecfg.noise.seed = mix_seed(cfg.seed, 5);
  Episode ep(world, ecfg, spawn_goal(world, goal_rng, cfg.reward.c_d, cfg.robot_radius));

  ReplayBuffer buffer(cfg.buffer_capacity);
  std::filesystem::create_directories(cfg.out_dir);
  const std::string metrics_path = cfg.out_dir + "/metrics.csv";
  std::ofstream csv(metrics_path);
  if (!csv) throw Error("io", "cannot write '" + metrics_path + "'");
  csv << kMetricsHeader << '\n';

  const nlohmann::json meta{{"config", config_to_json(cfg)}, {"config_hash", config_hash(cfg)}};
  TrainResult result;
  result.metrics_path = metrics_path;

  double ep_return = 0.0;
  long ep_len = 0;
  long episode_idx = 0;
  detail::LossRow losses;
  bool stop = false;

  for (long step = 1; step <= cfg.total_steps && !stop; ++step) {
    const std::vector<double> state = ep.state().flatten(cfg.limits);
    std::array<double, 2> raw{};
    if (step <= cfg.warmup_steps) {
      raw = {warmup_rng.uniform(-1.0, 1.0), warmup_rng.uniform(-1.0, 1.0)};
    } else {
      raw = agent.act(state, action_rng, true);
    }
    const Action action = clamp_action(raw[0], raw[1], cfg.limits);
    const StepOutcome out = ep.step(action);

    Transition t;
    t.state = state;
    t.action = raw;
    t.reward = out.reward;
    t.next_state = out.next_state.flatten(cfg.limits);
    t.done = out.cause == Cause::arrived || out.cause == Cause::collided;
    buffer.push(std::move(t));

    ep_return += out.reward;
    ++ep_len;

    if (step > cfg.warmup_steps && buffer.size() >= static_cast<std::size_t>(cfg.batch_size)) {
      const auto batch = buffer.sample(cfg.batch_size, buffer_rng);
      losses = detail::do_update(agent, batch, update_rng);
    }

    if (out.done) {
      csv << step << ',' << episode_idx << ',' << detail::fmt_g(ep_return) << ',' << ep_len
          << ',' << to_string(out.cause) << ',' << (out.cause == Cause::arrived ? 1 : 0) << ','
          << detail::fmt_g(losses.q1) << ',' << detail::fmt_g(losses.q2) << ','
          << detail::fmt_g(losses.policy) << ',' << detail::fmt_g(losses.alpha) << ','
          << detail::fmt_g(losses.alpha_loss) << '\n';
      ++episode_idx;
      ep_return = 0.0;
      ep_len = 0;
      if (out.cause == Cause::arrived) {
        ep.set_goal(spawn_goal(world, goal_rng, cfg.reward.c_d, cfg.robot_radius));
      } else {
        ep.reset({world.start_position, world.start_heading},
                 spawn_goal(world, goal_rng, cfg.reward.c_d, cfg.robot_radius));
      }
    }

    if (step % cfg.checkpoint_every == 0) {
      const std::string path = cfg.out_dir + "/checkpoint_" + std::to_string(step) + ".ckpt";
      nlohmann::json h = meta;
      h["step"] = step;
      agent.save(path, h);
      if (verbose) {
        std::printf("step %ld  episodes %ld  alpha %.4f\n", step, episode_idx, losses.alpha);
        std::fflush(stdout);
      }
      if (cb && cb(step, path)) stop = true;
    }
    result.steps_run = step;
  }

  result.checkpoint_path = cfg.out_dir + "/final.ckpt";
  nlohmann::json h = meta;
  h["step"] = result.steps_run;
  agent.save(result.checkpoint_path, h);
  result.episodes = episode_idx;
  return result;
}

}  // namespace detail

inline TrainResult train(const RunConfig& cfg, const CheckpointCallback& cb = nullptr,
                         bool verbose = false) {
  validate_config(cfg);
  if (cfg.algo == Algo::sac) {
    SacConfig ac;
    static_cast<AgentConfig&>(ac) = {cfg.state_dim(), 2,      cfg.hidden, cfg.gamma,
                                     cfg.rho,         cfg.lr, cfg.max_range};
    ac.alpha_lr = cfg.alpha_lr;
    ac.init_alpha = cfg.init_alpha;
    ac.alpha_autotune = cfg.alpha_autotune;
    ac.target_entropy = cfg.target_entropy;
    ac.log_std_min = cfg.log_std_min;
    ac.log_std_max = cfg.log_std_max;
    SacAgent agent(ac, cfg.seed);
    return detail::train_loop(cfg, agent, cb, verbose);
  }
  DdpgConfig ac;
  static_cast<AgentConfig&>(ac) = {cfg.state_dim(), 2,      cfg.hidden, cfg.gamma,
                                   cfg.rho,         cfg.lr, cfg.max_range};
  ac.exploration_sigma = cfg.ddpg_noise_sigma;
  DdpgAgent agent(ac, cfg.seed);
  return detail::train_loop(cfg, agent, cb, verbose);
}

// ---------------------------------------------------------------------------
// Evaluation

// A checkpoint loaded for rollouts, independent of the training algorithm.
class PolicyHandle {
 public:
  static PolicyHandle load(const std::string& path) {
    PolicyHandle p;
    const LoadedCheckpoint ck = read_checkpoint(path);
    const std::string algo = ck.header.value("algorithm", "");
    if (algo == "sac") {
      p.agent_.emplace<SacAgent>(SacAgent::load(ck));
    } else if (algo == "ddpg") {
      p.agent_.emplace<DdpgAgent>(DdpgAgent::load(ck));
    } else {
      throw Error("checkpoint-incompatible", "unknown algorithm '" + algo + "'");
    }
    p.header_ = ck.header;
    return p;
  }

  std::array<double, 2> act(const std::vector<double>& state, Rng& rng, bool train) const {
    if (const auto* sac = std::get_if<SacAgent>(&agent_)) return sac->act(state, rng, train);
    return std::get<DdpgAgent>(agent_).act(state, rng, train);
  }

  int state_dim() const {
    if (const auto* sac = std::get_if<SacAgent>(&agent_)) return sac->config().state_dim;
    return std::get<DdpgAgent>(agent_).config().state_dim;
  }

  const nlohmann::json& header() const { return header_; }

  // Training-time RunConfig embedded in the checkpoint.
  RunConfig embedded_config() const {
    if (!header_.contains("config")) throw Error("checkpoint-incompatible", "no embedded config");
    return config_from_json(header_.at("config"));
  }

 private:
  PolicyHandle() = default;
  std::variant<std::monostate, SacAgent, DdpgAgent> agent_;
  nlohmann::json header_;
};

struct EvalRun {
  int finished_destinations = 0;
  double final_return = 0.0;
  double traveling_time = 0.0;
  double traveling_distance = 0.0;
  Cause end_cause = Cause::running;
  EpisodeTrace trace;
};

struct EvalReport {
  double avg_finished = 0.0;
  double avg_return = 0.0;
  double avg_time = 0.0;
  double avg_distance = 0.0;
  std::vector<EvalRun> runs;

  nlohmann::json to_json() const {
    nlohmann::json jruns = nlohmann::json::array();
    for (const auto& r : runs) {
      jruns.push_back({{"finished_destinations", r.finished_destinations},
                       {"final_return", r.final_return},
                       {"traveling_time", r.traveling_time},
                       {"traveling_distance", r.traveling_distance},
                       {"end_cause", to_string(r.end_cause)}});
    }
    return {{"avg", {{"finished_destinations", avg_finished},
                     {"final_return", avg_return},
                     {"traveling_time", avg_time},
                     {"traveling_distance", avg_distance}}},
            {"runs", jruns}};
  }
};

// Drives the deterministic policy through the scenario's ordered
// destinations. A destination counts once distance <= c_d; the run ends on
// collision, per-leg timeout, or after the last destination.
inline EvalReport evaluate(const std::string& checkpoint_path, const std::string& scenario,
                           int repeats, std::uint64_t eval_seed = 0,
                           const nlohmann::json& overrides = nlohmann::json::object()) {
  const PolicyHandle policy = PolicyHandle::load(checkpoint_path);
  RunConfig cfg = policy.embedded_config();
  cfg = config_from_json(overrides, cfg);
  if (policy.state_dim() != cfg.state_dim())
    throw Error("checkpoint-incompatible", "state size does not match n_beams");

  const World world = build_env(scenario);
  if (world.destinations.empty()) throw Error("bad-env-spec", "environment has no destinations");
  const std::string hash = config_hash(cfg);

  EvalReport report;
  for (int rep = 0; rep < repeats; ++rep) {
    EpisodeConfig ecfg = episode_config(cfg);
    ecfg.noise.seed = mix_seed(eval_seed, 9000 + rep);
    Episode ep(world, ecfg, world.destinations.front());
    Rng rng(mix_seed(eval_seed, 100 + rep));  // unused by the deterministic head

    EvalRun run;
    run.trace.env = world.name;
    run.trace.seed = eval_seed;
    run.trace.config_hash = hash;
    Vec2 prev = ep.pose().position;
    long step = 0;
    std::size_t next_dest = 0;

    while (true) {
      const auto raw = policy.act(ep.state().flatten(cfg.limits), rng, false);
      const Action action = clamp_action(raw[0], raw[1], cfg.limits);
      const StepOutcome out = ep.step(action);
      ++step;
      run.final_return += out.reward;
      run.traveling_distance += (ep.pose().position - prev).norm();
      prev = ep.pose().position;
      run.trace.steps.push_back({step, ep.pose(), action, out.reward, out.cause});
      if (out.cause == Cause::arrived) {
        ++run.finished_destinations;
        ++next_dest;
        if (next_dest >= world.destinations.size()) {
          run.end_cause = Cause::arrived;
          break;
        }
        ep.set_goal(world.destinations[next_dest]);
      } else if (out.done) {
        run.end_cause = out.cause;
        break;
      }
    }
    run.traveling_time = static_cast<double>(step) * cfg.dt;
    report.runs.push_back(std::move(run));
  }

  for (const auto& r : report.runs) {
    report.avg_finished += r.finished_destinations;
    report.avg_return += r.final_return;
    report.avg_time += r.traveling_time;
    report.avg_distance += r.traveling_distance;
  }
  const double n = static_cast<double>(report.runs.size());
  report.avg_finished /= n;
  report.avg_return /= n;
  report.avg_time /= n;
  report.avg_distance /= n;
  return report;
}

// Fraction of single-goal episodes (goals drawn by spawn_goal) the
// deterministic policy finishes with an arrival. Used as the training
// success metric in the environment the agent was trained in.
inline double goal_arrival_rate(const std::string& checkpoint_path, int episodes,
                                std::uint64_t seed) {
  const PolicyHandle policy = PolicyHandle::load(checkpoint_path);
  const RunConfig cfg = policy.embedded_config();
  const World world = build_env(cfg.env);
  Rng goal_rng(mix_seed(seed, 11));
  Rng act_rng(mix_seed(seed, 12));
  int arrived = 0;
  for (int k = 0; k < episodes; ++k) {
    EpisodeConfig ecfg = episode_config(cfg);
    ecfg.noise.seed = mix_seed(seed, 500 + k);
    Episode ep(world, ecfg, spawn_goal(world, goal_rng, cfg.reward.c_d, cfg.robot_radius));
    while (true) {
      const auto raw = policy.act(ep.state().flatten(cfg.limits), act_rng, false);
      const StepOutcome out = ep.step(clamp_action(raw[0], raw[1], cfg.limits));
      if (out.done) {
        if (out.cause == Cause::arrived) ++arrived;
        break;
      }
    }
  }
  return static_cast<double>(arrived) / episodes;
}

}  // namespace mnav
