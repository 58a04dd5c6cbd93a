// Command-line front end: train, eval, replay, envinfo.

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mnav/harness.hpp"

namespace {

using mnav::RunConfig;

struct TrainFlags {
  std::string env, sensor, algo, config, out;
  long steps = -1;
  long seed = -1;
};

RunConfig resolve_config(const TrainFlags& f) {
  RunConfig cfg;
  if (!f.config.empty()) cfg = mnav::config_from_file(f.config, cfg);
  // CLI flags win over config-file values.
  nlohmann::json over = nlohmann::json::object();
  if (!f.env.empty()) over["env"] = f.env;
  if (!f.sensor.empty()) over["sensor"] = f.sensor;
  if (!f.algo.empty()) over["algo"] = f.algo;
  if (f.steps >= 0) over["total_steps"] = f.steps;
  if (f.seed >= 0) over["seed"] = static_cast<std::uint64_t>(f.seed);
  if (!f.out.empty()) over["out_dir"] = f.out;
  cfg = mnav::config_from_json(over, cfg);
  mnav::validate_config(cfg);
  return cfg;
}

int cmd_train(const TrainFlags& f) {
  const RunConfig cfg = resolve_config(f);
  std::printf("training %s  env=%s sensor=%s steps=%ld seed=%llu -> %s\n",
              mnav::to_string(cfg.algo), cfg.env.c_str(), mnav::to_string(cfg.sensor),
              cfg.total_steps, static_cast<unsigned long long>(cfg.seed), cfg.out_dir.c_str());
  const auto result = mnav::train(cfg, nullptr, true);
  std::printf("done: %ld episodes, checkpoint %s, metrics %s\n", result.episodes,
              result.checkpoint_path.c_str(), result.metrics_path.c_str());
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& scenario, int repeats,
             long seed, const std::string& out) {
  const auto report = mnav::evaluate(checkpoint, scenario, repeats,
                                     seed >= 0 ? static_cast<std::uint64_t>(seed) : 0);
  std::printf("scenario %s, %d repeats\n", scenario.c_str(), repeats);
  std::printf("%-8s %-22s %-14s %-18s %-20s\n", "run", "finished_destinations", "final_return",
              "traveling_time_s", "traveling_distance_m");
  for (std::size_t i = 0; i < report.runs.size(); ++i) {
    const auto& r = report.runs[i];
    std::printf("%-8zu %-22d %-14.2f %-18.1f %-20.2f\n", i, r.finished_destinations,
                r.final_return, r.traveling_time, r.traveling_distance);
  }
  std::printf("%-8s %-22.2f %-14.2f %-18.1f %-20.2f\n", "avg", report.avg_finished,
              report.avg_return, report.avg_time, report.avg_distance);

  if (!out.empty()) {
    std::filesystem::create_directories(out);
    std::ofstream js(out + "/report.json");
    js << report.to_json().dump(2) << '\n';
    std::vector<mnav::EpisodeTrace> traces;
    for (const auto& r : report.runs) traces.push_back(r.trace);
    mnav::export_traces(traces, out + "/traces.jsonl");
    std::printf("saved %s/report.json and %s/traces.jsonl\n", out.c_str(), out.c_str());
  }
  return 0;
}

int cmd_replay(const std::string& trace_path) {
  const auto traces = mnav::import_traces(trace_path);
  for (std::size_t run = 0; run < traces.size(); ++run) {
    const auto& tr = traces[run];
    std::printf("run %zu  env=%s seed=%llu steps=%zu return=%.2f cause=%s\n", run,
                tr.env.c_str(), static_cast<unsigned long long>(tr.seed), tr.steps.size(),
                tr.total_reward(), mnav::to_string(tr.final_cause()));
    std::printf("  %-6s %-9s %-9s %-9s %-8s %-8s %-10s %s\n", "step", "x", "y", "heading",
                "linear", "angular", "reward", "cause");
    for (const auto& s : tr.steps) {
      std::printf("  %-6ld %-9.3f %-9.3f %-9.3f %-8.3f %-8.3f %-10.3f %s\n", s.step,
                  s.pose.position.x, s.pose.position.y, s.pose.heading, s.action.linear,
                  s.action.angular, s.reward, mnav::to_string(s.cause));
    }
  }
  return 0;
}

int cmd_envinfo(const std::string& env) {
  const mnav::World w = mnav::build_env(env);
  std::printf("environment: %s\n", w.name.c_str());
  std::printf("bounds: %.2f x %.2f m  [%.2f, %.2f] .. [%.2f, %.2f]\n", w.bounds.width(),
              w.bounds.height(), w.bounds.lo.x, w.bounds.lo.y, w.bounds.hi.x, w.bounds.hi.y);
  std::printf("walls: %zu, interior obstacles: %zu\n", w.wall_count, w.interior_count());
  std::printf("start: (%.2f, %.2f) heading %.2f\n", w.start_position.x, w.start_position.y,
              w.start_heading);
  std::printf("spawn region: [%.2f, %.2f] .. [%.2f, %.2f]\n", w.spawn_region.lo.x,
              w.spawn_region.lo.y, w.spawn_region.hi.x, w.spawn_region.hi.y);
  std::printf("destinations: %zu", w.destinations.size());
  if (!w.destinations.empty()) std::printf("  (route %.2f m)", mnav::route_length(w));
  std::printf("\n");
  for (const auto& d : w.destinations) std::printf("  (%.2f, %.2f)\n", d.x, d.y);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mapless navigation trainer and evaluator"};
  app.require_subcommand(1);

  TrainFlags tf;
  auto* train = app.add_subcommand("train", "train an agent");
  train->add_option("--env", tf.env, "environment name or spec file");
  train->add_option("--sensor", tf.sensor, "lidar | pseudo-lidar");
  train->add_option("--algo", tf.algo, "sac | ddpg");
  train->add_option("--steps", tf.steps, "total environment steps");
  train->add_option("--seed", tf.seed, "master seed");
  train->add_option("--config", tf.config, "config file (JSON)");
  train->add_option("--out", tf.out, "output directory");

  std::string ev_checkpoint, ev_scenario = "scenario1", ev_out;
  int ev_repeats = 5;
  long ev_seed = 0;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a scenario");
  eval->add_option("--checkpoint", ev_checkpoint, "checkpoint file")->required();
  eval->add_option("--scenario", ev_scenario, "scenario name or spec file");
  eval->add_option("--repeats", ev_repeats, "number of evaluation runs");
  eval->add_option("--seed", ev_seed, "evaluation seed");
  eval->add_option("--out", ev_out, "directory for report.json and traces.jsonl");

  std::string rp_trace;
  auto* replay = app.add_subcommand("replay", "print a trace file as a step table");
  replay->add_option("--trace", rp_trace, "trace file (JSONL)")->required();

  std::string ei_env;
  auto* envinfo = app.add_subcommand("envinfo", "print environment geometry");
  envinfo->add_option("--env", ei_env, "environment name or spec file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (train->parsed()) return cmd_train(tf);
    if (eval->parsed()) return cmd_eval(ev_checkpoint, ev_scenario, ev_repeats, ev_seed, ev_out);
    if (replay->parsed()) return cmd_replay(rp_trace);
    if (envinfo->parsed()) return cmd_envinfo(ei_env);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
