#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "helpers.hpp"
#include "mnav/mdp.hpp"

using namespace mnav;

namespace {

// Literal transcription of the reward cases, kept separate from the library.
double reward_transcription(double d_prev, double d_next, bool collided,
                            const RewardConfig& cfg, Cause& cause) {
  if (d_next <= cfg.c_d) {
    cause = Cause::arrived;
    return cfg.r_arrive;
  }
  if (collided) {
    cause = Cause::collided;
    return cfg.r_collision;
  }
  cause = Cause::running;
  return cfg.c_r * (d_prev - d_next);
}

}  // namespace

TEST_CASE("reward cases and branch order", "[mdp]") {
  const RewardConfig cfg;
  CHECK(cfg.r_arrive == 150.0);
  CHECK(cfg.r_collision == -200.0);
  CHECK(cfg.c_r == 500.0);

  auto [r1, c1] = compute_reward(1.0, 0.2, false, cfg);
  CHECK(r1 == 150.0);
  CHECK(c1 == Cause::arrived);

  // arrival wins even when the bumper fires
  auto [r2, c2] = compute_reward(1.0, 0.2, true, cfg);
  CHECK(r2 == 150.0);
  CHECK(c2 == Cause::arrived);

  auto [r3, c3] = compute_reward(1.0, 1.0, true, cfg);
  CHECK(r3 == -200.0);
  CHECK(c3 == Cause::collided);

  auto [r4, c4] = compute_reward(2.0, 1.9, false, cfg);
  CHECK(r4 == Catch::Approx(50.0).margin(1e-9));
  CHECK(c4 == Cause::running);
}

TEST_CASE("reward matches the transcription on a dense grid", "[mdp]") {
  const RewardConfig cfg;
  int mismatches = 0;
  for (int i = 0; i <= 50; ++i) {
    for (int j = 0; j <= 50; ++j) {
      for (bool col : {false, true}) {
        const double dp = i * 0.1, dn = j * 0.1;
        Cause expect_cause;
        const double expect = reward_transcription(dp, dn, col, cfg, expect_cause);
        auto [got, got_cause] = compute_reward(dp, dn, col, cfg);
        if (got != expect || got_cause != expect_cause) ++mismatches;
      }
    }
  }
  CHECK(mismatches == 0);
}

TEST_CASE("state assembly", "[mdp]") {
  Observation obs{std::vector<double>(10, 1.0)};

  SECTION("goal straight ahead") {
    const State s = assemble_state(obs, {{0, 0}, 0.0}, {1.0, 0.0}, {});
    CHECK(s.goal.distance == Catch::Approx(1.0));
    CHECK(s.goal.bearing == Catch::Approx(0.0).margin(1e-15));
  }
  SECTION("goal directly behind maps to +pi") {
    const State s = assemble_state(obs, {{0, 0}, 0.0}, {-2.0, 0.0}, {});
    CHECK(s.goal.bearing == Catch::Approx(kPi));
  }
  SECTION("flatten layout and length") {
    const MotionLimits lim;
    const State s = assemble_state(obs, {{0, 0}, 0.0}, {3.0, 4.0}, {0.11, -1.42});
    const auto flat = s.flatten(lim);
    REQUIRE(flat.size() == 14);
    for (int i = 0; i < 10; ++i) CHECK(flat[i] == 1.0);
    CHECK(flat[10] == Catch::Approx(5.0));
    CHECK(flat[11] == Catch::Approx(std::atan2(4.0, 3.0)));
    CHECK(flat[12] == Catch::Approx(0.11 / lim.v_max));
    CHECK(flat[13] == Catch::Approx(-1.42 / lim.omega_max));
  }
}

TEST_CASE("shaped rewards telescope over a clean trajectory", "[mdp]") {
  const World w = build_env("env1");
  EpisodeConfig cfg;
  cfg.max_episode_steps = 100000;  // keep the run in the shaped branch
  const Vec2 goal{3.0, 3.0};
  Episode ep(w, cfg, goal);
  Rng rng(2);
  double sum = 0.0;
  const double d0 = (goal - ep.pose().position).norm();
  for (int k = 0; k < 50; ++k) {
    const Action a{rng.uniform(0.0, 0.1), rng.uniform(-1.0, 1.0)};
    const StepOutcome out = ep.step(a);
    REQUIRE(out.cause == Cause::running);
    sum += out.reward;
  }
  const double dT = (goal - ep.pose().position).norm();
  CHECK(sum == Catch::Approx(cfg.reward.c_r * (d0 - dT)).margin(1e-9));
}

TEST_CASE("goal spawning", "[mdp]") {
  const World w = build_env("env2");

  SECTION("deterministic under seed") {
    Rng a(7), b(7);
    const Vec2 ga = spawn_goal(w, a);
    const Vec2 gb = spawn_goal(w, b);
    CHECK(ga.x == gb.x);
    CHECK(ga.y == gb.y);
  }
  SECTION("keeps clearance from obstacles and start") {
    Rng rng(13);
    for (int k = 0; k < 1000; ++k) {
      const Vec2 g = spawn_goal(w, rng);
      CHECK(distance_to_nearest(w, g) >= 0.405);
      CHECK((g - w.start_position).norm() >= 0.405);
      CHECK(w.spawn_region.contains(g));
    }
  }
  SECTION("covers all quadrants uniformly") {
    const World e1 = build_env("env1");
    Rng rng(17);
    std::array<int, 4> counts{};
    const int total = 10000;
    for (int k = 0; k < total; ++k) {
      const Vec2 g = spawn_goal(e1, rng);
      counts[(g.x >= 0 ? 1 : 0) + (g.y >= 0 ? 2 : 0)]++;
    }
    double chi2 = 0.0;
    const double expected = total / 4.0;
    for (int c : counts) {
      CHECK(c > 0);
      chi2 += (c - expected) * (c - expected) / expected;
    }
    CHECK(chi2 < oracle::chi2_critical_p99(3));
  }
  SECTION("impossible regions exhaust") {
    World blocked = w;
    blocked.obstacles.push_back({Circle{{0, 0}, 6.0}});
    Rng rng(1);
    try {
      spawn_goal(blocked, rng);
      FAIL("expected spawn-exhausted");
    } catch (const Error& e) {
      CHECK(e.code() == "spawn-exhausted");
    }
  }
}

TEST_CASE("episode lifecycle", "[mdp]") {
  SECTION("collision against a wall pays r_collision") {
    const auto tmp = std::filesystem::temp_directory_path() / "mnav_mini_env.json";
    {
      std::ofstream out(tmp);
      out << R"({"format_version": 1, "name": "mini", "bounds": [-1,-1,1,1],
                 "spawn_region": [-0.5,-0.5,0.5,0.5], "start": [0.6,0,0],
                 "obstacles": [], "destinations": []})";
    }
    const World mini = build_env(tmp.string());
    std::filesystem::remove(tmp);
    EpisodeConfig cfg;
    Episode ep(mini, cfg, {-0.5, 0.5});
    StepOutcome out;
    for (int k = 0; k < 50; ++k) {
      out = ep.step({cfg.limits.v_max, 0.0});
      if (out.done) break;
    }
    CHECK(out.done);
    CHECK(out.cause == Cause::collided);
    CHECK(out.reward == cfg.reward.r_collision);
  }

  SECTION("zero action far from the goal earns zero shaped reward") {
    const World w = build_env("env1");
    Episode ep(w, {}, {2.0, 2.0});
    const StepOutcome out = ep.step({0.0, 0.0});
    CHECK(out.reward == 0.0);
    CHECK(out.cause == Cause::running);
  }

  SECTION("timeout fires at max_episode_steps with the shaped reward") {
    const World w = build_env("env1");
    EpisodeConfig cfg;
    cfg.max_episode_steps = 5;
    Episode ep(w, cfg, {2.0, 2.0});
    StepOutcome out;
    for (int k = 0; k < 5; ++k) {
      CHECK_FALSE(ep.done());
      out = ep.step({0.0, 0.0});
    }
    CHECK(out.done);
    CHECK(out.cause == Cause::timeout);
    CHECK(out.reward == 0.0);
    CHECK(ep.step_count() == 5);
  }

  SECTION("stepping a finished episode fails") {
    const World w = build_env("env1");
    EpisodeConfig cfg;
    cfg.max_episode_steps = 1;
    Episode ep(w, cfg, {2.0, 2.0});
    ep.step({0.0, 0.0});
    try {
      ep.step({0.0, 0.0});
      FAIL("expected episode-done");
    } catch (const Error& e) {
      CHECK(e.code() == "episode-done");
    }
  }

  SECTION("arrival keeps the pose, set_goal restarts the budget") {
    const World w = build_env("env1");
    EpisodeConfig cfg;
    Episode ep(w, cfg, {0.1, 0.0});  // within c_d after one step forward
    const StepOutcome out = ep.step({cfg.limits.v_max, 0.0});
    CHECK(out.cause == Cause::arrived);
    CHECK(out.reward == cfg.reward.r_arrive);
    CHECK(ep.done());
    const Vec2 pose_after = ep.pose().position;
    ep.set_goal({-2.0, 1.0});
    CHECK_FALSE(ep.done());
    CHECK(ep.step_count() == 0);
    CHECK(ep.pose().position.x == pose_after.x);
    CHECK(ep.state().goal.distance == Catch::Approx((Vec2{-2.0, 1.0} - pose_after).norm()));
  }
}
