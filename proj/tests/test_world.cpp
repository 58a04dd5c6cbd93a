#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "mnav/world.hpp"

using namespace mnav;

TEST_CASE("raycast hits walls and circles analytically", "[world]") {
  const World room = build_env("env1");

  CHECK(raycast(room, {0, 0}, 0.0, 100.0) == Catch::Approx(4.0).margin(1e-12));
  CHECK(raycast(room, {0, 0}, kPi / 2, 100.0) == Catch::Approx(4.0).margin(1e-12));

  // circle obstacle at (2, 0) r 0.5: quadratic's nearer root from the center
  World w = room;
  w.obstacles.push_back({Circle{{2.0, 0.0}, 0.5}});
  CHECK(raycast(w, {0, 0}, 0.0, 100.0) == Catch::Approx(1.5).margin(1e-12));

  SECTION("clamps to max_range") {
    CHECK(raycast(room, {0, 0}, 0.0, 3.5) == 3.5);
  }
  SECTION("origin outside the world") {
    CHECK_THROWS_AS(raycast(room, {9, 9}, 0.0, 1.0), Error);
    try {
      raycast(room, {9, 9}, 0.0, 1.0);
    } catch (const Error& e) {
      CHECK(e.code() == "origin-out-of-world");
    }
  }
}

TEST_CASE("raycast agrees with a ray-marching oracle", "[world]") {
  const World w = build_env("env2");
  Rng rng(42);
  for (int k = 0; k < 200; ++k) {
    Vec2 origin{rng.uniform(-3.8, 3.8), rng.uniform(-3.8, 3.8)};
    if (is_collided(w, origin, 0.11)) continue;
    const double bearing = rng.uniform(-kPi, kPi);
    const double fast = raycast(w, origin, bearing, 3.5);
    const double slow = oracle::raymarch(w, origin, bearing, 3.5);
    CHECK(std::abs(fast - slow) < 1e-3);
  }
}

TEST_CASE("adding an obstacle never increases a raycast", "[world]") {
  Rng rng(7);
  const World base = build_env("env1");
  for (int k = 0; k < 100; ++k) {
    World more = base;
    more.obstacles.push_back(
        {Circle{{rng.uniform(-3, 3), rng.uniform(-3, 3)}, rng.uniform(0.1, 0.8)}});
    const Vec2 origin{rng.uniform(-2, 2), rng.uniform(-2, 2)};
    if (is_collided(more, origin, 0.01)) continue;
    const double bearing = rng.uniform(-kPi, kPi);
    CHECK(raycast(more, origin, bearing, 5.0) <= raycast(base, origin, bearing, 5.0) + 1e-12);
  }
}

TEST_CASE("is_collided matches the disc convention", "[world]") {
  const World room = build_env("env1");
  CHECK_FALSE(is_collided(room, {0, 0}, 0.105));
  CHECK(is_collided(room, {3.95, 0}, 0.105));
  // touching exactly counts
  CHECK(is_collided(room, {4.0 - 0.105, 0}, 0.105));
  CHECK(distance_to_nearest(room, {4.0 - 0.105, 0}) == Catch::Approx(0.105).margin(1e-14));
}

TEST_CASE("short raycast in any direction implies collision", "[world]") {
  const World w = build_env("scenario2");
  Rng rng(11);
  int checked = 0;
  while (checked < 300) {
    const Vec2 p{rng.uniform(-5.8, 5.8), rng.uniform(-3.8, 3.8)};
    if (!w.bounds.strictly_contains(p)) continue;
    ++checked;
    double shortest = 1e9;
    bool inside_circle = false;
    for (const auto& o : w.obstacles)
      if (distance_to_obstacle(p, o) < 0) inside_circle = true;
    if (inside_circle) continue;
    for (int b = 0; b < 64; ++b)
      shortest = std::min(shortest, raycast(w, p, b * 2 * kPi / 64, 5.0));
    if (shortest < 0.105) CHECK(is_collided(w, p, 0.105));
  }
}

TEST_CASE("built-in environments", "[world]") {
  const World e1 = build_env("env1");
  CHECK(e1.wall_count == 4);
  CHECK(e1.interior_count() == 0);
  CHECK(e1.bounds.width() == 8.0);
  CHECK(e1.bounds.height() == 8.0);

  const World e2 = build_env("env2");
  CHECK(e2.interior_count() == 4);
  // obstacles sit close to the start
  for (std::size_t i = e2.wall_count; i < e2.obstacles.size(); ++i)
    CHECK(distance_to_obstacle(e2.start_position, e2.obstacles[i]) < 2.5);

  const World s1 = build_env("scenario1");
  const World s2 = build_env("scenario2");
  CHECK(s1.destinations.size() == 6);
  CHECK(s2.destinations.size() == 6);
  CHECK(s2.interior_count() > s1.interior_count());

  const double r1 = route_length(s1);
  const double r2 = route_length(s2);
  CHECK(r1 > 16.0);
  CHECK(r1 < 19.0);
  CHECK(r2 > 23.0);
  CHECK(r2 < 27.0);
  CHECK(r2 > r1);

  // destinations must be reachable as goal discs
  for (const World* w : {&s1, &s2})
    for (const auto& d : w->destinations) CHECK(distance_to_nearest(*w, d) >= 0.3 + 0.105);
}

TEST_CASE("worlds built from the same spec are bit-identical", "[world]") {
  const World a = build_env("scenario2");
  const World b = build_env("scenario2");
  REQUIRE(a.obstacles.size() == b.obstacles.size());
  for (std::size_t i = 0; i < a.obstacles.size(); ++i) {
    if (const auto* sa = std::get_if<Segment>(&a.obstacles[i].shape)) {
      const auto& sb = std::get<Segment>(b.obstacles[i].shape);
      CHECK(sa->a.x == sb.a.x);
      CHECK(sa->a.y == sb.a.y);
      CHECK(sa->b.x == sb.b.x);
      CHECK(sa->b.y == sb.b.y);
    } else {
      const auto& ca = std::get<Circle>(a.obstacles[i].shape);
      const auto& cb = std::get<Circle>(b.obstacles[i].shape);
      CHECK(ca.center.x == cb.center.x);
      CHECK(ca.radius == cb.radius);
    }
  }
  CHECK(a.start_position.x == b.start_position.x);
  CHECK(a.spawn_region.hi.y == b.spawn_region.hi.y);
}

TEST_CASE("data files match the built-in layouts", "[world]") {
  for (const char* name : {"env1", "env2", "scenario1", "scenario2"}) {
    const World preset = build_env(name);
    const World file = world_from_file(std::string(MNAV_DATA_DIR) + "/envs/" + name + ".json");
    REQUIRE(preset.obstacles.size() == file.obstacles.size());
    CHECK(preset.name == file.name);
    CHECK(preset.bounds.lo.x == file.bounds.lo.x);
    CHECK(preset.bounds.hi.y == file.bounds.hi.y);
    CHECK(preset.start_position.x == file.start_position.x);
    REQUIRE(preset.destinations.size() == file.destinations.size());
    for (std::size_t i = 0; i < preset.destinations.size(); ++i) {
      CHECK(preset.destinations[i].x == file.destinations[i].x);
      CHECK(preset.destinations[i].y == file.destinations[i].y);
    }
  }
}

TEST_CASE("environment spec files validate", "[world]") {
  CHECK_THROWS_AS(build_env("no-such-env"), Error);

  const auto tmp = std::filesystem::temp_directory_path() / "mnav_bad_env.json";
  {
    std::ofstream out(tmp);
    out << R"({"format_version": 2, "bounds": [0,0,1,1]})";
  }
  try {
    build_env(tmp.string());
    FAIL("expected bad-env-spec");
  } catch (const Error& e) {
    CHECK(e.code() == "bad-env-spec");
  }

  {
    std::ofstream out(tmp);
    out << R"({"format_version": 1, "bounds": [-1,-1,1,1], "spawn_region": [-1,-1,1,1],
               "start": [0,0,0],
               "obstacles": [{"type": "circle", "center": [0,0], "radius": -1}]})";
  }
  CHECK_THROWS_AS(build_env(tmp.string()), Error);

  // round-trip through a valid custom file
  {
    std::ofstream out(tmp);
    out << R"({"format_version": 1, "name": "mini", "bounds": [-1,-1,1,1],
               "spawn_region": [-0.8,-0.8,0.8,0.8], "start": [0,0,0],
               "obstacles": [{"type": "segment", "a": [0.5,-1], "b": [0.5,0.5]}],
               "destinations": [[0.8, 0.8]]})";
  }
  const World mini = build_env(tmp.string());
  CHECK(mini.name == "mini");
  CHECK(mini.interior_count() == 1);
  CHECK(mini.destinations.size() == 1);
  std::filesystem::remove(tmp);
}
