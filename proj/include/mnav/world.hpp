#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "mnav/common.hpp"

namespace mnav {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double norm_sq() const { return x * x + y * y; }
  double norm() const { return std::sqrt(norm_sq()); }
};

struct Segment {
  Vec2 a, b;
};

struct Circle {
  Vec2 center;
  double radius = 0.0;
};

struct Obstacle {
  std::variant<Segment, Circle> shape;
};

// Axis-aligned rectangle, lo <= hi componentwise.
struct Rect {
  Vec2 lo, hi;

  bool contains(const Vec2& p) const {
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y;
  }
  bool strictly_contains(const Vec2& p) const {
    return p.x > lo.x && p.x < hi.x && p.y > lo.y && p.y < hi.y;
  }
  double width() const { return hi.x - lo.x; }
  double height() const { return hi.y - lo.y; }
};

// Immutable after construction; walls synthesized from bounds come first in
// `obstacles`, interior obstacles follow.
struct World {
  std::string name;
  Rect bounds;
  Rect spawn_region;
  std::vector<Obstacle> obstacles;
  std::size_t wall_count = 0;
  Vec2 start_position;
  double start_heading = 0.0;
  std::vector<Vec2> destinations;

  std::size_t interior_count() const { return obstacles.size() - wall_count; }
};

inline double distance_to_segment(const Vec2& p, const Segment& s) {
  const Vec2 ab = s.b - s.a;
  const double len_sq = ab.norm_sq();
  double t = len_sq > 0.0 ? (p - s.a).dot(ab) / len_sq : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (s.a + ab * t)).norm();
}

// Signed for circles: negative inside.
inline double distance_to_obstacle(const Vec2& p, const Obstacle& o) {
  if (const auto* seg = std::get_if<Segment>(&o.shape)) {
    return distance_to_segment(p, *seg);
  }
  const auto& c = std::get<Circle>(o.shape);
  return (p - c.center).norm() - c.radius;
}

inline double distance_to_nearest(const World& w, const Vec2& p) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& o : w.obstacles) d = std::min(d, distance_to_obstacle(p, o));
  return d;
}

namespace detail {

constexpr double kParallelEps = 1e-15;

// Smallest t >= 0 with origin + t*dir on the segment, or +inf.
inline double ray_segment(const Vec2& origin, const Vec2& dir, const Segment& s) {
  const Vec2 e = s.b - s.a;
  const double denom = dir.cross(e);
  if (std::abs(denom) < kParallelEps) return std::numeric_limits<double>::infinity();
  const Vec2 ao = s.a - origin;
  const double t = ao.cross(e) / denom;
  const double u = ao.cross(dir) / denom;
  if (t >= 0.0 && u >= 0.0 && u <= 1.0) return t;
  return std::numeric_limits<double>::infinity();
}

// Smallest non-negative root of |origin + t*dir - c| = r, or +inf.
inline double ray_circle(const Vec2& origin, const Vec2& dir, const Circle& c) {
  const Vec2 f = origin - c.center;
  const double b = f.dot(dir);
  const double disc = b * b - (f.norm_sq() - c.radius * c.radius);
  if (disc < 0.0) return std::numeric_limits<double>::infinity();
  const double root = std::sqrt(disc);
  const double t_near = -b - root;
  if (t_near >= 0.0) return t_near;
  const double t_far = -b + root;
  if (t_far >= 0.0) return t_far;
  return std::numeric_limits<double>::infinity();
}

}  // namespace detail

// Distance to the nearest obstacle along `bearing`, clamped to max_range.
// Exact analytic segment/circle intersections.
inline double raycast(const World& w, const Vec2& origin, double bearing,
                      double max_range) {
  if (!w.bounds.strictly_contains(origin)) throw Error("origin-out-of-world");
  const Vec2 dir{std::cos(bearing), std::sin(bearing)};
  double t_min = max_range;
  for (const auto& o : w.obstacles) {
    double t;
    if (const auto* seg = std::get_if<Segment>(&o.shape)) {
      t = detail::ray_segment(origin, dir, *seg);
    } else {
      t = detail::ray_circle(origin, dir, std::get<Circle>(o.shape));
    }
    t_min = std::min(t_min, t);
  }
  return std::max(t_min, 0.0);
}

// Robot disc vs world. Touching counts as collision; a center outside the
// bounds is always a collision.
inline bool is_collided(const World& w, const Vec2& position, double robot_radius) {
  if (!w.bounds.strictly_contains(position)) return true;
  for (const auto& o : w.obstacles) {
    if (distance_to_obstacle(position, o) <= robot_radius) return true;
  }
  return false;
}

// Straight-line length of the ordered destination route, starting at the
// world's start position. Zero when there are no destinations.
inline double route_length(const World& w) {
  double total = 0.0;
  Vec2 prev = w.start_position;
  for (const auto& d : w.destinations) {
    total += (d - prev).norm();
    prev = d;
  }
  return total;
}

namespace detail {

using json = nlohmann::json;

inline Vec2 vec2_from(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw Error("bad-env-spec", "expected [x, y] pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline Rect rect_from(const json& j) {
  if (!j.is_array() || j.size() != 4) throw Error("bad-env-spec", "expected [xmin, ymin, xmax, ymax]");
  Rect r{{j[0].get<double>(), j[1].get<double>()}, {j[2].get<double>(), j[3].get<double>()}};
  if (!(r.lo.x < r.hi.x && r.lo.y < r.hi.y)) throw Error("bad-env-spec", "degenerate rectangle");
  return r;
}

inline bool obstacle_in_bounds(const Obstacle& o, const Rect& b) {
  if (const auto* seg = std::get_if<Segment>(&o.shape)) {
    return b.contains(seg->a) && b.contains(seg->b);
  }
  const auto& c = std::get<Circle>(o.shape);
  return b.contains({c.center.x - c.radius, c.center.y - c.radius}) &&
         b.contains({c.center.x + c.radius, c.center.y + c.radius});
}

inline World world_from_json(const json& j) {
  try {
    if (!j.contains("format_version") || j.at("format_version").get<int>() != 1)
      throw Error("bad-env-spec", "unsupported format_version");

    World w;
    w.name = j.value("name", std::string("unnamed"));
    w.bounds = rect_from(j.at("bounds"));
    w.spawn_region = rect_from(j.at("spawn_region"));
    if (!(w.bounds.contains(w.spawn_region.lo) && w.bounds.contains(w.spawn_region.hi)))
      throw Error("bad-env-spec", "spawn_region outside bounds");

    const auto& start = j.at("start");
    if (!start.is_array() || start.size() != 3) throw Error("bad-env-spec", "start must be [x, y, heading]");
    w.start_position = {start[0].get<double>(), start[1].get<double>()};
    w.start_heading = normalize_angle(start[2].get<double>());
    if (!w.bounds.strictly_contains(w.start_position))
      throw Error("bad-env-spec", "start outside bounds");

    // Walls first, counter-clockwise from the bottom edge.
    const Vec2 lo = w.bounds.lo, hi = w.bounds.hi;
    w.obstacles.push_back({Segment{{lo.x, lo.y}, {hi.x, lo.y}}});
    w.obstacles.push_back({Segment{{hi.x, lo.y}, {hi.x, hi.y}}});
    w.obstacles.push_back({Segment{{hi.x, hi.y}, {lo.x, hi.y}}});
    w.obstacles.push_back({Segment{{lo.x, hi.y}, {lo.x, lo.y}}});
    w.wall_count = 4;

    for (const auto& jo : j.value("obstacles", json::array())) {
      const std::string type = jo.at("type").get<std::string>();
      Obstacle o;
      if (type == "segment") {
        Segment s{vec2_from(jo.at("a")), vec2_from(jo.at("b"))};
        if ((s.b - s.a).norm_sq() == 0.0) throw Error("bad-env-spec", "segment endpoints coincide");
        o.shape = s;
      } else if (type == "circle") {
        Circle c{vec2_from(jo.at("center")), jo.at("radius").get<double>()};
        if (!(c.radius > 0.0)) throw Error("bad-env-spec", "circle radius must be positive");
        o.shape = c;
      } else {
        throw Error("bad-env-spec", "unknown obstacle type '" + type + "'");
      }
      if (!obstacle_in_bounds(o, w.bounds)) throw Error("bad-env-spec", "obstacle outside bounds");
      w.obstacles.push_back(o);
    }

    for (const auto& jd : j.value("destinations", json::array()))
      w.destinations.push_back(vec2_from(jd));

    return w;
  } catch (const json::exception& e) {
    throw Error("bad-env-spec", e.what());
  }
}

// Built-in layouts. The same JSON text is shipped under data/envs/ for use
// as external spec files; the two must stay in sync (checked by tests).

inline constexpr const char* kEnv1Json = R"({
  "format_version": 1,
  "name": "env1",
  "bounds": [-4.0, -4.0, 4.0, 4.0],
  "spawn_region": [-3.5, -3.5, 3.5, 3.5],
  "start": [0.0, 0.0, 0.0],
  "obstacles": [],
  "destinations": []
})";

inline constexpr const char* kEnv2Json = R"({
  "format_version": 1,
  "name": "env2",
  "bounds": [-4.0, -4.0, 4.0, 4.0],
  "spawn_region": [-3.5, -3.5, 3.5, 3.5],
  "start": [0.0, 0.0, 0.0],
  "obstacles": [
    {"type": "circle", "center": [1.5, 1.5], "radius": 0.25},
    {"type": "circle", "center": [-1.5, 1.5], "radius": 0.25},
    {"type": "circle", "center": [-1.5, -1.5], "radius": 0.25},
    {"type": "circle", "center": [1.5, -1.5], "radius": 0.25}
  ],
  "destinations": []
})";

inline constexpr const char* kScenario1Json = R"({
  "format_version": 1,
  "name": "scenario1",
  "bounds": [-5.0, -3.0, 5.0, 3.0],
  "spawn_region": [-4.5, -2.5, 4.5, 2.5],
  "start": [-4.2, -2.2, 0.0],
  "obstacles": [
    {"type": "segment", "a": [-1.2, -3.0], "b": [-1.2, -0.6]},
    {"type": "segment", "a": [-0.5, 0.2], "b": [1.5, 0.2]},
    {"type": "segment", "a": [2.2, 3.0], "b": [2.2, 1.4]},
    {"type": "circle", "center": [-2.5, 0.0], "radius": 0.4},
    {"type": "circle", "center": [3.8, -0.5], "radius": 0.35},
    {"type": "circle", "center": [-3.6, 0.6], "radius": 0.3}
  ],
  "destinations": [
    [-2.5, -2.0], [-2.5, 1.8], [0.5, 2.0], [0.5, -1.8], [3.4, -1.8], [4.0, 0.8]
  ]
})";

inline constexpr const char* kScenario2Json = R"({
  "format_version": 1,
  "name": "scenario2",
  "bounds": [-6.0, -4.0, 6.0, 4.0],
  "spawn_region": [-5.5, -3.5, 5.5, 3.5],
  "start": [-5.2, -3.2, 0.0],
  "obstacles": [
    {"type": "circle", "center": [-3.6, -1.0], "radius": 0.4},
    {"type": "segment", "a": [-2.2, 4.0], "b": [-2.2, 1.8]},
    {"type": "segment", "a": [-1.6, 0.0], "b": [0.8, 0.0]},
    {"type": "circle", "center": [1.8, -1.8], "radius": 0.45},
    {"type": "segment", "a": [4.2, 0.2], "b": [4.2, 1.6]},
    {"type": "circle", "center": [2.5, 2.5], "radius": 0.4},
    {"type": "circle", "center": [-0.8, -3.2], "radius": 0.35},
    {"type": "circle", "center": [-4.6, 3.2], "radius": 0.35},
    {"type": "segment", "a": [2.0, -4.0], "b": [2.0, -2.9]}
  ],
  "destinations": [
    [-3.0, -3.0], [-4.0, 1.5], [-0.5, 3.0], [0.0, -2.8], [3.5, -0.5], [5.0, 2.8]
  ]
})";

inline const char* preset_json(const std::string& name) {
  if (name == "env1") return kEnv1Json;
  if (name == "env2") return kEnv2Json;
  if (name == "scenario1") return kScenario1Json;
  if (name == "scenario2") return kScenario2Json;
  return nullptr;
}

}  // namespace detail

inline World world_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("bad-env-spec", "cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("bad-env-spec", e.what());
  }
  return detail::world_from_json(j);
}

// Accepts a built-in name (env1, env2, scenario1, scenario2) or a path to an
// environment spec file.
inline World build_env(const std::string& spec) {
  if (const char* text = detail::preset_json(spec)) {
    return detail::world_from_json(nlohmann::json::parse(text));
  }
  if (std::ifstream(spec).good()) return world_from_file(spec);
  throw Error("bad-env-spec", "unknown environment '" + spec + "'");
}

}  // namespace mnav
