// Shared independent oracles for the test suites. Everything here is kept
// free of the library's analytic fast paths on purpose: ray marching instead
// of intersection math, finite differences instead of backprop, quadrature
// instead of closed-form densities.

#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "mnav/common.hpp"
#include "mnav/nn.hpp"
#include "mnav/robot.hpp"
#include "mnav/world.hpp"

namespace oracle {

// Marches along the ray in fixed steps; a hit is a sample point inside a
// circle or within half a step of a segment.
inline double raymarch(const mnav::World& w, const mnav::Vec2& origin, double bearing,
                       double max_range, double step = 1e-4) {
  const mnav::Vec2 dir{std::cos(bearing), std::sin(bearing)};
  const double seg_tol = step * 0.5;
  for (double t = 0.0; t <= max_range; t += step) {
    const mnav::Vec2 p = origin + dir * t;
    for (const auto& o : w.obstacles) {
      if (const auto* seg = std::get_if<mnav::Segment>(&o.shape)) {
        if (mnav::distance_to_segment(p, *seg) <= seg_tol) return t;
      } else {
        const auto& c = std::get<mnav::Circle>(o.shape);
        if ((p - c.center).norm() <= c.radius) return t;
      }
    }
  }
  return max_range;
}

// Midpoint-rule unicycle substepping; second-order reference for the exact
// arc formula.
inline mnav::Pose substep_kinematics(const mnav::Pose& pose, const mnav::Action& action,
                                     double dt, int substeps) {
  const double h = dt / substeps;
  double x = pose.position.x, y = pose.position.y, th = pose.heading;
  for (int k = 0; k < substeps; ++k) {
    const double mid = th + action.angular * h * 0.5;
    x += action.linear * h * std::cos(mid);
    y += action.linear * h * std::sin(mid);
    th += action.angular * h;
  }
  return {{x, y}, mnav::normalize_angle(th)};
}

// Central finite differences of `loss` with respect to every parameter of
// `net`, in export order.
inline std::vector<double> fd_param_gradients(mnav::Mlp& net,
                                              const std::function<double()>& loss,
                                              double h = 1e-5) {
  std::vector<double> grads;
  for (auto& layer : net.layers()) {
    for (Eigen::Index r = 0; r < layer.W.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.W.cols(); ++c) {
        const double keep = layer.W(r, c);
        layer.W(r, c) = keep + h;
        const double up = loss();
        layer.W(r, c) = keep - h;
        const double down = loss();
        layer.W(r, c) = keep;
        grads.push_back((up - down) / (2.0 * h));
      }
    }
    for (Eigen::Index r = 0; r < layer.b.size(); ++r) {
      const double keep = layer.b(r);
      layer.b(r) = keep + h;
      const double up = loss();
      layer.b(r) = keep - h;
      const double down = loss();
      layer.b(r) = keep;
      grads.push_back((up - down) / (2.0 * h));
    }
  }
  return grads;
}

inline std::vector<double> analytic_param_gradients(const mnav::Mlp& net) {
  std::vector<double> grads;
  for (const auto& layer : net.layers()) {
    for (Eigen::Index r = 0; r < layer.W.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.W.cols(); ++c) grads.push_back(layer.gW(r, c));
    for (Eigen::Index r = 0; r < layer.b.size(); ++r) grads.push_back(layer.gb(r));
  }
  return grads;
}

// Relative error with a unit floor, as used by the gradient checks.
inline double rel_error(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// Wilson-Hilferty approximation of the chi-square 99th percentile.
inline double chi2_critical_p99(int dof) {
  const double z = 2.3263478740408408;  // N(0,1) 99th percentile
  const double k = static_cast<double>(dof);
  const double t = 1.0 - 2.0 / (9.0 * k) + z * std::sqrt(2.0 / (9.0 * k));
  return k * t * t * t;
}

// Composite Simpson integration.
inline double simpson(const std::function<double(double)>& f, double lo, double hi, int n) {
  if (n % 2 != 0) ++n;
  const double h = (hi - lo) / n;
  double acc = f(lo) + f(hi);
  for (int k = 1; k < n; ++k) acc += f(lo + k * h) * (k % 2 == 1 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

}  // namespace oracle
