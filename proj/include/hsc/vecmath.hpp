#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "hsc/errors.hpp"

namespace hsc {

// 3-component Cartesian quantity. Unit depends on role: position [m],
// velocity [m/s] or force [N]. Components are always finite.
struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3() = default;
  constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  bool operator==(const Vec3& o) const = default;
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

// Axis-aligned reachable region of a device, lower < upper componentwise.
struct Workspace {
  Vec3 lower;
  Vec3 upper;

  void validate(const std::string& name) const {
    if (!lower.finite() || !upper.finite() ||
        !(lower.x < upper.x && lower.y < upper.y && lower.z < upper.z))
      throw ConfigError(name + ": workspace requires lower < upper componentwise");
  }
  Vec3 center() const { return (lower + upper) * 0.5; }
  bool contains(const Vec3& p) const {
    return p.x >= lower.x && p.x <= upper.x && p.y >= lower.y &&
           p.y <= upper.y && p.z >= lower.z && p.z <= upper.z;
  }
};

// Safe per-axis force range for the haptic device. Symmetric by default.
struct ForceLimits {
  Vec3 f_min{-2.0, -2.0, -2.0};
  Vec3 f_max{2.0, 2.0, 2.0};

  void validate() const {
    if (!f_min.finite() || !f_max.finite() ||
        !(f_min.x < f_max.x && f_min.y < f_max.y && f_min.z < f_max.z))
      throw ConfigError("force limits require f_min < f_max componentwise");
  }
  // Largest force magnitude the clipped output can reach.
  double max_norm() const {
    const double mx = std::max(std::abs(f_min.x), std::abs(f_max.x));
    const double my = std::max(std::abs(f_min.y), std::abs(f_max.y));
    const double mz = std::max(std::abs(f_min.z), std::abs(f_max.z));
    return std::sqrt(mx * mx + my * my + mz * mz);
  }
};

// Task direction flag: +1 start->goal, -1 goal->start.
class TaskDirection {
 public:
  static TaskDirection forward() { return TaskDirection(+1.0); }
  static TaskDirection reverse() { return TaskDirection(-1.0); }
  static TaskDirection from_flag(double f) {
    if (f != 1.0 && f != -1.0)
      throw ContractError("task direction flag must be +1 or -1");
    return TaskDirection(f);
  }
  double flag() const { return flag_; }
  TaskDirection reversed() const { return TaskDirection(-flag_); }
  bool operator==(const TaskDirection&) const = default;

 private:
  explicit TaskDirection(double f) : flag_(f) {}
  double flag_;
};

// 7-component agent observation: scaled slave position, scaled master
// position, task direction flag.
using StateVector = std::array<double, 7>;

// Scale factor: largest absolute corner coordinate reachable by either
// device, so every in-workspace position maps into [-1, 1].
inline double scale_factor(const Workspace& ws_master, const Workspace& ws_slave) {
  ws_master.validate("master");
  ws_slave.validate("slave");
  double w = 0.0;
  for (const Workspace* ws : {&ws_master, &ws_slave}) {
    for (double c : {ws->lower.x, ws->lower.y, ws->lower.z, ws->upper.x,
                     ws->upper.y, ws->upper.z})
      w = std::max(w, std::abs(c));
  }
  if (w <= 0.0)
    throw ConfigError("degenerate workspaces: scale factor is zero");
  return w;
}

inline StateVector build_state(const Vec3& p_slave, const Vec3& p_master,
                               TaskDirection task, double omega) {
  if (omega <= 0.0) throw ContractError("build_state: scale factor must be > 0");
  if (!p_slave.finite() || !p_master.finite())
    throw ContractError("build_state: non-finite position");
  return {p_slave.x / omega,  p_slave.y / omega,  p_slave.z / omega,
          p_master.x / omega, p_master.y / omega, p_master.z / omega,
          task.flag()};
}

// Componentwise clamp into [f_min, f_max].
inline Vec3 clip_force(const Vec3& f, const ForceLimits& limits) {
  return {std::clamp(f.x, limits.f_min.x, limits.f_max.x),
          std::clamp(f.y, limits.f_min.y, limits.f_max.y),
          std::clamp(f.z, limits.f_min.z, limits.f_max.z)};
}

}  // namespace hsc
