#pragma once

#include "hsc/errors.hpp"
#include "hsc/vecmath.hpp"

namespace hsc {

// Direct position teleoperation gains: the slave tracks a scaled, offset
// copy of the master tip with a proportional velocity law.
struct TeleopGains {
  double k_m = 5.0;  // tracking gain [1/s]
  double xi = 1.0;   // master-to-slave scale
  Vec3 p_offset;     // workspace alignment offset [m]

  void validate() const {
    if (!(k_m > 0.0)) throw ConfigError("teleop: k_m must be > 0");
    if (!(xi > 0.0)) throw ConfigError("teleop: xi must be > 0");
    if (!p_offset.finite()) throw ConfigError("teleop: non-finite offset");
  }
};

inline Vec3 desired_slave_position(const Vec3& p_master, const TeleopGains& g) {
  return g.xi * p_master + g.p_offset;
}

inline Vec3 tracking_velocity(const Vec3& p_desired, const Vec3& p_slave,
                              const TeleopGains& g) {
  return g.k_m * (p_desired - p_slave);
}

}  // namespace hsc
