#pragma once

#include "hsc/errors.hpp"
#include "hsc/vecmath.hpp"

namespace hsc {

// Fuzzy reward parameters: x is the velocity threshold [m/s] above which
// force/velocity alignment is fully rewarded, c the largest clipped force
// magnitude [N] (keeps the reward non-positive).
struct RewardParams {
  double x = 1.0;
  double c = 2.0 * 1.7320508075688772;  // ||(2,2,2)||, default limits

  void validate() const {
    if (!(x > 0.0)) throw ConfigError("reward: velocity threshold x must be > 0");
    if (!(c > 0.0)) throw ConfigError("reward: force bound c must be > 0");
  }
};

enum class EpisodeOutcome { Success, Unsuccess, Fail };

struct ForceDecomposition {
  double parallel = 0.0;       // component along the velocity [N]
  double perpendicular = 0.0;  // component across the velocity [N]
  double angle = 0.0;          // between force and velocity [rad]
};

// Decompose the assistive force along/across the master velocity. Degenerate
// inputs (zero force or zero velocity) yield all-zero components.
ForceDecomposition force_components(const Vec3& f, const Vec3& v);

// phi: 0 at rest, 1 above the threshold, linear in between.
double velocity_weight(const Vec3& v, double x);

// Fuzzified per-step reward, always <= 0 for ||f|| <= c.
double step_reward(const Vec3& f, const Vec3& v, const RewardParams& params);

// Additive end-of-episode reward adjustment: +10 on success, -10 otherwise.
// Failed episodes are discarded upstream and never reach this point.
double terminal_adjustment(EpisodeOutcome outcome);

}  // namespace hsc
