#include "hsc/reward.hpp"

#include <cmath>

namespace hsc {

ForceDecomposition force_components(const Vec3& f, const Vec3& v) {
  if (!f.finite() || !v.finite())
    throw ContractError("force_components: non-finite input");
  const double fn = f.norm();
  const double vn = v.norm();
  if (fn == 0.0 || vn == 0.0) return {};

  // Projection instead of arccos so rounding can never leave the domain.
  const double f_par = f.dot(v) / vn;
  const double rest = std::max(fn * fn - f_par * f_par, 0.0);
  const double f_perp = std::sqrt(rest);
  return {f_par, f_perp, std::atan2(f_perp, f_par)};
}

double velocity_weight(const Vec3& v, double x) {
  if (!(x > 0.0)) throw ContractError("velocity_weight: x must be > 0");
  const double vn = v.norm();
  if (vn == 0.0) return 0.0;
  if (vn > x) return 1.0;
  return vn / x;
}

double step_reward(const Vec3& f, const Vec3& v, const RewardParams& params) {
  params.validate();
  const double fn = f.norm();
  if (fn > params.c * (1.0 + 1e-12))
    throw ContractError("step_reward: force magnitude exceeds bound c");
  const ForceDecomposition d = force_components(f, v);
  const double phi = velocity_weight(v, params.x);
  const double r0 = -fn;
  const double r1 = -d.perpendicular + d.parallel - params.c;
  return phi * r1 + (1.0 - phi) * r0;
}

double terminal_adjustment(EpisodeOutcome outcome) {
  switch (outcome) {
    case EpisodeOutcome::Success:
      return 10.0;
    case EpisodeOutcome::Unsuccess:
      return -10.0;
    default:
      throw ContractError("terminal_adjustment: failed episodes are discarded");
  }
}

}  // namespace hsc
