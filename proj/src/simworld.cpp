#include "hsc/simworld.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace hsc {

void DemoDataset::recompute_endpoints() {
  if (trajectories.empty()) throw ContractError("demo dataset: no trajectories");
  Vec3 s{}, g{};
  for (const auto& t : trajectories) {
    if (t.points.size() < 2)
      throw ContractError("demo dataset: trajectory with fewer than 2 points");
    s = s + t.points.front();
    g = g + t.points.back();
  }
  const double n = static_cast<double>(trajectories.size());
  start_mean = s / n;
  goal_mean = g / n;
}

DemoDataset generate_demos(const DemoGenParams& params, Rng& rng) {
  if (params.n_trajectories < 1)
    throw ConfigError("demo-gen: need at least one trajectory");
  if (params.points_per_traj < 2)
    throw ConfigError("demo-gen: need at least two points per trajectory");
  if ((params.goal - params.start).norm() == 0.0)
    throw ConfigError("demo-gen: start and goal coincide");
  if (params.jitter_std < 0.0) throw ConfigError("demo-gen: negative jitter");

  // Jitter is a smooth zero-mean Gaussian perturbation (low-frequency
  // sinusoidal modes with Gaussian amplitudes, pointwise std <= jitter_std),
  // mimicking trial-to-trial variability of a human demonstrator. Pointwise
  // white noise would let neighboring samples swap order along the path and
  // stall the nearest-point chase.
  constexpr int kModes = 3;
  const double mode_weight[kModes] = {1.0 / std::sqrt(49.0 / 36.0),
                                      0.5 / std::sqrt(49.0 / 36.0),
                                      (1.0 / 3.0) / std::sqrt(49.0 / 36.0)};

  DemoDataset ds;
  for (int i = 0; i < params.n_trajectories; ++i) {
    double amp[3][kModes];
    for (auto& axis : amp)
      for (double& a : axis) a = params.jitter_std * rng.normal();

    DemoTrajectory traj;
    traj.sample_period = params.sample_period;
    traj.points.reserve(static_cast<std::size_t>(params.points_per_traj));
    for (int k = 0; k < params.points_per_traj; ++k) {
      // endpoints are pinned exactly; sin(m*pi*u) vanishes there anyway
      if (k == 0) {
        traj.points.push_back(params.start);
        continue;
      }
      if (k == params.points_per_traj - 1) {
        traj.points.push_back(params.goal);
        continue;
      }
      const double u = static_cast<double>(k) / (params.points_per_traj - 1);
      Vec3 p = params.start + u * (params.goal - params.start);
      p.z += params.apex_height * std::sin(M_PI * u);
      double* comp[3] = {&p.x, &p.y, &p.z};
      for (int axis = 0; axis < 3; ++axis)
        for (int m = 0; m < kModes; ++m)
          *comp[axis] +=
              amp[axis][m] * mode_weight[m] * std::sin((m + 1) * M_PI * u);
      traj.points.push_back(p);
    }
    ds.trajectories.push_back(std::move(traj));
  }
  ds.recompute_endpoints();
  return ds;
}

void save_demos(const DemoDataset& dataset, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path);
  char buf[128];
  for (std::size_t i = 0; i < dataset.trajectories.size(); ++i) {
    const auto& t = dataset.trajectories[i];
    for (std::size_t k = 0; k < t.points.size(); ++k) {
      const Vec3& p = t.points[k];
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", i,
                    static_cast<double>(k) * t.sample_period, p.x, p.y, p.z);
      os << buf;
    }
  }
  if (!os) throw IoError("write failed: " + path);
}

DemoDataset load_demos(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open: " + path);
  DemoDataset ds;
  std::string line;
  long line_no = 0;
  long current_id = -1;
  double prev_t = 0.0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    long id;
    double t, x, y, z;
    char extra;
    const int n = std::sscanf(line.c_str(), "%ld,%lf,%lf,%lf,%lf%c", &id, &t,
                              &x, &y, &z, &extra);
    if (n != 5)
      throw IoError(path + ":" + std::to_string(line_no) +
                    ": expected traj_id,t,x,y,z");
    if (!std::isfinite(t) || !Vec3{x, y, z}.finite())
      throw IoError(path + ":" + std::to_string(line_no) + ": non-finite value");
    if (id != current_id) {
      if (id != current_id + 1)
        throw IoError(path + ":" + std::to_string(line_no) +
                      ": trajectory ids must be contiguous");
      current_id = id;
      ds.trajectories.push_back({});
    } else if (t <= prev_t) {
      throw IoError(path + ":" + std::to_string(line_no) +
                    ": timestamps must be ascending within a trajectory");
    }
    auto& traj = ds.trajectories.back();
    if (traj.points.size() == 1) traj.sample_period = t - prev_t;
    traj.points.push_back({x, y, z});
    prev_t = t;
  }
  if (ds.trajectories.empty()) throw IoError(path + ": no trajectories");
  ds.recompute_endpoints();
  return ds;
}

int nearest_index(const DemoTrajectory& traj, const Vec3& p) {
  if (traj.points.empty()) throw ContractError("nearest_index: empty trajectory");
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < traj.points.size(); ++i) {
    const double d = (traj.points[i] - p).norm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

Vec3 user_force(const DemoTrajectory& traj, int nearest,
                const MasterSimParams& params, const Vec3& p_master) {
  if (nearest < 0 || nearest >= static_cast<int>(traj.points.size()))
    throw ContractError("user_force: index out of range");
  const int last = static_cast<int>(traj.points.size()) - 1;
  const int target = std::min(nearest + params.step, last);
  return params.k_u * (traj.points[static_cast<std::size_t>(target)] - p_master);
}

std::pair<Vec3, Vec3> master_step(const Vec3& p_master, const Vec3& f_user,
                                  const Vec3& f_assist,
                                  const MasterSimParams& params) {
  const Vec3 v = params.k_s * (f_user + f_assist);
  return {p_master + v * params.dt, v};
}

Vec3 slave_step(const Vec3& p_slave, const Vec3& v_slave, double dt) {
  return p_slave + v_slave * dt;
}

EpisodeRecord run_episode(const DdpgAgent* agent, ArpNoise* noise,
                          const DemoDataset& dataset, TaskDirection direction,
                          const MasterSimParams& params,
                          const EpisodeSettings& settings, bool explore,
                          Rng& rng) {
  params.validate();
  settings.gains.validate();
  settings.limits.validate();
  settings.reward.validate();
  if (dataset.trajectories.empty())
    throw ContractError("run_episode: empty demo dataset");
  if (settings.max_steps < 1)
    throw ConfigError("run_episode: max_steps must be >= 1");

  DemoTrajectory traj = dataset.trajectories[rng.index(dataset.trajectories.size())];
  Vec3 start = dataset.start_mean;
  Vec3 goal = dataset.goal_mean;
  if (direction.flag() < 0.0) {
    std::reverse(traj.points.begin(), traj.points.end());
    std::swap(start, goal);
  }

  const double omega = scale_factor(settings.ws_master, settings.ws_slave);

  EpisodeRecord rec;
  rec.direction = direction;
  if (noise) noise->reset();

  Vec3 p_master = start;
  Vec3 p_slave = desired_slave_position(p_master, settings.gains);
  rec.master_trace.push_back(p_master);
  rec.slave_trace.push_back(p_slave);

  int steps = 0;
  while (steps < settings.max_steps) {
    const StateVector s = build_state(p_slave, p_master, direction, omega);

    Vec3 action{}, f_assist{};
    if (agent) {
      const ActionResult a = agent->select_action(s, noise, rng, explore);
      action = a.normalized;
      f_assist = a.force;
    }

    const int idx = nearest_index(traj, p_master);
    const Vec3 f_user = user_force(traj, idx, params, p_master);
    const auto [p_master_next, v_master] =
        master_step(p_master, f_user, f_assist, params);

    const Vec3 p_desired = desired_slave_position(p_master_next, settings.gains);
    const Vec3 v_slave = tracking_velocity(p_desired, p_slave, settings.gains);
    const Vec3 p_slave_next = slave_step(p_slave, v_slave, params.dt);

    const double r = step_reward(f_assist, v_master, settings.reward);

    const StateVector s_next =
        build_state(p_slave_next, p_master_next, direction, omega);
    rec.transitions.push_back({s, action, r, s_next, false});
    rec.reward_sum += r;

    p_master = p_master_next;
    p_slave = p_slave_next;
    rec.master_trace.push_back(p_master);
    rec.slave_trace.push_back(p_slave);
    ++steps;

    if ((p_master - goal).norm() <= settings.eps_goal) {
      rec.outcome = EpisodeOutcome::Success;
      break;
    }
  }
  if (rec.outcome != EpisodeOutcome::Success) rec.outcome = EpisodeOutcome::Unsuccess;
  rec.duration = static_cast<double>(steps) * params.dt;
  return rec;
}

double calibrate_velocity_threshold(const DemoDataset& dataset,
                                    const MasterSimParams& params,
                                    const EpisodeSettings& settings,
                                    ArpNoise& noise, int n_episodes, Rng& rng) {
  params.validate();
  if (n_episodes < 1)
    throw ConfigError("calibrate: need at least one episode");

  double x = 0.0;
  for (int e = 0; e < n_episodes; ++e) {
    const TaskDirection dir =
        (e % 2 == 0) ? TaskDirection::forward() : TaskDirection::reverse();
    DemoTrajectory traj =
        dataset.trajectories[rng.index(dataset.trajectories.size())];
    Vec3 start = dataset.start_mean;
    Vec3 goal = dataset.goal_mean;
    if (dir.flag() < 0.0) {
      std::reverse(traj.points.begin(), traj.points.end());
      std::swap(start, goal);
    }
    noise.reset();
    Vec3 p_master = start;
    for (int t = 0; t < settings.max_steps; ++t) {
      const Vec3 n = noise.next(rng);
      const Vec3 f_assist =
          clip_force({n.x * settings.limits.f_max.x, n.y * settings.limits.f_max.y,
                      n.z * settings.limits.f_max.z},
                     settings.limits);
      const int idx = nearest_index(traj, p_master);
      const Vec3 f_user = user_force(traj, idx, params, p_master);
      const auto [p_next, v] = master_step(p_master, f_user, f_assist, params);
      x = std::max(x, v.norm());
      p_master = p_next;
      if ((p_master - goal).norm() <= settings.eps_goal) break;
    }
  }
  if (!(x > 0.0))
    throw ConfigError("calibrate: observed zero velocity; check gains and noise");
  return x;
}

void save_trace(const EpisodeRecord& record, double dt, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path);
  char buf[128];
  for (std::size_t k = 0; k < record.master_trace.size(); ++k) {
    const Vec3& p = record.master_trace[k];
    std::snprintf(buf, sizeof buf, "0,%.17g,%.17g,%.17g,%.17g\n",
                  static_cast<double>(k) * dt, p.x, p.y, p.z);
    os << buf;
  }
  if (!os) throw IoError("write failed: " + path);
}

}  // namespace hsc
