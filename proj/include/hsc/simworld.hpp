#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hsc/agent.hpp"
#include "hsc/reward.hpp"
#include "hsc/rng.hpp"
#include "hsc/teleop.hpp"
#include "hsc/vecmath.hpp"

namespace hsc {

// One recorded master-side path, uniformly sampled in time.
struct DemoTrajectory {
  std::vector<Vec3> points;
  double sample_period = 0.01;  // [s]
};

struct DemoDataset {
  std::vector<DemoTrajectory> trajectories;
  Vec3 start_mean;  // mean of first points
  Vec3 goal_mean;   // mean of last points

  void recompute_endpoints();
};

struct DemoGenParams {
  int n_trajectories = 10;
  Vec3 start{-8.0, 0.0, 0.0};
  Vec3 goal{8.0, 0.0, 0.0};
  double apex_height = 4.0;  // arc rise over the straight line
  int points_per_traj = 650;
  double jitter_std = 0.2;  // endpoints unperturbed
  double sample_period = 0.01;
};

// Smooth arcs from start to goal over an implicit obstacle, with Gaussian
// jitter on interior points. Stand-in for recorded human demonstrations.
DemoDataset generate_demos(const DemoGenParams& params, Rng& rng);

// Plain text, one point per line: traj_id,t,x,y,z.
void save_demos(const DemoDataset& dataset, const std::string& path);
DemoDataset load_demos(const std::string& path);

// Index of the trajectory point closest to p; ties go to the smaller index.
int nearest_index(const DemoTrajectory& traj, const Vec3& p);

struct MasterSimParams {
  int step = 12;      // lookahead along the demo, in samples
  double k_u = 5.0;   // user force gain
  double k_s = 5.0;   // force-to-velocity gain (viscous hand model)
  double dt = 0.01;   // [s]

  void validate() const {
    if (step < 1) throw ConfigError("simulator: step must be >= 1");
    if (!(k_u > 0.0) || !(k_s > 0.0) || !(dt > 0.0))
      throw ConfigError("simulator: gains and dt must be > 0");
  }
};

// Simulated user force: pull toward the demo point `step` samples past the
// nearest one, clamped to the trajectory end.
Vec3 user_force(const DemoTrajectory& traj, int nearest, const MasterSimParams& params,
                const Vec3& p_master);

// Viscous hand model plus Euler integration; returns (new position, velocity).
std::pair<Vec3, Vec3> master_step(const Vec3& p_master, const Vec3& f_user,
                                  const Vec3& f_assist, const MasterSimParams& params);

Vec3 slave_step(const Vec3& p_slave, const Vec3& v_slave, double dt);

struct EpisodeSettings {
  TeleopGains gains;
  Workspace ws_master{{-20.0, -20.0, -20.0}, {20.0, 20.0, 20.0}};
  Workspace ws_slave{{-30.0, -30.0, -30.0}, {30.0, 30.0, 30.0}};
  ForceLimits limits{{-1.2, -0.4, -1.2}, {1.2, 0.4, 1.2}};
  RewardParams reward;
  double eps_goal = 1.0;  // success radius around the goal
  int max_steps = 1000;
};

struct EpisodeRecord {
  std::vector<Transition> transitions;
  EpisodeOutcome outcome = EpisodeOutcome::Unsuccess;
  double duration = 0.0;  // simulated [s], step count x dt
  TaskDirection direction = TaskDirection::forward();
  std::vector<Vec3> master_trace;
  std::vector<Vec3> slave_trace;
  double reward_sum = 0.0;  // before the terminal adjustment
};

// One simulated episode. agent may be null (assistance disabled); noise may
// be null when explore is false. A reversed direction runs the sampled
// trajectory and its endpoints backwards.
EpisodeRecord run_episode(const DdpgAgent* agent, ArpNoise* noise,
                          const DemoDataset& dataset, TaskDirection direction,
                          const MasterSimParams& params,
                          const EpisodeSettings& settings, bool explore, Rng& rng);

// Maximum master speed observed while forces come from the noise source
// alone (the untrained actor is bypassed). Defines the reward threshold x.
double calibrate_velocity_threshold(const DemoDataset& dataset,
                                    const MasterSimParams& params,
                                    const EpisodeSettings& settings,
                                    ArpNoise& noise, int n_episodes, Rng& rng);

// Episode trace in the demo file format (trajectory id 0, master positions).
void save_trace(const EpisodeRecord& record, double dt, const std::string& path);

}  // namespace hsc
