#pragma once

#include <memory>
#include <string>
#include <vector>

#include "hsc/agent.hpp"
#include "hsc/simworld.hpp"

namespace hsc {

// Every tunable of a simulation run. Defaults reproduce the reference
// learning-curve experiment.
struct ExperimentConfig {
  // Master-side simulator
  MasterSimParams sim;
  // Agent
  DdpgConfig ddpg;
  int epochs = 25;
  int arp_order = 3;
  double arp_alpha = 0.8;
  double sigma = 0.21;  // exploration scale, normalized action units
  std::size_t buffer_capacity = 1'000'000;
  // Teleoperation and geometry
  TeleopGains gains;
  EpisodeSettings episode;
  // Reward threshold: 0 means calibrate at run start
  double x_override = 0.0;
  int calib_episodes = 10;
  // Schedule
  int test_every = 5;
  int n_seeds = 5;
  // Demonstrations: file wins over the generator when set
  std::string demo_file;
  DemoGenParams demo;
  std::uint64_t demo_seed = 1234;

  void validate() const;
};

// Flat `key = value` text file with '#' comments; unknown keys are errors.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(std::istream& is, const std::string& origin);
void write_default_config(std::ostream& os);

struct EpochMetrics {
  int epoch = 0;
  bool test = false;  // phase: train or test
  double mean_reward = 0.0;            // mean over the epoch's episodes
  double mean_time_per_episode = 0.0;  // simulated [s]
  double mean_time_per_epoch = 0.0;    // sum over the epoch's episodes [s]
  int successes = 0;
  int updates = 0;
};

struct RunResult {
  std::vector<EpochMetrics> series;
  std::shared_ptr<DdpgAgent> agent;
  double x_threshold = 0.0;  // value actually used
  double c_bound = 0.0;
};

// Full Algorithm-1 schedule: per epoch two exploring episodes (one per task
// direction) each followed by per-step minibatch training; a noise-free test
// epoch every test_every epochs. Deterministic given config and seed.
RunResult run_experiment(const ExperimentConfig& config, std::uint64_t seed,
                         const DemoDataset& demos);

// Loads or synthesizes the demo set named by the config.
DemoDataset demos_for(const ExperimentConfig& config);

struct AggregateRow {
  int epoch = 0;
  bool test = false;
  double mean = 0.0;
  double half_width = 0.0;  // 95% normal-approximation confidence
  double time_mean = 0.0;
  double time_half_width = 0.0;
};

// Per-epoch mean and confidence band across seeds. Series must align.
std::vector<AggregateRow> aggregate_runs(
    const std::vector<std::vector<EpochMetrics>>& runs);

// CSV with the exact pinned header; provenance appended as '#' comments.
void write_metrics(const std::vector<EpochMetrics>& series, const std::string& path,
                   double x_threshold = 0.0, double c_bound = 0.0);
std::vector<EpochMetrics> read_metrics(const std::string& path);

// Standalone SVG with training/testing curves and a shaded confidence band.
void emit_plot(const std::vector<AggregateRow>& rows, const std::string& path,
               const std::string& y_label);

inline constexpr const char* kMetricsHeader =
    "epoch,phase,mean_reward,mean_time_s_per_episode,mean_time_s_per_epoch,"
    "successes,updates";

}  // namespace hsc
